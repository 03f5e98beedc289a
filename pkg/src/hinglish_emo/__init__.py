"""Emotion detection for Hindi-English code-mixed tweets."""

from .corpus import Emotion, TweetRecord

__version__ = "0.1.0"

__all__ = ["Emotion", "TweetRecord", "__version__"]
