"""Tweet ingestion, hashtag-based labelling, language filtering and cleaning."""
from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import IntEnum
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence


class Emotion(IntEnum):
    HAPPINESS = 0
    SADNESS = 1
    ANGER = 2
    FEAR = 3
    DISGUST = 4
    SURPRISE = 5

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_name(cls, name: str) -> "Emotion":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown emotion {name!r}") from None


class CorpusError(Exception):
    """Input that cannot be read at all."""


class ConfigError(ValueError):
    pass


class LabelError(Exception):
    pass


class Unlabeled(LabelError):
    pass


class Ambiguous(LabelError):
    pass


HASHTAG_RE = re.compile(r"#(\w+)")
URL_RE = re.compile(r"^(?:[a-z][a-z0-9+.-]*://|www\.)", re.IGNORECASE)
DEVANAGARI = (0x0900, 0x097F)


def extract_hashtags(text: str) -> list[str]:
    return [m.lower() for m in HASHTAG_RE.findall(text)]


@dataclass
class TweetRecord:
    id: str
    raw_text: str
    hashtags: list[str] = field(default_factory=list)
    label: Emotion | None = None
    clean_text: str | None = None

    @classmethod
    def from_text(cls, id: str, text: str, label: Emotion | None = None) -> "TweetRecord":
        return cls(id=id, raw_text=text, hashtags=extract_hashtags(text), label=label)

    def to_json(self) -> dict:
        out: dict = {"id": self.id, "text": self.raw_text}
        if self.label is not None:
            out["label"] = self.label.label
        if self.clean_text is not None:
            out["clean_text"] = self.clean_text
        return out


@dataclass(frozen=True)
class HashtagMap:
    tags: dict[str, Emotion]
    keywords: frozenset[str]

    def __post_init__(self):
        for tag in self.tags:
            if tag != tag.lower() or "#" in tag:
                raise ConfigError(f"hashtag keys must be lowercase and '#'-free: {tag!r}")
        missing = set(Emotion) - set(self.tags.values())
        if missing:
            raise ConfigError(f"no hashtag maps to {sorted(e.label for e in missing)}")

    @classmethod
    def from_json(cls, path: str | Path) -> "HashtagMap":
        blob = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(blob)

    @classmethod
    def from_dict(cls, blob: dict) -> "HashtagMap":
        tags = {k.lower(): Emotion.from_name(v) for k, v in blob["hashtags"].items()}
        keywords = frozenset(k.lower() for k in blob.get("keywords", tags))
        return cls(tags=tags, keywords=keywords)


@dataclass
class Diagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


# ------------------------------------------------------------------ resources

def resource_path(name: str) -> Path:
    return Path(str(resources.files("hinglish_emo") / "resources" / name))


def load_lexicon(path: str | Path) -> frozenset[str]:
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def default_hashtag_map() -> HashtagMap:
    return HashtagMap.from_json(resource_path("hashtags.json"))


def default_lexicons() -> tuple[frozenset[str], frozenset[str]]:
    return load_lexicon(resource_path("hindi_lexicon.txt")), load_lexicon(resource_path("english_lexicon.txt"))


# -------------------------------------------------------------------- parsing

def _lines(source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        try:
            with open(source, encoding="utf-8") as fh:
                yield from fh
        except (OSError, UnicodeDecodeError) as exc:
            raise CorpusError(f"cannot read {source}: {exc}") from exc
    else:
        yield from source


def parse_corpus(source) -> tuple[list[TweetRecord], list[Diagnostic]]:
    """Parse JSON Lines records (``id``, ``text``, optional ``label``).

    ``source`` is a path or an iterable of lines. Blank lines are skipped;
    every other line either yields a record or a diagnostic naming it.
    """
    records: list[TweetRecord] = []
    diags: list[Diagnostic] = []
    for lineno, line in enumerate(_lines(source), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            diags.append(Diagnostic(lineno, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            diags.append(Diagnostic(lineno, "record is not a JSON object"))
            continue
        rid, text = obj.get("id"), obj.get("text")
        if not isinstance(rid, str) or not isinstance(text, str):
            diags.append(Diagnostic(lineno, "fields 'id' and 'text' must be strings"))
            continue
        label = None
        if obj.get("label") is not None:
            try:
                label = Emotion.from_name(str(obj["label"]))
            except ValueError as exc:
                diags.append(Diagnostic(lineno, str(exc)))
                continue
        rec = TweetRecord.from_text(rid, text, label)
        if isinstance(obj.get("clean_text"), str):
            rec.clean_text = obj["clean_text"]
        records.append(rec)
    return records, diags


def write_corpus(path: str | Path, records: Iterable[TweetRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")


# ------------------------------------------------------------------ labelling

def label_from_hashtags(record: TweetRecord, hashtag_map: HashtagMap) -> Emotion:
    found = {hashtag_map.tags[t] for t in record.hashtags if t in hashtag_map.tags}
    if not found:
        raise Unlabeled(f"record {record.id}: no emotion hashtag")
    if len(found) > 1:
        names = ", ".join(sorted(e.label for e in found))
        raise Ambiguous(f"record {record.id}: hashtags map to several emotions ({names})")
    return found.pop()


def has_devanagari(text: str) -> bool:
    lo, hi = DEVANAGARI
    return any(lo <= ord(ch) <= hi for ch in text)


def filter_language(record: TweetRecord, hindi_lexicon: frozenset[str],
                    english_lexicon: frozenset[str]) -> str:
    """Return ``"keep"`` for code-mixed text, otherwise the drop reason:
    ``"devanagari"``, ``"pure-english"`` (no Hindi word) or ``"pure-hindi"``
    (no English word)."""
    if has_devanagari(record.raw_text):
        return "devanagari"
    tokens = clean_text(record.raw_text, frozenset()).split()
    if not any(t in hindi_lexicon for t in tokens):
        return "pure-english"
    if not any(t in english_lexicon for t in tokens):
        return "pure-hindi"
    return "keep"


# ------------------------------------------------------------------- cleaning

def _is_punct(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat[0] in "PS"


def clean_text(text: str, keywords: frozenset[str] | set[str] = frozenset()) -> str:
    """Lowercase, drop mentions and URLs, strip '#', remove punctuation and
    symbols, then drop scrape keywords. Returns single-space separated
    tokens (possibly empty)."""
    kept = []
    for tok in text.lower().split():
        if tok.startswith("@") or URL_RE.match(tok):
            continue
        kept.append(tok)
    joined = " ".join(kept).replace("#", " ")
    joined = "".join(" " if _is_punct(ch) else ch for ch in joined)
    return " ".join(t for t in joined.split() if t not in keywords)


def token_counts(records: Iterable[TweetRecord]) -> Counter:
    counts: Counter = Counter()
    for rec in records:
        if rec.clean_text is None:
            raise ValueError(f"record {rec.id} has not been cleaned")
        counts.update(rec.clean_text.split())
    return counts


def drop_rare_words(corpus: Sequence[TweetRecord], min_count: int = 10) -> list[TweetRecord]:
    """Delete every token seen fewer than ``min_count`` times corpus-wide.

    Counts come from a single pass before any deletion.
    """
    if min_count < 1:
        raise ConfigError(f"min_count must be >= 1, got {min_count}")
    counts = token_counts(corpus)
    out = []
    for rec in corpus:
        toks = [t for t in rec.clean_text.split() if counts[t] >= min_count]
        out.append(replace(rec, clean_text=" ".join(toks)))
    return out


def class_counts(corpus: Iterable[TweetRecord]) -> dict[Emotion, int]:
    counts = {e: 0 for e in Emotion}
    for rec in corpus:
        if rec.label is None:
            raise ValueError(f"record {rec.id} is unlabeled")
        counts[rec.label] += 1
    return counts


def format_class_counts(counts: dict[Emotion, int]) -> str:
    rows = [("Emotion", "Number of instances")]
    rows += [(e.label.capitalize(), str(counts[e])) for e in Emotion]
    rows.append(("Total sentences", str(sum(counts.values()))))
    width = max(len(r[0]) for r in rows)
    return "\n".join(f"{a:<{width}}  {b}" for a, b in rows) + "\n"


# ------------------------------------------------------------------- pipeline

@dataclass
class PreprocessResult:
    records: list[TweetRecord]
    dropped: list[tuple[str, str]]  # (record id, reason)


def preprocess(records: Iterable[TweetRecord], hashtag_map: HashtagMap,
               hindi_lexicon: frozenset[str], english_lexicon: frozenset[str],
               min_count: int = 10, require_label: bool = True,
               language_filter: bool = True) -> PreprocessResult:
    """Label, filter to code-mixed text, clean and prune rare words.

    A label already present on a record is kept; otherwise it comes from
    the hashtags. With ``language_filter`` off only Devanagari text is
    dropped (used for the English side of the embedding corpus).
    """
    survivors: list[TweetRecord] = []
    dropped: list[tuple[str, str]] = []
    for rec in records:
        if language_filter:
            verdict = filter_language(rec, hindi_lexicon, english_lexicon)
        else:
            verdict = "devanagari" if has_devanagari(rec.raw_text) else "keep"
        if verdict != "keep":
            dropped.append((rec.id, verdict))
            continue
        label = rec.label
        if label is None:
            try:
                label = label_from_hashtags(rec, hashtag_map)
            except Ambiguous:
                dropped.append((rec.id, "ambiguous"))
                continue
            except Unlabeled:
                if require_label:
                    dropped.append((rec.id, "unlabeled"))
                    continue
        survivors.append(replace(rec, label=label, clean_text=clean_text(rec.raw_text, hashtag_map.keywords)))
    survivors = drop_rare_words(survivors, min_count)
    final = []
    for rec in survivors:
        if rec.clean_text:
            final.append(rec)
        else:
            dropped.append((rec.id, "empty-after-cleaning"))
    return PreprocessResult(final, dropped)
