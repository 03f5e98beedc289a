"""Generate the bundled synthetic desk-scale corpus.

Writes ``tweets.jsonl`` (Hinglish-style tweets labelled through hashtags,
plus noise lines the preprocessing must drop) and ``english.jsonl``
(unlabelled English tweets for the mixed embedding corpus).

    python scripts/make_desk_corpus.py [--out DIR] [--seed N] [--n 3300]
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

HINDI_FILLER = ("hai hain nahi yaar aaj bahut kya bhi toh phir abhi kuch sab ek mera meri "
                "tera apna log dil din raat ghar dost bhai kal pehle jab tab kaise kyun").split()
ENGLISH_FILLER = ("the is so today very just really my this that with for and but now day "
                  "time life people good new one all when what").split()

# class-correlated content words, romanized Hindi and English mixed
CUES = {
    "happiness": "pyar pyaar pyaaar mast maza party celebration smile birthday jeet dhamaal "
                 "zabardast shaandaar masti blessed enjoy awesome khushiyan mubarak hasna "
                 "sundar badhai festival treat picnic".split(),
    "sadness": "dard aansu rona tanha akela yaadein judai miss broken heartbreak alvida "
               "udaasi toota bichhad lonely tears gum cry dukh bechain uljhan khamosh "
               "barbaad afsos mayoos".split(),
    "anger": "bakwas pagal idiot bewakoof chup nonsense hate irritating ghussa faltu badtameez "
             "chillana ladai jhagda stupid shameless dhokha naraazgi rage bhadak tamasha "
             "kameena besharam lafda".split(),
    "fear": "bhoot andhera khatra danger chinta tension nervous horror dara sehma panic "
            "ghabrahat kaanp scary nightmare haunted raaz cheekh risk darawna aafat "
            "museebat toofan bhay".split(),
    "disgust": "gandagi kachra ganda ulti yuck cheap sadak boring pathetic nasty rotten badboo "
               "kichad sasta lame awful cringe ghinn sadela bekaar gross murdar ghatia "
               "bura_haal nange".split(),
    "surprise": "achanak unexpected shocking kamaal hairaan believe unbelievable jhatka ajooba "
                "gazab seriously suddenly twist waah jaadu chamatkar shock hila reveal "
                "dhamaka ajeeb_baat camera jhakaas kismat".split(),
}
HASHTAGS = {
    "happiness": ["happy", "khush", "yayy", "khushi"],
    "sadness": ["sad", "dukhi", "udaas"],
    "anger": ["angry", "gussa", "naraz"],
    "fear": ["fear", "darr", "scared"],
    "disgust": ["disgust", "ghatiya", "disgusting"],
    "surprise": ["wow", "surprise", "omg"],
}
ENGLISH_TOPIC = ("match cricket team win score movie music song weekend trip road traffic "
                 "office work boss phone news weather morning night friends family home").split()


def make_tweet(rng, label: str, classes: list[str]) -> str:
    words = list(rng.choice(HINDI_FILLER, rng.integers(3, 6)))
    words += list(rng.choice(ENGLISH_FILLER, rng.integers(2, 5)))
    for _ in range(rng.integers(2, 5)):
        src = label if rng.random() < 0.65 else classes[rng.integers(len(classes))]
        words.append(str(rng.choice(CUES[src])).split("_")[0])
    rng.shuffle(words)
    tag_label = label if rng.random() > 0.05 else classes[rng.integers(len(classes))]
    tag = str(rng.choice(HASHTAGS[tag_label]))
    text = " ".join(words)
    if rng.random() < 0.5:
        text = text.capitalize()
    if rng.random() < 0.4:
        text += rng.choice(["!!", "...", " :(", " :)", "?"])
    text += f" #{tag.capitalize() if rng.random() < 0.3 else tag}"
    if rng.random() < 0.3:
        text += f" @user{rng.integers(1000)}"
    if rng.random() < 0.2:
        text += f" https://t.co/{rng.integers(10**6):06d}"
    return text


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/hinglish_emo/resources/desk"))
    ap.add_argument("--seed", type=int, default=2021)
    ap.add_argument("--n", type=int, default=3300, help="labelled Hinglish tweets to generate")
    ap.add_argument("--n-english", type=int, default=1500)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    classes = list(CUES)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for i in range(args.n):
        label = classes[i % len(classes)]
        lines.append(json.dumps({"id": f"d{i:05d}", "text": make_tweet(rng, label, classes)}, ensure_ascii=False))
    # noise the pipeline must drop
    noise = [
        "मुझे आज बहुत खुशी है #happy",
        "आज का दिन बहुत बुरा था #sad",
        "I am very happy today #happy",
        "What a great match today with the team #wow",
        "yaar aaj bahut mast din hai #weather",
        "so happy but also so sad today yaar #happy #sad",
    ]
    for j, text in enumerate(noise * 5):
        lines.insert(int(rng.integers(len(lines))), json.dumps({"id": f"n{j:03d}", "text": text}, ensure_ascii=False))
    lines.insert(100, '{"id": "broken", "text": ')
    (out / "tweets.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    eng = []
    for i in range(args.n_english):
        words = list(rng.choice(ENGLISH_FILLER, rng.integers(4, 8))) + list(rng.choice(ENGLISH_TOPIC, rng.integers(2, 5)))
        label = classes[rng.integers(len(classes))]
        words += [w for w in rng.choice(CUES[label], 2) if w.isascii() and "_" not in w]
        rng.shuffle(words)
        eng.append(json.dumps({"id": f"e{i:05d}", "text": " ".join(words)}))
    (out / "english.jsonl").write_text("\n".join(eng) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} tweet lines and {len(eng)} English lines to {out}")


if __name__ == "__main__":
    main()
