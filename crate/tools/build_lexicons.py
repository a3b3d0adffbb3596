#!/usr/bin/env python3
"""Regenerate the bundled lexicon data files under crates/core/data/.

Sources:
  * CMU Pronouncing Dictionary (``cmudict`` package) for syllable counts and
    lexical stress digits.
  * LibreOffice/Hunspell en_US hyphenation patterns (``pyphen`` package) for
    orthographic syllable boundaries.
  * ``wordfreq`` to keep only the most frequent English words.
  * AFINN-165 (``afinn`` package) for per-word valence.

Usage: python3 tools/build_lexicons.py [--top N]
"""
import argparse
import os
import re

import afinn
import cmudict
import pyphen
import wordfreq

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "crates", "core", "data")
WORD = re.compile(r"^[a-z][a-z']*$")
VOWELS = "aeiouy"


def stress_digits(phones):
    return "".join(p[-1] for p in phones if p[-1].isdigit())


def has_vowel(piece):
    return any(c in VOWELS for c in piece)


def vowel_group_split(word, count):
    """Split between vowel groups, giving a single consonant to the next syllable."""
    groups = [m.span() for m in re.finditer(r"[aeiouy]+", word)]
    if word.endswith("e") and len(groups) > 1 and groups[-1] == (len(word) - 1, len(word)):
        groups = groups[:-1]
    if len(groups) != count:
        return None
    cuts = []
    for (_, end), (start, _) in zip(groups, groups[1:]):
        gap = start - end
        cuts.append(end + (gap - 1 if gap >= 1 else 0) if gap <= 1 else end + gap // 2)
    pieces, prev = [], 0
    for c in cuts:
        pieces.append(word[prev:c])
        prev = c
    pieces.append(word[prev:])
    if not all(has_vowel(p) for p in pieces):
        return None
    return pieces


def split_word(word, count, tight, loose):
    if count == 1:
        return [word]
    for dic in (tight, loose):
        pieces = dic.inserted(word).split("-")
        if len(pieces) == count and all(has_vowel(x) for x in pieces):
            return pieces
    return vowel_group_split(word, count)


def build_pronunciations(top):
    cmu = cmudict.dict()
    tight = pyphen.Pyphen(lang="en_US")
    loose = pyphen.Pyphen(lang="en_US", left=1, right=1)
    rows = []
    for word in wordfreq.top_n_list("en", top):
        if not WORD.match(word) or word not in cmu:
            continue
        digits = stress_digits(cmu[word][0])
        if not digits:
            continue
        pieces = split_word(word, len(digits), tight, loose)
        if pieces is None:
            continue
        rows.append((word, "-".join(pieces), digits))
    rows.sort()
    path = os.path.join(DATA, "pronunciations.tsv")
    with open(path, "w", encoding="utf-8") as out:
        out.write("# word<TAB>syl-la-bles<TAB>stress digits (1 primary, 2 secondary, 0 none)\n")
        out.write("# derived from CMUdict stress + en_US hyphenation patterns; see tools/build_lexicons.py\n")
        for row in rows:
            out.write("\t".join(row) + "\n")
    return len(rows)


def build_sentiment():
    src = os.path.join(os.path.dirname(afinn.__file__), "data", "AFINN-en-165.txt")
    rows = []
    with open(src, encoding="utf-8") as f:
        for line in f:
            word, score = line.rstrip("\n").split("\t")
            if WORD.match(word):
                rows.append((word, int(score)))
    rows.sort()
    path = os.path.join(DATA, "sentiment.tsv")
    with open(path, "w", encoding="utf-8") as out:
        out.write("# word<TAB>valence in [-5, 5] (AFINN-165, Finn Arup Nielsen, ODbL 1.0)\n")
        for word, score in rows:
            out.write(f"{word}\t{score}\n")
    return len(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--top", type=int, default=30000)
    args = ap.parse_args()
    print("pronunciations:", build_pronunciations(args.top))
    print("sentiment:", build_sentiment())
