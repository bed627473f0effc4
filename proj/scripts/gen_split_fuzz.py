#!/usr/bin/env python3
"""Generate the sentence-splitter fuzz corpus and its expected-stats ledger.

Emits 1000 synthetic sentences with word counts between 1 and 1000 and
randomly placed sentence-final periods, then computes the expected
post-splitting statistics (chunk count, word count, over-limit chunk count)
with an independent greedy reference implementation. The C++ pipeline must
reproduce the ledger exactly.
"""

import random

WORD_LIMIT = 400
N_SENTENCES = 1000
OUT_CORPUS = "tests/fixtures/split_fuzz.txt"
OUT_LEDGER = "tests/fixtures/split_fuzz.ledger"


def make_sentence(rng: random.Random) -> list[str]:
    n = rng.randint(1, 1000)
    style = rng.random()
    if style < 0.3:
        period_prob = 0.0          # no internal split points at all
    elif style < 0.6:
        period_prob = 0.005        # sparse: many oversized chunks
    else:
        period_prob = rng.uniform(0.01, 0.1)
    words = []
    for i in range(n):
        w = f"w{rng.randrange(2000)}"
        if rng.random() < period_prob and i != n - 1:
            w += "."
        if i == n - 1 and rng.random() < 0.5:
            w += "."
        words.append(w)
    return words


def reference_chunks(words: list[str], limit: int) -> list[int]:
    """Greedy packing of period-delimited segments; returns chunk word counts."""
    if len(words) <= limit:
        return [len(words)]
    segments = []
    start = 0
    for i, w in enumerate(words):
        if w.endswith("."):
            segments.append(i + 1 - start)
            start = i + 1
    if start < len(words):
        segments.append(len(words) - start)

    chunks = []
    current = 0
    for seg in segments:
        if current > 0 and current + seg > limit:
            chunks.append(current)
            current = 0
        current += seg
    if current > 0:
        chunks.append(current)
    return chunks


def main() -> None:
    rng = random.Random(0)
    sentences = [make_sentence(rng) for _ in range(N_SENTENCES)]

    total_chunks = 0
    total_words = 0
    over_limit = 0
    for words in sentences:
        for size in reference_chunks(words, WORD_LIMIT):
            total_chunks += 1
            total_words += size
            if size > WORD_LIMIT:
                over_limit += 1

    with open(OUT_CORPUS, "w") as f:
        for words in sentences:
            f.write(" ".join(words) + "\n")
    with open(OUT_LEDGER, "w") as f:
        f.write(f"sentences: {total_chunks}\n")
        f.write(f"words: {total_words}\n")
        f.write(f"over_limit: {over_limit}\n")
    print(f"wrote {N_SENTENCES} sentences -> {total_chunks} chunks, "
          f"{total_words} words, {over_limit} over limit")


if __name__ == "__main__":
    main()
