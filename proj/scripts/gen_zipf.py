#!/usr/bin/env python3
"""Generate a Zipf-distributed corpus and the expected top-206 word list.

The expected list is computed here with plain counting and a
(count descending, word ascending) sort — independent of the C++
vocabulary builder it validates.
"""

import collections
import random

SEED = 0
N_SENTENCES = 5000
VOCAB_WORDS = 600
TOP_K = 206  # 211-entry vocabulary minus 5 reserved tokens
OUT_CORPUS = "tests/fixtures/zipf_corpus.txt"
OUT_TOP = "tests/fixtures/zipf_top206.txt"


def main() -> None:
    rng = random.Random(SEED)
    words = [f"z{i:03d}" for i in range(VOCAB_WORDS)]
    weights = [1.0 / (r + 1) ** 1.1 for r in range(VOCAB_WORDS)]

    counts: collections.Counter[str] = collections.Counter()
    with open(OUT_CORPUS, "w") as f:
        for _ in range(N_SENTENCES):
            n = rng.randint(5, 30)
            sent = rng.choices(words, weights=weights, k=n)
            counts.update(sent)
            f.write(" ".join(sent) + "\n")

    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    with open(OUT_TOP, "w") as f:
        for word, _ in ranked[:TOP_K]:
            f.write(word + "\n")
    print(f"wrote {N_SENTENCES} sentences, {len(counts)} distinct words, "
          f"top {TOP_K} listed")


if __name__ == "__main__":
    main()
