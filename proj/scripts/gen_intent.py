#!/usr/bin/env python3
"""Synthetic intent-classification fixture: 2786 rows, 139 classes,
and a row-aligned split file assigning 2228 rows to train and 558 to test.
Contents are synthetic; only the shape matters to the tests."""

import random

rng = random.Random(4242)

N_ROWS = 2786
N_CLASSES = 139
N_TRAIN = 2228

SUBJECTS = ["account", "card", "loan", "balance", "transfer", "deposit",
            "statement", "branch", "rate", "limit", "pin", "app"]
VERBS = ["check", "open", "close", "update", "reset", "increase", "verify",
         "report", "cancel", "activate"]
EXTRAS = ["today", "online", "abroad", "quickly", "again", "now", "please"]

rows = []
for i in range(N_ROWS):
    label = "intent%03d" % (i % N_CLASSES)  # every class appears >= 20 times
    words = [rng.choice(VERBS), "my", rng.choice(SUBJECTS)]
    if rng.random() < 0.6:
        words.append(rng.choice(EXTRAS))
    rows.append(("%s" % " ".join(words), label))
rng.shuffle(rows)

split = ["train"] * N_TRAIN + ["test"] * (N_ROWS - N_TRAIN)
rng.shuffle(split)

with open("tests/fixtures/intent.tsv", "w") as f:
    for text, label in rows:
        f.write("%s\t%s\n" % (text, label))
with open("tests/fixtures/intent.split", "w") as f:
    f.write("\n".join(split) + "\n")

labels = {label for _, label in rows}
print("rows=%d classes=%d train=%d test=%d" % (
    len(rows), len(labels), split.count("train"), split.count("test")))
