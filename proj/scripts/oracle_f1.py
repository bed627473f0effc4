#!/usr/bin/env python3
"""Brute-force F1 references, written before the C++ scorers.

Generates frozen cases for three scorers:
  - micro token F1 (equals accuracy when every position gets one prediction)
  - entity-level span F1 over BIO tags (exact (type, start, end) matches,
    orphan I- repaired as B-)
  - weighted multi-class F1 (per-class F1 weighted by gold support)

The reference implementations below are deliberately plain: spans are
enumerated position-by-position, per-class counts with explicit loops.
Expected values are printed with %.17g so the C++ side can match exactly
(all arithmetic is ratios of small integers computed in the same order:
p = tp/pred, r = tp/gold, f1 = 2pr/(p+r)).
"""

import random


def micro_f1(pred, gold):
    assert len(pred) == len(gold)
    if not gold:
        return 1.0
    correct = sum(1 for p, g in zip(pred, gold) if p == g)
    return correct / len(gold)


def extract_spans(tags):
    """(type, start, end) spans; orphan I- (no same-type B-/I- before) -> B-."""
    spans = []
    cur_type, cur_start = None, None
    for i, t in enumerate(tags):
        if t == "O":
            if cur_type is not None:
                spans.append((cur_type, cur_start, i))
                cur_type = None
            continue
        head, typ = t.split("-", 1)
        if head == "B" or cur_type != typ:  # orphan I- treated as B-
            if cur_type is not None:
                spans.append((cur_type, cur_start, i))
            cur_type, cur_start = typ, i
    if cur_type is not None:
        spans.append((cur_type, cur_start, len(tags)))
    return spans


def span_f1(pred, gold):
    ps, gs = set(extract_spans(pred)), set(extract_spans(gold))
    if not ps and not gs:
        return 0.0
    tp = len(ps & gs)
    if not ps or not gs or tp == 0:
        return 0.0
    p = tp / len(ps)
    r = tp / len(gs)
    return 2.0 * p * r / (p + r)


def weighted_f1(pred, gold, num_labels):
    assert len(pred) == len(gold) and gold
    total = len(gold)
    out = 0.0
    for c in range(num_labels):
        tp = sum(1 for p, g in zip(pred, gold) if p == c and g == c)
        predicted = sum(1 for p in pred if p == c)
        support = sum(1 for g in gold if g == c)
        if support == 0:
            continue
        if predicted == 0 or tp == 0:
            f1 = 0.0
        else:
            p = tp / predicted
            r = tp / support
            f1 = 2.0 * p * r / (p + r)
        out += support * f1
    # Single division so identical inputs score exactly 1.0.
    return out / total


def random_bio(rng, n, types):
    """A random VALID BIO sequence (repair never fires on these)."""
    tags = []
    i = 0
    while i < n:
        if rng.random() < 0.6:
            tags.append("O")
            i += 1
        else:
            typ = rng.choice(types)
            length = min(rng.randint(1, 3), n - i)
            tags.append("B-" + typ)
            tags.extend("I-" + typ for _ in range(length - 1))
            i += length
    return tags


def main():
    rng = random.Random(20260815)
    types = ["PER", "LOC", "ORG"]
    lines = []

    lines.append("// 40 micro token-F1 cases {pred, gold, expected}")
    lines.append("static const struct MicroCase {")
    lines.append("    std::vector<int> pred, gold;")
    lines.append("    double expected;")
    lines.append("} kMicroCases[] = {")
    for _ in range(40):
        n = rng.randint(1, 12)
        labels = rng.randint(2, 5)
        gold = [rng.randrange(labels) for _ in range(n)]
        pred = [g if rng.random() < 0.6 else rng.randrange(labels) for g in gold]
        lines.append(
            "    {{%s}, {%s}, %.17g}," % (
                ",".join(map(str, pred)), ",".join(map(str, gold)),
                micro_f1(pred, gold)))
    lines.append("};")
    lines.append("")

    lines.append("// 40 entity-level span-F1 cases over BIO tags")
    lines.append("static const struct SpanCase {")
    lines.append("    std::vector<const char*> pred, gold;")
    lines.append("    double expected;")
    lines.append("} kSpanCases[] = {")
    for i in range(40):
        n = rng.randint(2, 14)
        gold = random_bio(rng, n, types)
        if rng.random() < 0.3:
            pred = random_bio(rng, n, types)
        else:  # corrupt gold lightly so some spans survive
            pred = list(gold)
            for j in range(n):
                if rng.random() < 0.25:
                    pred[j] = rng.choice(
                        ["O", "B-" + rng.choice(types), "I-" + rng.choice(types)])
        lines.append(
            "    {{%s}, {%s}, %.17g}," % (
                ",".join('"%s"' % t for t in pred),
                ",".join('"%s"' % t for t in gold),
                span_f1(pred, gold)))
    lines.append("};")
    lines.append("")

    lines.append("// 40 weighted multi-class F1 cases")
    lines.append("static const struct WeightedCase {")
    lines.append("    int num_labels;")
    lines.append("    std::vector<int> pred, gold;")
    lines.append("    double expected;")
    lines.append("} kWeightedCases[] = {")
    for _ in range(40):
        labels = rng.randint(2, 6)
        n = rng.randint(2, 20)
        gold = [rng.randrange(labels) for _ in range(n)]
        pred = [g if rng.random() < 0.5 else rng.randrange(labels) for g in gold]
        lines.append(
            "    {%d, {%s}, {%s}, %.17g}," % (
                labels, ",".join(map(str, pred)), ",".join(map(str, gold)),
                weighted_f1(pred, gold, labels)))
    lines.append("};")

    with open("tests/oracle/f1_cases.inc", "w") as f:
        f.write("\n".join(lines) + "\n")
    print("wrote tests/oracle/f1_cases.inc")

    # hand-check the spec's worked examples against this reference
    assert abs(weighted_f1([0, 1, 1, 1], [0, 0, 1, 1], 2) - (0.5 * 2 / 3 + 0.5 * 0.8)) < 1e-15
    assert abs(weighted_f1([2] * 8, [0, 0, 1, 1, 2, 2, 3, 3], 4) - 0.1) < 1e-15
    assert micro_f1([0, 1, 2, 2], [0, 1, 2, 0]) == 0.75
    assert span_f1(["B-PER", "I-PER", "O"], ["B-PER", "I-PER", "O"]) == 1.0
    assert span_f1(["B-PER", "O", "B-LOC"], ["B-PER", "O", "B-ORG"]) == 0.5
    print("spec examples verified")


if __name__ == "__main__":
    main()
