#!/usr/bin/env python3
"""Independent shape walk for the encoder parameter inventory.

Enumerates every parameter tensor of the encoder from the config alone,
without touching the C++ code, so the param_count test has a frozen
expected value computed ahead of the build.
"""

def count(vocab, hidden, layers, heads, intermediate, seq):
    assert hidden % heads == 0
    shapes = []
    shapes.append(("token_embeddings", vocab * hidden))
    shapes.append(("position_embeddings", seq * hidden))
    per_block = []
    for name in ("q", "k", "v", "o"):
        per_block.append((name + "_w", hidden * hidden))
        per_block.append((name + "_b", hidden))
    per_block.append(("ff1_w", hidden * intermediate))
    per_block.append(("ff1_b", intermediate))
    per_block.append(("ff2_w", intermediate * hidden))
    per_block.append(("ff2_b", hidden))
    per_block.append(("ln1_gain", hidden))
    per_block.append(("ln1_bias", hidden))
    per_block.append(("ln2_gain", hidden))
    per_block.append(("ln2_bias", hidden))
    block_total = sum(n for _, n in per_block)
    shapes.append(("blocks (%d x %d)" % (layers, block_total), layers * block_total))
    shapes.append(("mlm_w", hidden * vocab))
    shapes.append(("mlm_b", vocab))
    total = sum(n for _, n in shapes)
    for name, n in shapes:
        print("  %-24s %d" % (name, n))
    return total


if __name__ == "__main__":
    print("desk teacher (vocab 211, hidden 32, layers 4, heads 4, ffn 128, seq 64):")
    t = count(211, 32, 4, 4, 128, 64)
    print("  total =", t)
    print()
    print("desk student (2 layers):")
    s = count(211, 32, 2, 4, 128, 64)
    print("  total =", s)
