#!/usr/bin/env python3
"""Scalar Adam reference: bias-corrected update sequence on one parameter.

Prints the parameter value after each of a few steps with a fixed
gradient sequence; the optimizer test freezes these numbers.
"""

def adam_sequence(grads, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8):
    p, m, v = 0.0, 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1 ** t)
        vhat = v / (1 - beta2 ** t)
        p -= lr * mhat / (vhat ** 0.5 + eps)
        out.append(p)
    return out


if __name__ == "__main__":
    print("grad sequence [1, 1]:", [repr(x) for x in adam_sequence([1.0, 1.0])])
    print("grad sequence [1, -0.5, 2]:",
          [repr(x) for x in adam_sequence([1.0, -0.5, 2.0])])
    print("lr 5e-4, grads [0.3, 0.3]:",
          [repr(x) for x in adam_sequence([0.3, 0.3], lr=5e-4)])
