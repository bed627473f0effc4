#!/usr/bin/env python3
"""Scalar reference values for the three pretraining losses.

Computes expected values for the distillation cross-entropy, the masked
LM cross-entropy and the cosine alignment loss directly from their
definitions with numpy in float64, then emits a C++ table that the unit
tests freeze. Run from the repo root:

    python3 scripts/oracle_losses.py > tests/oracle/loss_cases.inc
"""

import numpy as np


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    m = z.max(axis=-1, keepdims=True)
    e = np.exp(z - m)
    return e / e.sum(axis=-1, keepdims=True)


def kd_reference(teacher_logits, student_logits):
    """-(1/N) sum_i sum_v t_iv * log s_iv, log clamped below at -100."""
    t = softmax(teacher_logits)
    s = softmax(student_logits)
    logs = np.maximum(np.log(s), -100.0)
    return float(-(t * logs).sum() / t.shape[0])


def mlm_reference(logits, labels):
    """Mean -log softmax(logits)[label] over labels != -100."""
    logits = np.asarray(logits, dtype=np.float64)
    total, n = 0.0, 0
    for row, lab in zip(logits, labels):
        if lab == -100:
            continue
        m = row.max()
        lse = m + np.log(np.exp(row - m).sum())
        total += lse - row[lab]
        n += 1
    return float(total / n)


def cos_reference(student, teacher, mask):
    """Mean over mask==1 positions of 1 - cos(s, t); zero norm -> loss 1."""
    total, n = 0.0, 0
    for s, t, m in zip(student, teacher, mask):
        if m == 0:
            continue
        s = np.asarray(s, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        ns, nt = np.linalg.norm(s), np.linalg.norm(t)
        sim = 0.0 if ns == 0.0 or nt == 0.0 else float(s @ t) / (ns * nt)
        total += 1.0 - sim
        n += 1
    return float(total / n)


def fmt(x):
    return repr(float(x))


def flat(a):
    return ", ".join(fmt(v) for v in np.asarray(a, dtype=np.float64).ravel())


def main():
    rng = np.random.default_rng(20240817)
    print("// Generated by scripts/oracle_losses.py -- do not edit by hand.")
    print("// Reference values computed directly from the loss definitions.")
    print()

    # ---- kd cases: random logits plus the documented closed forms ----
    kd_cases = []
    kd_cases.append(([[0.0, 0.0]], [[0.0, 0.0]]))                 # CE(t,t) = ln 2
    kd_cases.append(([[40.0, -40.0]], [[0.0, 0.0]]))              # one-hot vs uniform
    kd_cases.append(([[np.log(0.7), np.log(0.3)]],
                     [[np.log(0.6), np.log(0.4)]]))               # spec scalar case
    for i in range(9):
        n = int(rng.integers(1, 4))
        v = int(rng.integers(2, 6))
        kd_cases.append((rng.normal(0, 2, (n, v)), rng.normal(0, 2, (n, v))))

    print("static const LossCase2 kKdCases[] = {")
    for tl, sl in kd_cases:
        tl = np.asarray(tl, dtype=np.float64)
        print("    {%d, %d, {%s}, {%s}, %s}," %
              (tl.shape[0], tl.shape[1], flat(tl), flat(sl),
               fmt(kd_reference(tl, sl))))
    print("};")
    print()

    # ---- mlm cases ----
    mlm_cases = []
    mlm_cases.append(([[1.0, 2.0, 3.0]], [2]))                    # spec scalar case
    mlm_cases.append(([[40.0, 0.0, 0.0], [0.0, 40.0, 0.0]], [0, 1]))
    mlm_cases.append(([[0.0] * 7], [3]))                          # uniform -> ln 7
    for i in range(9):
        n = int(rng.integers(2, 5))
        v = int(rng.integers(2, 6))
        logits = rng.normal(0, 2, (n, v))
        labels = [int(rng.integers(0, v)) if rng.random() > 0.25 else -100
                  for _ in range(n)]
        if all(l == -100 for l in labels):
            labels[0] = 0
        mlm_cases.append((logits, labels))

    print("static const MlmCase kMlmCases[] = {")
    for logits, labels in mlm_cases:
        logits = np.asarray(logits, dtype=np.float64)
        print("    {%d, %d, {%s}, {%s}, %s}," %
              (logits.shape[0], logits.shape[1], flat(logits),
               ", ".join(str(l) for l in labels),
               fmt(mlm_reference(logits, labels))))
    print("};")
    print()

    # ---- cos cases ----
    cos_cases = []
    cos_cases.append(([[1.0, 2.0]], [[1.0, 2.0]], [1]))           # identical -> 0
    cos_cases.append(([[1.0, 0.0]], [[0.0, 1.0]], [1]))           # orthogonal -> 1
    cos_cases.append(([[1.0, 1.0]], [[-1.0, -1.0]], [1]))         # antiparallel -> 2
    cos_cases.append(([[0.0, 0.0]], [[3.0, 4.0]], [1]))           # zero norm -> 1
    for i in range(8):
        p = int(rng.integers(1, 4))
        h = int(rng.integers(2, 5))
        mask = [int(rng.integers(0, 2)) for _ in range(p)]
        if sum(mask) == 0:
            mask[0] = 1
        cos_cases.append((rng.normal(0, 1.5, (p, h)),
                          rng.normal(0, 1.5, (p, h)), mask))

    print("static const CosCase kCosCases[] = {")
    for s, t, mask in cos_cases:
        s = np.asarray(s, dtype=np.float64)
        print("    {%d, %d, {%s}, {%s}, {%s}, %s}," %
              (s.shape[0], s.shape[1], flat(s), flat(t),
               ", ".join(str(m) for m in mask),
               fmt(cos_reference(s, t, mask))))
    print("};")


if __name__ == "__main__":
    main()
