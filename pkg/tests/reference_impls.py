"""Straight-line reference implementations of every metric formula.

Deliberately naive: plain loops, no shared code with the package, so the
package implementations are checked against an independent reading of each
formula.
"""

from __future__ import annotations

import math


def ref_are(truths, estimates):
    total = 0.0
    for t, e in zip(truths, estimates):
        total += abs(t - e) / t
    return total / len(truths)


def ref_rmse(truths, estimates):
    total = 0.0
    for t, e in zip(truths, estimates):
        total += (t - e) ** 2
    return math.sqrt(total / len(truths))


def ref_f1(detected, truth):
    tp = len(detected & truth)
    pr = tp / len(detected) if detected else 0.0
    re = tp / len(truth) if truth else 0.0
    if pr + re == 0:
        return 0.0
    return 2 * pr * re / (pr + re)


def ref_wmre(est_counts: dict[int, int], act_counts: dict[int, int]) -> float:
    sizes = set(est_counts) | set(act_counts)
    num = 0.0
    den = 0.0
    for i in sizes:
        n = act_counts.get(i, 0)
        nh = est_counts.get(i, 0)
        num += abs(n - nh)
        den += (n + nh) / 2
    return num / den


def ref_entropy(counts: dict[int, int]) -> float:
    n_flows = sum(counts.values())
    total = 0.0
    for i, n_i in counts.items():
        if n_i:
            total += -i * (n_i / n_flows) * math.log(n_i / n_flows)
    return total


def ref_re(est: float, actual: float) -> float:
    if actual == 0:
        return abs(est - actual)
    return abs(1 - est / actual)
