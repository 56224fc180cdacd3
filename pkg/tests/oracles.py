"""Independent brute-force recomputations used to pin expected values.

Everything here is deliberately naive: plain Python loops, explicit interval
membership tests against the float bin edges, no shared code with the package.
The convention mirrored from the package: bin m covers ((m-1)/M, m/M], a
probability of exactly 0 falls into bin 1, equal-mass ranges put the larger
chunks first with ties kept in sample order.
"""

from __future__ import annotations

import math


def top1_brute(probs_row):
    best_j, best_p = 0, probs_row[0]
    for j in range(1, len(probs_row)):
        if probs_row[j] > best_p:
            best_j, best_p = j, probs_row[j]
    return best_j, best_p


def _membership_bin(c: float, num_bins: int) -> int:
    for m in range(1, num_bins + 1):
        lo = (m - 1) / num_bins
        hi = m / num_bins
        if lo < c <= hi or (m == 1 and c <= hi):
            return m
    raise AssertionError(f"no bin for {c}")


def bin_table_brute(probs, labels, num_bins):
    """Per-bin (count, accuracy, mean confidence) from top-1 predictions."""
    n = len(probs)
    counts = [0] * num_bins
    correct_sums = [0.0] * num_bins
    conf_sums = [0.0] * num_bins
    for i in range(n):
        yhat, c = top1_brute(probs[i])
        m = _membership_bin(c, num_bins)
        counts[m - 1] += 1
        correct_sums[m - 1] += 1.0 if yhat == labels[i] else 0.0
        conf_sums[m - 1] += c
    table = []
    for m in range(num_bins):
        if counts[m]:
            table.append((counts[m], correct_sums[m] / counts[m], conf_sums[m] / counts[m]))
        else:
            table.append((0, 0.0, 0.0))
    return table


def ece_brute(probs, labels, num_bins):
    n = len(probs)
    total = 0.0
    for count, acc, conf in bin_table_brute(probs, labels, num_bins):
        if count:
            total += (count / n) * abs(acc - conf)
    return total


def ece_mass_brute(probs, labels, num_bins):
    """Equal-mass variant: quantile upper edges, then explicit membership."""
    n = len(probs)
    confs = [top1_brute(row)[1] for row in probs]
    ordered = sorted(confs)
    base, rem = divmod(n, num_bins)
    sizes = [base + 1] * rem + [base] * (num_bins - rem)
    uppers = []
    end = 0
    for size in sizes:
        end += size
        uppers.append(ordered[end - 1])
    uppers[-1] = 1.0
    counts = [0] * num_bins
    correct_sums = [0.0] * num_bins
    conf_sums = [0.0] * num_bins
    for i in range(n):
        yhat, c = top1_brute(probs[i])
        for m in range(1, num_bins + 1):
            if c <= uppers[m - 1]:
                break
        counts[m - 1] += 1
        correct_sums[m - 1] += 1.0 if yhat == labels[i] else 0.0
        conf_sums[m - 1] += c
    total = 0.0
    for m in range(num_bins):
        if counts[m]:
            total += (counts[m] / n) * abs(
                correct_sums[m] / counts[m] - conf_sums[m] / counts[m]
            )
    return total


def sce_brute(probs, labels, num_bins):
    n = len(probs)
    k = len(probs[0])
    total = 0.0
    for cls in range(k):
        counts = [0] * num_bins
        member_sums = [0.0] * num_bins
        conf_sums = [0.0] * num_bins
        for i in range(n):
            c = probs[i][cls]
            m = _membership_bin(c, num_bins)
            counts[m - 1] += 1
            member_sums[m - 1] += 1.0 if labels[i] == cls else 0.0
            conf_sums[m - 1] += c
        for m in range(num_bins):
            if counts[m]:
                total += (counts[m] / n) * abs(
                    member_sums[m] / counts[m] - conf_sums[m] / counts[m]
                )
    return total / k


def ace_brute(probs, labels, num_ranges):
    n = len(probs)
    k = len(probs[0])
    base, rem = divmod(n, num_ranges)
    sizes = [base + 1] * rem + [base] * (num_ranges - rem)
    total = 0.0
    for cls in range(k):
        col = [probs[i][cls] for i in range(n)]
        order = sorted(range(n), key=lambda i: (col[i], i))
        start = 0
        for size in sizes:
            chunk = order[start:start + size]
            start += size
            acc = sum(1.0 for i in chunk if labels[i] == cls) / size
            conf = sum(col[i] for i in chunk) / size
            total += abs(acc - conf)
    return total / (k * num_ranges)


def softmax_brute(logits_row):
    """Direct p_j = e^{a_j} / sum e^{a_i}; fine for moderate logits."""
    exps = [math.exp(a) for a in logits_row]
    s = sum(exps)
    return [e / s for e in exps]


def mlp_forward_brute(layers, x_row):
    """Straight-line re-evaluation of one sample with scalar loops.

    layers: list of (weights as list of rows, bias list, activation name).
    """
    a = list(x_row)
    for weights, bias, activation in layers:
        z = []
        for r in range(len(weights)):
            acc = bias[r]
            for c in range(len(a)):
                acc += weights[r][c] * a[c]
            z.append(acc)
        if activation == "relu":
            a = [v if v > 0 else 0.0 for v in z]
        else:
            a = z
    return a


def grid_search_temperature(loss_fn, t_min, t_max, resolution):
    """Dense scan for the loss-minimizing temperature."""
    steps = int(round((t_max - t_min) / resolution))
    best_t, best_v = t_min, loss_fn(t_min)
    for i in range(1, steps + 1):
        t = t_min + i * resolution
        if t > t_max:
            t = t_max
        v = loss_fn(t)
        if v < best_v:
            best_t, best_v = t, v
    return best_t, best_v
