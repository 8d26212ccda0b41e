"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written in plain Python with no shared code
paths with the package internals (no numpy sorting/unique/trapz), so a bug
in the library cannot hide in its own oracle.
"""

from collections import defaultdict


def eauc_bruteforce(ecc_err_pairs, span):
    """Sort + pairwise trapezoids with ties pre-averaged, as a plain loop."""
    groups = defaultdict(list)
    for ecc, err in ecc_err_pairs:
        groups[ecc].append(err)
    points = sorted((ecc, sum(errs) / len(errs)) for ecc, errs in groups.items())
    area = 0.0
    for k in range(1, len(points)):
        x0, y0 = points[k - 1]
        x1, y1 = points[k]
        area += 0.5 * (x1 - x0) * (y0 + y1)
    return area / (span * span)


def ks_uniform_bruteforce(values, lo, hi):
    """Exact one-sample KS vs U(lo, hi) by scanning both sides of each step."""
    xs = sorted(values)
    n = len(xs)
    best = 0.0
    for k, x in enumerate(xs):
        f = (x - lo) / (hi - lo)
        best = max(best, abs((k + 1) / n - f), abs(k / n - f))
    return best


def best_split_bruteforce(X, y, min_leaf=1):
    """Exhaustive (feature, midpoint) split search minimizing child SSE."""
    n, n_features = len(y), len(X[0])
    best = None
    for f in range(n_features):
        xs = sorted(set(row[f] for row in X))
        for a, b in zip(xs, xs[1:]):
            thr = 0.5 * (a + b)
            left = [y[k] for k in range(n) if X[k][f] <= thr]
            right = [y[k] for k in range(n) if X[k][f] > thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            sse = 0.0
            for side in (left, right):
                mean = sum(side) / len(side)
                sse += sum((v - mean) ** 2 for v in side)
            if best is None or sse < best[0]:
                best = (sse, f, thr,
                        sum(left) / len(left), sum(right) / len(right))
    return best
