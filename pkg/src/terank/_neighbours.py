"""Max-norm neighbour searches with a Theiler exclusion window.

Points are rows of a time-ordered matrix; rows ``j`` with ``|i - j| <= w``
never count as neighbours of row ``i`` (so the row itself is excluded
too).  Both searches sort by the first coordinate and sweep outwards,
stopping once that coordinate alone rules out further matches.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _dist(points, a, b):
    d = 0.0
    for c in range(points.shape[1]):
        v = abs(points[a, c] - points[b, c])
        if v > d:
            d = v
    return d


@njit(cache=True)
def _knn_sorted(points, order, k, w):
    n = points.shape[0]
    eps = np.empty(n)
    best = np.empty(k)
    for p in range(n):
        i = order[p]
        for m in range(k):
            best[m] = np.inf
        x0 = points[i, 0]
        for direction in (1, -1):
            q = p + direction
            while 0 <= q < n:
                j = order[q]
                if abs(points[j, 0] - x0) >= best[k - 1]:
                    break
                if abs(i - j) > w:
                    d = _dist(points, i, j)
                    if d < best[k - 1]:
                        m = k - 1
                        while m > 0 and best[m - 1] > d:
                            best[m] = best[m - 1]
                            m -= 1
                        best[m] = d
                q += direction
        eps[i] = best[k - 1]
    return eps


@njit(cache=True)
def _count_sorted(points, order, radius, w, strict):
    n = points.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    for p in range(n):
        i = order[p]
        r = radius[i]
        x0 = points[i, 0]
        c = 0
        for direction in (1, -1):
            q = p + direction
            while 0 <= q < n:
                j = order[q]
                a = abs(points[j, 0] - x0)
                if (strict and a >= r) or ((not strict) and a > r):
                    break
                if abs(i - j) > w:
                    d = _dist(points, i, j)
                    if (strict and d < r) or ((not strict) and d <= r):
                        c += 1
                q += direction
        counts[i] = c
    return counts


@njit(cache=True)
def _count_1d(values, order, radius, w, strict):
    # |s - v| computed in floating point is monotone along the sorted axis,
    # so both ends of the admissible run are found by bisection
    n = values.shape[0]
    s = values[order]
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        v = values[i]
        r = radius[i]
        lo, hi = 0, n
        while lo < hi:
            mid = (lo + hi) // 2
            a = v - s[mid]
            inside = a < r if strict else a <= r
            if inside:
                hi = mid
            else:
                lo = mid + 1
        first = lo
        lo, hi = 0, n
        while lo < hi:
            mid = (lo + hi) // 2
            a = s[mid] - v
            outside = a >= r if strict else a > r
            if outside:
                hi = mid
            else:
                lo = mid + 1
        c = lo - first
        for j in range(max(0, i - w), min(n, i + w + 1)):
            a = abs(values[j] - v)
            if (strict and a < r) or ((not strict) and a <= r):
                c -= 1
        counts[i] = c
    return counts


def _excluded(n, w):
    """Rows outside the window of each row (self included in the window)."""
    i = np.arange(n)
    window = np.minimum(i, w) + np.minimum(n - 1 - i, w) + 1
    return n - window


def knn_distance(points, k, theiler=0):
    """Distance to the ``k``-th nearest admissible neighbour of every row."""
    points = np.ascontiguousarray(points, dtype=float)
    order = np.argsort(points[:, 0], kind="stable")
    return _knn_sorted(points, order, int(k), int(theiler))


def count_within(points, radius, theiler=0, strict=True):
    """Admissible neighbours of each row within ``radius`` (``<`` if strict)."""
    points = np.ascontiguousarray(points, dtype=float)
    n = points.shape[0]
    if points.shape[1] == 0:
        return _excluded(n, int(theiler))
    radius = np.ascontiguousarray(np.broadcast_to(radius, (n,)), dtype=float)
    order = np.argsort(points[:, 0], kind="stable")
    if points.shape[1] == 1:
        return _count_1d(points[:, 0].copy(), order, radius, int(theiler), bool(strict))
    return _count_sorted(points, order, radius, int(theiler), bool(strict))
