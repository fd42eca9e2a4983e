"""Independent brute-force oracles used to cross-check the library.

Everything here is deliberately written with plain Python loops, sets and
math.* so it shares no code path with the vectorized implementations it
checks.  Per-point distance arithmetic mirrors the documented operation
order (scale each coordinate, subtract, square, sum left to right, sqrt) so
that exact float equality against the implementation is well defined.
"""

import itertools
import math
from collections import Counter


def dice_bruteforce(pred, gt, label=1):
    p = {tuple(idx) for idx in _indices(pred) if _at(pred, idx) == label}
    g = {tuple(idx) for idx in _indices(gt) if _at(gt, idx) == label}
    if not p and not g:
        return 1.0
    return 2 * len(p & g) / (len(p) + len(g))


def surface_bruteforce(mask, label=1):
    """Foreground points with a face-adjacent background or outside neighbor."""
    shape = mask.shape
    fg = {tuple(idx) for idx in _indices(mask) if _at(mask, idx) == label}
    surface = []
    for idx in sorted(fg):
        exposed = False
        for axis in range(len(shape)):
            for delta in (-1, 1):
                nb = list(idx)
                nb[axis] += delta
                nb = tuple(nb)
                if not all(0 <= nb[k] < shape[k] for k in range(len(shape))) or nb not in fg:
                    exposed = True
        if exposed:
            surface.append(idx)
    return surface


def assd_bruteforce(pred, gt, spacing, label=1):
    s_pts = [_scale(p, spacing) for p in surface_bruteforce(pred, label)]
    g_pts = [_scale(p, spacing) for p in surface_bruteforce(gt, label)]
    if not s_pts or not g_pts:
        raise ValueError("empty surface")
    d_sg = [min(_dist(a, b) for b in g_pts) for a in s_pts]
    d_gs = [min(_dist(a, b) for b in s_pts) for a in g_pts]
    return (math.fsum(d_sg) + math.fsum(d_gs)) / (len(s_pts) + len(g_pts))


def entropy_bruteforce(sample_values):
    """Entropy (nats) of the label frequencies in one pixel's sample list."""
    n = len(sample_values)
    total = 0.0
    for count in Counter(sample_values).values():
        p = count / n
        total -= p * math.log(p)
    return total


def _scale(idx, spacing):
    return tuple(i * s for i, s in zip(idx, spacing))


def _dist(a, b):
    d2 = (a[0] - b[0]) * (a[0] - b[0])
    for k in range(1, len(a)):
        d2 = d2 + (a[k] - b[k]) * (a[k] - b[k])
    return math.sqrt(d2)


def _indices(arr):
    return itertools.product(*(range(n) for n in arr.shape))


def _at(arr, idx):
    return int(arr[idx] if not hasattr(arr, "data") else arr.data[idx])
