"""Periodic averaging, the oscillation statistic and tracking metrics."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError


@dataclass
class TimeSeries:
    """Uniformly sampled scalar or vector signal."""

    values: np.ndarray
    l: float
    t0: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.l <= 0.0:
            raise ValueError("sample step must be positive")

    @property
    def times(self):
        return self.t0 + self.l * np.arange(len(self.values))

    def window(self, t0=None, t1=None):
        """Samples with ``t0 <= t <= t1`` (bounds inclusive, within half a step)."""
        t = self.times
        lo = -np.inf if t0 is None else t0 - 0.5 * self.l
        hi = np.inf if t1 is None else t1 + 0.5 * self.l
        return self.values[(t >= lo) & (t <= hi)]


def periodic_average(ts, period):
    """Trailing one-period sliding mean.

    The output has ``len(values) - N + 1`` samples with ``N = round(period / l)``;
    entry ``k`` averages samples ``k .. k+N-1``.
    """
    n = int(round(period / ts.l))
    if n < 2:
        raise ValueError("period must cover at least two samples")
    v = ts.values
    if len(v) < n:
        raise ValueError("series is shorter than one period")
    c = np.cumsum(np.concatenate([np.zeros((1,) + v.shape[1:]), v]), axis=0)
    return (c[n:] - c[:-n]) / n


def _max_pairwise_distance(P):
    if len(P) < 2:
        return 0.0
    if P.shape[1] == 1:
        return float(P.max() - P.min())
    pts = P
    if len(P) > P.shape[1] + 1:
        try:
            pts = P[ConvexHull(P).vertices]
        except QhullError:
            pts = P  # flat or degenerate set, fall through to direct search
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", d, d))))


def oscillation_statistic(ts, t0=None, t1=None):
    """``sqrt(sup || sum_{window} (f - mean) * l ||)`` over all contiguous windows.

    With prefix sums ``P``, every window sum is a difference ``P_j - P_i``, so
    the supremum is the diameter of the prefix-sum point set (max minus min for
    scalars).
    """
    f = ts.window(t0, t1)
    if len(f) == 0:
        raise ValueError("empty window")
    f = f.reshape(len(f), -1)
    g = (f - f.mean(axis=0)) * ts.l
    P = np.vstack([np.zeros((1, g.shape[1])), np.cumsum(g, axis=0)])
    return float(np.sqrt(_max_pairwise_distance(P)))


def oscillation_bruteforce(values, l):
    """O(n^2) reference evaluation of :func:`oscillation_statistic`."""
    f = np.asarray(values, dtype=float)
    f = f.reshape(len(f), -1)
    g = (f - f.mean(axis=0)) * l
    best = 0.0
    for i in range(len(g)):
        # every window starting at i, summed directly rather than from shared prefix sums
        s = np.cumsum(g[i:], axis=0)
        best = max(best, float(np.max(np.linalg.norm(s, axis=1))))
    return float(np.sqrt(best))


def metrics(values, start_fraction=0.0):
    """``(MAX, RMS)`` of a non-negative error signal after discarding a leading fraction."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty series")
    k = int(np.floor(start_fraction * len(v)))
    v = v[k:] if k < len(v) else v[-1:]
    return float(np.max(v)), float(np.sqrt(np.mean(v ** 2)))
