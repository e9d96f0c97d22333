"""Delayed induced-velocity transport from the wings to the tail."""

import math

import numpy as np

RECORD_SPAN = 1.0  # s of history kept


def phase_delay(T_d, T_fp):
    """Phase lag in radians of a delay ``T_d`` against a flapping period ``T_fp``."""
    if T_fp <= 0.0:
        raise ValueError("flapping period must be positive")
    return 2.0 * math.pi * T_d / T_fp


class WakeBuffer:
    """Time-stamped ring of induced-velocity samples.

    Parameters
    ----------
    d_wt : float
        Wing-to-tail distance in metres.
    dt : float
        Nominal sample spacing, used only to size the storage.
    span : float
        Length of retained history in seconds.
    """

    def __init__(self, d_wt=0.15, dt=1e-3, span=RECORD_SPAN):
        if d_wt < 0.0:
            raise ValueError("d_wt must be non-negative")
        self.d_wt = float(d_wt)
        self.span = float(span)
        cap = int(math.ceil(span / dt)) + 2
        self._t = np.empty(cap)
        self._u = np.empty((cap, 3))
        self._norm = np.empty(cap)
        self._head = 0  # index of oldest sample
        self._n = 0
        self.last_delay = float("nan")

    def __len__(self):
        return self._n

    def _grow(self):
        order = self._order()
        cap = 2 * len(self._t)
        t, u, nrm = np.empty(cap), np.empty((cap, 3)), np.empty(cap)
        t[:self._n], u[:self._n], nrm[:self._n] = self._t[order], self._u[order], self._norm[order]
        self._t, self._u, self._norm, self._head = t, u, nrm, 0

    def _order(self):
        return (self._head + np.arange(self._n)) % len(self._t)

    @property
    def times(self):
        return self._t[self._order()].copy()

    @property
    def samples(self):
        return self._u[self._order()].copy()

    def push(self, t, u_i):
        """Append a sample at time ``t`` and drop anything older than the record span."""
        t = float(t)
        if self._n and t <= self._t[(self._head + self._n - 1) % len(self._t)]:
            raise ValueError("wake samples must have strictly increasing timestamps")
        cutoff = t - self.span + 1e-9
        while self._n and self._t[self._head] <= cutoff:
            self._head = (self._head + 1) % len(self._t)
            self._n -= 1
        if self._n == len(self._t):
            self._grow()
        i = (self._head + self._n) % len(self._t)
        u = np.asarray(u_i, dtype=float)
        self._t[i] = t
        self._u[i] = u
        self._norm[i] = math.sqrt(float(u @ u))
        self._n += 1

    def mean_speed(self, window):
        """Mean of ``||u_i||`` over the trailing ``window`` seconds."""
        if self._n == 0:
            return 0.0
        idx = self._order()
        t = self._t[idx]
        keep = t > t[-1] - window + 1e-12
        return float(np.mean(self._norm[idx][keep]))

    def delay(self, period):
        """Travel time ``d_wt / mean speed``; infinite when the wake is still."""
        v = self.mean_speed(period)
        return self.d_wt / v if v > 0.0 else math.inf

    def sample_delayed(self, t_now, period):
        """Buffered sample nearest ``t_now - T_d``, or zero when out of record.

        ``period`` is the flapping period that sets the speed-averaging window.
        """
        if self._n == 0:
            self.last_delay = math.inf
            return np.zeros(3)
        T_d = self.delay(period)
        self.last_delay = T_d
        idx = self._order()
        t = self._t[idx]
        target = t_now - T_d
        if not math.isfinite(T_d) or T_d > self.span or target < t[0] - 1e-12:
            return np.zeros(3)
        j = int(np.searchsorted(t, target))
        if j >= len(t):
            j = len(t) - 1
        elif j > 0 and (target - t[j - 1]) <= (t[j] - target):
            j -= 1
        return self._u[idx[j]].copy()
