"""Wing outlines and blade-element strips.

An outline is a closed polygon of ``(spanwise, chordwise)`` vertices. The
chord at a spanwise station is found by intersecting the station line with
the polygon edges (linear interpolation between vertices) and taking the
chordwise extent. A least-squares polynomial of that chord distribution then
drives the equal-width strip builder.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class BladeElement:
    """One spanwise strip: stations are measured from the hinge root."""

    r: float
    chord: float
    dr: float
    le_offset: float = 0.0

    def __post_init__(self):
        if self.chord <= 0.0 or self.dr <= 0.0:
            raise ValueError(f"strip needs positive chord and width, got c={self.chord}, dr={self.dr}")


@dataclass(frozen=True)
class WingOutline:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] < 2:
            raise ValueError("outline needs an (n, 2) array of vertices")
        pts = pts[:, :2]
        if len(pts) < 4:
            raise ValueError(f"outline needs at least 4 vertices, got {len(pts)}")
        if np.ptp(pts[:, 0]) <= 0.0:
            raise ValueError("outline has zero spanwise extent")
        object.__setattr__(self, "points", pts)

    @property
    def span_bounds(self):
        return float(self.points[:, 0].min()), float(self.points[:, 0].max())

    @property
    def span(self):
        lo, hi = self.span_bounds
        return hi - lo

    def area(self):
        """Polygon area by the shoelace formula."""
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def chord_at(self, r):
        """Chordwise extent of the outline at spanwise coordinate ``r``."""
        pts = self.points
        nxt = np.roll(pts, -1, axis=0)
        x0, y0, x1, y1 = pts[:, 0], pts[:, 1], nxt[:, 0], nxt[:, 1]
        lo, hi = np.minimum(x0, x1), np.maximum(x0, x1)
        hit = (r >= lo) & (r <= hi)
        if not np.any(hit):
            return 0.0
        ys = []
        for a, b, c, d in zip(x0[hit], y0[hit], x1[hit], y1[hit]):
            if c == a:
                ys.extend((b, d))
            else:
                ys.append(b + (d - b) * (r - a) / (c - a))
        return float(max(ys) - min(ys))

    @classmethod
    def from_csv(cls, path):
        """Read ``x,y[,z]`` vertices; a header row and the z column are ignored."""
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append([float(v) for v in row[:2]])
                except ValueError:
                    continue  # header
        return cls(np.array(rows))


@dataclass(frozen=True)
class ChordFunction:
    """Polynomial chord law ``c(r)`` with ``r`` measured from the root station."""

    coeffs: np.ndarray
    span: float
    residual_rms: float = 0.0
    min_chord: float = field(default=1e-6)

    def __call__(self, r):
        c = np.polyval(self.coeffs, r)
        return np.maximum(c, self.min_chord)

    @classmethod
    def constant(cls, chord, span):
        return cls(np.array([float(chord)]), float(span), 0.0)


def fit_edge(outline, degree=4, n_stations=100):
    """Least-squares polynomial fit of the outline chord distribution.

    Chords are sampled at ``n_stations`` bin centres across the spanwise
    extent, so the degenerate zero-chord end points never enter the fit.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if not isinstance(outline, WingOutline):
        outline = WingOutline(np.asarray(outline, dtype=float))
    lo, hi = outline.span_bounds
    span = hi - lo
    r = (np.arange(n_stations) + 0.5) / n_stations * span
    c = np.array([outline.chord_at(lo + ri) for ri in r])
    deg = min(degree, n_stations - 1)
    coeffs = np.polyfit(r, c, deg)
    resid = np.polyval(coeffs, r) - c
    return ChordFunction(coeffs, span, float(np.sqrt(np.mean(resid ** 2))))


def build_blade_elements(chord_fn, span, n, root_offset=0.0):
    """Split ``span`` into ``n`` equal strips with chord sampled at strip midpoints.

    ``root_offset`` shifts the stations outward from the hinge (the wing root
    may sit away from the stroke axis).
    """
    if n < 1:
        raise ValueError("need at least one strip")
    if span <= 0.0:
        raise ValueError("span must be positive")
    dr = span / n
    mids = (np.arange(n) + 0.5) * dr
    chords = np.atleast_1d(chord_fn(mids)) if callable(chord_fn) else np.full(n, float(chord_fn))
    return [BladeElement(r=float(root_offset + m), chord=float(c), dr=dr)
            for m, c in zip(mids, chords)]


def elements_to_json(elements, path=None):
    table = [{"r": e.r, "c": e.chord, "dr": e.dr} for e in elements]
    text = json.dumps(table, indent=2)
    if path is not None:
        Path(path).write_text(text)
    return text


def elements_from_json(text):
    return [BladeElement(r=d["r"], chord=d["c"], dr=d["dr"]) for d in json.loads(text)]


def total_area(elements):
    return float(sum(e.chord * e.dr for e in elements))
