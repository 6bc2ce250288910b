"""Lower convex envelopes of (distortion, rate) point clouds."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleDistortion, ValidationError

MERGE_TOL = 1e-9
CROSS_TOL = 1e-12


@dataclass(frozen=True)
class CurvePoint:
    delta: float
    rate: float
    witness: object = None
    # every witness attaining this point, in priority order
    witnesses: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.rate < -1e-9:
            raise ValidationError(f"negative rate {self.rate}")
        if not self.witnesses:
            object.__setattr__(self, "witnesses", (self.witness,))


@dataclass(frozen=True)
class Segment:
    left: CurvePoint
    right: CurvePoint
    witness_left: object
    witness_right: object

    @property
    def slope(self):
        return (self.right.rate - self.left.rate) / (self.right.delta - self.left.delta)

    @property
    def single_witness(self):
        return self.witness_left == self.witness_right


class PiecewiseLinearCurve:
    """Polyline through vertices sorted by distortion, flat after the last one."""

    def __init__(self, vertices, label=None):
        vertices = tuple(vertices)
        if not vertices:
            raise ValidationError("curve needs at least one vertex")
        ds = [v.delta for v in vertices]
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise ValidationError("curve vertices must have strictly increasing delta")
        self.vertices = vertices
        self.label = label
        self.segments = tuple(_segment(a, b) for a, b in zip(vertices, vertices[1:]))
        self._deltas = np.array(ds)
        self._rates = np.array([v.rate for v in vertices])

    @property
    def delta_min(self):
        return self.vertices[0].delta

    @property
    def delta_max(self):
        return self.vertices[-1].delta

    @property
    def deltas(self):
        return self._deltas

    @property
    def rates(self):
        return self._rates

    def __len__(self):
        return len(self.vertices)

    def __call__(self, delta):
        return evaluate(self, delta)

    def locate(self, delta):
        """Index of the segment containing delta, or None outside the segments."""
        if delta < self.delta_min - MERGE_TOL:
            raise InfeasibleDistortion(
                f"infeasible distortion {delta}: curve starts at {self.delta_min}")
        if not self.segments or delta >= self.delta_max:
            return None
        i = bisect_right(self.deltas, delta) - 1
        return min(max(i, 0), len(self.segments) - 1)

    def mix_at(self, delta):
        """Witnesses and time-sharing weights realizing the curve at delta."""
        i = self.locate(delta)
        if i is None:
            if delta <= self.delta_min or not self.segments:
                return ((self.vertices[0].witnesses[0], 1.0),)
            # past the last vertex: stay with the witness that reached it
            return ((self.segments[-1].witness_right, 1.0),)
        seg = self.segments[i]
        span = seg.right.delta - seg.left.delta
        t = min(max((seg.right.delta - delta) / span, 0.0), 1.0)
        if seg.single_witness:
            return ((seg.witness_left, 1.0),)
        return ((seg.witness_left, t), (seg.witness_right, 1.0 - t))

    def slope_at(self, delta):
        i = self.locate(delta)
        return 0.0 if i is None else self.segments[i].slope


def _segment(a, b):
    common = [w for w in a.witnesses if w in b.witnesses]
    if common:
        return Segment(a, b, common[0], common[0])
    return Segment(a, b, a.witnesses[0], b.witnesses[0])


def evaluate(curve, delta):
    """Rate of the curve at delta by linear interpolation."""
    i = curve.locate(delta)
    if i is None:
        return float(curve.rates[0] if delta <= curve.delta_min else curve.rates[-1])
    seg = curve.segments[i]
    t = (delta - seg.left.delta) / (seg.right.delta - seg.left.delta)
    return float(seg.left.rate + t * (seg.right.rate - seg.left.rate))


def _merge(points):
    """Sort by distortion; collapse coincident points, pooling witnesses.

    Points whose distortions agree within MERGE_TOL form one group, kept at
    the group's lowest rate.
    """
    ranked = sorted(enumerate(points), key=lambda ip: (ip[1].delta, ip[1].rate, ip[0]))
    groups = []
    for rank, p in ranked:
        if groups and abs(p.delta - groups[-1][0][1].delta) <= MERGE_TOL:
            groups[-1].append((rank, p))
        else:
            groups.append([(rank, p)])
    merged = []
    for group in groups:
        delta = group[0][1].delta
        low = min(p.rate for _, p in group)
        seen = []
        for _, p in sorted(group, key=lambda rp: rp[0]):
            if p.rate <= low + MERGE_TOL:
                seen.extend(w for w in p.witnesses if w not in seen)
        merged.append(CurvePoint(delta, low, seen[0], tuple(seen)))
    return merged


def _cross(o, a, b):
    return (a.delta - o.delta) * (b.rate - o.rate) - (a.rate - o.rate) * (b.delta - o.delta)


def lower_convex_envelope(points, label=None):
    """Greatest convex nonincreasing minorant of a point cloud.

    Points are hulled with Andrew's monotone chain; the hull is cut at its
    lowest vertex since a larger distortion never needs a larger rate.
    Witnesses listed earlier in ``points`` win ties.
    """
    points = list(points)
    if not points:
        raise ValidationError("envelope of an empty point set")
    pts = _merge(points)
    hull = []
    for p in pts:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            scale = max(1.0, abs(a.delta - o.delta) + abs(p.delta - o.delta))
            if _cross(o, a, p) <= CROSS_TOL * scale:
                hull.pop()
            else:
                break
        hull.append(p)
    low = min(v.rate for v in hull)
    cut = next(i for i, v in enumerate(hull) if v.rate <= low + CROSS_TOL)
    return PiecewiseLinearCurve(hull[:cut + 1], label)


def pointwise_min(curves, grid):
    """At each grid distortion, the lowest curve defined there and its witness."""
    out = []
    for delta in grid:
        best = None
        for curve in curves:
            if delta < curve.delta_min - MERGE_TOL:
                continue
            r = evaluate(curve, max(delta, curve.delta_min))
            if best is None or r < best[0] - 1e-15:
                witness = curve.label if curve.label is not None else curve.mix_at(delta)[0][0]
                best = (r, witness)
        if best is None:
            raise InfeasibleDistortion(f"no curve is defined at distortion {delta}")
        out.append(CurvePoint(float(delta), max(best[0], 0.0), best[1]))
    return out
