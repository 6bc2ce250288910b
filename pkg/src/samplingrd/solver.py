"""Blahut-Arimoto rate-distortion engine.

All rates are in bits and slopes ``lam`` in bits per unit distortion, so the
fixed-slope problem is min I(Z; Y) + lam * E[rho(Z, Y)] and the kernel update
is W(y|z) proportional to q(y) * 2 ** (-lam * rho(z, y)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ._parallel import pmap
from .errors import InfeasibleDistortion, ValidationError
from .tables import DeltaRange

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 5000
FLUSH = 1e-15
DEDUP = 1e-9


def geometric_schedule(lam_min=1e-3, lam_max=64.0, points=64):
    if points < 1 or lam_min <= 0 or lam_max < lam_min:
        raise ValidationError("schedule needs points >= 1 and 0 < lam_min <= lam_max")
    if points == 1:
        return [float(lam_min)]
    return [float(v) for v in np.geomspace(lam_min, lam_max, points)]


@dataclass(frozen=True)
class RdPoint:
    lam: float
    delta: float
    rate: float
    kernel: np.ndarray = field(default=None, repr=False)
    iterations: int = 0
    converged: bool = True
    # for aggregated (multi-branch) points: per-branch points and weights
    branches: tuple = field(default=(), repr=False)
    weights: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class RdCurve:
    points: tuple
    domain: DeltaRange

    @property
    def deltas(self):
        return np.array([p.delta for p in self.points])

    @property
    def rates(self):
        return np.array([p.rate for p in self.points])

    @property
    def converged(self):
        return all(p.converged for p in self.points)


def _evaluate(source, rho, kernel):
    """(delta, rate) of a kernel."""
    out = source @ kernel
    joint = source[:, None] * kernel
    pos = joint > 0
    delta = float(np.sum(joint[pos] * rho[pos]))
    ratio = kernel[pos] / np.broadcast_to(out, kernel.shape)[pos]
    rate = float(max(0.0, np.sum(joint[pos] * np.log2(ratio))))
    return delta, rate


def _clean(kernel):
    kernel = np.where(kernel < FLUSH, 0.0, kernel)
    kernel /= kernel.sum(axis=1, keepdims=True)
    kernel.setflags(write=False)
    return kernel


def _alternate(source, rho, allowed, lam, tol, max_iter, debug=False):
    """Core alternating minimization over (kernel, output marginal).

    Iterates on the output marginal q alone. For the kernel induced by q the
    Lagrangian I + lam * E[rho] is bounded by -sum_z p(z) log2 c(z) plus the
    row-minimum shift, where c(z) = sum_y q(y) 2^(-lam * rho_shift(z, y)); this
    bound decreases monotonically and is the objective tracked for stopping.
    """
    rowmin = np.min(np.where(allowed, rho, np.inf), axis=1, keepdims=True)
    factor = np.where(allowed, np.exp2(-lam * (rho - rowmin)), 0.0)
    offset = lam * float(source @ rowmin[:, 0]) if lam else 0.0
    reachable = allowed.any(axis=0)
    q = reachable / reachable.sum()
    prev = math.inf
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        c = factor @ q
        if np.any(c <= 0):
            # every admissible output of some row lost its mass; reseed
            q = 0.5 * q + 0.5 * reachable / reachable.sum()
            c = factor @ q
        obj = offset - float(source @ np.log2(c))
        if debug and obj > prev + 1e-12:
            raise AssertionError(f"objective increased at iteration {it}: {prev} -> {obj}")
        q = q * (factor.T @ (source / c))
        q /= q.sum()
        if abs(prev - obj) < tol:
            converged = True
            break
        prev = obj
    kernel = factor * q
    kernel /= kernel.sum(axis=1, keepdims=True)
    return kernel, it, converged


def _tied_outputs(inst, rho):
    """Universally admissible outputs attaining the zero-rate distortion."""
    ys = inst.universal_outputs()
    if ys.size == 0:
        return ys
    means = inst.source @ rho[:, ys]
    return ys[means <= means.min() + 1e-12]


def _excluded_optimal(source, rho, allowed, lam, kernel, support):
    """Optimality test for a kernel whose outputs are confined to ``support``.

    With c(z) = sum_y q(y) 2^(-lam * rho(z, y)), a marginal q is optimal
    iff u(y) = sum_z p(z) 2^(-lam * rho(z, y)) / c(z) <= 1 for every output.
    The restricted solve enforces this on the support; here it is checked
    for the outputs left out.
    """
    q = source @ kernel
    weight = np.where(allowed, np.exp2(-lam * (rho - rho.min(axis=1, keepdims=True))), 0.0)
    c = weight @ q
    u = weight.T @ (source / c)
    outside = np.ones(rho.shape[1], dtype=bool)
    outside[support] = False
    return bool(np.all(u[outside] <= 1.0 + 1e-12))


def ba_fixed_slope(inst, lam, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, debug=False):
    """Solve min I + lam * E[rho] for one slope; returns the minimizing point.

    Small slopes are settled on the outputs tied for the zero-rate distortion
    first: there the optimum leaves every other output empty and the plain
    iteration would only drain their mass at a rate proportional to ``lam``.
    The restricted answer is kept only if it passes the optimality test for
    the excluded outputs.
    """
    if lam < 0 or not math.isfinite(lam):
        raise ValidationError(f"slope must be finite and >= 0, got {lam}")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    rho = inst.rho.filled()
    allowed = inst.rho.allowed
    tied = _tied_outputs(inst, rho)
    if tied.size:
        mask = np.zeros(allowed.shape, dtype=bool)
        mask[:, tied] = True
        if tied.size == 1:
            kernel, it, converged = mask.astype(float), 0, True
        else:
            kernel, it, converged = _alternate(inst.source, rho, mask, lam, tol, max_iter, debug)
        if lam == 0 or _excluded_optimal(inst.source, rho, allowed, lam, kernel, tied):
            kernel = _clean(kernel)
            delta, rate = _evaluate(inst.source, rho, kernel)
            return RdPoint(float(lam), delta, rate, kernel, it, converged)
    kernel, it, converged = _alternate(inst.source, rho, allowed, lam, tol, max_iter, debug)
    kernel = _clean(kernel)
    delta, rate = _evaluate(inst.source, rho, kernel)
    return RdPoint(float(lam), delta, rate, kernel, it, converged)


def min_distortion_point(inst, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Smallest rate among kernels achieving the distortion floor.

    Kernels are confined to each row's minimizing reproductions and the
    mutual information is minimized over that face by zero-slope iteration.
    """
    rho = inst.rho.filled()
    masked = np.where(inst.rho.allowed, rho, np.inf)
    rowmin = masked.min(axis=1, keepdims=True)
    face = masked <= rowmin + 1e-12 * np.maximum(1.0, np.abs(rowmin))
    kernel, it, converged = _alternate(inst.source, rho, face, 0.0, tol, max_iter)
    kernel = _clean(kernel)
    delta, rate = _evaluate(inst.source, rho, kernel)
    return RdPoint(math.inf, delta, rate, kernel, it, converged)


def _solve(inst, lam, tol, max_iter):
    if lam == math.inf:
        return min_distortion_point(inst, tol, max_iter)
    return ba_fixed_slope(inst, lam, tol, max_iter)


def _aggregate(points, weights, lam):
    delta = float(sum(w * p.delta for w, p in zip(weights, points)))
    rate = float(sum(w * p.rate for w, p in zip(weights, points)))
    return RdPoint(lam, delta, rate, None, sum(p.iterations for p in points),
                   all(p.converged for p in points), tuple(points), tuple(weights))


def _solve_branches(branches, lam, tol, max_iter):
    pts = [_solve(inst, lam, tol, max_iter) for _, inst in branches]
    return _aggregate(pts, [w for w, _ in branches], lam)


def _mid_slope(a, b):
    if a == 0:
        return b / 4.0
    if b == math.inf:
        return a * 4.0
    return math.sqrt(a * b)


def _on_chord(a, m, b, tol=1e-7):
    if abs(b.delta - a.delta) <= DEDUP:
        return True
    t = (m.delta - a.delta) / (b.delta - a.delta)
    chord = a.rate + t * (b.rate - a.rate)
    return abs(m.rate - chord) <= tol


def _refine(points, solve, max_gap, max_depth=14):
    """Insert slopes between neighbours whose distortions differ by > max_gap."""
    pts = sorted(points, key=lambda p: p.lam)
    out = [pts[0]]
    for a, b in zip(pts, pts[1:]):
        stack = [(a, b, 0)]
        inner = []
        while stack:
            lo, hi, depth = stack.pop()
            if abs(lo.delta - hi.delta) <= max_gap or depth >= max_depth:
                continue
            mid_lam = _mid_slope(lo.lam, hi.lam)
            if not lo.lam < mid_lam < hi.lam:
                continue
            m = solve(mid_lam)
            inner.append(m)
            if _on_chord(lo, m, hi):
                # a convex curve touching its chord is straight in between
                continue
            stack.append((m, hi, depth + 1))
            stack.append((lo, m, depth + 1))
        out.extend(sorted(inner, key=lambda p: p.lam))
        out.append(b)
    return out


def _is_endpoint(p):
    return p.lam == 0 or p.lam == math.inf


def _assemble(points, domain):
    """Sort by distortion and drop near-duplicates."""
    pts = sorted(points, key=lambda p: (p.delta, p.rate, -p.lam))
    kept = []
    for p in pts:
        if kept and abs(p.delta - kept[-1].delta) <= DEDUP:
            # endpoints (slope 0 or infinite) are exact; otherwise the lower rate wins
            if _is_endpoint(p) or (not _is_endpoint(kept[-1]) and p.rate < kept[-1].rate):
                kept[-1] = p
            continue
        kept.append(p)
    return RdCurve(tuple(kept), domain)


def _trace(solve, schedule, max_gap, threads):
    schedule = sorted(set(float(s) for s in schedule))
    if not schedule or schedule[0] <= 0:
        raise ValidationError("schedule must be nonempty and positive")
    lams = [0.0] + schedule + [math.inf]
    points = pmap(solve, lams, threads)
    if max_gap:
        points = _refine(points, solve, max_gap)
    return points


def sweep(inst, schedule=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
          max_gap=None, threads=1):
    """Trace the curve at each slope plus both endpoints.

    With ``max_gap`` set, extra slopes are bisected in wherever consecutive
    points are further apart than ``max_gap`` in distortion.
    """
    schedule = geometric_schedule() if schedule is None else schedule
    solve = partial(_solve, inst, tol=tol, max_iter=max_iter)
    points = _trace(solve, schedule, max_gap, threads)
    lo = min(p.delta for p in points)
    hi = max(p.delta for p in points)
    return _assemble(points, DeltaRange(lo, hi))


def branch_sweep(branches, schedule=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                 max_gap=None, threads=1):
    """Equal-slope aggregation of weighted branch problems.

    At every slope each branch is solved separately and distortions and rates
    are averaged with the branch weights. Because every branch curve is
    convex, a common slope splits the distortion budget optimally.
    """
    branches = [(b.weight, b.instance) if hasattr(b, "instance") else tuple(b)
                for b in branches]
    weights = np.array([w for w, _ in branches], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValidationError("branch weights must form a pmf")
    schedule = geometric_schedule() if schedule is None else schedule
    solve = partial(_solve_branches, branches, tol=tol, max_iter=max_iter)
    points = _trace(solve, schedule, max_gap, threads)
    lo = min(p.delta for p in points)
    hi = max(p.delta for p in points)
    return _assemble(points, DeltaRange(lo, hi))


@dataclass(frozen=True)
class RatePoint:
    """Rate at a target distortion, realized by one point or a two-point mix."""

    delta: float
    rate: float
    points: tuple
    weights: tuple


def rate_at_distortion(inst, target, tol=1e-7, ba_tol=DEFAULT_TOL,
                       max_iter=DEFAULT_MAX_ITER, max_bisect=100):
    """Bisect on the slope until the achieved distortion brackets ``target``.

    The answer is the convex combination of the two bracketing points that
    hits ``target`` exactly, or a single point when one is within ``tol``.
    """
    solve = partial(_solve, inst, tol=ba_tol, max_iter=max_iter)
    d_min = inst.delta_min()
    if target < d_min - 1e-9:
        raise InfeasibleDistortion(
            f"infeasible distortion {target}: the floor is {d_min}")
    lo = solve(0.0)  # largest distortion
    if target >= lo.delta - tol:
        return RatePoint(lo.delta, lo.rate, (lo,), (1.0,))
    floor = solve(math.inf)
    if target <= floor.delta + tol:
        return RatePoint(floor.delta, floor.rate, (floor,), (1.0,))
    hi = None
    lam = 1.0
    while lam < 1e6:
        p = solve(lam)
        if p.delta <= target:
            hi = p
            break
        lo = p
        lam *= 2.0
    if hi is None:
        hi = floor
    for _ in range(max_bisect):
        if abs(hi.delta - target) <= tol:
            return RatePoint(hi.delta, hi.rate, (hi,), (1.0,))
        if abs(lo.delta - target) <= tol:
            return RatePoint(lo.delta, lo.rate, (lo,), (1.0,))
        mid = _mid_slope(lo.lam, hi.lam)
        if not lo.lam < mid < hi.lam or hi.lam / max(lo.lam, 1e-300) < 1 + 1e-12:
            break
        p = solve(mid)
        if p.delta > target:
            lo = p
        else:
            hi = p
    # plateau in slope: time-share the bracketing points
    t = (lo.delta - target) / (lo.delta - hi.delta)
    rate = (1 - t) * lo.rate + t * hi.rate
    return RatePoint(float(target), float(rate), (lo, hi), (1 - t, t))
