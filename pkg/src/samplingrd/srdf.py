"""Sampling rate distortion curves for each sampler class.

Every public function returns an :class:`SrdfResult` whose curve is a
piecewise-linear lower envelope on the distortion axis. Vertices carry
witness ids (a subset label such as ``{2}`` for fixed sets, ``h<code>`` for
point-mass samplers) that resolve through ``result.registry``; a segment
whose endpoints have different witnesses is realized by time-sharing them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ._parallel import pmap
from .distortion import (
    _delta_max,
    alpha_map,
    composite_distortion,
    fixed_set_extremes,
    fixed_set_instance,
    irs_delta_min,
    mrs_extremes,
    pe_extremes,
    sampler_branch_problems,
)
from .envelope import CurvePoint, PiecewiseLinearCurve, lower_convex_envelope, pointwise_min
from .errors import ValidationError
from .prob import check_subset, complement, projection, subset_label, subsets
from .samplers import (
    DEFAULT_CAP,
    RandomizedSampler,
    enumerate_point_mass_samplers,
)
from .solver import (
    _alternate,
    _clean,
    _evaluate,
    ba_fixed_slope,
    branch_sweep,
    geometric_schedule,
    sweep,
)
from .tables import DeltaRange, DistortionTable, RdInstance


@dataclass(frozen=True)
class SolverOptions:
    lambda_min: float = 1e-3
    lambda_max: float = 64.0
    lambda_points: int = 64
    tol: float = 1e-10
    max_iter: int = 5000
    grid: int = 201
    cap: int = DEFAULT_CAP
    threads: int = 1
    seed: int = 0
    # extra slopes are bisected in until neighbouring points are this close
    max_gap: float = 0.005

    @property
    def schedule(self):
        return geometric_schedule(self.lambda_min, self.lambda_max, self.lambda_points)

    def sweep_kwargs(self):
        return dict(schedule=self.schedule, tol=self.tol, max_iter=self.max_iter,
                    max_gap=self.max_gap or None)


DEFAULT_OPTIONS = SolverOptions()


@dataclass
class SrdfResult:
    label: str
    curve: PiecewiseLinearCurve
    delta_range: DeltaRange
    registry: dict = field(default_factory=dict)
    solutions: dict = field(default_factory=dict, repr=False)
    diagnostics: dict = field(default_factory=dict)
    convex: bool = True

    def rate(self, delta):
        return self.curve(delta)

    def grid(self, n=201):
        return np.linspace(self.delta_range.delta_min, self.delta_range.delta_max, n)

    def witnesses(self):
        """Witness ids used by the curve's segments (or its single vertex)."""
        if not self.curve.segments:
            return [self.curve.vertices[0].witnesses[0]]
        ids = []
        for seg in self.curve.segments:
            for w in (seg.witness_left, seg.witness_right):
                if w not in ids:
                    ids.append(w)
        return ids

    @property
    def converged(self):
        return all(c.converged for c in self.solutions.values())


def _curve_points(rd_curve, witness):
    return [CurvePoint(p.delta, max(p.rate, 0.0), witness) for p in rd_curve.points]


def _diag(solutions, **extra):
    pts = [p for c in solutions.values() for p in c.points]
    out = {
        "points": len(pts),
        "ba_iterations": int(sum(p.iterations for p in pts)),
        "converged": all(p.converged for p in pts),
    }
    out.update(extra)
    return out


def fixed_set_srdf(pmf, d, subset, opts=DEFAULT_OPTIONS):
    """Fixed sampled set A: the remote rate-distortion function of X_A under d_A."""
    subset = check_subset(subset, pmf.m)
    inst = fixed_set_instance(pmf, d, subset)
    rd = sweep(inst, threads=opts.threads, **opts.sweep_kwargs())
    wid = subset_label(subset)
    curve = lower_convex_envelope(_curve_points(rd, wid), label=f"R_{wid}")
    registry = {wid: {"kind": "fixed-set", "subset": [i + 1 for i in subset]}}
    return SrdfResult(f"R_{wid}", curve, fixed_set_extremes(pmf, d, subset), registry,
                      {wid: rd}, _diag({wid: rd}))


def _check_pe_alphabets(pmf, repro):
    if repro is None:
        return
    if len(repro) != pmf.m or any(
            tuple(a.symbols) != tuple(b.symbols) for a, b in zip(pmf.components, repro)):
        raise ValidationError("probability-of-error reduction needs Y_i = X_i for every i")


def pe_reduced_instance(pmf, subset):
    """Source P_{X_A}, reproduction X_A, distortion alpha(x_A) * 1(x_A != y_A)."""
    am = alpha_map(pmf, subset)
    n = am.alpha.shape[0]
    rho = am.alpha[:, None] * (1.0 - np.eye(n))
    return RdInstance(am.marginal, DistortionTable(rho)), am


def pe_fixed_set_srdf(pmf, subset, opts=DEFAULT_OPTIONS, repro=None):
    """Fixed-set curve for probability of error via the alpha-weighted reduction.

    The reduced problem codes X_A alone; the unsampled part is filled in by
    MAP estimation, which costs exactly 1 - E[alpha] in distortion.
    """
    _check_pe_alphabets(pmf, repro)
    subset = check_subset(subset, pmf.m)
    inst, am = pe_reduced_instance(pmf, subset)
    shift = 1.0 - am.mean()
    rd = sweep(inst, threads=opts.threads, **opts.sweep_kwargs())
    wid = subset_label(subset)
    pts = [CurvePoint(p.delta + shift, max(p.rate, 0.0), wid) for p in rd.points]
    curve = lower_convex_envelope(pts, label=f"R_{wid}")
    registry = {wid: {"kind": "fixed-set", "subset": [i + 1 for i in subset],
                      "reduction": "probability-of-error", "threshold_shift": shift}}
    return SrdfResult(f"R_{wid}", curve, pe_extremes(pmf, subset), registry,
                      {wid: rd}, _diag({wid: rd}, threshold_shift=shift))


def map_estimator(pmf, subset, y_a):
    """MAP guess of x_{A^c} given x_A = y_a, as a tuple of component indices.

    ``y_a`` is a tuple of component indices for the members of A (or a flat
    index). Ties go to the lexicographically smallest x_{A^c}.
    """
    subset = check_subset(subset, pmf.m)
    rest = complement(subset, pmf.m)
    if not rest:
        return ()
    shape_a = tuple(pmf.shape[i] for i in subset)
    flat = y_a if np.isscalar(y_a) else int(np.ravel_multi_index(tuple(y_a), shape_a))
    am = alpha_map(pmf, subset)
    shape_c = tuple(pmf.shape[i] for i in rest)
    return tuple(int(v) for v in np.unravel_index(int(am.witness[flat]), shape_c))


def irs_srdf(pmf, d, k, opts=DEFAULT_OPTIONS):
    """Independent random sampler: lower convex envelope of the fixed-set curves."""
    parts = [fixed_set_srdf(pmf, d, a, opts) for a in subsets(pmf.m, k)]
    pool = [v for r in parts for v in r.curve.vertices]
    curve = lower_convex_envelope(pool, label="R_i")
    registry, solutions = {}, {}
    for r in parts:
        registry.update(r.registry)
        solutions.update(r.solutions)
    rng = irs_delta_min(pmf, d, k)
    return SrdfResult("R_i", curve, rng, registry, solutions,
                      _diag(solutions, fixed_set_curves=len(parts)))


def _branch_fingerprint(branches):
    return tuple((b.subset, round(b.weight, 15), b.instance.fingerprint()) for b in branches)


def _sampler_record(h, pmf):
    return {"kind": "point-mass", "encoding": h.encoding, "map": h.describe(pmf)}


def _informed_solve(branches, opts):
    return branch_sweep(branches, **opts.sweep_kwargs())


def mrs_informed_srdf(pmf, d, k, opts=DEFAULT_OPTIONS):
    """Memoryless random sampler with informed decoder.

    Each point-mass sampler h gives a multi-branch problem solved at common
    slopes; the curve is the lower convex envelope over all h, whose
    two-witness segments realize time-sharing between samplers.
    """
    rng = mrs_extremes(pmf, d, k, opts.cap)
    samplers = list(enumerate_point_mass_samplers(pmf, k, opts.cap))
    fixed = {}
    jobs, job_keys, keys = [], {}, []
    for h in samplers:
        if h.is_constant():
            keys.append(("fixed", h.subset(0)))
            continue
        branches = sampler_branch_problems(pmf, d, h)
        fp = _branch_fingerprint(branches)
        if fp not in job_keys:
            job_keys[fp] = len(jobs)
            jobs.append(branches)
        keys.append(("branch", job_keys[fp]))
    solved = pmap(partial(_informed_solve, opts=opts), jobs, opts.threads)
    pool, solutions, registry = [], {}, {}
    for h, key in zip(samplers, keys):
        if key[0] == "fixed":
            if key[1] not in fixed:
                fixed[key[1]] = sweep(fixed_set_instance(pmf, d, key[1]),
                                      **opts.sweep_kwargs())
            rd = fixed[key[1]]
        else:
            rd = solved[key[1]]
        solutions[h.id] = rd
        pool.extend(_curve_points(rd, h.id))
    curve = lower_convex_envelope(pool, label="R_m^I")
    for v in curve.vertices:
        for w in v.witnesses:
            if w not in registry:
                registry[w] = _sampler_record(_sampler_by_id(samplers, w), pmf)
    return SrdfResult("R_m^I", curve, rng, registry, solutions,
                      _diag(solutions, samplers=len(samplers),
                            distinct_problems=len(jobs) + len(fixed)))


def _sampler_by_id(samplers, wid):
    return samplers[int(wid[1:])]


def _uninformed_solve(inst, opts):
    return sweep(inst, **opts.sweep_kwargs())


def mrs_uninformed_bound(pmf, d, k, opts=DEFAULT_OPTIONS):
    """Upper bound for the memoryless sampler with uninformed decoder.

    Per point-mass sampler, the rate-distortion function of (S, X_S) under
    the composite distortion. ``raw`` is their pointwise minimum on the
    evaluation grid and need not be convex; ``convexified`` additionally
    time-shares between samplers and is a further, possibly loose, bound.

    The grid ends at the unconditioned zero-rate distortion
    min_y E[d(X_M, y)], the fixed-set form. This differs from the informed
    ``mrs_extremes(...).delta_max``, which conditions on S, and the two are
    kept apart on purpose. Whether the bound is tight is not known; nothing
    here claims it is.
    """
    samplers = list(enumerate_point_mass_samplers(pmf, k, opts.cap))
    jobs, index, keys = [], {}, []
    for h in samplers:
        inst = composite_distortion(pmf, d, h)
        fp = inst.fingerprint()
        if fp not in index:
            index[fp] = len(jobs)
            jobs.append(inst)
        keys.append(index[fp])
    solved = pmap(partial(_uninformed_solve, opts=opts), jobs, opts.threads)
    curves, pool, solutions = [], [], {}
    for h, key in zip(samplers, keys):
        rd = solved[key]
        solutions[h.id] = rd
        pts = _curve_points(rd, h.id)
        curves.append(lower_convex_envelope(pts, label=h.id))
        pool.extend(pts)
    lo = min(c.delta_min for c in curves)
    hi = _delta_max(pmf, d)
    grid = np.linspace(lo, max(lo, hi), opts.grid)
    raw_pts = _dedupe_grid(pointwise_min(curves, grid))
    raw_curve = PiecewiseLinearCurve(raw_pts, label="R_m^U raw bound")
    convexified = lower_convex_envelope(pool, label="R_m^U convexified bound")
    rng = DeltaRange(lo, max(lo, hi), samplers[min(
        range(len(curves)), key=lambda i: (curves[i].delta_min, i))])

    def registry_for(curve):
        reg = {}
        for v in curve.vertices:
            for w in v.witnesses:
                reg.setdefault(w, _sampler_record(_sampler_by_id(samplers, w), pmf))
        return reg

    diag = _diag(solutions, samplers=len(samplers), distinct_problems=len(jobs))
    raw = SrdfResult("R_m^U raw bound", raw_curve, rng, registry_for(raw_curve),
                     solutions, dict(diag, grid=len(grid)), convex=False)
    conv = SrdfResult("R_m^U convexified bound", convexified, rng,
                      registry_for(convexified), solutions, diag)
    return raw, conv


def _dedupe_grid(points):
    out = []
    for p in points:
        if out and p.delta <= out[-1].delta:
            continue
        out.append(p)
    return out


def _switch_costs(pmf, d, choices, inst, kernel, lam):
    """cost[x, j]: Lagrangian contribution of x if it were sampled with A_j.

    Atoms (A_j, x_A) already in use keep their current kernel row; unused ones
    get the best row for x alone against the current output marginal.
    """
    q = inst.source @ kernel
    row_of = {lab: i for i, lab in enumerate(inst.z_labels)}
    dfill = d.filled()
    allowed = ~d.forbidden
    cost = np.full((pmf.size, len(choices)), np.inf)
    for j, a in enumerate(choices):
        proj = projection(pmf.shape, a)
        for x in range(pmf.size):
            r = row_of.get((a, int(proj[x])))
            if r is None:
                weights = np.where(allowed[x], q * np.exp2(-lam * dfill[x]), 0.0)
                if weights.sum() > 0:
                    cost[x, j] = -math.log2(weights.sum())
                continue
            w = kernel[r]
            pos = w > 0
            if np.any(d.forbidden[x, pos]):
                continue
            cost[x, j] = float(np.sum(w[pos] * (np.log2(w[pos] / q[pos]) + lam * dfill[x, pos])))
    return cost


def _refine_at_slope(pmf, d, h, lam, opts, max_rounds=100):
    """Alternate sampler rows and reproduction kernel at one slope.

    Returns (lagrangian, delta, rate, sampler) of the best iterate.
    """
    choices = h.choices
    sampler = RandomizedSampler.from_point_mass(h)
    best = None
    for _ in range(max_rounds):
        inst = composite_distortion(pmf, d, sampler)
        rho = inst.rho.filled()
        kernel, _, _ = _alternate(inst.source, rho, inst.rho.allowed, lam,
                                  opts.tol, opts.max_iter)
        kernel = _clean(kernel.copy())
        delta, rate = _evaluate(inst.source, rho, kernel)
        value = rate + lam * delta
        if best is not None and value > best[0] - opts.tol:
            break
        best = (value, delta, rate, sampler)
        cost = _switch_costs(pmf, d, choices, inst, kernel, lam)
        current = np.argmax(sampler.rows, axis=1)
        rows = sampler.rows.copy()
        for x in range(pmf.size):
            j = int(np.argmin(cost[x]))
            if cost[x, j] < cost[x, current[x]] - 1e-12:
                rows[x] = 0.0
                rows[x, j] = 1.0
        if np.array_equal(rows, sampler.rows):
            break
        sampler = RandomizedSampler(rows, choices)
    return best


def mrs_uninformed_randomized_refine(pmf, d, k, opts=DEFAULT_OPTIONS, threshold=1e-6):
    """Probe whether randomized samplers beat point-mass ones for the bound.

    At each slope the best point-mass sampler (by Lagrangian value) seeds an
    alternating minimization over sampler rows and reproduction kernel. Any
    Lagrangian improvement beyond ``threshold`` is reported in diagnostics.
    """
    samplers = list(enumerate_point_mass_samplers(pmf, k, opts.cap))
    insts = [composite_distortion(pmf, d, h) for h in samplers]
    pts, improvements = [], []
    for lam in opts.schedule:
        values = []
        for inst in insts:
            pt = ba_fixed_slope(inst, lam, opts.tol, opts.max_iter)
            values.append(pt.rate + lam * pt.delta)
        i = int(np.argmin(values))
        value, delta, rate, _ = _refine_at_slope(pmf, d, samplers[i], lam, opts)
        improvements.append(values[i] - value)
        pts.append(CurvePoint(delta, max(rate, 0.0), f"refined@{lam:.6g}"))
    curve = lower_convex_envelope(pts, label="R_m^U refined")
    best = max(improvements)
    diag = {"max_lagrangian_improvement": best, "improved": bool(best > threshold),
            "slopes": len(improvements)}
    rng = DeltaRange(curve.delta_min, curve.delta_max)
    return SrdfResult("R_m^U refined", curve, rng, {}, {}, diag)


def expand_branch_kernels(pmf, branches, point):
    """Per-subset kernels over the full X_A alphabet from an aggregated point.

    Rows for x_A values never sampled under A stay uniform; they carry no
    probability.
    """
    out = {}
    for br, bp in zip(branches, point.branches):
        n = int(np.prod([pmf.shape[i] for i in br.subset]))
        ny = bp.kernel.shape[1]
        full = np.full((n, ny), 1.0 / ny)
        full[list(br.instance.z_labels)] = bp.kernel
        out[br.subset] = full
    return out
