"""Modified and composite distortion measures, alpha maps and delta extremes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .prob import check_subset, complement, projection, split_matrix, subsets
from .samplers import DEFAULT_CAP, PointMassSampler, check_cap
from .tables import DeltaRange, DistortionTable, RdInstance

# conditional probabilities at or below this count as zero when deciding
# whether a forbidden pair is reachable
_PROB_EPS = 0.0


def probability_of_error(shape):
    """d(x_M, y_M) = 1(x_M != y_M) on a common product alphabet."""
    n = int(np.prod(shape))
    return DistortionTable(1.0 - np.eye(n), source_shape=shape, repro_shape=shape)


def additive(tables, source_shape, repro_shape):
    """d(x_M, y_M) = sum_i d_i(x_i, y_i); forbidden if any term is."""
    m = len(tables)
    values = np.zeros(tuple(source_shape) + tuple(repro_shape))
    forbidden = np.zeros(values.shape, dtype=bool)
    for i, (vals, forb) in enumerate(tables):
        vals = np.asarray(vals, dtype=float)
        forb = np.zeros(vals.shape, dtype=bool) if forb is None else np.asarray(forb, bool)
        idx = [None] * (2 * m)
        idx[i] = slice(None)
        idx[m + i] = slice(None)
        values = values + np.where(forb, 0.0, vals)[tuple(idx)]
        forbidden = forbidden | forb[tuple(idx)]
    n_x = int(np.prod(source_shape))
    return DistortionTable(values.reshape(n_x, -1), forbidden.reshape(n_x, -1),
                           source_shape, repro_shape)


def _grouped(pmf, d, subset):
    """P as (x_A, x_Ac) matrix and d as (x_A, x_Ac, y) with matching order."""
    subset = check_subset(subset, pmf.m)
    rest = complement(subset, pmf.m)
    joint = split_matrix(pmf, subset)
    order = subset + rest
    ny = d.shape[1]
    vals = d.filled().reshape(pmf.shape + (ny,))
    forb = d.forbidden.reshape(pmf.shape + (ny,))
    perm = order + (pmf.m,)
    vals = np.transpose(vals, perm).reshape(joint.shape + (ny,))
    forb = np.transpose(forb, perm).reshape(joint.shape + (ny,))
    return joint, vals, forb


def _check_table(pmf, d):
    if d.shape[0] != pmf.size:
        raise ValidationError(
            f"distortion has {d.shape[0]} source rows, pmf has {pmf.size} atoms")


def modified_distortion(pmf, d, subset):
    """d_A(x_A, y) = E[d(X_M, y) | X_A = x_A]."""
    _check_table(pmf, d)
    joint, vals, forb = _grouped(pmf, d, subset)
    p_a = joint.sum(axis=1)
    if np.any(p_a <= 0):
        raise ValidationError("modified distortion needs P(x_A) > 0 for every x_A")
    cond = joint / p_a[:, None]
    values = np.einsum("ac,acy->ay", cond, vals)
    forbidden = np.any(forb & (cond[:, :, None] > _PROB_EPS), axis=1)
    shape = tuple(pmf.shape[i] for i in check_subset(subset, pmf.m))
    return DistortionTable(values, forbidden, shape, d.repro_shape)


@dataclass(frozen=True)
class AlphaMap:
    """alpha[x_A] = max posterior probability of x_{A^c}; witness its argmax."""

    alpha: np.ndarray
    witness: np.ndarray
    marginal: np.ndarray

    def mean(self):
        return float(self.marginal @ self.alpha)


def alpha_map(pmf, subset):
    joint = split_matrix(pmf, subset)
    p_a = joint.sum(axis=1)
    # rows of probability zero carry no weight; give them a point mass
    cond = np.divide(joint, p_a[:, None], out=np.zeros_like(joint), where=p_a[:, None] > 0)
    cond[p_a <= 0, 0] = 1.0
    # argmax returns the first maximizer: lexicographic tie-break
    witness = np.argmax(cond, axis=1)
    alpha = cond[np.arange(cond.shape[0]), witness]
    return AlphaMap(alpha, witness, p_a)


def _admissible_min(values, forbidden, axis):
    return np.min(np.where(forbidden, np.inf, values), axis=axis)


def _delta_max(pmf, d):
    """min over y of E[d(X_M, y)], excluding y with a reachable forbidden pair."""
    p = pmf.flat
    reach = (d.forbidden & (p[:, None] > _PROB_EPS)).any(axis=0)
    if np.all(reach):
        raise ValidationError("no reproduction is admissible for every source value")
    means = p @ d.filled()
    means = np.where(reach, np.inf, means)
    return float(np.min(means))


def fixed_set_extremes(pmf, d, subset):
    _check_table(pmf, d)
    d_a = modified_distortion(pmf, d, subset)
    p_a = split_matrix(pmf, subset).sum(axis=1)
    dmin = float(p_a @ _admissible_min(d_a.values, d_a.forbidden, axis=1))
    return DeltaRange(dmin, _delta_max(pmf, d))


def pe_extremes(pmf, subset):
    am = alpha_map(pmf, subset)
    return DeltaRange(1.0 - am.mean(), 1.0 - float(pmf.probs.max()))


def irs_delta_min(pmf, d, k):
    choices = subsets(pmf.m, k)
    best = None
    for a in choices:
        r = fixed_set_extremes(pmf, d, a)
        if best is None or r.delta_min < best[0].delta_min:
            best = (r, a)
    rng, a = best
    witness = PointMassSampler.constant(a, pmf.size, choices)
    return DeltaRange(rng.delta_min, rng.delta_max, witness)


class _SamplerGeometry:
    """Precomputed per-subset projections used to score many samplers fast."""

    def __init__(self, pmf, d, k):
        self.pmf = pmf
        self.p = pmf.flat
        self.choices = tuple(subsets(pmf.m, k))
        self.proj = [projection(pmf.shape, a) for a in self.choices]
        self.n_sub = [int(np.prod([pmf.shape[i] for i in a])) for a in self.choices]
        self.weighted = self.p[:, None] * d.filled()
        self.forbidden = d.forbidden & (self.p[:, None] > _PROB_EPS)

    def branch_sums(self, h_arr, j):
        """(mass per x_A, sum P d per (x_A, y), forbidden per (x_A, y)) for S = A_j."""
        mask = h_arr == j
        rows = self.proj[j][mask]
        n = self.n_sub[j]
        mass = np.bincount(rows, weights=self.p[mask], minlength=n)
        sums = np.zeros((n, self.weighted.shape[1]))
        np.add.at(sums, rows, self.weighted[mask])
        forb = np.zeros(sums.shape, dtype=bool)
        np.logical_or.at(forb, rows, self.forbidden[mask])
        return mass, sums, forb

    def weighted_sums(self, col, j):
        """Like branch_sums for a randomized sampler column P(S = A_j | x)."""
        w = self.p * col
        rows = self.proj[j]
        n = self.n_sub[j]
        mass = np.bincount(rows, weights=w, minlength=n)
        sums = np.zeros((n, self.weighted.shape[1]))
        np.add.at(sums, rows, col[:, None] * self.weighted)
        forb = np.zeros(sums.shape, dtype=bool)
        np.logical_or.at(forb, rows, self.forbidden & (col[:, None] > 0))
        return mass, sums, forb

    def extremes(self, h_arr):
        dmin = 0.0
        dmax = 0.0
        for j in range(len(self.choices)):
            if not np.any(h_arr == j):
                continue
            mass, sums, forb = self.branch_sums(h_arr, j)
            live = mass > 0
            dmin += float(np.sum(_admissible_min(sums[live], forb[live], axis=1)))
            tot = np.where(forb.any(axis=0), np.inf, sums.sum(axis=0))
            dmax += float(np.min(tot))
        return dmin, dmax


def mrs_extremes(pmf, d, k, cap=DEFAULT_CAP):
    """Exhaustive minima over point-mass samplers of the informed MRS extremes.

    ``delta_min`` is the distortion floor E[min_y E[d | S, X_S]] and
    ``delta_max`` the zero-rate distortion E[min_y E[d | S]], each minimized
    over all maps h. Witnesses are the lowest-encoding minimizers.
    """
    _check_table(pmf, d)
    choices = tuple(subsets(pmf.m, k))
    count = check_cap(pmf.size, len(choices), cap)
    geo = _SamplerGeometry(pmf, d, k)
    best_min = (np.inf, None)
    best_max = (np.inf, None)
    digits = np.zeros(pmf.size, dtype=np.int64)
    radix = len(choices)
    for code in range(count):
        c = code
        for pos in range(pmf.size - 1, -1, -1):
            c, digits[pos] = divmod(c, radix)
        dmin, dmax = geo.extremes(digits)
        if dmin < best_min[0] - 1e-15:
            best_min = (dmin, code)
        if dmax < best_max[0] - 1e-15:
            best_max = (dmax, code)
    return DeltaRange(
        best_min[0], max(best_min[0], best_max[0]),
        PointMassSampler.from_encoding(best_min[1], pmf.size, choices),
        PointMassSampler.from_encoding(best_max[1], pmf.size, choices))


@dataclass(frozen=True)
class Branch:
    subset: tuple
    weight: float
    instance: RdInstance


def sampler_branch_problems(pmf, d, h):
    """Split the informed-decoder problem of a point-mass sampler by S = A.

    Each branch is a remote problem for X_A given the sampling event, with
    distortion averaged over the posterior of X_{A^c} given (S = A, X_A).
    """
    _check_table(pmf, d)
    if len(h.assignment) != pmf.size:
        raise ValidationError("sampler must be defined on every source value")
    geo = _SamplerGeometry(pmf, d, h.k)
    if geo.choices != h.choices:
        raise ValidationError("sampler choices must be the k-subsets in lexicographic order")
    h_arr = h.as_array()
    out = []
    for j, a in enumerate(h.choices):
        if not np.any(h_arr == j):
            continue
        mass, sums, forb = geo.branch_sums(h_arr, j)
        weight = float(mass.sum())
        if weight <= 0:
            continue
        live = np.flatnonzero(mass > 0)
        values = sums[live] / mass[live, None]
        table = DistortionTable(values, forb[live], None, d.repro_shape)
        inst = RdInstance(mass[live] / weight, table, tuple(int(i) for i in live))
        out.append(Branch(a, weight, inst))
    return out


def composite_distortion(pmf, d, h):
    """Instance over Z = (S, X_S) with d~((s, x_s), y) = E[d(X_M, y) | S=s, X_S=x_s].

    ``h`` is a PointMassSampler or a RandomizedSampler. ``z_labels`` are
    ``(subset, flat x_S)`` pairs for the atoms of positive probability.
    """
    _check_table(pmf, d)
    rows = h.rows if hasattr(h, "rows") else _point_mass_rows(h)
    if rows.shape[0] != pmf.size:
        raise ValidationError("sampler must be defined on every source value")
    geo = _SamplerGeometry(pmf, d, len(h.choices[0]))
    if geo.choices != tuple(h.choices):
        raise ValidationError("sampler choices must be the k-subsets in lexicographic order")
    source, values, forbidden, labels = [], [], [], []
    for j, a in enumerate(geo.choices):
        col = rows[:, j]
        if not np.any(col > 0):
            continue
        mass, sums, forb = geo.weighted_sums(col, j)
        live = np.flatnonzero(mass > 0)
        source.append(mass[live])
        values.append(sums[live] / mass[live, None])
        forbidden.append(forb[live])
        labels.extend((a, int(x)) for x in live)
    table = DistortionTable(np.vstack(values), np.vstack(forbidden), None, d.repro_shape)
    return RdInstance(np.concatenate(source), table, tuple(labels))


def _point_mass_rows(h):
    rows = np.zeros((len(h.assignment), len(h.choices)))
    rows[np.arange(len(h.assignment)), h.as_array()] = 1.0
    return rows


def fixed_set_instance(pmf, d, subset):
    """The remote problem for a fixed sampled set: source P_{X_A}, distortion d_A."""
    d_a = modified_distortion(pmf, d, subset)
    p_a = split_matrix(pmf, subset).sum(axis=1)
    return RdInstance(p_a, d_a)
