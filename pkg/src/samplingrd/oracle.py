"""Independent checks: brute-force rate search, Monte-Carlo distortion and
algebraic identities.

Nothing here calls the Blahut-Arimoto engine or the distortion builders in
:mod:`samplingrd.distortion`; the checks recompute what they need from the
raw pmf and distortion arrays so that agreement means something.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .envelope import CurvePoint, evaluate, lower_convex_envelope
from .errors import CapExceeded, InfeasibleDistortion, ValidationError
from .prob import check_subset, complement
from .samplers import PointMassSampler, RandomizedSampler

ORACLE_CAP = 10**7
_CHUNK = 200_000


class GridKernelIterator:
    """All row-stochastic |Z| x |Y| matrices with entries in {0, 1/q, ..., 1}."""

    def __init__(self, nz, ny, q):
        if nz < 1 or ny < 1 or q < 1:
            raise ValidationError("grid kernels need nz, ny, q >= 1")
        self.nz, self.ny, self.q = int(nz), int(ny), int(q)
        self.rows = _compositions(self.q, self.ny) / self.q

    @property
    def rows_per_source(self):
        return math.comb(self.q + self.ny - 1, self.ny - 1)

    def __len__(self):
        return self.rows_per_source ** self.nz

    def __iter__(self):
        for combo in itertools.product(range(len(self.rows)), repeat=self.nz):
            yield self.rows[list(combo)]


def _compositions(total, parts):
    """Nonnegative integer vectors of length ``parts`` summing to ``total``."""
    out = []
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + cuts + (total + parts - 1,)
        out.append([edges[i + 1] - edges[i] - 1 for i in range(parts)])
    return np.array(out, dtype=float)


def _grid_values(source, rho, forbidden, rows):
    """(delta, rate) of every grid kernel that avoids forbidden pairs."""
    nz = source.shape[0]
    # rows usable by each source atom
    usable = [np.flatnonzero(~np.any((rows > 0) & forbidden[z], axis=1)) for z in range(nz)]
    sizes = [len(u) for u in usable]
    total = int(np.prod(sizes))
    deltas, rates = [], []
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(total, start + _CHUNK))
        idx = np.unravel_index(flat, sizes)
        w = np.stack([rows[usable[z][idx[z]]] for z in range(nz)], axis=1)  # (n, nz, ny)
        out = np.einsum("z,nzy->ny", source, w)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(w > 0, w / out[:, None, :], 1.0)
            terms = np.where(w > 0, w * np.log2(ratio), 0.0)
        rates.append(np.einsum("z,nzy->n", source, terms))
        deltas.append(np.einsum("z,nzy,zy->n", source, w, rho))
    return np.concatenate(deltas), np.maximum(np.concatenate(rates), 0.0)


def _merge_outputs(table):
    """Collapse reproductions with identical distortion columns.

    Two outputs with the same column (values and forbidden pattern) are
    interchangeable, and merging them changes neither distortion nor the
    least achievable mutual information, so the search runs on the distinct
    columns only.
    """
    forbidden = np.asarray(table.forbidden)
    values = np.where(forbidden, -1.0, np.asarray(table.values))
    _, keep = np.unique(values.T, axis=0, return_index=True)
    keep = np.sort(keep)
    return np.where(forbidden, 0.0, values)[:, keep], forbidden[:, keep]


def brute_force_rate(inst, grid, q=40, cap=ORACLE_CAP):
    """Rate-distortion values by exhaustive search over grid kernels.

    Duplicate reproduction columns are merged first. The staircase "smallest mutual information among grid kernels with
    distortion at most delta" is an upper bound on the rate-distortion
    function; its lower convex envelope is still achievable by
    time-sharing and is what gets evaluated at each grid distortion.
    """
    source = np.asarray(inst.source, dtype=float)
    rho, forbidden = _merge_outputs(inst.rho)
    nz, ny = rho.shape
    it = GridKernelIterator(nz, ny, q)
    if len(it) > cap:
        raise CapExceeded(f"{len(it)} grid kernels exceed the oracle cap {cap}")
    deltas, rates = _grid_values(source, rho, forbidden, it.rows)
    order = np.lexsort((rates, deltas))
    deltas, rates = deltas[order], rates[order]
    best = np.minimum.accumulate(rates)
    # the staircase corners: kernels that lower the running minimum
    corner = np.r_[True, best[1:] < best[:-1] - 1e-15]
    stairs = [CurvePoint(float(dl), float(r), "grid") for dl, r in zip(deltas[corner], best[corner])]
    env = lower_convex_envelope(stairs)
    out = []
    for g in np.sort(np.asarray(grid, dtype=float)):
        if g < env.delta_min - 1e-12:
            raise InfeasibleDistortion(f"infeasible distortion {g}: no grid kernel reaches it")
        out.append(CurvePoint(float(g), evaluate(env, max(g, env.delta_min)), "grid"))
    return out


def _sample_rows(rng, rows, n_rows_idx):
    """One draw from each of the given rows of a stochastic matrix."""
    cum = np.cumsum(rows, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(len(n_rows_idx))
    return np.minimum((u[:, None] >= cum[n_rows_idx]).sum(axis=1), rows.shape[1] - 1)


def mc_expected_distortion(pmf, d, sampler, kernels, n, seed=0, block=100_000):
    """Monte-Carlo estimate of E[d(X_M, Y_M)] with its standard error.

    ``kernels`` maps each sampled subset (a tuple of 0-based components) to
    a row-stochastic array from the flat values of X_A to flat Y_M. Draws are
    split into blocks, block ``b`` using the stream seeded by ``(seed, b)``,
    so the estimate does not depend on how blocks are scheduled.
    """
    if n < 1:
        raise ValidationError("need at least one sample")
    if isinstance(sampler, PointMassSampler):
        sampler = RandomizedSampler.from_point_mass(sampler)
    probs = pmf.flat
    values = np.where(d.forbidden, np.inf, d.filled())
    choices = sampler.choices
    shape = pmf.shape
    total, total_sq, done, b = 0.0, 0.0, 0, 0
    while done < n:
        size = min(block, n - done)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, b])))
        x = rng.choice(probs.size, size=size, p=probs)
        s = _sample_rows(rng, np.asarray(sampler.rows), x)
        y = np.empty(size, dtype=np.int64)
        coords = np.unravel_index(x, shape)
        for j, subset in enumerate(choices):
            hit = np.flatnonzero(s == j)
            if hit.size == 0:
                continue
            kern = np.asarray(kernels[tuple(subset)], dtype=float)
            sub_shape = tuple(shape[i] for i in subset)
            xa = np.ravel_multi_index(tuple(coords[i][hit] for i in subset), sub_shape)
            y[hit] = _sample_rows(rng, kern, xa)
        loss = values[x, y]
        total += float(loss.sum())
        total_sq += float(np.sum(loss * loss))
        done += size
        b += 1
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    stderr = math.sqrt(var / n) if n > 1 else 0.0
    return mean, stderr


def _posterior_max(pmf, subset):
    """max over x_{A^c} of P(x_{A^c} | x_A), its lexicographic argmax, and P(x_A)."""
    rest = complement(subset, pmf.m)
    joint = np.transpose(pmf.probs, subset + rest)
    n_a = int(np.prod([pmf.shape[i] for i in subset]))
    joint = joint.reshape(n_a, -1)
    p_a = joint.sum(axis=1)
    post = joint / p_a[:, None]
    return post.max(axis=1), post.argmax(axis=1), p_a


def decomposition_identity_check(pmf, subset, kernel):
    """Residual of the probability-of-error decomposition for one kernel.

    Builds the joint law of (X_M, Y_M) in which Y_A is drawn from ``kernel``
    given X_A and Y_{A^c} is the MAP guess of X_{A^c} from Y_A, then compares
    P(X_M != Y_M) with 1 - E[alpha] + E[alpha(X_A) 1(X_A != Y_A)].
    """
    subset = check_subset(subset, pmf.m)
    rest = complement(subset, pmf.m)
    kernel = np.asarray(getattr(kernel, "rows", kernel), dtype=float)
    alpha, guess, p_a = _posterior_max(pmf, subset)
    shape_a = tuple(pmf.shape[i] for i in subset)
    shape_c = tuple(pmf.shape[i] for i in rest)
    n_c = int(np.prod(shape_c)) if rest else 1
    hit = 0.0
    for x in np.ndindex(*pmf.shape):
        xa = int(np.ravel_multi_index(tuple(x[i] for i in subset), shape_a))
        xc = int(np.ravel_multi_index(tuple(x[i] for i in rest), shape_c)) if rest else 0
        # Y_M = x_M needs Y_A = x_A and the MAP completion of x_A to equal x_c
        if n_c == 1 or guess[xa] == xc:
            hit += pmf.probs[x] * kernel[xa, xa]
    lhs = 1.0 - hit
    flips = 1.0 - np.diag(kernel)
    rhs = 1.0 - float(p_a @ alpha) + float(p_a @ (alpha * flips))
    return abs(lhs - rhs)


def _random_pmf(rng, n):
    p = rng.dirichlet(np.ones(n))
    p = np.maximum(p, 1e-3)
    return p / p.sum()


def lagrangian_vertex_check(seed, lam=1.0, trials=1, m=2, k=1, alphabet=2, n_u=2,
                            interior=20, penalty=None):
    """Is the time-shared Lagrangian minimized at a deterministic sampler?

    For random fixed (P_U, Q_{Y|S,U}, P_{Y|S,X_S,U}) the objective
    sum_{u,x} P(u) P(x) sum_s P(s|x,u) C(s, x, u), with
    C = E[log2 P(Y|s,x_s,u)/Q(Y|s,u) + lam d(x, Y)], is linear in the sampler.
    Every random interior sampler (and the uniform one) is compared with the
    best of all deterministic samplers. ``penalty(P_S|XU, weights)`` adds a
    term to the objective; a strictly convex one serves as a negative control.
    Returns True iff no interior point beats the best vertex by over 1e-12.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    choices = [tuple(c) for c in itertools.combinations(range(m), k)]
    shape = (alphabet,) * m
    n_x = alphabet ** m
    n_s = len(choices)
    if n_s ** (n_x * n_u) > 10**6:
        raise CapExceeded("too many deterministic samplers for the vertex check")
    coords = list(np.ndindex(*shape))
    for _ in range(trials):
        p_x = _random_pmf(rng, n_x)
        p_u = _random_pmf(rng, n_u)
        d = rng.random((n_x, n_x))
        weights = p_u[None, :] * p_x[:, None]  # (x, u)
        cost = np.empty((n_x, n_u, n_s))
        for j, subset in enumerate(choices):
            n_xs = alphabet ** k
            q = rng.dirichlet(np.ones(n_x), size=n_u)  # Q(y|s=j,u)
            cond = rng.dirichlet(np.ones(n_x), size=(n_xs, n_u))  # P(y|s=j,x_s,u)
            for x, xc in enumerate(coords):
                xs = int(np.ravel_multi_index(tuple(xc[i] for i in subset), (alphabet,) * k))
                for u in range(n_u):
                    w = cond[xs, u]
                    cost[x, u, j] = float(np.sum(w * (np.log2(w / q[u]) + lam * d[x])))

        def objective(sampler):
            value = float(np.sum(weights[:, :, None] * sampler * cost))
            if penalty is not None:
                value += penalty(sampler, weights)
            return value

        best_vertex = math.inf
        for assign in itertools.product(range(n_s), repeat=n_x * n_u):
            vertex = np.zeros((n_x, n_u, n_s))
            vertex.reshape(-1, n_s)[np.arange(n_x * n_u), assign] = 1.0
            best_vertex = min(best_vertex, objective(vertex))
        points = [np.full((n_x, n_u, n_s), 1.0 / n_s)]
        points += [rng.dirichlet(np.ones(n_s), size=(n_x, n_u)) for _ in range(interior)]
        if any(objective(p) < best_vertex - 1e-12 for p in points):
            return False
    return True


def quadratic_penalty(scale):
    """Strictly convex penalty pulling every sampler row towards uniform."""
    def penalty(sampler, weights):
        n_s = sampler.shape[-1]
        return scale * float(np.sum(weights[:, :, None] * (sampler - 1.0 / n_s) ** 2))
    return penalty
