"""Finite-alphabet probability primitives.

Joint pmfs are dense numpy tensors with one axis per component, indexed
row-major in the order the components were given. Subsets of components are
sorted tuples of 0-based axis indices. All information measures are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ValidationError

SUM_TOL = 1e-9


@dataclass(frozen=True)
class ComponentAlphabet:
    name: str
    symbols: tuple

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        if not symbols:
            raise ValidationError(f"alphabet {self.name!r} is empty")
        if len(set(symbols)) != len(symbols):
            raise ValidationError(f"alphabet {self.name!r} has repeated symbols")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self):
        return len(self.symbols)


def binary_alphabet(name):
    return ComponentAlphabet(name, ("0", "1"))


def normalize(p, tol=SUM_TOL):
    """Return ``p`` as a float array summing to one.

    Sums within ``tol`` of one are renormalized; anything further off, or any
    negative entry, is rejected.
    """
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise ValidationError("probabilities must be finite and nonnegative")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ValidationError(f"probabilities sum to {total!r}, not 1")
    return p / total


class JointPmf:
    """A pmf over the product of finitely many component alphabets."""

    def __init__(self, components, probs, require_full_support=True):
        self.components = tuple(components)
        shape = tuple(len(c) for c in self.components)
        probs = np.asarray(probs, dtype=float)
        if probs.size != int(np.prod(shape, dtype=np.int64)):
            raise ValidationError(
                f"pmf has {probs.size} entries, alphabets need {int(np.prod(shape))}")
        probs = normalize(probs.reshape(shape))
        self.full_support = bool(np.all(probs > 0))
        if require_full_support and not self.full_support:
            raise ValidationError("source pmf must have full support")
        probs.setflags(write=False)
        self.probs = probs

    @property
    def shape(self):
        return self.probs.shape

    @property
    def m(self):
        return len(self.components)

    @property
    def size(self):
        return self.probs.size

    @property
    def flat(self):
        return self.probs.reshape(-1)

    def __repr__(self):
        names = ",".join(c.name for c in self.components)
        return f"JointPmf({names}; shape={self.shape})"


@dataclass(frozen=True)
class Kernel:
    """Row-stochastic matrix ``rows[i, j] = P(to=j | from=i)``."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ValidationError("kernel must be a 2-d array")
        if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-12):
            raise ValidationError("kernel rows must be pmfs")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def shape(self):
        return self.rows.shape


def subsets(m, k):
    """All k-sized subsets of range(m), lexicographically ordered."""
    if not 1 <= k <= m:
        raise ValidationError(f"k={k} outside [1, {m}]")
    return list(combinations(range(m), k))


def check_subset(subset, m):
    subset = tuple(int(i) for i in subset)
    if not subset:
        raise ValidationError("subset must be nonempty")
    if any(b <= a for a, b in zip(subset, subset[1:])):
        raise ValidationError(f"subset {subset} must be strictly increasing")
    if subset[0] < 0 or subset[-1] >= m:
        raise ValidationError(f"subset {subset} has indices outside [0, {m})")
    return subset


def complement(subset, m):
    return tuple(i for i in range(m) if i not in subset)


def subset_label(subset):
    """1-based display label, e.g. (0, 2) -> '{1,3}'."""
    return "{" + ",".join(str(i + 1) for i in subset) + "}"


def split_matrix(pmf, subset):
    """Return P as a matrix with rows indexed by x_A and columns by x_{A^c}.

    Both axes are row-major over their components in increasing index order.
    A^c empty yields a single column.
    """
    subset = check_subset(subset, pmf.m)
    rest = complement(subset, pmf.m)
    arr = np.transpose(pmf.probs, subset + rest)
    n_a = int(np.prod([pmf.shape[i] for i in subset]))
    return arr.reshape(n_a, -1)


def projection(shape, subset):
    """Map each flat index over ``shape`` to the flat index of its ``subset`` part."""
    idx = np.indices(shape).reshape(len(shape), -1)
    sub_shape = tuple(shape[i] for i in subset)
    return np.ravel_multi_index(tuple(idx[i] for i in subset), sub_shape)


def marginal(pmf, subset):
    subset = check_subset(subset, pmf.m)
    drop = tuple(i for i in range(pmf.m) if i not in subset)
    probs = pmf.probs.sum(axis=drop) if drop else pmf.probs
    return JointPmf([pmf.components[i] for i in subset], probs,
                    require_full_support=False)


def conditional(pmf, target, given):
    """Kernel from x_given to x_target, both flattened row-major."""
    target = check_subset(target, pmf.m)
    given = check_subset(given, pmf.m)
    if set(target) & set(given):
        raise ValidationError("target and given subsets must be disjoint")
    both = tuple(sorted(target + given))
    joint = marginal(pmf, both).probs
    # reorder axes to (given..., target...)
    order = [both.index(i) for i in given + target]
    joint = np.transpose(joint, order)
    n_given = int(np.prod([pmf.shape[i] for i in given]))
    joint = joint.reshape(n_given, -1)
    row_mass = joint.sum(axis=1)
    if np.any(row_mass <= 0):
        raise ValidationError("conditioning on a zero-probability event")
    return Kernel(joint / row_mass[:, None])


def _plogp(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def entropy(p):
    """Shannon entropy in bits of a JointPmf or a probability array."""
    probs = p.probs if isinstance(p, JointPmf) else np.asarray(p, dtype=float)
    return float(max(0.0, -_plogp(probs).sum()))


def binary_entropy(p):
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"binary_entropy needs p in [0, 1], got {p}")
    return entropy([p, 1.0 - p])


def mutual_information(source, kernel):
    """I(Z; Y) in bits for Z ~ source and Y | Z ~ kernel rows."""
    source = np.asarray(source, dtype=float)
    rows = kernel.rows if isinstance(kernel, Kernel) else np.asarray(kernel, dtype=float)
    out = source @ rows
    joint = source[:, None] * rows
    pos = joint > 0
    ratio = rows[pos] / np.broadcast_to(out, rows.shape)[pos]
    return float(max(0.0, np.sum(joint[pos] * np.log2(ratio))))


def conditional_mutual_information(weights, branches):
    """Sum over branches of weight * I(branch), skipping zero weights.

    ``branches`` is a sequence aligned with ``weights`` whose entries are
    ``(source, kernel)`` pairs, or ``None`` where the weight is zero.
    """
    weights = normalize(weights)
    if len(branches) != len(weights):
        raise ValidationError("one branch per weight required")
    total = 0.0
    for w, branch in zip(weights, branches):
        if w == 0:
            continue
        if branch is None:
            raise ValidationError("missing branch for a positive weight")
        total += w * mutual_information(*branch)
    return total
