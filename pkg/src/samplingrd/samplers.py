"""Sampler representations and exhaustive enumeration of point-mass samplers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, ValidationError
from .prob import subset_label, subsets

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class PointMassSampler:
    """A deterministic sampler h: X_M -> A_k.

    ``assignment[x]`` is the position in ``choices`` of the subset sampled
    when the source takes flat value ``x``. The mixed-radix encoding reads the
    assignment as digits with x = 0 most significant, so enumeration order is
    lexicographic in the assignment tuple.
    """

    assignment: tuple
    choices: tuple

    def __post_init__(self):
        a = tuple(int(v) for v in self.assignment)
        if any(v < 0 or v >= len(self.choices) for v in a):
            raise ValidationError("sampler assigns a subset outside its choices")
        sizes = {len(c) for c in self.choices}
        if len(sizes) != 1:
            raise ValidationError("all sampler choices must have the same size")
        object.__setattr__(self, "assignment", a)
        object.__setattr__(self, "choices", tuple(tuple(c) for c in self.choices))

    @property
    def k(self):
        return len(self.choices[0])

    @property
    def encoding(self):
        code = 0
        radix = len(self.choices)
        for digit in self.assignment:
            code = code * radix + digit
        return code

    @property
    def id(self):
        return f"h{self.encoding}"

    def subset(self, x):
        return self.choices[self.assignment[x]]

    def as_array(self):
        return np.asarray(self.assignment, dtype=np.int64)

    def is_constant(self):
        return len(set(self.assignment)) == 1

    def describe(self, pmf=None):
        """Human-readable table 'x -> subset' (1-based subset labels)."""
        if pmf is None:
            keys = [str(x) for x in range(len(self.assignment))]
        else:
            keys = [_symbols(pmf, idx) for idx in np.ndindex(*pmf.shape)]
        return {key: subset_label(self.subset(x)) for x, key in enumerate(keys)}

    @classmethod
    def from_encoding(cls, code, n_x, choices):
        radix = len(choices)
        digits = []
        for _ in range(n_x):
            code, digit = divmod(code, radix)
            digits.append(digit)
        if code:
            raise ValidationError("encoding too large for this alphabet")
        return cls(tuple(reversed(digits)), tuple(choices))

    @classmethod
    def constant(cls, subset, n_x, choices):
        choices = tuple(tuple(c) for c in choices)
        return cls((choices.index(tuple(subset)),) * n_x, choices)


def _symbols(pmf, idx):
    return "".join(c.symbols[i] for c, i in zip(pmf.components, idx))


@dataclass(frozen=True)
class RandomizedSampler:
    """A memoryless sampler given by rows[x, j] = P(S = choices[j] | X_M = x)."""

    rows: np.ndarray
    choices: tuple

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.choices):
            raise ValidationError("sampler rows must be |X_M| x |A_k|")
        if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-12):
            raise ValidationError("sampler rows must be pmfs")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "choices", tuple(tuple(c) for c in self.choices))

    @classmethod
    def from_point_mass(cls, h):
        rows = np.zeros((len(h.assignment), len(h.choices)))
        rows[np.arange(len(h.assignment)), h.as_array()] = 1.0
        return cls(rows, h.choices)


def sampler_count(n_x, n_choices):
    """|A_k| ** |X_M| in exact integer arithmetic."""
    return int(n_choices) ** int(n_x)


def check_cap(n_x, n_choices, cap):
    count = sampler_count(n_x, n_choices)
    if count > cap:
        raise CapExceeded(
            f"{n_choices}^{n_x} = {count} point-mass samplers exceed the cap "
            f"{cap}; raise the cap (--cap) to enumerate them")
    return count


def enumerate_point_mass_samplers(pmf, k, cap=DEFAULT_CAP):
    """Yield every map h: X_M -> A_k in mixed-radix order."""
    choices = tuple(subsets(pmf.m, k))
    n_x = pmf.size
    count = check_cap(n_x, len(choices), cap)
    for code in range(count):
        yield PointMassSampler.from_encoding(code, n_x, choices)
