"""The two worked two-component sources used throughout the tests and CLI."""

from __future__ import annotations

import numpy as np

from .distortion import additive, probability_of_error
from .errors import ValidationError
from .prob import ComponentAlphabet, JointPmf, binary_alphabet
from .samplers import PointMassSampler


def example1():
    """iid uniform bits, Y_1 = {0, 1, e}, d = d_1 + d_2.

    d_1 is 0 on a correct guess, 1 on an erasure and forbidden on a flip;
    d_2 is Hamming. Returns ``(pmf, d, repro_components)``.
    """
    comps = (binary_alphabet("1"), binary_alphabet("2"))
    repro = (ComponentAlphabet("1", ("0", "1", "e")), binary_alphabet("2"))
    pmf = JointPmf(comps, np.full((2, 2), 0.25))
    d1 = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    f1 = np.array([[False, True, False], [True, False, False]])
    d2 = 1.0 - np.eye(2)
    d = additive([(d1, f1), (d2, None)], (2, 2), (3, 2))
    return pmf, d, repro


def example2(p=0.1, q=0.5):
    """X_1 ~ Bernoulli(p) and X_2 = X_1 passed through a BSC(q); Hamming on pairs."""
    if not 0 < p < 1 or not 0 < q < 1:
        raise ValidationError("example2 needs 0 < p < 1 and 0 < q < 1 for full support")
    comps = (binary_alphabet("1"), binary_alphabet("2"))
    x1 = np.array([1 - p, p])
    bsc = np.array([[1 - q, q], [q, 1 - q]])
    pmf = JointPmf(comps, x1[:, None] * bsc)
    return pmf, probability_of_error((2, 2)), comps


def parity_sampler():
    """Sample component 1 on 00 and 11, component 2 on 01 and 10."""
    return PointMassSampler((0, 1, 1, 0), ((0,), (1,)))
