import numpy as np
import pytest

from samplingrd import JointPmf, binary_entropy
from samplingrd.instances import example1, example2
from samplingrd.prob import binary_alphabet, ComponentAlphabet
from samplingrd.srdf import (
    fixed_set_srdf,
    irs_srdf,
    mrs_informed_srdf,
    mrs_uninformed_bound,
)

h = np.vectorize(binary_entropy)


def random_pmf(rng, shape, floor=0.02):
    """Full-support pmf with no atom below ``floor`` (before renormalizing)."""
    p = rng.dirichlet(np.ones(int(np.prod(shape))))
    p = np.maximum(p, floor)
    comps = [ComponentAlphabet(str(i + 1), tuple(str(s) for s in range(n)))
             for i, n in enumerate(shape)]
    return JointPmf(comps, (p / p.sum()).reshape(shape))


def bits(m):
    return [binary_alphabet(str(i + 1)) for i in range(m)]


@pytest.fixture(scope="session")
def ex1():
    return example1()


@pytest.fixture(scope="session")
def ex2():
    return example2(0.1, 0.5)


@pytest.fixture(scope="session")
def ex1_curves(ex1):
    pmf, d, _ = ex1
    return {"R1": fixed_set_srdf(pmf, d, (0,)), "R2": fixed_set_srdf(pmf, d, (1,)),
            "Ri": irs_srdf(pmf, d, 1)}


@pytest.fixture(scope="session")
def ex2_curves(ex2):
    pmf, d, _ = ex2
    raw, conv = mrs_uninformed_bound(pmf, d, 1)
    return {"RmI": mrs_informed_srdf(pmf, d, 1), "R1": fixed_set_srdf(pmf, d, (0,)),
            "R2": fixed_set_srdf(pmf, d, (1,)), "Ri": irs_srdf(pmf, d, 1),
            "raw": raw, "conv": conv}
