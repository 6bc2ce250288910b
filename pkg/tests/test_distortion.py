import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from samplingrd.distortion import (
    _delta_max,
    alpha_map,
    composite_distortion,
    fixed_set_extremes,
    fixed_set_instance,
    irs_delta_min,
    modified_distortion,
    mrs_extremes,
    pe_extremes,
    probability_of_error,
    sampler_branch_problems,
)
from samplingrd.errors import CapExceeded, ValidationError
from samplingrd.instances import parity_sampler
from samplingrd.prob import JointPmf, split_matrix, subsets
from samplingrd.samplers import PointMassSampler
from samplingrd.tables import DistortionTable

from conftest import bits, random_pmf


def random_table(rng, n_x, n_y, forbid=0.0):
    vals = rng.random((n_x, n_y))
    forb = rng.random((n_x, n_y)) < forbid
    forb[:, 0] = False  # output 0 stays admissible everywhere
    return DistortionTable(vals, forb)


def test_table_rejects_all_forbidden_row():
    with pytest.raises(ValidationError):
        DistortionTable([[0.0, 1.0]], [[True, True]])


def test_table_stores_nan_at_forbidden():
    t = DistortionTable([[0.0, 5.0]], [[False, True]])
    assert np.isnan(t.values[0, 1])
    assert t.filled()[0, 1] == 0.0


def test_modified_distortion_full_set_is_identity(ex1):
    pmf, d, _ = ex1
    d_m = modified_distortion(pmf, d, (0, 1))
    assert np.array_equal(d_m.forbidden, d.forbidden)
    assert np.allclose(d_m.filled(), d.filled(), atol=1e-15)


def test_modified_distortion_example1(ex1):
    pmf, d, _ = ex1
    d_a = modified_distortion(pmf, d, (0,))
    d1 = np.array([[0.0, np.nan, 1.0], [np.nan, 0.0, 1.0]])
    # repro flat order is (y1, y2) row-major; y2 only shifts by E[d2] = 0.5
    expected = np.repeat(d1, 2, axis=1) + 0.5
    assert np.array_equal(d_a.forbidden, np.isnan(expected))
    ok = ~d_a.forbidden
    assert np.allclose(d_a.values[ok], expected[ok], atol=1e-12)


def test_modified_distortion_example2(ex2):
    pmf, d, _ = ex2
    d_a = modified_distortion(pmf, d, (1,))
    p1 = np.array([0.9, 0.1])
    for x2 in range(2):
        for y1, y2 in itertools.product(range(2), repeat=2):
            expected = 1 - p1[y1] * (y2 == x2)
            assert d_a.values[x2, 2 * y1 + y2] == pytest.approx(expected, abs=1e-12)


def test_alpha_map_cases(ex2):
    copy = JointPmf(bits(2), [[0.4, 0.0], [0.0, 0.6]], require_full_support=False)
    assert np.allclose(alpha_map(copy, (0,)).alpha, 1.0)
    assert np.allclose(alpha_map(ex2[0], (1,)).alpha, 0.9)
    uniform = JointPmf(bits(2), np.full((2, 2), 0.25))
    am = alpha_map(uniform, (0,))
    assert np.allclose(am.alpha, 0.5)
    assert list(am.witness) == [0, 0]  # lexicographic tie-break


@pytest.mark.parametrize("subset, expected", [((0,), (0.5, 1.5)), ((1,), (1.0, 1.5))])
def test_fixed_set_extremes_example1(ex1, subset, expected):
    pmf, d, _ = ex1
    r = fixed_set_extremes(pmf, d, subset)
    assert (r.delta_min, r.delta_max) == pytest.approx(expected, abs=1e-12)


def test_fixed_set_extremes_pe_full_set():
    pmf = random_pmf(np.random.default_rng(5), (2, 3))
    r = fixed_set_extremes(pmf, probability_of_error(pmf.shape), (0, 1))
    assert r.delta_min == pytest.approx(0.0, abs=1e-15)
    assert r.delta_max == pytest.approx(1 - pmf.probs.max(), abs=1e-12)


def test_fixed_set_extremes_no_admissible_output():
    pmf = JointPmf(bits(1), [0.5, 0.5])
    d = DistortionTable([[0.0, 1.0], [1.0, 0.0]], [[False, True], [True, False]])
    with pytest.raises(ValidationError):
        fixed_set_extremes(pmf, d, (0,))


def test_pe_extremes(ex2):
    pmf = ex2[0]
    assert pe_extremes(pmf, (1,)).delta_min == pytest.approx(0.1, abs=1e-12)
    assert pe_extremes(pmf, (0, 1)).delta_min == pytest.approx(0.0, abs=1e-15)
    point = JointPmf(bits(1), [1.0, 0.0], require_full_support=False)
    r = pe_extremes(point, (0,))
    assert (r.delta_min, r.delta_max) == (0.0, 0.0)


def test_irs_delta_min(ex1, ex2):
    r = irs_delta_min(ex1[0], ex1[1], 1)
    assert r.delta_min == pytest.approx(0.5) and r.sampler_witness.subset(0) == (0,)
    r = irs_delta_min(ex2[0], ex2[1], 1)
    assert r.delta_min == pytest.approx(0.1) and r.sampler_witness.subset(0) == (1,)
    full = irs_delta_min(ex1[0], ex1[1], 2)
    assert full.delta_min == pytest.approx(fixed_set_extremes(ex1[0], ex1[1], (0, 1)).delta_min)


def test_mrs_extremes_example2(ex2):
    r = mrs_extremes(ex2[0], ex2[1], 1)
    assert r.delta_min == pytest.approx(0.0, abs=1e-12)
    assert r.delta_max == pytest.approx(0.1, abs=1e-12)


def test_mrs_extremes_full_set(ex1):
    pmf, d, _ = ex1
    r = mrs_extremes(pmf, d, 2)
    floor = float(pmf.flat @ np.min(np.where(d.forbidden, np.inf, d.filled()), axis=1))
    assert r.delta_min == pytest.approx(floor, abs=1e-12)


def brute_mrs_delta_min(pmf, d, k):
    """Distortion floor minimized over all maps h, by plain loops."""
    choices = subsets(pmf.m, k)
    p = pmf.flat
    xs = list(np.ndindex(*pmf.shape))
    best = np.inf
    for assign in itertools.product(range(len(choices)), repeat=len(xs)):
        total = 0.0
        for j, a in enumerate(choices):
            groups = {}
            for x, coords in enumerate(xs):
                if assign[x] == j:
                    groups.setdefault(tuple(coords[i] for i in a), []).append(x)
            for members in groups.values():
                total += min(sum(p[x] * d.values[x, y] for x in members)
                             for y in range(d.shape[1]))
        best = min(best, total)
    return best


def test_mrs_extremes_uniform_bits_pe():
    pmf = JointPmf(bits(2), np.full((2, 2), 0.25))
    d = probability_of_error((2, 2))
    r = mrs_extremes(pmf, d, 1)
    assert r.delta_min == pytest.approx(brute_mrs_delta_min(pmf, d, 1), abs=1e-12)
    # the parity sampler reveals both bits, so the floor is zero
    assert r.delta_min == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_mrs_extremes_random_against_loops(seed):
    rng = np.random.default_rng(seed)
    pmf = random_pmf(rng, (2, 2))
    d = random_table(rng, 4, 3)
    r = mrs_extremes(pmf, d, 1)
    assert r.delta_min == pytest.approx(brute_mrs_delta_min(pmf, d, 1), abs=1e-12)


def test_mrs_extremes_cap(ex2):
    with pytest.raises(CapExceeded, match="raise the cap"):
        mrs_extremes(ex2[0], ex2[1], 1, cap=15)


def test_branch_problems_constant_sampler(ex1):
    pmf, d, _ = ex1
    h = PointMassSampler.constant((0,), pmf.size, subsets(2, 1))
    (branch,) = sampler_branch_problems(pmf, d, h)
    inst = fixed_set_instance(pmf, d, (0,))
    assert branch.weight == pytest.approx(1.0)
    assert np.allclose(branch.instance.source, inst.source)
    assert np.array_equal(branch.instance.rho.forbidden, inst.rho.forbidden)
    assert np.allclose(branch.instance.rho.filled(), inst.rho.filled())


def test_branch_problems_parity(ex2):
    pmf, d, _ = ex2
    branches = sampler_branch_problems(pmf, d, parity_sampler())
    assert [b.weight for b in branches] == pytest.approx([0.5, 0.5])
    for b in branches:
        assert sorted(b.instance.source) == pytest.approx([0.1, 0.9])


def test_branch_problems_split_on_observed_coordinate():
    rng = np.random.default_rng(11)
    a, b = rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2))
    pmf = JointPmf(bits(2), np.outer(a, b))
    d = random_table(rng, 4, 4)
    # S = {1} exactly when x1 = 0: the sampled coordinate decides the event
    h = PointMassSampler((0, 0, 1, 1), subsets(2, 1))
    branches = {br.subset: br for br in sampler_branch_problems(pmf, d, h)}
    first = branches[(0,)].instance
    assert first.z_labels == (0,)
    d_a = modified_distortion(pmf, d, (0,))
    assert np.allclose(first.rho.values[0], d_a.values[0], atol=1e-12)
    assert branches[(0,)].weight == pytest.approx(a[0])


def test_composite_constant_sampler(ex1):
    pmf, d, _ = ex1
    h = PointMassSampler.constant((1,), pmf.size, subsets(2, 1))
    comp = composite_distortion(pmf, d, h)
    inst = fixed_set_instance(pmf, d, (1,))
    assert np.allclose(comp.source, inst.source)
    assert np.allclose(comp.rho.filled(), inst.rho.filled())
    assert comp.z_labels == (((1,), 0), ((1,), 1))


def test_composite_parity_is_bijection(ex2):
    pmf, d, _ = ex2
    comp = composite_distortion(pmf, d, parity_sampler())
    assert comp.nz == 4
    # atom (S, x_S) determines x_M; rebuild the bijection and compare tables
    to_x = {((0,), 0): 0, ((0,), 1): 3, ((1,), 1): 1, ((1,), 0): 2}
    for z, label in enumerate(comp.z_labels):
        x = to_x[label]
        assert comp.source[z] == pytest.approx(pmf.flat[x])
        assert np.allclose(comp.rho.values[z], d.values[x])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), code=st.integers(0, 15))
def test_composite_tower_property(seed, code):
    rng = np.random.default_rng(seed)
    pmf = random_pmf(rng, (2, 2))
    d = random_table(rng, 4, 3)
    h = PointMassSampler.from_encoding(code, 4, subsets(2, 1))
    comp = composite_distortion(pmf, d, h)
    assert np.allclose(comp.source @ comp.rho.filled(), pmf.flat @ d.filled(), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_tower_and_delta_max_consistency(seed):
    rng = np.random.default_rng(seed)
    pmf = random_pmf(rng, (2, 3))
    d = random_table(rng, 6, 4, forbid=0.2)
    for a in [(0,), (1,), (0, 1)]:
        d_a = modified_distortion(pmf, d, a)
        p_a = split_matrix(pmf, a).sum(axis=1)
        ok = ~d_a.forbidden.any(axis=0)
        assert np.allclose((p_a @ d_a.filled())[ok], (pmf.flat @ d.filled())[ok], atol=1e-12)
        via_d_a = np.min(np.where(ok, p_a @ d_a.filled(), np.inf))
        assert via_d_a == pytest.approx(_delta_max(pmf, d), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_floor_ordering(seed):
    rng = np.random.default_rng(seed)
    pmf = random_pmf(rng, (2, 2, 2))
    d = random_table(rng, 8, 3)
    fixed = {a: fixed_set_extremes(pmf, d, a).delta_min
             for k in (1, 2, 3) for a in subsets(3, k)}
    for a in subsets(3, 1):
        for b in subsets(3, 2):
            if set(a) <= set(b):
                assert fixed[b] <= fixed[a] + 1e-12
    irs = irs_delta_min(pmf, d, 1).delta_min
    assert all(irs <= fixed[a] + 1e-12 for a in subsets(3, 1))
    # three components would mean 3**8 maps per example; two keep it quick
    small = random_pmf(rng, (2, 2))
    d2 = random_table(rng, 4, 3)
    mrs = mrs_extremes(small, d2, 1).delta_min
    assert mrs <= irs_delta_min(small, d2, 1).delta_min + 1e-12
