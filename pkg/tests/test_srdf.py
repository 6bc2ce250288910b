import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from samplingrd.distortion import (
    composite_distortion,
    fixed_set_instance,
    probability_of_error,
    sampler_branch_problems,
)
from samplingrd.errors import ValidationError
from samplingrd.instances import parity_sampler
from samplingrd.oracle import mc_expected_distortion
from samplingrd.prob import JointPmf, mutual_information
from samplingrd.samplers import PointMassSampler
from samplingrd.solver import _evaluate, _solve_branches, ba_fixed_slope
from samplingrd.srdf import (
    SolverOptions,
    expand_branch_kernels,
    fixed_set_srdf,
    irs_srdf,
    map_estimator,
    mrs_informed_srdf,
    mrs_uninformed_bound,
    mrs_uninformed_randomized_refine,
    pe_fixed_set_srdf,
)
from samplingrd.tables import DistortionTable

from conftest import bits, h, random_pmf

FAST = SolverOptions(lambda_points=24, lambda_min=0.01, lambda_max=32)


def test_example1_fixed_set_curves(ex1_curves):
    r1, r2 = ex1_curves["R1"], ex1_curves["R2"]
    for delta in np.linspace(0.5, 1.5, 21):
        assert r1.rate(delta) == pytest.approx(1.5 - delta, abs=1e-3)
    for delta in np.linspace(1.0, 1.5, 21):
        assert r2.rate(delta) == pytest.approx(1 - float(h(delta - 1.0)), abs=1e-3)
    assert r1.witnesses() == ["{1}"] and r2.witnesses() == ["{2}"]


def test_irs_is_minimum_of_fixed_sets(ex1_curves):
    ri, r1, r2 = ex1_curves["Ri"], ex1_curves["R1"], ex1_curves["R2"]
    for delta in np.linspace(0.5, 1.5, 41):
        floor = min(r1.rate(delta), r2.rate(delta) if delta >= 1.0 else math.inf)
        assert ri.rate(delta) <= floor + 1e-9
    assert set(ri.witnesses()) <= {"{1}", "{2}"}


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), subset=st.sampled_from([(0,), (1,)]))
def test_pe_reduction_matches_generic_solver(seed, subset):
    pmf = random_pmf(np.random.default_rng(seed), (2, 2), floor=0.05)
    d = probability_of_error(pmf.shape)
    a = pe_fixed_set_srdf(pmf, subset, FAST)
    b = fixed_set_srdf(pmf, d, subset, FAST)
    lo = max(a.delta_range.delta_min, b.delta_range.delta_min)
    hi = min(a.delta_range.delta_max, b.delta_range.delta_max)
    assert a.delta_range.delta_min == pytest.approx(b.delta_range.delta_min, abs=1e-12)
    for delta in np.linspace(lo, hi, 25):
        assert a.rate(delta) == pytest.approx(b.rate(delta), abs=1e-3)


def test_pe_reduction_rejects_other_alphabets(ex1):
    pmf, _, repro = ex1
    with pytest.raises(ValidationError):
        pe_fixed_set_srdf(pmf, (0,), FAST, repro)


def test_map_estimator(ex2):
    pmf = ex2[0]
    # X2 given X1 is a fair coin: ties break towards 0
    assert map_estimator(pmf, (0,), (1,)) == (0,)
    # X1 given X2 follows the prior, 0 with probability 0.9
    assert map_estimator(pmf, (1,), (1,)) == (0,)
    assert map_estimator(pmf, (0, 1), (1, 0)) == ()
    skew = JointPmf(bits(2), [[0.1, 0.2], [0.6, 0.1]])
    assert map_estimator(skew, (0,), 0) == (1,)
    assert map_estimator(skew, (1,), 0) == (1,)


def test_full_set_is_ordinary_rate_distortion():
    pmf = JointPmf(bits(2), np.full((2, 2), 0.25))
    d = probability_of_error(pmf.shape)
    r = fixed_set_srdf(pmf, d, (0, 1), FAST)
    irs = irs_srdf(pmf, d, 2, FAST)
    # uniform over four symbols: R(D) = 2 - h(D) - D log2 3
    for delta in np.linspace(0.0, 0.75, 16):
        expected = 2 - float(h(delta)) - delta * math.log2(3)
        assert r.rate(delta) == pytest.approx(max(expected, 0.0), abs=2e-3)
        assert irs.rate(delta) == pytest.approx(r.rate(delta), abs=1e-12)


def test_mrs_informed_example2(ex2_curves):
    rm = ex2_curves["RmI"]
    assert rm.witnesses() == ["h6"]
    assert rm.registry["h6"]["encoding"] == parity_sampler().encoding
    for delta in np.linspace(0.0, 0.1, 21):
        assert rm.rate(delta) == pytest.approx(float(h(0.1) - h(delta)), abs=1e-3)


def rate_or_inf(result, delta):
    return result.rate(delta) if delta >= result.curve.delta_min else math.inf


def test_curve_ordering(ex2_curves):
    c = ex2_curves
    for delta in np.linspace(0.1, 0.6, 26):
        assert c["RmI"].rate(delta) <= c["Ri"].rate(delta) + 1e-9
        assert c["Ri"].rate(delta) <= min(rate_or_inf(c["R1"], delta),
                                          rate_or_inf(c["R2"], delta)) + 1e-9
        assert c["conv"].rate(delta) <= c["raw"].rate(delta) + 1e-9
        assert c["RmI"].rate(delta) <= c["conv"].rate(delta) + 1e-9


def test_uninformed_bound_is_above_informed(ex2_curves):
    raw, rm = ex2_curves["raw"], ex2_curves["RmI"]
    assert not raw.convex
    # at zero distortion the parity composite is a relabelling of X_M: rate H(X_M)
    assert raw.rate(0.0) == pytest.approx(1.0 + float(h(0.1)), abs=1e-6)
    assert raw.rate(0.05) > rm.rate(0.05) + 0.5


def test_refine_finds_nothing_on_example2(ex2):
    pmf, d, _ = ex2
    out = mrs_uninformed_randomized_refine(pmf, d, 1, SolverOptions(lambda_points=6))
    assert not out.diagnostics["improved"]


def test_zero_distortion_gives_zero_rate():
    pmf = JointPmf(bits(2), np.full((2, 2), 0.25))
    d = DistortionTable(np.zeros((4, 4)))
    for r in (fixed_set_srdf(pmf, d, (0,), FAST), mrs_informed_srdf(pmf, d, 1, FAST),
              mrs_uninformed_bound(pmf, d, 1, FAST)[0]):
        assert np.allclose(r.curve.rates, 0.0)
        assert r.delta_range.delta_max == pytest.approx(0.0)


def test_fixed_set_witness_replays(ex1_curves, ex1):
    pmf, d, _ = ex1
    r = ex1_curves["R1"]
    inst = fixed_set_instance(pmf, d, (0,))
    by_delta = {round(p.delta, 9): p for p in r.solutions["{1}"].points}
    for v in r.curve.vertices:
        p = by_delta[round(v.delta, 9)]
        delta, rate = _evaluate(inst.source, inst.rho.filled(), p.kernel)
        assert delta == pytest.approx(v.delta, abs=1e-9)
        assert rate == pytest.approx(v.rate, abs=1e-9)
        assert mutual_information(inst.source, p.kernel) == pytest.approx(v.rate, abs=1e-9)


def test_uninformed_witness_replays(ex2_curves, ex2):
    pmf, d, _ = ex2
    conv = ex2_curves["conv"]
    for v in conv.curve.vertices:
        wid = v.witness
        sampler = PointMassSampler.from_encoding(conv.registry[wid]["encoding"], 4,
                                                 ((0,), (1,)))
        inst = composite_distortion(pmf, d, sampler)
        match = [p for p in conv.solutions[wid].points if abs(p.delta - v.delta) <= 1e-9]
        assert match
        delta, rate = _evaluate(inst.source, inst.rho.filled(), match[0].kernel)
        assert delta == pytest.approx(v.delta, abs=1e-9)
        assert rate == pytest.approx(v.rate, abs=1e-9)


def test_parity_kernels_reach_target_by_simulation(ex2):
    pmf, d, _ = ex2
    h6 = parity_sampler()
    branches = sampler_branch_problems(pmf, d, h6)
    lam = math.log2(0.95 / 0.05)
    point = _solve_branches([(b.weight, b.instance) for b in branches], lam, 1e-12, 20000)
    assert point.delta == pytest.approx(0.05, abs=1e-6)
    assert point.rate == pytest.approx(float(h(0.1) - h(0.05)), abs=1e-6)
    kernels = expand_branch_kernels(pmf, branches, point)
    mean, se = mc_expected_distortion(pmf, d, h6, kernels, 400_000, seed=3)
    assert abs(mean - 0.05) <= 4 * se + 1e-3


def test_fixed_set_invalid_subset(ex1):
    pmf, d, _ = ex1
    with pytest.raises(ValidationError):
        fixed_set_srdf(pmf, d, (2,))


def test_results_are_deterministic(ex1):
    pmf, d, _ = ex1
    a = fixed_set_srdf(pmf, d, (1,), FAST)
    b = fixed_set_srdf(pmf, d, (1,), FAST)
    assert np.array_equal(a.curve.rates, b.curve.rates)
    assert np.array_equal(a.curve.deltas, b.curve.deltas)


def test_ba_on_composite_matches_branch_average(ex2):
    # with an informed decoder the parity branches cost nothing extra; the
    # uninformed composite must be at least as expensive at every slope
    pmf, d, _ = ex2
    h6 = parity_sampler()
    inst = composite_distortion(pmf, d, h6)
    branches = [(b.weight, b.instance) for b in sampler_branch_problems(pmf, d, h6)]
    for lam in (0.5, 2.0, 6.0):
        u = ba_fixed_slope(inst, lam)
        i = _solve_branches(branches, lam, 1e-10, 5000)
        assert i.rate + lam * i.delta <= u.rate + lam * u.delta + 1e-9
