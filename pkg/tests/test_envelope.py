import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from samplingrd.envelope import (
    CurvePoint,
    PiecewiseLinearCurve,
    evaluate,
    lower_convex_envelope,
    pointwise_min,
)
from samplingrd.errors import InfeasibleDistortion, ValidationError


def pts(pairs, witness="a"):
    return [CurvePoint(d, r, witness) for d, r in pairs]


def test_collinear_points_collapse_to_endpoints():
    env = lower_convex_envelope(pts([(0, 1), (0.5, 0.5), (1, 0)]))
    assert [(v.delta, v.rate) for v in env.vertices] == [(0, 1), (1, 0)]


def test_convex_input_is_kept():
    raw = [(0, 1), (0.2, 0.5), (0.5, 0.2), (1, 0)]
    env = lower_convex_envelope(pts(raw))
    assert [(v.delta, v.rate) for v in env.vertices] == raw


def test_cut_at_minimum_rate():
    env = lower_convex_envelope(pts([(0, 1), (0.5, 0.0), (1, 0.0), (2, 0.3)]))
    assert env.delta_max == 0.5
    assert env(3.0) == 0.0


def test_single_point():
    env = lower_convex_envelope(pts([(0.3, 0.2)]))
    assert len(env) == 1 and env(0.3) == 0.2 and env(1.0) == 0.2
    assert env.slope_at(0.5) == 0.0


def test_duplicate_points_pool_witnesses():
    env = lower_convex_envelope([CurvePoint(0, 1, "x"), CurvePoint(0, 1, "y"),
                                 CurvePoint(1, 0, "y")])
    assert env.vertices[0].witnesses == ("x", "y")
    # the shared witness realizes the whole segment
    assert env.mix_at(0.5) == (("y", 1.0),)


def test_mix_weights_reproduce_the_point():
    env = lower_convex_envelope([CurvePoint(0, 1, "x"), CurvePoint(1, 0, "y")])
    (wa, ta), (wb, tb) = env.mix_at(0.25)
    assert (wa, wb) == ("x", "y")
    assert ta * 0 + tb * 1 == pytest.approx(0.25)
    assert ta * 1 + tb * 0 == pytest.approx(env(0.25))


def test_mix_past_last_vertex_uses_its_witness():
    env = lower_convex_envelope([CurvePoint(0, 1, "x"), CurvePoint(1, 0, "y")])
    assert env.mix_at(5.0) == (("y", 1.0),)


def test_evaluate_errors():
    env = lower_convex_envelope(pts([(0.2, 1), (1, 0)]))
    with pytest.raises(InfeasibleDistortion, match="infeasible"):
        evaluate(env, 0.1)
    with pytest.raises(ValidationError):
        lower_convex_envelope([])
    with pytest.raises(ValidationError):
        PiecewiseLinearCurve(pts([(0.5, 1), (0.5, 0)]))
    with pytest.raises(ValidationError):
        CurvePoint(0.1, -0.5)


def test_pointwise_min_picks_lowest_curve():
    a = lower_convex_envelope(pts([(0, 1), (1, 0)], "a"), label="A")
    b = lower_convex_envelope(pts([(0.5, 0.1), (1, 0)], "b"), label="B")
    out = pointwise_min([a, b], [0.0, 0.25, 0.75])
    assert [p.witness for p in out] == ["A", "A", "B"]
    assert out[2].rate == pytest.approx(0.05)
    with pytest.raises(InfeasibleDistortion):
        pointwise_min([b], [0.1])


cloud = st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=30)


@settings(max_examples=80, deadline=None)
@given(cloud)
def test_envelope_is_convex_monotone_minorant(raw):
    points = pts(raw)
    env = lower_convex_envelope(points)
    ds, rs = env.deltas, env.rates
    assert np.all(np.diff(rs) <= 1e-12)
    if len(ds) > 2:
        slopes = np.diff(rs) / np.diff(ds)
        assert np.all(np.diff(slopes) >= -1e-6)
    for p in points:
        if p.delta >= env.delta_min:
            assert env(p.delta) <= p.rate + 1e-9
    # vertices come from the input
    assert all(any(abs(v.delta - p.delta) < 1e-9 and abs(v.rate - p.rate) < 1e-9
                   for p in points) for v in env.vertices)


@settings(max_examples=50, deadline=None)
@given(cloud)
def test_envelope_is_idempotent(raw):
    env = lower_convex_envelope(pts(raw))
    again = lower_convex_envelope(env.vertices)
    assert np.allclose(env.deltas, again.deltas) and np.allclose(env.rates, again.rates)
