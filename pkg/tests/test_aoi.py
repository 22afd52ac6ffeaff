"""Freshness-model tests: frozen closed-form values, the slot-enumeration
oracle, and the documented divergence between the two models."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stackfed.aoi import (
    CycleParams,
    SatisfactionParams,
    average_aoi,
    average_service_latency,
    cycle_model_divergence,
    data_size,
    discrete_cycle_oracle,
    model_quality,
    satisfaction,
)
from stackfed.oracles import symbolic_slot_aoi, symbolic_slot_latency


def cycles(theta_cap=40.0):
    """Feasible cycle parameters over the documented desk ranges."""
    return st.builds(
        lambda a, gap, t, T, d: CycleParams(theta=a * t + gap * t, a=a, t=t, T=T, d=d),
        a=st.integers(1, 8),
        gap=st.floats(0.05, 30.0),
        t=st.sampled_from([0.5, 1.0, 2.0]),
        T=st.floats(1.0, 20.0),
        d=st.floats(1.0, 100.0),
    )


class TestPeriodModel:
    @pytest.mark.parametrize(
        "theta,a,t,expected",
        [(5.0, 2, 1.0, 2.0), (2.0, 1, 1.0, 2.0), (3.0, 2, 1.0, 4.0)],
    )
    def test_average_aoi_values(self, theta, a, t, expected):
        assert average_aoi(CycleParams(theta, a, t)) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize(
        "theta,a,t,expected",
        [(5.0, 2, 1.0, 5.8), (4.0, 2, 1.0, 3.0), (2.0, 1, 1.0, 1.5)],
    )
    def test_average_latency_values(self, theta, a, t, expected):
        assert average_service_latency(CycleParams(theta, a, t)) == pytest.approx(expected, abs=1e-12)

    def test_degenerate_period_rejected(self):
        with pytest.raises(ValueError):
            CycleParams(theta=2.0, a=2, t=1.0)
        with pytest.raises(ValueError):
            CycleParams(theta=2.0 + 1e-12, a=2, t=1.0)
        # exactly at the documented margin is allowed
        CycleParams(theta=2.0 + 1.1e-9, a=2, t=1.0)

    @given(cycles())
    @settings(max_examples=200, deadline=None)
    def test_aoi_positive_and_decreasing(self, p):
        val = average_aoi(p)
        assert math.isfinite(val) and val > 0
        bumped = CycleParams(p.theta + 0.1, p.a, p.t, p.T, p.d)
        assert average_aoi(bumped) <= val + 1e-12

    def test_aoi_shape_in_theta(self):
        # The period-model age is convex decreasing in theta (the cited
        # claim uses the opposite concavity convention; see the notes in
        # the module docstring and the second-difference sign here).
        for a in (1, 2, 5, 8):
            grid = np.linspace(a + 0.3, 25.0, 400)
            vals = np.array([average_aoi(CycleParams(th, a, 1.0)) for th in grid])
            second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
            assert np.all(second >= -1e-9)


class TestSlotOracle:
    @pytest.mark.parametrize(
        "c,a,t,expected",
        [
            (3, 2, 1.0, (1.2, 2.2)),
            (1, 1, 1.0, (1.0, 1.5)),
            (2, 1, 2.0, (2.0, 4.0)),
        ],
    )
    def test_enumeration_values(self, c, a, t, expected):
        aoi, lat = discrete_cycle_oracle(c, a, t)
        assert aoi == pytest.approx(expected[0], abs=1e-12)
        assert lat == pytest.approx(expected[1], abs=1e-12)

    @given(c=st.integers(1, 40), a=st.integers(1, 40), t=st.sampled_from([0.25, 1.0, 3.0]))
    @settings(max_examples=300, deadline=None)
    def test_enumeration_matches_symbolic_forms(self, c, a, t):
        """The slot enumeration must equal the closed slot-model forms."""
        aoi, lat = discrete_cycle_oracle(c, a, t)
        assert aoi == pytest.approx(symbolic_slot_aoi(c, a, t), rel=1e-12)
        assert lat == pytest.approx(symbolic_slot_latency(c, a, t), rel=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            discrete_cycle_oracle(0, 1, 1.0)
        with pytest.raises(ValueError):
            discrete_cycle_oracle(1, 1, 0.0)
        with pytest.raises(ValueError):
            discrete_cycle_oracle(1.5, 1, 1.0)  # type: ignore[arg-type]

    def test_divergence_from_period_model_is_reported(self):
        """The two models disagree on purpose; the report must say so."""
        div = cycle_model_divergence(3, 2, 1.0)
        assert div["aoi_slot"] == pytest.approx(1.2, abs=1e-12)
        assert div["aoi_period"] == pytest.approx(2.0, abs=1e-12)
        assert div["latency_slot"] == pytest.approx(2.2, abs=1e-12)
        assert div["latency_period"] == pytest.approx(5.8, abs=1e-12)
        assert div["aoi_ratio"] == pytest.approx(0.6, abs=1e-12)
        assert div["latency_ratio"] != pytest.approx(1.0, abs=1e-3)


class TestQualityAndSatisfaction:
    @pytest.mark.parametrize(
        "T,d,theta,expected", [(10.0, 10.0, 4.0, 25.0), (10.0, 10.0, 10.0, 10.0), (1.0, 5.0, 1.0, 5.0)]
    )
    def test_data_size(self, T, d, theta, expected):
        a = 1 if theta <= 2 else 2
        p = CycleParams(theta=theta, a=a, t=0.4, T=T, d=d)
        assert data_size(p) == pytest.approx(expected)

    def test_quality_values(self):
        s = SatisfactionParams(1.0, 1.0, 1.0)
        assert model_quality(CycleParams(4.0, 2, 1.0, 10.0, 10.0), s) == pytest.approx(10.0)
        assert model_quality(CycleParams(5.0, 2, 1.0, 10.0, 10.0), s) == pytest.approx(10.0)
        s3 = SatisfactionParams(1.0, 1.0, 3.0)
        assert model_quality(CycleParams(4.0, 2, 1.0, 10.0, 10.0), s3) == pytest.approx(30.0)

    def test_satisfaction_values(self):
        p = CycleParams(4.0, 2, 1.0, 10.0, 10.0)
        assert satisfaction(p, SatisfactionParams(1.0, 1.0, 1.0)) == pytest.approx(7.0)
        assert satisfaction(p, SatisfactionParams(0.0, 1.0, 1.0)) == pytest.approx(-3.0)
        assert satisfaction(p, SatisfactionParams(1.0, 0.0, 1.0)) == pytest.approx(10.0)

    @given(cycles(), st.floats(0.1, 10.0))
    @settings(max_examples=300, deadline=None)
    def test_quality_age_data_identity(self, p, rho):
        """quality * age == rho * data size, to tight relative tolerance."""
        s = SatisfactionParams(tau=1.0, lam=1.0, rho=rho)
        lhs = model_quality(p, s) * average_aoi(p)
        rhs = rho * data_size(p)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @given(cycles())
    @settings(max_examples=200, deadline=None)
    def test_satisfaction_is_linear_combination(self, p):
        s = SatisfactionParams(tau=1.7, lam=0.3, rho=2.0)
        expected = 1.7 * model_quality(p, s) - 0.3 * average_service_latency(p)
        assert satisfaction(p, s) == expected

    def test_satisfaction_unimodal_over_desk_ranges(self):
        """Rise-then-fall in theta for the documented scenario coefficients."""
        rng = np.random.default_rng(0)
        for _ in range(60):
            a = int(rng.integers(1, 9))
            d = float(rng.uniform(10, 80))
            rho = float(rng.uniform(3, 7))
            s = SatisfactionParams(tau=1.0, lam=0.05, rho=rho)
            grid = np.linspace(a + 0.2, 16.0, 300)
            vals = [satisfaction(CycleParams(float(th), a, 1.0, 10.0, d), s) for th in grid]
            diff = np.sign(np.diff(vals))
            neg = np.nonzero(diff < 0)[0]
            if len(neg):
                assert np.all(diff[neg[0]:] <= 0)

    def test_satisfaction_monotone_in_a_and_d(self):
        """Pointwise lower for idler cycles, higher for faster collection."""
        s = SatisfactionParams(tau=1.0, lam=0.05, rho=5.0)
        grid = np.linspace(8.5, 14.0, 100)
        for a1, a2 in ((1, 4), (4, 8)):
            v1 = [satisfaction(CycleParams(float(th), a1, 1.0, 10.0, 40.0), s) for th in grid]
            v2 = [satisfaction(CycleParams(float(th), a2, 1.0, 10.0, 40.0), s) for th in grid]
            assert all(x1 > x2 for x1, x2 in zip(v1, v2))
        for d1, d2 in ((10.0, 45.0), (45.0, 80.0)):
            v1 = [satisfaction(CycleParams(float(th), 4, 1.0, 10.0, d1), s) for th in grid]
            v2 = [satisfaction(CycleParams(float(th), 4, 1.0, 10.0, d2), s) for th in grid]
            assert all(x2 > x1 for x1, x2 in zip(v1, v2))
