import pytest
from hypothesis import given, strategies as st

from venuetrace.records import RiskCategory, RiskProfile
from venuetrace.risk import (
    DecayParams,
    ExposureEvent,
    FutureEvent,
    NegativeGap,
    Palette,
    RiskLevel,
    ThresholdTable,
    combined_risk,
    decay_weight,
    delta,
    format_score,
    lambda_grid,
    level_colour,
    prune_events,
    risk_level,
    select_lambda,
)


class TestDelta:
    def test_one_day_gap(self):
        assert delta(1440, 0) == 0

    def test_boundary_inclusive(self):
        assert delta(2880, 0) == 0

    def test_three_days(self):
        assert delta(4320, 0) == 1440

    def test_negative_gap(self):
        with pytest.raises(NegativeGap):
            delta(10, 20)


class TestDecayWeight:
    def test_grace_window(self):
        assert decay_weight(2880) == 1.0
        assert decay_weight(0) == 1.0

    def test_half_life(self):
        assert decay_weight(2880 + 6931) == pytest.approx(0.5, abs=1e-3)

    def test_nine_days(self):
        assert decay_weight(12960) == pytest.approx(0.3650, abs=1e-4)

    def test_continuous_at_grace_boundary(self):
        assert decay_weight(2880) == 1.0
        assert decay_weight(2881) == pytest.approx(1.0, abs=1e-4)

    def test_monotone_non_increasing(self):
        gaps = range(0, 30000, 500)
        weights = [decay_weight(g) for g in gaps]
        assert all(a >= b for a, b in zip(weights, weights[1:]))

    def test_negative_gap(self):
        with pytest.raises(NegativeGap):
            decay_weight(-1)


class TestCombinedRisk:
    def test_empty(self):
        assert combined_risk([], 1000) == 0.0

    def test_certain_exposure(self):
        assert combined_risk([ExposureEvent(t=500, p=1.0)], 1000) == 1.0

    def test_two_fresh_events(self):
        events = [ExposureEvent(100, 0.3), ExposureEvent(200, 0.5)]
        assert combined_risk(events, 1000) == pytest.approx(0.65, abs=1e-12)

    def test_nine_day_old_event(self):
        events = [ExposureEvent(0, 0.5)]
        assert combined_risk(events, 12960) == pytest.approx(0.1825, abs=1e-3)

    def test_future_event(self):
        with pytest.raises(FutureEvent):
            combined_risk([ExposureEvent(2000, 0.5)], 1000)

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            combined_risk([ExposureEvent(0, 1.5)], 1000)

    def test_zero_probability_is_identity(self):
        events = [ExposureEvent(100, 0.4), ExposureEvent(300, 0.2)]
        with_zero = events + [ExposureEvent(500, 0.0)]
        assert combined_risk(events, 1000) == combined_risk(with_zero, 1000)

    @given(
        st.lists(
            st.tuples(st.integers(0, 50_000), st.floats(0, 1, allow_nan=False)), max_size=12
        )
    )
    def test_properties(self, raw):
        events = [ExposureEvent(t, p) for t, p in raw]
        t_query = 60_000
        score = combined_risk(events, t_query)
        assert 0.0 <= score <= 1.0
        # permutation invariant
        assert combined_risk(list(reversed(events)), t_query) == pytest.approx(score, abs=1e-12)
        # monotone in event count
        assert combined_risk(events + [ExposureEvent(59_000, 0.3)], t_query) >= score - 1e-12

    def test_monotone_in_probability(self):
        low = combined_risk([ExposureEvent(0, 0.2)], 100)
        high = combined_risk([ExposureEvent(0, 0.6)], 100)
        assert high > low

    def test_prune_events(self):
        events = [ExposureEvent(0, 0.5), ExposureEvent(50_000, 0.5)]
        kept = prune_events(events, 50_500)
        assert kept == [ExposureEvent(50_000, 0.5)]


class TestRiskLevels:
    def test_zero_always_low(self):
        for category in RiskCategory:
            assert risk_level(0.0, RiskProfile(category)) is RiskLevel.LOW

    def test_high_score_always_very_high(self):
        for category in RiskCategory:
            assert risk_level(0.99, RiskProfile(category)) is RiskLevel.VERY_HIGH

    def test_profile_dependent_banding(self):
        assert risk_level(0.30, RiskProfile(RiskCategory.LOW)) is RiskLevel.MEDIUM
        assert risk_level(0.30, RiskProfile(RiskCategory.HIGH)) is RiskLevel.HIGH

    def test_single_event_level_non_increasing_over_time(self):
        profile = RiskProfile(RiskCategory.MODERATE)
        event = [ExposureEvent(0, 0.8)]
        order = [RiskLevel.LOW, RiskLevel.MEDIUM, RiskLevel.HIGH, RiskLevel.VERY_HIGH]
        ranks = [
            order.index(risk_level(combined_risk(event, t), profile))
            for t in range(0, 80_000, 4000)
        ]
        assert all(a >= b for a, b in zip(ranks, ranks[1:]))

    def test_threshold_table_validation(self):
        with pytest.raises(ValueError):
            ThresholdTable({c: (0.5, 0.4, 0.8) for c in RiskCategory})
        with pytest.raises(ValueError):
            ThresholdTable(
                {
                    RiskCategory.LOW: (0.1, 0.2, 0.3),
                    RiskCategory.MODERATE: (0.2, 0.3, 0.4),
                    RiskCategory.HIGH: (0.3, 0.4, 0.5),
                }
            )

    def test_palettes(self):
        assert level_colour(RiskLevel.VERY_HIGH) == "red"
        assert level_colour(RiskLevel.VERY_HIGH, Palette.COLOUR_BLIND) == "orange"
        assert level_colour(RiskLevel.LOW, Palette.COLOUR_BLIND) == "blue"

    def test_score_formatting(self):
        assert format_score(0.123456) == "0.1235"
        assert format_score(0.0) == "0.0000"

    def test_out_of_range_score(self):
        with pytest.raises(ValueError):
            risk_level(1.2, RiskProfile(RiskCategory.LOW))


class TestLambdaSelection:
    def test_grid_spans_range_and_contains_default(self):
        grid = lambda_grid()
        assert min(grid) == 5e-5 and max(grid) == 5e-4
        assert 0.0001 in grid

    def test_single_candidate(self):
        assert select_lambda([0.0001], lambda lam: 1.0) == 0.0001

    def test_argmax(self):
        scores = {5e-5: 0.60, 1e-4: 0.70, 2e-4: 0.65}
        assert select_lambda(list(scores), scores.__getitem__) == 1e-4

    def test_constant_objective_first_wins(self):
        assert select_lambda([2e-4, 1e-4, 3e-4], lambda lam: 0.5) == 2e-4

    def test_monotone_objective_endpoint(self):
        grid = lambda_grid()
        assert select_lambda(grid, lambda lam: lam) == 5e-4

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            select_lambda([1e-3], lambda lam: 1.0)
        with pytest.raises(ValueError):
            select_lambda([], lambda lam: 1.0)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            DecayParams(lam=0.0)
