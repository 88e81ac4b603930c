import math

import numpy as np
import pytest
from scipy import integrate

from venuetrace import synth
from venuetrace.records import (
    ATTR_ENUMS,
    SCHEMA_LEVELS,
    VENUE_TYPES,
    ExposureRecord,
    Outcome,
    Setting,
    validate_record,
)
from venuetrace.synth import (
    BASE_MODULATION,
    DEFAULT_ARCHETYPES,
    DEFAULT_MODULATION,
    BalancingImpossible,
    GeneratorConfig,
    ModulationTable,
    bayes_oracle_accuracy,
    clamped_laplace_mean,
    expected_positive_rate,
    generate_dataset,
    laplace_sample,
    laplace_samples,
    risk_score,
    sample_record,
    worst_case_branch,
    worst_case_score,
)


def zero_table() -> ModulationTable:
    return ModulationTable({(a, l): 0.0 for a, levels in SCHEMA_LEVELS.items() for l in levels})


class FakeRng:
    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


def record_from_answers(answers: dict) -> ExposureRecord:
    code = int(answers["location_type"])
    kwargs = {
        attr: ATTR_ENUMS[attr](answers[attr]) for attr in SCHEMA_LEVELS if attr != "location_type"
    }
    return ExposureRecord(
        timestamp=0,
        user_id="u",
        location_type=VENUE_TYPES[code],
        led_to_contamination=Outcome.UNKNOWN,
        risk_of_contamination=None,
        **kwargs,
    )


class TestLaplace:
    def test_median_is_location(self):
        assert laplace_sample(FakeRng(0.5), mu=0.7, b=0.5) == pytest.approx(0.7)

    def test_inverse_cdf_at_three_quarters(self):
        # -0.5 * ln(0.5) = 0.34657...
        assert laplace_sample(FakeRng(0.75), mu=0.0, b=0.5) == pytest.approx(0.34657, abs=1e-5)

    def test_symmetry(self):
        hi = laplace_sample(FakeRng(0.9), 0.0, 0.5)
        lo = laplace_sample(FakeRng(0.1), 0.0, 0.5)
        assert hi == pytest.approx(-lo, abs=1e-12)

    def test_monte_carlo_mean(self):
        rng = np.random.default_rng(77)
        draws = laplace_samples(rng, 1_000_000, 0.0, 0.5)
        assert abs(draws.mean()) < 0.003
        assert draws.std() == pytest.approx(math.sqrt(2) * 0.5, rel=0.01)

    def test_scale_validation(self):
        with pytest.raises(ValueError):
            laplace_sample(FakeRng(0.5), 0.0, 0.0)


class TestArchetypes:
    def test_priors_sum_to_one(self):
        assert sum(a.weight for a in DEFAULT_ARCHETYPES) == pytest.approx(1.0)

    def test_at_least_five_states(self):
        assert len(DEFAULT_ARCHETYPES) >= 5

    def test_invalid_distribution_rejected(self):
        arch = DEFAULT_ARCHETYPES[0]
        bad_answers = dict(arch.answers)
        bad_answers["masks_worn"] = {"Yes": 0.5, "No": 0.6}
        with pytest.raises(ValueError):
            synth.Archetype(arch.name, arch.weight, arch.venues, arch.outdoor_prob, bad_answers)


class TestSampleRecord:
    def test_records_always_valid(self):
        rng = np.random.default_rng(5)
        config = GeneratorConfig(n_records=1, seed=5)
        for _ in range(300):
            assert validate_record(sample_record(rng, config)) == []

    def test_seeded_determinism(self):
        config = GeneratorConfig(n_records=1, seed=9)
        a = [sample_record(np.random.default_rng(1), config) for _ in range(20)]
        b = [sample_record(np.random.default_rng(1), config) for _ in range(20)]
        assert a == b

    def test_outdoor_park_always_outdoor(self):
        park = tuple(a for a in DEFAULT_ARCHETYPES if a.name == "outdoor-park")
        park = (synth.Archetype(park[0].name, 1.0, park[0].venues, park[0].outdoor_prob, park[0].answers),)
        rng = np.random.default_rng(2)
        config = GeneratorConfig(n_records=1, seed=2)
        seen = [sample_record(rng, config, archetypes=park).indoor for _ in range(300)]
        assert all(s is Setting.OUTDOOR for s in seen)


class TestRiskScore:
    def test_baseline_only(self, restaurant_record):
        assert risk_score(restaurant_record, zero_table(), eps=0.0) == pytest.approx(0.10)

    def test_clamped_at_zero(self, restaurant_record):
        assert risk_score(restaurant_record, zero_table(), eps=-10.0) == 0.0

    def test_clamped_at_one(self, restaurant_record):
        assert risk_score(restaurant_record, zero_table(), eps=100.0) == 1.0

    def test_worst_case_record_in_band(self):
        total, answers = worst_case_branch(DEFAULT_MODULATION)
        record = record_from_answers(answers)
        assert validate_record(record) == []
        score = risk_score(record, DEFAULT_MODULATION, eps=0.0)
        assert 0.55 <= score <= 0.85
        assert score == pytest.approx(worst_case_score(DEFAULT_MODULATION), abs=1e-12)

    def test_monotone_under_sign_rules(self):
        rng = np.random.default_rng(31)
        config = GeneratorConfig(n_records=1, seed=31)
        checked = 0
        for _ in range(150):
            record = sample_record(rng, config)
            for attr, safer, riskier in synth.SIGN_RULES:
                current = getattr(record, attr).value if attr != "location_type" else None
                if current != safer:
                    continue
                flipped = ExposureRecord(
                    **{**record.__dict__, attr: ATTR_ENUMS.get(attr, Setting)(riskier)}
                )
                if validate_record(flipped):
                    continue
                assert risk_score(flipped, DEFAULT_MODULATION, 0.0) >= risk_score(
                    record, DEFAULT_MODULATION, 0.0
                )
                checked += 1
        assert checked > 100

    def test_sign_constraint_validation(self):
        deltas = {(a, l): 0.0 for a, levels in SCHEMA_LEVELS.items() for l in levels}
        deltas[("masks_worn", "Yes")] = 0.1  # riskier than No: violates ordering
        with pytest.raises(ValueError, match="sign constraint"):
            ModulationTable(deltas)

    def test_missing_level_rejected(self):
        deltas = {(a, l): 0.0 for a, levels in SCHEMA_LEVELS.items() for l in levels}
        del deltas[("masks_worn", "Yes")]
        with pytest.raises(ValueError, match="missing delta"):
            ModulationTable(deltas)


class TestGenerateDataset:
    def test_reproducible_bytes(self, tmp_path):
        config = GeneratorConfig(n_records=3000, seed=17)
        for name in ("a.csv", "b.csv"):
            generate_dataset(config).write_csv(tmp_path / name)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_csv_round_trip(self, tmp_path):
        config = GeneratorConfig(n_records=500, seed=3)
        dataset = generate_dataset(config)
        dataset.write_csv(tmp_path / "ds.csv")
        loaded = synth.read_dataset_csv(tmp_path / "ds.csv")
        assert len(loaded) == 500
        assert np.array_equal(loaded.labels, dataset.labels)
        assert np.array_equal(loaded.timestamps, dataset.timestamps)
        for attr in SCHEMA_LEVELS:
            assert np.array_equal(loaded.columns[attr], dataset.columns[attr])
        assert np.allclose(loaded.scores, np.round(dataset.scores, 6), atol=1e-9)

    def test_balanced_exact_counts(self):
        config = GeneratorConfig(n_records=4000, seed=21, balanced=True)
        dataset = generate_dataset(config)
        assert len(dataset) == 4000
        assert int(dataset.labels.sum()) == 2000

    def test_balancing_impossible_when_one_class_empty(self):
        config = GeneratorConfig(n_records=2000, seed=1, baseline=0.0, noise_enabled=False, balanced=True)
        with pytest.raises(BalancingImpossible):
            generate_dataset(config, table=zero_table())

    def test_generated_records_valid(self):
        dataset = generate_dataset(GeneratorConfig(n_records=300, seed=8))
        for i in range(0, 300, 7):
            assert validate_record(dataset.record_at(i)) == []

    def test_labels_match_scores_distribution(self):
        dataset = generate_dataset(GeneratorConfig(n_records=60_000, seed=13))
        assert dataset.positive_rate() == pytest.approx(dataset.scores.mean(), abs=0.01)


class TestOracle:
    def test_clamped_mean_against_quadrature(self):
        for m, beta in ((0.1, 0.025), (0.05, 0.1), (-0.2, 0.3), (0.9, 0.2), (1.4, 0.5)):
            pdf = lambda x: np.exp(-abs(x) / beta) / (2 * beta)
            expected, _err = integrate.quad(
                lambda e: min(1.0, max(0.0, m + e)) * pdf(e), -np.inf, np.inf, limit=300
            )
            assert clamped_laplace_mean(m, beta) == pytest.approx(expected, abs=1e-8)

    def test_zero_deltas_give_half_accuracy(self):
        assert bayes_oracle_accuracy(zero_table()) == pytest.approx(0.5)

    def test_fully_separating_table_reaches_one(self):
        # masks answer alone pins the outcome probability to 0 or 1
        deltas = {(a, l): 0.0 for a, levels in SCHEMA_LEVELS.items() for l in levels}
        deltas[("masks_worn", "No")] = 0.9
        deltas[("masks_worn", "Yes")] = -0.1
        table = ModulationTable(deltas)
        acc = bayes_oracle_accuracy(table, noise_enabled=False)
        assert acc == pytest.approx(1.0)

    def test_shipped_table_calibrated(self):
        acc = bayes_oracle_accuracy(DEFAULT_MODULATION)
        assert 0.70 <= acc <= 0.74

    def test_scale_monotone_in_accuracy(self):
        accs = [bayes_oracle_accuracy(BASE_MODULATION.scaled(s)) for s in (0.5, 1.0, 1.5)]
        assert accs[0] < accs[1] < accs[2]

    def test_empirical_rate_matches_oracle_chi2(self):
        config = GeneratorConfig(n_records=100_000, seed=23)
        dataset = generate_dataset(config)
        expected = expected_positive_rate(DEFAULT_MODULATION)
        observed = int(dataset.labels.sum())
        n = len(dataset)
        chi2 = (observed - n * expected) ** 2 / (n * expected) + (
            (n - observed) - n * (1 - expected)
        ) ** 2 / (n * (1 - expected))
        assert chi2 < 6.635  # 1% critical value, 1 dof

    def test_calibration_bisection(self):
        scale, acc = synth.calibrate_scale(target=0.70, lo=0.3, hi=3.0, tol=5e-3)
        assert acc == pytest.approx(0.70, abs=0.01)
        assert 0.3 < scale < 3.0
