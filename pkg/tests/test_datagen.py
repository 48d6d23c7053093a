import numpy as np
import pytest
from scipy import stats

from nphbench import (
    CalibrationError,
    DEFAULT_GRID_SCENARIOS,
    SCENARIOS,
    SettingSpec,
    calibrate_censoring,
    default_settings,
    generate_dataset,
    get_scenario,
    scenario_manifest,
)
from nphbench.distributions import (
    Exponential,
    Gompertz,
    LogNormal,
    PiecewiseExponential,
    Weibull,
    WeibullUniformComposite,
)


class TestDistributions:
    def test_exponential_rate_parameterization(self):
        rng = np.random.default_rng(0)
        draws = Exponential(0.1).sample(rng, 1_000_000)
        assert draws.mean() == pytest.approx(10.0, abs=0.05)

    def test_weibull_survival_convention(self):
        w = Weibull(1.5, 30)
        t = np.array([0.0, 10.0, 30.0])
        assert np.allclose(w.survival(t), np.exp(-((t / 30) ** 1.5)))

    def test_gompertz_survival_convention(self):
        g = Gompertz(0.2, 0.4)
        t = np.array([0.0, 1.0, 5.0])
        assert np.allclose(g.survival(t), np.exp(-(0.4 / 0.2) * (np.exp(0.2 * t) - 1)))

    def test_piecewise_closed_form(self):
        pw = PiecewiseExponential(breaks=(0.3,), rates=(1.0, 2.0))
        assert pw.survival(0.3) == pytest.approx(np.exp(-0.3))
        assert pw.survival(0.6) == pytest.approx(np.exp(-0.3) * np.exp(-0.6))

    def test_piecewise_validation(self):
        with pytest.raises(ValueError):
            PiecewiseExponential(breaks=(1.0,), rates=(1.0,))
        with pytest.raises(ValueError):
            PiecewiseExponential(breaks=(2.0, 1.0), rates=(1.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            PiecewiseExponential(breaks=(1.0,), rates=(1.0, -2.0))

    def test_composite_continuity(self):
        comp = WeibullUniformComposite(0.849, 10, 3.0, 33.0, 3.0, 50.625)
        for knot in (3.0, 33.0):
            below = comp.survival(knot - 1e-9)
            above = comp.survival(knot + 1e-9)
            assert abs(below - above) < 1e-6
        t = np.linspace(0.0, 80.0, 4001)
        s = comp.survival(t)
        assert np.all(np.diff(s) <= 1e-12)
        assert s[0] == 1.0 and s[-1] < 0.01

    @pytest.mark.parametrize(
        "dist",
        [
            Exponential(0.1),
            Weibull(0.6, 8),
            Weibull(1.5, 30),
            Gompertz(0.2, 0.4),
            LogNormal(1.2, 1.7),
            PiecewiseExponential(breaks=(2.0,), rates=(0.25, 1 / 35)),
            WeibullUniformComposite(0.849, 10, 3.0, 33.0, 3.0, 50.625),
        ],
        ids=lambda d: type(d).__name__ + str(d.spec())[:30],
    )
    def test_sampler_matches_cdf(self, dist):
        rng = np.random.default_rng(7)
        draws = dist.sample(rng, 30_000)
        assert np.all(draws >= 0)
        res = stats.kstest(draws, dist.cdf)
        assert res.pvalue > 1e-4

    def test_determinism(self):
        d = Weibull(1.3, 4)
        a = d.sample(np.random.default_rng(5), 100)
        b = d.sample(np.random.default_rng(5), 100)
        assert np.array_equal(a, b)


class TestScenarioCatalog:
    def test_catalog_size_and_grid(self):
        assert len(SCENARIOS) == 21  # both NPH4 variants present
        assert len(DEFAULT_GRID_SCENARIOS) == 20
        assert "NPH4a" in DEFAULT_GRID_SCENARIOS and "NPH4b" not in DEFAULT_GRID_SCENARIOS

    def test_nph4_alias(self):
        assert get_scenario("NPH4").id == "NPH4a"
        assert get_scenario("NPH4b").group2 == LogNormal(2.4, 1.6)
        assert get_scenario("NPH4a").group2 == LogNormal(2.4, 1.3)

    def test_unknown_scenario(self):
        with pytest.raises(KeyError, match="valid"):
            get_scenario("PH9")

    def test_null_scenarios_have_equal_groups(self):
        for sid in ("Null1", "Null2", "Null3", "Null4"):
            s = SCENARIOS[sid]
            assert s.group1 == s.group2
            assert s.is_null

    def test_known_parameters(self):
        assert SCENARIOS["PH3"].group1 == Exponential(0.1)
        assert SCENARIOS["PH3"].group2 == Exponential(1 / 28)
        assert SCENARIOS["C3"].group2 == PiecewiseExponential((2.0,), (0.25, 1 / 35))
        assert SCENARIOS["C7"].group2 == Weibull(3, 10)

    def test_default_settings_count(self):
        settings = default_settings()
        assert len(settings) == 40
        assert len([s for s in settings if s.family == "uniform"]) == 20
        ids = {s.id for s in settings}
        assert len(ids) == 40

    def test_setting_validation(self):
        with pytest.raises(ValueError):
            SettingSpec(0, 10, 0.0, 0.0)
        with pytest.raises(ValueError):
            SettingSpec(10, 10, 1.0, 0.0)
        with pytest.raises(ValueError):
            SettingSpec(10, 10, 0.0, 0.0, family="weibull")

    def test_manifest_shape(self):
        m = scenario_manifest()
        assert m["format"] == "nphbench-scenarios"
        assert len(m["scenarios"]) == 21
        assert m["default_grid"]["scenarios"] == list(DEFAULT_GRID_SCENARIOS)
        nph4a = next(s for s in m["scenarios"] if s["id"] == "NPH4a")
        assert "note" in nph4a


class TestCensoringCalibration:
    def test_zero_target_is_no_censoring(self):
        assert calibrate_censoring(Exponential(0.1), "uniform", 0.0) is None

    def test_competing_exponentials_closed_form(self):
        # P(C < T) = rate_C / (rate_C + rate_T)
        for target in (0.2, 0.4, 0.6):
            spec = calibrate_censoring(Exponential(0.1), "exponential", target)
            expected = 0.1 * target / (1 - target)
            assert spec.param == pytest.approx(expected, abs=1e-6)
            assert abs(spec.achieved_rate - target) <= 1e-4

    def test_uniform_calibration_empirical(self):
        spec = calibrate_censoring(Exponential(0.1), "uniform", 0.6)
        rng = np.random.default_rng(3)
        t = Exponential(0.1).sample(rng, 10_000)
        c = spec.sample(rng, 10_000)
        assert abs(np.mean(c < t) - 0.6) < 0.02

    def test_piecewise_event_distribution(self):
        dist = PiecewiseExponential(breaks=(2.0,), rates=(0.25, 1 / 35))
        spec = calibrate_censoring(dist, "uniform", 0.2)
        rng = np.random.default_rng(4)
        t = dist.sample(rng, 10_000)
        c = spec.sample(rng, 10_000)
        assert abs(np.mean(c < t) - 0.2) < 0.02

    def test_invalid_targets(self):
        with pytest.raises(CalibrationError):
            calibrate_censoring(Exponential(0.1), "uniform", 1.0)
        with pytest.raises(CalibrationError):
            calibrate_censoring(Exponential(0.1), "lognormal", 0.2)


class TestGenerateDataset:
    def test_no_censoring_setting(self):
        rng = np.random.default_rng(0)
        d = generate_dataset("Null2", SettingSpec(30, 70, 0.0, 0.0), rng)
        assert d.n1 == 30 and d.n2 == 70
        assert d.event.all()

    def test_per_group_censoring_rates(self):
        rng = np.random.default_rng(1)
        d = generate_dataset("Null2", SettingSpec(8000, 8000, 0.2, 0.4), rng)
        cens1 = 1.0 - d.event[d.group == 1].mean()
        cens2 = 1.0 - d.event[d.group == 2].mean()
        assert abs(cens1 - 0.2) < 0.02
        assert abs(cens2 - 0.4) < 0.02

    def test_deterministic_for_fixed_seed(self):
        setting = SettingSpec(20, 30, 0.2, 0.6, "exponential")
        d1 = generate_dataset("C3", setting, np.random.default_rng(99))
        d2 = generate_dataset("C3", setting, np.random.default_rng(99))
        assert np.array_equal(d1.time, d2.time)
        assert np.array_equal(d1.event, d2.event)

    def test_accepts_scenario_object(self):
        rng = np.random.default_rng(2)
        d = generate_dataset(SCENARIOS["PH1"], SettingSpec(10, 10, 0.0, 0.0), rng)
        assert d.n == 20
