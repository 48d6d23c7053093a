import numpy as np
import pytest

from nphbench import (
    Stage2UndefinedError,
    TwoStageConfig,
    build_risk_table,
    stage2_statistic,
    stage2_weights,
    two_stage_test,
)
from nphbench.wlrt import variance_terms

from conftest import make_dataset, random_dataset, swap_labels


class TestConfig:
    def test_alpha1_formula(self):
        cfg = TwoStageConfig(alpha=0.05)
        assert cfg.alpha1 == pytest.approx(1 - np.sqrt(0.95), abs=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            TwoStageConfig(alpha=0.0)
        with pytest.raises(ValueError):
            TwoStageConfig(eps=0.0)
        with pytest.raises(ValueError):
            TwoStageConfig(n_boot=0)


class TestStage2Weights:
    def test_zero_covariance_construction(self, rng):
        # the constant is chosen so that the weighted sums are uncorrelated
        for _ in range(30):
            d = random_dataset(rng, n1=8, n2=8)
            rt = build_risk_table(d)
            if rt.n_rows < 2:
                continue
            v = variance_terms(rt)
            for m in range(1, rt.n_rows):
                if v[:m].sum() <= 0 or v[m:].sum() <= 0:
                    continue
                w = stage2_weights(rt, m).evaluate(rt)
                cov = float(np.dot(np.ones(rt.n_rows) * w, v))
                assert abs(cov) <= 1e-10 * max(v.sum(), 1.0)

    def test_balanced_mass_gives_unit_constant(self, rng):
        # find a split index with equal variance mass on both sides
        d = make_dataset([1, 2], [1, 1], [1.5, 2.5], [1, 1])
        rt = build_risk_table(d)
        v = variance_terms(rt)
        # build an explicit check at any m where the masses happen to match
        for m in range(1, rt.n_rows):
            if abs(v[:m].sum() - v[m:].sum()) < 1e-12:
                assert stage2_weights(rt, m).c == pytest.approx(1.0)

    def test_one_sided_mass_is_skipped(self):
        # group 2 fully censored after t=2: later rows carry no variance
        d = make_dataset([1, 3, 4], [1, 1, 1], [1.5, 2], [0, 0])
        rt = build_risk_table(d)
        v = variance_terms(rt)
        assert v[0] > 0 and np.all(v[1:] == 0)
        with pytest.raises(Stage2UndefinedError):
            stage2_weights(rt, 1)
        with pytest.raises(Stage2UndefinedError):
            stage2_statistic(d, TwoStageConfig())

    def test_out_of_range_index(self, rng):
        d = random_dataset(rng)
        rt = build_risk_table(d)
        with pytest.raises(Stage2UndefinedError):
            stage2_weights(rt, 0)
        with pytest.raises(Stage2UndefinedError):
            stage2_weights(rt, rt.n_rows)


class TestStage2Statistic:
    def test_two_event_rows_clamp(self):
        # D = 2 leaves exactly one admissible switch index
        d = make_dataset([1, 3, 4], [1, 1, 0], [3, 5], [1, 0])
        assert build_risk_table(d).n_rows == 2
        v = stage2_statistic(d, TwoStageConfig(eps=0.1))
        assert np.isfinite(v) and v >= 0

    def test_label_swap_invariance(self, rng):
        for _ in range(20):
            d = random_dataset(rng, n1=8, n2=8)
            cfg = TwoStageConfig()
            try:
                v = stage2_statistic(d, cfg)
            except Stage2UndefinedError:
                continue
            assert stage2_statistic(swap_labels(d), cfg) == pytest.approx(v, abs=1e-12)


class TestTwoStageTest:
    def test_strong_separation_stops_at_stage_one(self, rng):
        t1 = rng.exponential(1.0, 40)
        t2 = rng.exponential(10.0, 40)
        d = make_dataset(t1, np.ones(40, bool), t2, np.ones(40, bool))
        out = two_stage_test(d, TwoStageConfig(n_boot=10, seed=0))
        assert out.detail["stage"] == 1
        assert out.p_value == out.detail["p1"]
        assert out.p_value <= out.detail["alpha1"]

    def test_stage_two_combination_formula(self, rng):
        for seed in range(5):
            d = random_dataset(np.random.default_rng(seed), n1=10, n2=10)
            out = two_stage_test(d, TwoStageConfig(n_boot=40, seed=seed))
            if out.detail["stage"] == 1:
                continue
            a1, p2 = out.detail["alpha1"], out.detail["p2"]
            assert out.p_value == pytest.approx(a1 + p2 * (1 - a1), abs=1e-15)
            assert a1 <= out.p_value <= 1.0
            # p2 = 1 must map the combined value to exactly 1
            assert a1 + 1.0 * (1 - a1) == pytest.approx(1.0, abs=1e-15)

    def test_combined_p_monotone_in_p2(self):
        a1 = TwoStageConfig(alpha=0.05).alpha1
        grid = np.linspace(0, 1, 11)
        vals = [a1 + p2 * (1 - a1) for p2 in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert 0.0 <= vals[0] and vals[-1] == pytest.approx(1.0)

    def test_bootstrap_reproducible(self, rng):
        d = random_dataset(rng, n1=12, n2=12)
        cfg = TwoStageConfig(n_boot=60, seed=7)
        out1, out2 = two_stage_test(d, cfg), two_stage_test(d, cfg)
        assert out1.p_value == out2.p_value
        assert out1.detail == out2.detail

    def test_selected_constant_is_zero_covariance(self, rng):
        checked = 0
        for _ in range(40):
            d = random_dataset(rng, n1=8, n2=8)
            out = two_stage_test(d, TwoStageConfig(n_boot=5, seed=1))
            if out.detail["stage"] != 2:
                continue
            rt = build_risk_table(d)
            m, c = out.detail["switch_index"], out.detail["switch_constant"]
            v = variance_terms(rt)
            cov = -v[:m].sum() + c * v[m:].sum()
            assert abs(cov) <= 1e-8
            checked += 1
        assert checked > 5
