"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The Monte-Carlo criteria run the harness at desk scale with trimmed
resampling budgets (library defaults are larger); tolerances are fixed
below and do not depend on the budgets.  ``NPHBENCH_ACCEPT_NREP``
overrides the per-cell replication count (default 1000) for quick smoke
runs; the bands are calibrated for the default.

Run with ``pytest tests/test_acceptance.py -v -s`` to watch progress.
"""

import math
import os

import numpy as np
import pytest
from scipy import stats

from nphbench import (
    Budgets,
    ConstantWeight,
    GridConfig,
    SCENARIOS,
    SettingSpec,
    SurvivalDataset,
    TwoStageConfig,
    abc_statistic,
    build_risk_table,
    calibrate_censoring,
    default_tau,
    generate_dataset,
    konp_statistic,
    logrank_test,
    maxcombo_test,
    mdir_test,
    rmst,
    run_grid,
    two_stage_test,
    weighted_logrank_z,
)
from nphbench.distributions import Exponential
from nphbench.errors import InvalidDataError, NoAdmissiblePairsError, NphbenchError
from nphbench.harness import results_to_csv
from nphbench.scenarios import CENSORING_FAMILIES, DEFAULT_GRID_SCENARIOS
from nphbench.wlrt import variance_terms

from conftest import make_dataset, random_dataset
from test_konp import brute_force_q
from test_wlrt import brute_force_z

MASTER_SEED = 20240801
ALPHA = 0.05
N_REP = int(os.environ.get("NPHBENCH_ACCEPT_NREP", "1000"))
THREADS = min(os.cpu_count() or 1, 8)
SIZE_BAND = (0.029, 0.071)  # 0.05 +/- 3*sqrt(0.05*0.95/1000)
LIBERAL_CAP = 0.08  # allowance for RMST/ABC in Null1 and Null3
POWER_GAP = 0.15

ACCEPT_BUDGETS = Budgets(
    mdir_mode="permutation",
    mdir_n_perm=400,
    maxcombo_n_mc=20_000,
    ts_n_boot=200,
    abc_n_boot=200,
    konp_n_perm=150,
)

NULL_METHODS = ("LR", "PP", "RMST", "KONP", "mdir2", "MC", "TS", "ABC")
ALL_METHODS = ("LR", "PP", "RMST", "KONP", "mdir2", "mdir3", "mdir4", "MC", "TS", "ABC")


def _report(criterion, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] acceptance criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


def _progress(done, total, sc, st):
    print(f"    .. {done}/{total} cells ({sc} {st.id})", flush=True)


def _grid(scenarios, settings, methods, n_rep=N_REP):
    cfg = GridConfig(
        scenarios=tuple(scenarios),
        settings=tuple(settings),
        methods=tuple(methods),
        n_rep=n_rep,
        alpha=ALPHA,
        seed=MASTER_SEED,
        budgets=ACCEPT_BUDGETS,
        threads=THREADS,
    )
    return run_grid(cfg, progress=_progress)


@pytest.fixture(scope="module")
def null_grid_rows():
    settings = [
        SettingSpec(n1, n2, r1, r2, "uniform")
        for (r1, r2) in ((0.0, 0.0), (0.2, 0.2))
        for (n1, n2) in ((100, 100), (50, 50), (25, 25))
    ]
    return _grid(("Null1", "Null2", "Null3", "Null4"), settings, NULL_METHODS)


@pytest.fixture(scope="module")
def ph3_rows():
    return _grid(("PH3",), [SettingSpec(100, 100, 0.2, 0.2, "uniform")], ALL_METHODS)


@pytest.fixture(scope="module")
def c3_rows():
    return _grid(("C3",), [SettingSpec(100, 100, 0.2, 0.2, "uniform")], ALL_METHODS)


class TestCriterion1SizeControl:
    def test_null_scenario_sizes(self, null_grid_rows):
        lo, hi = SIZE_BAND
        violations = []
        for r in null_grid_rows:
            rate = r.rate
            if math.isnan(rate):
                violations.append((r.scenario, r.setting.id, r.test, "no completed reps"))
                continue
            if r.test == "MC":
                ok = rate <= hi  # conservatism below the band is allowed
            elif r.test in ("RMST", "ABC"):
                # their known failure mode is liberality; the criterion
                # states caps only (0.08 in Null1/Null3, the band elsewhere)
                cap = LIBERAL_CAP if r.scenario in ("Null1", "Null3") else hi
                ok = rate <= cap
            else:
                ok = lo <= rate <= hi
            if not ok:
                violations.append((r.scenario, r.setting.id, r.test, round(rate, 4)))
        detail = (
            f"{len(null_grid_rows)} null cells x tests at n_rep={N_REP}, "
            f"band {SIZE_BAND}; violations: {violations if violations else 'none'}"
        )
        _report(1, not violations, detail)


class TestCriterion2PhOptimality:
    def test_logrank_dominates_under_ph(self, ph3_rows):
        rates = {r.test: r.rate for r in ph3_rows}
        ses = {r.test: r.se for r in ph3_rows}
        lr = rates["LR"]
        offenders = {
            t: round(v, 4)
            for t, v in rates.items()
            if t != "LR" and lr < v - 2 * ses[t]
        }
        detail = f"LR power {lr:.3f} vs others {sorted(rates.items())}; offenders {offenders or 'none'}"
        _report(2, not offenders, detail)


class TestCriterion3CrossingSeparation:
    def test_omnibus_beats_directional_tests(self, c3_rows):
        rates = {r.test: r.rate for r in c3_rows}
        gaps = {}
        for hi_test in ("KONP", "mdir2", "TS", "MC"):
            for lo_test in ("LR", "PP", "RMST"):
                gaps[(hi_test, lo_test)] = rates[hi_test] - rates[lo_test]
        bad = {k: round(v, 3) for k, v in gaps.items() if v < POWER_GAP}
        detail = (
            f"C3 rates {[(t, round(rates[t], 3)) for t in sorted(rates)]}; "
            f"min gap {min(gaps.values()):.3f} (need >= {POWER_GAP}); bad {bad or 'none'}"
        )
        _report(3, not bad, detail)


class TestCriterion4OracleEquivalence:
    def test_weighted_logrank_brute_force(self):
        rng = np.random.default_rng(MASTER_SEED + 4)
        worst = 0.0
        for k in range(1000):
            n1 = int(rng.integers(2, 7))
            n2 = int(rng.integers(2, 13 - n1))
            ties = k % 5 == 0
            if ties:
                t = rng.integers(1, 6, n1 + n2).astype(float)
            else:
                t = rng.exponential(5.0, n1 + n2)
            e = rng.random(n1 + n2) < 0.75
            if not e.any():
                e[0] = True
            d = make_dataset(t[:n1], e[:n1], t[n1:], e[n1:])
            try:
                z = weighted_logrank_z(build_risk_table(d), ConstantWeight())
            except NphbenchError:
                continue
            worst = max(worst, abs(z - brute_force_z(d)))
        _report(4, worst <= 1e-10, f"log-rank brute force, 1000 datasets, max |dz| = {worst:.2e}")

    def test_konp_exhaustive_oracle(self):
        rng = np.random.default_rng(MASTER_SEED + 44)
        worst = 0.0
        checked = 0
        for n1 in range(2, 7):
            for n2 in range(2, 9 - n1):
                for rep in range(8):
                    n = n1 + n2
                    if rep % 4 == 0:
                        t = rng.integers(1, 5, n).astype(float)  # tied times
                    else:
                        t = rng.exponential(5.0, n)
                    g = np.array([1] * n1 + [2] * n2)
                    d = SurvivalDataset(t, np.ones(n, bool), g)
                    try:
                        q = konp_statistic(d)
                    except NoAdmissiblePairsError:
                        continue
                    worst = max(worst, abs(q - brute_force_q(t, g)))
                    checked += 1
        ok = worst <= 1e-10 and checked >= 80
        _report(4, ok, f"partition statistic exhaustive oracle, {checked} datasets <= 8 subjects, max |dQ| = {worst:.2e}")


class TestCriterion5ReductionIdentities:
    def test_single_weight_quadratic_form_is_logrank(self):
        rng = np.random.default_rng(MASTER_SEED + 5)
        worst = 0.0
        for _ in range(300):
            d = random_dataset(rng, n1=int(rng.integers(4, 15)), n2=int(rng.integers(4, 15)))
            out = mdir_test(d, weights=(ConstantWeight(),), mode="asymptotic")
            p_lr = logrank_test(d).p_value
            worst = max(worst, abs(out.p_value - p_lr))
        _report(5, worst <= 1e-10, f"single-weight quadratic form vs log-rank p, max |dp| = {worst:.2e}")

    def test_maxcombo_fh00_component_is_logrank(self):
        rng = np.random.default_rng(MASTER_SEED + 55)
        worst = 0.0
        for _ in range(200):
            d = random_dataset(rng, n1=10, n2=10)
            out = maxcombo_test(d, n_mc=10, seed=1)
            worst = max(
                worst, abs(out.detail["z_by_weight"]["FH(0,0)"] - logrank_test(d).statistic)
            )
        _report(5, worst <= 1e-10, f"MaxCombo FH(0,0) vs log-rank Z, max |dz| = {worst:.2e}")

    def test_area_triangle_relation(self):
        rng = np.random.default_rng(MASTER_SEED + 555)
        checked, worst = 0, -np.inf
        while checked < 10_000:
            d = random_dataset(rng, censor=float(rng.uniform(0, 0.5)))
            tau = default_tau(d)
            try:
                t_abc = abc_statistic(d, tau)
                r1 = rmst(*d.group_arrays(1), tau)
                r2 = rmst(*d.group_arrays(2), tau)
            except InvalidDataError:
                continue
            slack = abs(r1.value - r2.value) * math.sqrt(d.n) - t_abc
            worst = max(worst, slack)
            checked += 1
        _report(5, worst <= 1e-10, f"|rmst diff|*sqrt(n) <= area statistic on 1e4 datasets, max slack = {worst:.2e}")


class TestCriterion6TwoStageValidity:
    def test_null2_size(self, null_grid_rows):
        rows = [
            r
            for r in null_grid_rows
            if r.scenario == "Null2" and r.test == "TS" and r.setting.n1 == 50
        ]
        assert rows, "Null2 50/50 cells missing from the grid"
        rates = {r.setting.id: round(r.rate, 4) for r in rows}
        ok = all(r.rate <= SIZE_BAND[1] for r in rows)
        _report(6, ok, f"TS size on Null2 50/50 {rates} (cap {SIZE_BAND[1]})")

    def test_zero_covariance_of_selected_constants(self):
        rng = np.random.default_rng(MASTER_SEED + 6)
        checked, worst = 0, 0.0
        while checked < 200:
            d = random_dataset(rng, n1=int(rng.integers(5, 20)), n2=int(rng.integers(5, 20)))
            try:
                out = two_stage_test(d, TwoStageConfig(n_boot=1, seed=0))
            except NphbenchError:
                continue
            if out.detail["stage"] != 2:
                continue
            rt = build_risk_table(d)
            v = variance_terms(rt)
            m, c = out.detail["switch_index"], out.detail["switch_constant"]
            worst = max(worst, abs(-v[:m].sum() + c * v[m:].sum()))
            checked += 1
        _report(6, worst <= 1e-8, f"zero-covariance residual over {checked} stage-2 runs, max = {worst:.2e}")


class TestCriterion7GeneratorFidelity:
    def test_samplers_match_cdfs(self):
        seen = set()
        worst_p = 1.0
        k = 0
        for spec in SCENARIOS.values():
            for dist in (spec.group1, spec.group2):
                if dist in seen:
                    continue
                seen.add(dist)
                rng = np.random.default_rng(MASTER_SEED + 7000 + k)
                k += 1
                draws = dist.sample(rng, 100_000)
                pv = stats.kstest(draws, dist.cdf).pvalue
                worst_p = min(worst_p, pv)
        ok = worst_p > 1e-4
        _report(7, ok, f"KS at n=1e5 for {len(seen)} distinct laws, min p = {worst_p:.3g}")

    def test_censoring_calibration_hits_targets(self):
        combos = set()
        for sid in DEFAULT_GRID_SCENARIOS:
            spec = SCENARIOS[sid]
            for dist in (spec.group1, spec.group2):
                for family in CENSORING_FAMILIES:
                    for rate in (0.2, 0.4, 0.6):
                        combos.add((dist, family, rate))
        worst = 0.0
        rng = np.random.default_rng(MASTER_SEED + 77)
        for dist, family, rate in sorted(combos, key=str):
            cens = calibrate_censoring(dist, family, rate)
            t = dist.sample(rng, 10_000)
            c = cens.sample(rng, 10_000)
            worst = max(worst, abs(float(np.mean(c < t)) - rate))
        ok = worst <= 0.02
        _report(7, ok, f"empirical censoring rate over {len(combos)} calibrations, max |err| = {worst:.4f}")

    def test_competing_exponential_identity(self):
        worst = 0.0
        for lam, rate in ((0.1, 0.2), (0.5, 0.4), (1 / 28, 0.6)):
            spec = calibrate_censoring(Exponential(lam), "exponential", rate)
            worst = max(worst, abs(spec.param - lam * rate / (1 - rate)))
        _report(7, worst <= 1e-6, f"competing-exponential closed form, max |err| = {worst:.2e}")


class TestCriterion8Determinism:
    def test_figure2_reproduction_is_thread_invariant(self, tmp_path):
        scenarios = ("PH3", "NPH4a", "C3")
        settings = [
            SettingSpec(n1, n2, 0.2, 0.2, "uniform")
            for (n1, n2) in ((100, 100), (50, 50), (25, 25))
        ]
        n_rep = min(20, N_REP)
        texts = []
        for threads in (1, 2):
            cfg = GridConfig(
                scenarios=scenarios,
                settings=tuple(settings),
                methods=ALL_METHODS,
                n_rep=n_rep,
                alpha=ALPHA,
                seed=MASTER_SEED,
                budgets=ACCEPT_BUDGETS,
                threads=threads,
            )
            rows = run_grid(cfg)
            path = tmp_path / f"fig2_threads{threads}.csv"
            path.write_text(results_to_csv(rows))
            texts.append(path.read_bytes())
        ok = texts[0] == texts[1]
        _report(8, ok, f"3-scenario grid x {n_rep} reps, threads 1 vs 2: byte-identical = {ok}")
