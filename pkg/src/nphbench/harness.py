"""Monte-Carlo engine: run every test over a scenario/setting grid.

Within a replication all requested tests see the identical dataset (a
paired design), and every consumer of randomness draws from its own
stream derived from ``(master seed, scenario, setting, replication,
consumer)``.  Counts therefore do not depend on worker count or
scheduling, and the final tables are byte-identical across runs with the
same configuration.

Per-test failures (degenerate data for that statistic) are counted, not
fatal; rejection rates are computed over the completed replications.
Cells completed earlier can be skipped on resume via a JSON-lines
checkpoint keyed by a configuration fingerprint.
"""

from __future__ import annotations

import json
import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import area, konp, omnibus, twostage, wlrt
from .core import SurvivalDataset
from .errors import NphbenchError
from .scenarios import SettingSpec, default_settings, generate_dataset, get_scenario
from .seeding import derive_rng, derive_seed

__all__ = [
    "METHOD_NAMES",
    "Budgets",
    "GridConfig",
    "SimulationResult",
    "run_method",
    "run_cell",
    "run_grid",
    "summarize",
    "binomial_band",
    "results_to_csv",
    "write_results_csv",
    "write_results_json",
    "load_results_csv",
]

METHOD_NAMES = ("LR", "PP", "RMST", "KONP", "mdir2", "mdir3", "mdir4", "MC", "TS", "ABC")

CHECKPOINT_VERSION = 1
RESULTS_FORMAT = "nphbench-results"


@dataclass(frozen=True)
class Budgets:
    """Resampling budgets; the defaults are the library defaults."""

    mdir_mode: str = "permutation"
    mdir_n_perm: int = 2000
    maxcombo_n_mc: int = 100_000
    ts_n_boot: int = 500
    ts_eps: float = 0.1
    abc_n_boot: int = 1000
    konp_n_perm: int = 2000

    def fingerprint(self) -> str:
        return (
            f"{self.mdir_mode}:{self.mdir_n_perm}:{self.maxcombo_n_mc}:"
            f"{self.ts_n_boot}:{self.ts_eps:g}:{self.abc_n_boot}:{self.konp_n_perm}"
        )


def run_method(name, data: SurvivalDataset, alpha, seed, budgets: Budgets):
    """Dispatch one named test on one dataset; returns a TestOutcome."""
    if name == "LR":
        return wlrt.logrank_test(data)
    if name == "PP":
        return wlrt.peto_peto_test(data)
    if name == "RMST":
        return area.rmst_diff_test(data)
    if name == "ABC":
        return area.abc_test(data, n_boot=budgets.abc_n_boot, seed=seed)
    if name == "KONP":
        return konp.konp_test(data, n_perm=budgets.konp_n_perm, seed=seed)
    if name == "MC":
        return omnibus.maxcombo_test(data, n_mc=budgets.maxcombo_n_mc, seed=seed)
    if name == "TS":
        cfg = twostage.TwoStageConfig(
            alpha=alpha, eps=budgets.ts_eps, n_boot=budgets.ts_n_boot, seed=seed
        )
        return twostage.two_stage_test(data, cfg)
    if name in ("mdir2", "mdir3", "mdir4"):
        weights = {
            "mdir2": omnibus.MDIR2_WEIGHTS,
            "mdir3": omnibus.MDIR3_WEIGHTS,
            "mdir4": omnibus.MDIR4_WEIGHTS,
        }[name]
        return omnibus.mdir_test(
            data,
            weights=weights,
            mode=budgets.mdir_mode,
            n_perm=budgets.mdir_n_perm,
            seed=seed,
            method=name,
        )
    raise ValueError(f"unknown method {name!r}; valid: {', '.join(METHOD_NAMES)}")


@dataclass
class SimulationResult:
    scenario: str
    setting: SettingSpec
    test: str
    n_rep: int
    rejections: int
    failures: int

    @property
    def completed(self) -> int:
        return self.n_rep - self.failures

    @property
    def rate(self) -> float:
        return self.rejections / self.completed if self.completed else math.nan

    @property
    def se(self) -> float:
        if not self.completed:
            return math.nan
        r = self.rate
        return math.sqrt(r * (1 - r) / self.completed)


def _run_reps(
    scenario_id, setting, methods, rep_lo, rep_hi, alpha, master_seed, budgets,
    collect_hashes=False, rep_time_budget=None,
):
    """Counts over a replication range; the worker unit of parallel runs.

    ``rep_time_budget`` (seconds per single test invocation) is the
    skip-and-record guard against a pathological cell: once one test
    exceeds it, that test is skipped (counted as a failure) for the rest
    of the range.  Skipping depends on wall time, so runs using it are
    not byte-reproducible; it is off by default.
    """
    counts = {m: [0, 0] for m in methods}  # rejections, failures
    hashes = [] if collect_hashes else None
    over_budget = set()
    scenario = get_scenario(scenario_id)
    for rep in range(rep_lo, rep_hi):
        rng = derive_rng(master_seed, scenario_id, setting.id, rep, "data")
        try:
            data = generate_dataset(scenario, setting, rng)
        except NphbenchError as exc:
            # a generator failure is systematic: abort the cell loudly
            raise NphbenchError(
                f"data generation failed for {scenario_id} {setting.id} "
                f"(replication {rep}): {exc}"
            ) from exc
        if collect_hashes:
            import hashlib

            h = hashlib.sha256()
            h.update(data.time.tobytes())
            h.update(data.event.tobytes())
            h.update(data.group.tobytes())
            hashes.append(h.hexdigest())
        for m in methods:
            if m in over_budget:
                counts[m][1] += 1
                continue
            seed = derive_seed(master_seed, scenario_id, setting.id, rep, m)
            start = _time.perf_counter()
            try:
                out = run_method(m, data, alpha, seed, budgets)
            except NphbenchError:
                counts[m][1] += 1
                continue
            finally:
                if (
                    rep_time_budget is not None
                    and _time.perf_counter() - start > rep_time_budget
                ):
                    over_budget.add(m)
            if out.p_value <= alpha:
                counts[m][0] += 1
    return counts, hashes


def run_cell(
    scenario_id: str,
    setting: SettingSpec,
    methods=METHOD_NAMES,
    n_rep: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    budgets: Budgets | None = None,
) -> list[SimulationResult]:
    """All requested tests on one (scenario, setting) cell."""
    if n_rep < 1:
        raise ValueError("n_rep must be >= 1")
    budgets = budgets or Budgets()
    counts, _ = _run_reps(scenario_id, setting, methods, 0, n_rep, alpha, seed, budgets)
    return [
        SimulationResult(scenario_id, setting, m, n_rep, counts[m][0], counts[m][1])
        for m in methods
    ]


@dataclass
class GridConfig:
    """Declarative description of a simulation run."""

    scenarios: tuple[str, ...]
    settings: tuple[SettingSpec, ...]
    methods: tuple[str, ...] = METHOD_NAMES
    n_rep: int = 1000
    alpha: float = 0.05
    seed: int = 0
    budgets: Budgets = field(default_factory=Budgets)
    threads: int = 1
    checkpoint: str | None = None
    # seconds one test invocation may take before the test is skipped for
    # the rest of the block; enabling this trades reproducibility for
    # protection against pathological cells
    rep_time_budget: float | None = None

    def fingerprint(self) -> str:
        return (
            f"v{CHECKPOINT_VERSION}|seed={self.seed}|n_rep={self.n_rep}|"
            f"alpha={self.alpha:g}|methods={','.join(self.methods)}|"
            f"budgets={self.budgets.fingerprint()}|tb={self.rep_time_budget}"
        )

    @staticmethod
    def from_manifest(doc: dict) -> "GridConfig":
        """Build a config from a parsed JSON manifest."""
        settings = []
        for s in doc.get("settings", []):
            settings.append(
                SettingSpec(
                    n1=int(s["n1"]), n2=int(s["n2"]),
                    rate1=float(s["rate1"]), rate2=float(s["rate2"]),
                    family=s.get("family", "uniform"),
                )
            )
        if not settings:
            families = doc.get("censoring_families", ("uniform", "exponential"))
            settings = default_settings(tuple(families))
        budgets = Budgets(**doc.get("budgets", {}))
        from .scenarios import DEFAULT_GRID_SCENARIOS

        return GridConfig(
            scenarios=tuple(doc.get("scenarios", DEFAULT_GRID_SCENARIOS)),
            settings=tuple(settings),
            methods=tuple(doc.get("methods", METHOD_NAMES)),
            n_rep=int(doc.get("n_rep", 1000)),
            alpha=float(doc.get("alpha", 0.05)),
            seed=int(doc.get("seed", 0)),
            budgets=budgets,
            threads=int(doc.get("threads", 1)),
            checkpoint=doc.get("checkpoint"),
            rep_time_budget=doc.get("rep_time_budget"),
        )


def _load_checkpoint(path: str, fingerprint: str) -> dict:
    done = {}
    try:
        fh = open(path)
    except FileNotFoundError:
        return done
    with fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec.get("fingerprint") != fingerprint:
                continue
            done[(rec["scenario"], rec["setting_id"])] = rec["counts"]
    return done


def _append_checkpoint(path: str, fingerprint: str, scenario: str, setting: SettingSpec, counts):
    rec = {
        "version": CHECKPOINT_VERSION,
        "fingerprint": fingerprint,
        "scenario": scenario,
        "setting_id": setting.id,
        "counts": {m: list(v) for m, v in counts.items()},
    }
    with open(path, "a") as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


def run_grid(config: GridConfig, progress=None) -> list[SimulationResult]:
    """Run (or resume) a grid and return one row per (cell, test).

    ``progress`` is an optional callable ``(done_cells, total_cells,
    scenario, setting)`` invoked after each cell completes.
    """
    cells = [(sc, st) for sc in config.scenarios for st in config.settings]
    fingerprint = config.fingerprint()
    done = _load_checkpoint(config.checkpoint, fingerprint) if config.checkpoint else {}

    cell_counts: dict[tuple[str, str], dict] = {}
    pending = []
    for sc, st in cells:
        key = (sc, st.id)
        if key in done:
            cell_counts[key] = {m: list(v) for m, v in done[key].items() if m in config.methods}
            if set(config.methods) - set(cell_counts[key]):
                raise ValueError("checkpoint is missing methods for a completed cell")
        else:
            pending.append((sc, st))

    n_done = len(cells) - len(pending)
    block = max(1, min(config.n_rep, 50))
    tasks = []
    for sc, st in pending:
        for lo in range(0, config.n_rep, block):
            tasks.append((sc, st, lo, min(lo + block, config.n_rep)))

    remaining = {(sc, st.id): math.ceil(config.n_rep / block) for sc, st in pending}
    for sc, st in pending:
        cell_counts[(sc, st.id)] = {m: [0, 0] for m in config.methods}
    settings_by_id = {st.id: st for _, st in cells}

    def _merge(sc, st, counts):
        nonlocal n_done
        key = (sc, st.id)
        for m, (rej, fail) in counts.items():
            cell_counts[key][m][0] += rej
            cell_counts[key][m][1] += fail
        remaining[key] -= 1
        if remaining[key] == 0:
            if config.checkpoint:
                _append_checkpoint(config.checkpoint, fingerprint, sc, st, cell_counts[key])
            n_done += 1
            if progress:
                progress(n_done, len(cells), sc, st)

    if config.threads > 1 and tasks:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            futures = [
                (
                    sc,
                    st,
                    pool.submit(
                        _run_reps, sc, st, config.methods, lo, hi,
                        config.alpha, config.seed, config.budgets,
                        rep_time_budget=config.rep_time_budget,
                    ),
                )
                for sc, st, lo, hi in tasks
            ]
            for sc, st, fut in futures:
                counts, _ = fut.result()
                _merge(sc, st, counts)
    else:
        for sc, st, lo, hi in tasks:
            counts, _ = _run_reps(
                sc, st, config.methods, lo, hi, config.alpha, config.seed,
                config.budgets, rep_time_budget=config.rep_time_budget,
            )
            _merge(sc, st, counts)

    rows = []
    for sc, st in cells:
        counts = cell_counts[(sc, st.id)]
        for m in config.methods:
            rej, fail = counts[m]
            rows.append(SimulationResult(sc, settings_by_id[st.id], m, config.n_rep, rej, fail))
    return rows


def binomial_band(alpha: float, n_rep: int, z: float = 1.96) -> tuple[float, float]:
    """Two-sided binomial interval around the nominal level."""
    half = z * math.sqrt(alpha * (1 - alpha) / n_rep)
    return alpha - half, alpha + half


def summarize(rows: list[SimulationResult], alpha: float = 0.05) -> dict:
    """Per-cell power rankings plus a null-scenario band report."""
    by_cell: dict[tuple[str, str], list[SimulationResult]] = {}
    for r in rows:
        by_cell.setdefault((r.scenario, r.setting.id), []).append(r)

    rankings = []
    violations = []
    for (sc, _sid), cell_rows in by_cell.items():
        setting = cell_rows[0].setting
        ordered = sorted(
            cell_rows, key=lambda r: (-(r.rate if not math.isnan(r.rate) else -1.0), r.test)
        )
        rankings.append(
            {
                "scenario": sc,
                "setting": setting,
                "ranking": [(r.test, r.rate) for r in ordered],
            }
        )
        if sc.startswith("Null"):
            lo, hi = binomial_band(alpha, cell_rows[0].n_rep)
            for r in cell_rows:
                if not math.isnan(r.rate) and not (lo <= r.rate <= hi):
                    violations.append(
                        {
                            "scenario": sc,
                            "setting": setting,
                            "test": r.test,
                            "rate": r.rate,
                            "band": (lo, hi),
                        }
                    )
    return {"rankings": rankings, "band_violations": violations, "alpha": alpha}


_CSV_HEADER = (
    "scenario,n1,n2,cens_rate1,cens_rate2,cens_family,"
    "test,n_rep,rejections,failures,rate,se"
)


def results_to_csv(rows: list[SimulationResult]) -> str:
    """Serialize rows with a stable float format (byte-reproducible)."""
    lines = [_CSV_HEADER]
    for r in rows:
        s = r.setting
        lines.append(
            f"{r.scenario},{s.n1},{s.n2},{s.rate1:g},{s.rate2:g},{s.family},"
            f"{r.test},{r.n_rep},{r.rejections},{r.failures},"
            f"{r.rate:.10g},{r.se:.10g}"
        )
    return "\n".join(lines) + "\n"


def write_results_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(results_to_csv(rows))


def write_results_json(rows, path, config: GridConfig | None = None, seconds=None) -> None:
    doc = {
        "format": RESULTS_FORMAT,
        "version": 1,
        "results": [
            {
                "scenario": r.scenario,
                "n1": r.setting.n1,
                "n2": r.setting.n2,
                "cens_rate1": r.setting.rate1,
                "cens_rate2": r.setting.rate2,
                "cens_family": r.setting.family,
                "test": r.test,
                "n_rep": r.n_rep,
                "rejections": r.rejections,
                "failures": r.failures,
                "rate": None if math.isnan(r.rate) else r.rate,
                "se": None if math.isnan(r.se) else r.se,
            }
            for r in rows
        ],
    }
    if config is not None:
        doc["config"] = {
            "scenarios": list(config.scenarios),
            "n_rep": config.n_rep,
            "alpha": config.alpha,
            "seed": config.seed,
            "methods": list(config.methods),
            "budgets": config.budgets.fingerprint(),
        }
    if seconds is not None:
        doc["wall_seconds"] = seconds
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_results_csv(path) -> list[SimulationResult]:
    """Read rows written by :func:`write_results_csv`."""
    from .errors import DataFormatError

    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise DataFormatError(f"{path}: unrecognized results header")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            (sc, n1, n2, r1, r2, fam, test, n_rep, rej, fail, _rate, _se) = line.split(",")
            rows.append(
                SimulationResult(
                    scenario=sc,
                    setting=SettingSpec(int(n1), int(n2), float(r1), float(r2), fam),
                    test=test,
                    n_rep=int(n_rep),
                    rejections=int(rej),
                    failures=int(fail),
                )
            )
    return rows
