"""Command-line interface.

Subcommands:

* ``test``       -- run one or all tests on a ``time,event,group`` CSV
* ``simulate``   -- run or resume a simulation grid, write CSV/JSON results
* ``scenarios``  -- list the scenario catalog / dump the JSON manifest
* ``calibrate``  -- solve a censoring parameter for a target rate
* ``summarize``  -- summary tables and figures from a results CSV

Exit codes: 0 success, 2 usage error, 3 data error, 4 computation error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .errors import (
    DataFormatError,
    DegenerateStatisticError,
    InvalidDataError,
    NphbenchError,
)
from .harness import (
    METHOD_NAMES,
    Budgets,
    GridConfig,
    load_results_csv,
    run_method,
    run_grid,
    summarize,
    write_results_csv,
    write_results_json,
)
from .scenarios import (
    CENSORING_FAMILIES,
    DEFAULT_GRID_SCENARIOS,
    SCENARIOS,
    SettingSpec,
    calibrate_censoring,
    default_settings,
    get_scenario,
    scenario_manifest,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_COMPUTE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nphbench",
        description="Two-sample survival tests and a Monte-Carlo benchmark harness.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run tests on a time,event,group CSV")
    p_test.add_argument("csv", help="input CSV with columns time,event,group")
    p_test.add_argument(
        "--method", default="all", choices=("all",) + METHOD_NAMES,
        help="which test to run (default: all)",
    )
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--tau", type=float, default=None,
                        help="truncation time for RMST/ABC (default: data-driven)")
    p_test.add_argument("--n-perm", type=int, default=None,
                        help="permutation count for mdir and KONP")
    p_test.add_argument("--n-boot", type=int, default=None,
                        help="bootstrap count for TS and ABC")
    p_test.add_argument("--n-mc", type=int, default=None,
                        help="Monte-Carlo draws for the MC p-value")
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument("--out", default=None, help="write output to a file")
    p_test.add_argument("--format", choices=("csv", "json"), default="csv")

    p_sim = sub.add_parser("simulate", help="run a simulation grid")
    p_sim.add_argument("--grid", default=None, help="JSON manifest describing the run")
    p_sim.add_argument("--scenarios", default=None,
                       help="comma-separated scenario ids (default: the 20-scenario grid)")
    p_sim.add_argument("--sizes", default=None,
                       help="comma-separated group sizes like 100/100,50/50")
    p_sim.add_argument("--censoring", default=None,
                       help="comma-separated rate pairs like 0/0,0.2/0.2")
    p_sim.add_argument("--families", default=None,
                       help=f"censoring families, subset of {','.join(CENSORING_FAMILIES)}")
    p_sim.add_argument("--methods", default=None,
                       help="comma-separated test names (default: all ten)")
    p_sim.add_argument("--filter", default=None,
                       help="restrict scenarios after the grid is built (comma-separated ids)")
    p_sim.add_argument("--n-rep", type=int, default=None)
    p_sim.add_argument("--alpha", type=float, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--threads", type=int, default=None)
    p_sim.add_argument("--resume", action="store_true",
                       help="reuse cells recorded in the checkpoint file")
    p_sim.add_argument("--checkpoint", default=None,
                       help="checkpoint file (default: <out>.checkpoint.jsonl)")
    p_sim.add_argument("--out", default="results.csv", help="results CSV path")
    p_sim.add_argument("--json-out", default=None, help="also write JSON results")
    p_sim.add_argument("--quiet", action="store_true")

    p_sc = sub.add_parser("scenarios", help="list scenarios / dump the manifest")
    p_sc.add_argument("--out", default=None, help="write the JSON manifest to a file")

    p_cal = sub.add_parser("calibrate", help="solve a censoring parameter")
    p_cal.add_argument("--scenario", required=True, help="scenario id")
    p_cal.add_argument("--group", type=int, choices=(1, 2), required=True)
    p_cal.add_argument("--family", choices=CENSORING_FAMILIES, required=True)
    p_cal.add_argument("--rate", type=float, required=True, help="target censoring rate")

    p_sum = sub.add_parser("summarize", help="summary tables and figures from results")
    p_sum.add_argument("results", help="results CSV produced by simulate")
    p_sum.add_argument("--out-dir", default="summary")
    p_sum.add_argument("--alpha", type=float, default=0.05)
    p_sum.add_argument("--no-plots", action="store_true",
                       help="write only the delimited outputs")
    return parser


def cmd_test(args) -> int:
    from .core import load_csv

    data = load_csv(args.csv)
    methods = METHOD_NAMES if args.method == "all" else (args.method,)

    # explicit tau needs a direct call for the two area-based tests
    rows = []
    for name in methods:
        try:
            if args.tau is not None and name in ("RMST", "ABC"):
                from . import area

                if name == "RMST":
                    out = area.rmst_diff_test(data, tau=args.tau)
                else:
                    out = area.abc_test(
                        data, tau=args.tau,
                        n_boot=args.n_boot or Budgets.abc_n_boot, seed=args.seed,
                    )
            else:
                budgets = Budgets(
                    mdir_n_perm=args.n_perm or Budgets.mdir_n_perm,
                    konp_n_perm=args.n_perm or Budgets.konp_n_perm,
                    ts_n_boot=args.n_boot or Budgets.ts_n_boot,
                    abc_n_boot=args.n_boot or Budgets.abc_n_boot,
                    maxcombo_n_mc=args.n_mc or Budgets.maxcombo_n_mc,
                )
                out = run_method(name, data, args.alpha, args.seed, budgets)
            rows.append((name, out.statistic, out.p_value, out.detail, None))
        except (DegenerateStatisticError, InvalidDataError) as exc:
            if len(methods) == 1:
                raise
            rows.append((name, None, None, {}, str(exc)))

    if args.format == "json":
        doc = [
            {
                "method": name,
                "statistic": stat,
                "p_value": p,
                "detail": detail,
                **({"error": err} if err else {}),
            }
            for name, stat, p, detail, err in rows
        ]
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        lines = ["method,statistic,p_value,note"]
        for name, stat, p, detail, err in rows:
            if err:
                lines.append(f"{name},,,{err}")
                continue
            note = ";".join(
                f"{k}={v}" for k, v in sorted(detail.items())
                if isinstance(v, (int, float, str))
            )
            lines.append(f"{name},{stat:.10g},{p:.10g},{note}")
        text = "\n".join(lines) + "\n"

    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_pairs(text, cast):
    pairs = []
    for item in text.split(","):
        a, _, b = item.partition("/")
        pairs.append((cast(a), cast(b)))
    return pairs


def cmd_simulate(args) -> int:
    if args.grid:
        with open(args.grid) as fh:
            config = GridConfig.from_manifest(json.load(fh))
    else:
        config = GridConfig(
            scenarios=DEFAULT_GRID_SCENARIOS,
            settings=tuple(default_settings()),
        )

    scenarios = config.scenarios
    settings = config.settings
    if args.scenarios:
        scenarios = tuple(s.strip() for s in args.scenarios.split(","))
    if args.sizes or args.censoring or args.families:
        from .scenarios import CENSORING_FAMILIES as all_families
        from .scenarios import GRID_CENSORING_RATES, GRID_SIZES

        sizes = _parse_pairs(args.sizes, int) if args.sizes else list(GRID_SIZES)
        rates = (
            _parse_pairs(args.censoring, float)
            if args.censoring
            else list(GRID_CENSORING_RATES)
        )
        families = tuple(args.families.split(",")) if args.families else all_families
        settings = tuple(
            SettingSpec(n1, n2, r1, r2, fam)
            for fam in families
            for (r1, r2) in rates
            for (n1, n2) in sizes
        )
    if args.filter:
        keep = {s.strip() for s in args.filter.split(",")}
        scenarios = tuple(s for s in scenarios if s in keep)
    for sc in scenarios:
        get_scenario(sc)  # validate early

    checkpoint = args.checkpoint
    if args.resume and checkpoint is None:
        checkpoint = args.out + ".checkpoint.jsonl"
    if not args.resume and checkpoint is None:
        checkpoint = None

    config = GridConfig(
        scenarios=scenarios,
        settings=settings,
        methods=tuple(args.methods.split(",")) if args.methods else config.methods,
        n_rep=args.n_rep if args.n_rep is not None else config.n_rep,
        alpha=args.alpha if args.alpha is not None else config.alpha,
        seed=args.seed if args.seed is not None else config.seed,
        budgets=config.budgets,
        threads=args.threads if args.threads is not None else config.threads,
        checkpoint=checkpoint,
        rep_time_budget=config.rep_time_budget,
    )
    for m in config.methods:
        if m not in METHOD_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown method {m!r}; valid: {', '.join(METHOD_NAMES)}"
            )

    def progress(done, total, sc, st):
        if not args.quiet:
            print(f"[{done}/{total}] {sc} {st.id}", file=sys.stderr)

    start = time.perf_counter()
    rows = run_grid(config, progress=progress)
    elapsed = time.perf_counter() - start
    write_results_csv(rows, args.out)
    if args.json_out:
        write_results_json(rows, args.json_out, config=config, seconds=elapsed)

    summary = summarize(rows, alpha=config.alpha)
    n_viol = len(summary["band_violations"])
    if not args.quiet:
        print(
            f"wrote {args.out}: {len(rows)} rows in {elapsed:.1f}s; "
            f"{n_viol} null-band violation(s)",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_scenarios(args) -> int:
    manifest = scenario_manifest()
    for sid in DEFAULT_GRID_SCENARIOS:
        spec = SCENARIOS[sid]
        print(f"{sid}: {spec.group1.spec()} vs {spec.group2.spec()}")
    print(
        "note: NPH4 ships as NPH4a (sdlog 1.3, default grid) and NPH4b "
        "(sdlog 1.6); pass NPH4b explicitly to use the alternate variant"
    )
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"manifest written to {args.out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    scenario = get_scenario(args.scenario)
    dist = scenario.group1 if args.group == 1 else scenario.group2
    spec = calibrate_censoring(dist, args.family, args.rate)
    if spec is None:
        print("no censoring (target rate 0)")
        return EXIT_OK
    kind = "upper bound" if args.family == "uniform" else "rate"
    print(
        f"{args.scenario} group {args.group}, {args.family} censoring {kind}: "
        f"{spec.param:.10g} (achieved rate {spec.achieved_rate:.6f})"
    )
    return EXIT_OK


def cmd_summarize(args) -> int:
    from .report import write_summary

    rows = load_results_csv(args.results)
    written = write_summary(rows, args.out_dir, alpha=args.alpha, plots=not args.no_plots)
    for name in written:
        print(f"{args.out_dir}/{name}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "test": cmd_test,
        "simulate": cmd_simulate,
        "scenarios": cmd_scenarios,
        "calibrate": cmd_calibrate,
        "summarize": cmd_summarize,
    }
    try:
        return handlers[args.command](args)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, InvalidDataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NphbenchError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
