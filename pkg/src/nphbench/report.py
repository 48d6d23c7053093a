"""Summary tables and figures rendered from simulation results.

``write_summary`` turns a list of result rows into delimited files
(long-format rates, per-cell power rankings, null-band violations) and,
unless disabled, renders the matching figures next to them: a box/strip
plot of type-I errors per test for the null scenarios and a grid of power
curves (tests x group sizes, one panel per scenario and censoring pair).
Only this module touches matplotlib.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .harness import METHOD_NAMES, SimulationResult, binomial_band, summarize

__all__ = ["write_summary"]


def _method_order(rows):
    present = {r.test for r in rows}
    ordered = [m for m in METHOD_NAMES if m in present]
    return ordered + sorted(present - set(ordered))


def _size_label(setting):
    return f"{setting.n1}/{setting.n2}"


def _cens_label(setting):
    return f"{setting.family} {setting.rate1:g}/{setting.rate2:g}"


def _write_rates_csv(rows, path):
    with open(path, "w") as fh:
        fh.write("scenario,n1,n2,cens_rate1,cens_rate2,cens_family,test,n_rep,rate,se\n")
        for r in rows:
            s = r.setting
            fh.write(
                f"{r.scenario},{s.n1},{s.n2},{s.rate1:g},{s.rate2:g},{s.family},"
                f"{r.test},{r.n_rep},{r.rate:.10g},{r.se:.10g}\n"
            )


def _write_ranking_csv(summary, path):
    with open(path, "w") as fh:
        fh.write("scenario,n1,n2,cens_rate1,cens_rate2,cens_family,rank,test,rate\n")
        for entry in summary["rankings"]:
            s = entry["setting"]
            for rank, (test, rate) in enumerate(entry["ranking"], start=1):
                fh.write(
                    f"{entry['scenario']},{s.n1},{s.n2},{s.rate1:g},{s.rate2:g},"
                    f"{s.family},{rank},{test},{rate:.10g}\n"
                )


def _write_band_csv(summary, path):
    with open(path, "w") as fh:
        fh.write(
            "scenario,n1,n2,cens_rate1,cens_rate2,cens_family,test,rate,band_lo,band_hi\n"
        )
        for v in summary["band_violations"]:
            s = v["setting"]
            lo, hi = v["band"]
            fh.write(
                f"{v['scenario']},{s.n1},{s.n2},{s.rate1:g},{s.rate2:g},{s.family},"
                f"{v['test']},{v['rate']:.10g},{lo:.10g},{hi:.10g}\n"
            )


def _plot_null_sizes(rows, alpha, path):
    scenarios = sorted({r.scenario for r in rows})
    methods = _method_order(rows)
    ncols = min(2, len(scenarios))
    nrows = math.ceil(len(scenarios) / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(6.0 * ncols, 3.4 * nrows), squeeze=False, sharey=True
    )
    for k, sc in enumerate(scenarios):
        ax = axes[k // ncols][k % ncols]
        data = []
        for m in methods:
            vals = [r.rate for r in rows if r.scenario == sc and r.test == m]
            data.append([v for v in vals if not math.isnan(v)])
        n_rep = next(r.n_rep for r in rows if r.scenario == sc)
        lo, hi = binomial_band(alpha, n_rep)
        if max(len(d) for d in data) > 1:
            ax.boxplot(data, tick_labels=methods)
        else:
            ax.scatter(range(1, len(methods) + 1), [d[0] if d else math.nan for d in data])
            ax.set_xticks(range(1, len(methods) + 1), methods)
        for y in (lo, hi):
            ax.axhline(y, color="red", linestyle=":", linewidth=1)
        ax.axhline(alpha, color="grey", linewidth=0.5)
        ax.set_title(sc)
        ax.set_ylabel("rejection rate")
        ax.tick_params(axis="x", rotation=45)
    for k in range(len(scenarios), nrows * ncols):
        axes[k // ncols][k % ncols].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _plot_power_panels(rows, path):
    scenarios = sorted({r.scenario for r in rows})
    cens = sorted({(_cens_label(r.setting)) for r in rows})
    methods = _method_order(rows)
    fig, axes = plt.subplots(
        len(scenarios), len(cens),
        figsize=(4.6 * len(cens), 3.2 * len(scenarios)),
        squeeze=False, sharey=True,
    )
    for i, sc in enumerate(scenarios):
        for j, cl in enumerate(cens):
            ax = axes[i][j]
            panel = [r for r in rows if r.scenario == sc and _cens_label(r.setting) == cl]
            sizes = sorted(
                {(_size_label(r.setting), r.setting.n1 + r.setting.n2) for r in panel},
                key=lambda t: -t[1],
            )
            xlabels = [s for s, _ in sizes]
            for m in methods:
                ys = []
                for xl in xlabels:
                    vals = [
                        r.rate
                        for r in panel
                        if r.test == m and _size_label(r.setting) == xl
                    ]
                    ys.append(vals[0] if vals else math.nan)
                ax.plot(range(len(xlabels)), ys, marker="o", markersize=3, label=m)
            ax.set_xticks(range(len(xlabels)), xlabels)
            ax.set_ylim(0.0, 1.0)
            ax.set_title(f"{sc} ({cl})", fontsize=10)
            if j == 0:
                ax.set_ylabel("rejection rate")
            if i == len(scenarios) - 1:
                ax.set_xlabel("group sizes")
    axes[0][-1].legend(fontsize=7, loc="lower left")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_summary(
    rows: list[SimulationResult], out_dir: str, alpha: float = 0.05, plots: bool = True
) -> list[str]:
    """Write summary CSVs (and figures) for a set of result rows.

    Returns the list of files written, relative to ``out_dir``.
    """
    os.makedirs(out_dir, exist_ok=True)
    summary = summarize(rows, alpha=alpha)
    written = []

    _write_rates_csv(rows, os.path.join(out_dir, "rates_long.csv"))
    written.append("rates_long.csv")
    _write_ranking_csv(summary, os.path.join(out_dir, "power_ranking.csv"))
    written.append("power_ranking.csv")
    _write_band_csv(summary, os.path.join(out_dir, "null_band_violations.csv"))
    written.append("null_band_violations.csv")

    null_rows = [r for r in rows if r.scenario.startswith("Null")]
    alt_rows = [r for r in rows if not r.scenario.startswith("Null")]
    if plots and null_rows:
        _plot_null_sizes(null_rows, alpha, os.path.join(out_dir, "null_sizes.png"))
        written.append("null_sizes.png")
    if plots and alt_rows:
        _plot_power_panels(alt_rows, os.path.join(out_dir, "power_panels.png"))
        written.append("power_panels.png")
    return written
