"""Render publication-style figures from daviesgap sweep / evolve CSV files.

Three figure kinds:

  fig1_scaling     per-beta series of lambda_cl and lambda_QM (and their
                   inverses) against the system size, log-log, with the
                   power-law exponent of the lambda_QM data annotated
  example_scaling  one value column against size, log-log, exponent annotated
  convergence      trace distance, chi-square and the theoretical envelope
                   against time, log y

Power-law exponents are estimated by least squares on log-log data over the
upper half of the size range (the scaling claims are asymptotic; small sizes
are pre-asymptotic).  Rendering is a pure function of the CSV: a fixed layout
and no timestamps make re-runs byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("fig1_scaling", "example_scaling", "convergence")


class RenderError(Exception):
    """Base class for renderer failures."""


class MissingColumn(RenderError):
    """A referenced CSV column is absent."""


class EmptyData(RenderError):
    """No usable rows after parsing."""


@dataclass
class PlotSpec:
    input_csv: str
    kind: str
    output: str
    value_column: str = "lambda_lower"
    logx: bool = True
    logy: bool = True


def read_table(path: str) -> dict:
    """CSV file -> column name -> list of raw strings."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise EmptyData(f"{path} is empty")
    header, body = rows[0], rows[1:]
    if not body:
        raise EmptyData(f"{path} has a header but no data rows")
    table = {name: [] for name in header}
    for row in body:
        if len(row) != len(header):
            raise RenderError(f"ragged row in {path}: {row!r}")
        for name, cell in zip(header, row):
            table[name].append(cell)
    return table


def column(table: dict, name: str) -> np.ndarray:
    """Float column with NaN for empty cells; MissingColumn if absent."""
    if name not in table:
        raise MissingColumn(f"column {name!r} not in CSV")
    out = np.full(len(table[name]), np.nan)
    for i, cell in enumerate(table[name]):
        if cell != "":
            out[i] = float(cell)
    return out


def fit_exponent(sizes, values) -> float:
    """Least-squares slope of log(value) vs log(size), upper half of the range."""
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    good = np.isfinite(sizes) & np.isfinite(values) & (values > 0)
    sizes, values = sizes[good], values[good]
    if sizes.size < 2:
        raise EmptyData("not enough points for a power-law fit")
    cut = 0.5 * (sizes.min() + sizes.max())
    mask = sizes >= cut
    if np.unique(sizes[mask]).size < 2:
        mask = np.ones_like(sizes, dtype=bool)
    if np.unique(sizes[mask]).size < 2:
        raise EmptyData("need at least two distinct sizes for a power-law fit")
    return float(np.polyfit(np.log(sizes[mask]), np.log(values[mask]), 1)[0])


def _series_by_beta(table, ycol):
    sizes = column(table, "size")
    betas = column(table, "beta")
    values = column(table, ycol)
    series = {}
    for b in sorted(set(betas[np.isfinite(betas)])):
        mask = (betas == b) & np.isfinite(values) & np.isfinite(sizes)
        if mask.any():
            order = np.argsort(sizes[mask])
            series[b] = (sizes[mask][order], values[mask][order])
    if not series:
        raise EmptyData(f"no finite rows for column {ycol!r}")
    return series


def _render_fig1(spec, table):
    cl = _series_by_beta(table, "lambda_cl_exact")
    qm = _series_by_beta(table, "lambda_qm_exact")
    pooled_n = np.concatenate([s for s, _ in qm.values()])
    pooled_v = np.concatenate([v for _, v in qm.values()])
    exponent = fit_exponent(pooled_n, pooled_v)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    for b, (n, v) in cl.items():
        ax1.plot(n, v, "o-", markersize=3, label=f"cl, beta={b:g}")
        ax2.plot(n, 1.0 / v, "o-", markersize=3)
    for b, (n, v) in qm.items():
        ax1.plot(n, v, "s--", markersize=3, label=f"QM, beta={b:g}")
        ax2.plot(n, 1.0 / v, "s--", markersize=3)
    for ax in (ax1, ax2):
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("N")
    ax1.set_ylabel("gap")
    ax2.set_ylabel("inverse gap")
    ax1.legend(fontsize=7)
    ax1.text(
        0.05,
        0.05,
        f"lambda_QM fit exponent: {exponent:.3f}",
        transform=ax1.transAxes,
        fontsize=8,
    )
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {"exponent_lambda_qm": exponent}


def _render_example(spec, table):
    series = _series_by_beta(table, spec.value_column)
    pooled_n = np.concatenate([s for s, _ in series.values()])
    pooled_v = np.concatenate([v for _, v in series.values()])
    exponent = fit_exponent(pooled_n, pooled_v)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for b, (n, v) in series.items():
        ax.plot(n, v, "o-", markersize=3, label=f"beta={b:g}")
    if spec.logx:
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel("size")
    ax.set_ylabel(spec.value_column)
    ax.legend(fontsize=7)
    ax.text(
        0.05,
        0.05,
        f"fit exponent: {exponent:.3f}",
        transform=ax.transAxes,
        fontsize=8,
    )
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {"exponent": exponent}


def _render_convergence(spec, table):
    t = column(table, "t")
    td = column(table, "trace_distance")
    chi2 = column(table, "chi2")
    env = column(table, "envelope")
    good = np.isfinite(t)
    if not good.any():
        raise EmptyData("no usable time points")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t[good], td[good], "o-", markersize=3, label="trace distance")
    ax.plot(t[good], chi2[good], "s--", markersize=3, label="chi^2")
    ax.plot(t[good], env[good], "k:", label="envelope")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {}


def render(spec: PlotSpec) -> dict:
    """Render one figure; returns the annotated quantities (fit exponents)."""
    if spec.kind not in KINDS:
        raise RenderError(f"unknown figure kind {spec.kind!r}; choose from {KINDS}")
    table = read_table(spec.input_csv)
    if spec.kind == "fig1_scaling":
        return _render_fig1(spec, table)
    if spec.kind == "example_scaling":
        return _render_example(spec, table)
    return _render_convergence(spec, table)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render figures from daviesgap CSV output"
    )
    parser.add_argument("--input", required=True, help="CSV file")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--output", required=True,
                        help="image path; format inferred from the extension")
    parser.add_argument("--value-column", default="lambda_lower",
                        help="value column for example_scaling")
    parser.add_argument("--linear-x", action="store_true")
    parser.add_argument("--linear-y", action="store_true")
    args = parser.parse_args(argv)
    spec = PlotSpec(
        input_csv=args.input,
        kind=args.kind,
        output=args.output,
        value_column=args.value_column,
        logx=not args.linear_x,
        logy=not args.linear_y,
    )
    try:
        render(spec)
    except MissingColumn as exc:
        sys.stderr.write(f"MissingColumn: {exc}\n")
        return 2
    except EmptyData as exc:
        sys.stderr.write(f"EmptyData: {exc}\n")
        return 3
    except RenderError as exc:
        sys.stderr.write(f"RenderError: {exc}\n")
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
