"""CSV schema validation, aggregation, and figure rendering.

Input schemas (exact headers, refused otherwise):

  sweep trials:   law,n,trial,seed,mode,diam_w,flood_w,diam_norm,
                  flood_norm,core_ratio,q1_tilde_emp,t_alpha,t_beta,wall_ms
  sweep agg:      law,n,trials,diam_norm_mean,diam_norm_se,flood_norm_mean,
                  flood_norm_se,core_ratio_mean,q1_tilde_mean,diam_limit,flood_limit
  probe:          law_id,k,x,n,runs,hits,emp_exponent,theory_exponent

Every figure writes a text sidecar (<out>.sidecar.txt) listing the
plotted aggregates in full precision, so two renders of the same CSV can
be diffed without comparing pixels.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

TRIALS_HEADER = [
    "law", "n", "trial", "seed", "mode", "diam_w", "flood_w", "diam_norm",
    "flood_norm", "core_ratio", "q1_tilde_emp", "t_alpha", "t_beta", "wall_ms",
]
AGG_HEADER = [
    "law", "n", "trials", "diam_norm_mean", "diam_norm_se", "flood_norm_mean",
    "flood_norm_se", "core_ratio_mean", "q1_tilde_mean", "diam_limit", "flood_limit",
]
PROBE_HEADER = ["law_id", "k", "x", "n", "runs", "hits", "emp_exponent", "theory_exponent"]

KINDS = ("convergence", "core", "bp-exponent")


class SchemaError(ValueError):
    """The CSV header does not match the documented schema."""


def _check_header(found, expected, path):
    if len(found) != len(expected):
        raise SchemaError(
            f"{path}: expected {len(expected)} columns, found {len(found)}"
        )
    for i, (f, e) in enumerate(zip(found, expected)):
        if f != e:
            raise SchemaError(f"{path}: column {i + 1} should be '{e}', found '{f}'")


def _read_rows(path, expected):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        _check_header(header, expected, path)
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv_path: str
    out_path: str
    agg_path: str | None = None  # aggregate CSV, source of the limit lines
    limits: tuple | None = None  # explicit override (diam, flood) or (value,)
    log_x: bool = True
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; one of {KINDS}")


def _group_by_n(rows, col_idx):
    by_n: dict[int, list[float]] = {}
    for row in rows:
        by_n.setdefault(int(row[1]), []).append(float(row[col_idx]))
    ns = sorted(by_n)
    means = [float(np.mean(by_n[n])) for n in ns]
    ses = [
        float(np.std(by_n[n], ddof=1) / math.sqrt(len(by_n[n]))) if len(by_n[n]) > 1 else float("nan")
        for n in ns
    ]
    counts = [len(by_n[n]) for n in ns]
    return ns, means, ses, counts


def _limits_from_agg(spec):
    if spec.limits is not None:
        return spec.limits
    if spec.agg_path is None:
        return None
    rows = _read_rows(spec.agg_path, AGG_HEADER)
    return (float(rows[0][9]), float(rows[0][10]))


def _sidecar_path(out_path):
    return out_path + ".sidecar.txt"


def _write_sidecar(spec, lines):
    with open(_sidecar_path(spec.out_path), "w", encoding="utf-8") as fh:
        fh.write(f"kind={spec.kind}\n")
        fh.write(f"source={os.path.basename(spec.csv_path)}\n")
        for line in lines:
            fh.write(line + "\n")


def _render_convergence(spec):
    rows = _read_rows(spec.csv_path, TRIALS_HEADER)
    ns, d_mean, d_se, counts = _group_by_n(rows, TRIALS_HEADER.index("diam_norm"))
    _, f_mean, f_se, _ = _group_by_n(rows, TRIALS_HEADER.index("flood_norm"))
    limits = _limits_from_agg(spec)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(ns, d_mean, yerr=d_se, marker="o", capsize=3, label="diam_w / log n")
    ax.errorbar(ns, f_mean, yerr=f_se, marker="s", capsize=3, label="flood_w / log n")
    if limits is not None:
        ax.axhline(limits[0], ls="--", color="C0", lw=1, label=f"diam limit {limits[0]:.4g}")
        ax.axhline(limits[1], ls="--", color="C1", lw=1, label=f"flood limit {limits[1]:.4g}")
    if spec.log_x:
        ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("normalized weighted distance")
    ax.set_title(spec.title or f"convergence ({rows[0][0]})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)

    lines = []
    for i, n in enumerate(ns):
        lines.append(
            f"n={n} trials={counts[i]} diam_norm_mean={d_mean[i]!r} "
            f"diam_norm_se={d_se[i]!r} flood_norm_mean={f_mean[i]!r} "
            f"flood_norm_se={f_se[i]!r}"
        )
    if limits is not None:
        lines.append(f"diam_limit={limits[0]!r}")
        lines.append(f"flood_limit={limits[1]!r}")
    _write_sidecar(spec, lines)


def _render_core(spec):
    rows = _read_rows(spec.csv_path, TRIALS_HEADER)
    ns, c_mean, c_se, counts = _group_by_n(rows, TRIALS_HEADER.index("core_ratio"))
    _, q_mean, q_se, _ = _group_by_n(rows, TRIALS_HEADER.index("q1_tilde_emp"))
    limit = spec.limits[0] if spec.limits else None

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(ns, c_mean, yerr=c_se, marker="o", capsize=3, label="2-core size / n")
    ax.errorbar(ns, q_mean, yerr=q_se, marker="s", capsize=3, label="empirical q1_tilde")
    if limit is not None:
        ax.axhline(limit, ls="--", color="C0", lw=1, label=f"h1(p_hat) {limit:.4g}")
    if spec.log_x:
        ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("core statistics")
    ax.set_title(spec.title or f"2-core convergence ({rows[0][0]})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)

    lines = []
    for i, n in enumerate(ns):
        lines.append(
            f"n={n} trials={counts[i]} core_ratio_mean={c_mean[i]!r} "
            f"core_ratio_se={c_se[i]!r} q1_tilde_mean={q_mean[i]!r}"
        )
    if limit is not None:
        lines.append(f"core_limit={limit!r}")
    _write_sidecar(spec, lines)


def _render_bp(spec):
    rows = _read_rows(spec.csv_path, PROBE_HEADER)
    series: dict[tuple, list] = {}
    for row in rows:
        key = (row[0], int(row[3]))  # (law_id, n)
        series.setdefault(key, []).append(
            (float(row[2]), float(row[6]), float(row[7]))
        )
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    lines = []
    for (law_id, n), pts in sorted(series.items()):
        pts.sort()
        xs = [p[0] for p in pts]
        emp = [p[1] for p in pts]
        theory = [p[2] for p in pts]
        ax.plot(xs, emp, marker="o", label=f"{law_id} n={n} empirical")
        ax.plot(xs, theory, ls="--", label=f"{law_id} n={n} theory -x g")
        for x, e, t in pts:
            lines.append(f"law={law_id} n={n} x={x!r} emp_exponent={e!r} theory_exponent={t!r}")
    ax.set_xlabel("x")
    ax.set_ylabel("log P / log n")
    ax.set_title(spec.title or "split-time tail exponents")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    _write_sidecar(spec, lines)


def render(spec: FigureSpec) -> str:
    """Render the figure and its sidecar; returns the image path.

    Refuses (raising SchemaError, nothing written) any CSV whose header
    deviates from the documented schema or that has no data rows.
    """
    if spec.kind == "convergence":
        _render_convergence(spec)
    elif spec.kind == "core":
        _render_core(spec)
    else:
        _render_bp(spec)
    return spec.out_path
