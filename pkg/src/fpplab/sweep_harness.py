"""Seeded Monte Carlo sweeps over degree laws and graph sizes.

One trial = sample a degree sequence, realize a graph in the configured
mode, weight it, measure diameter/flooding plus 2-core statistics and
the ball-growth phase times, and write one CSV row.  Everything derives
from (master seed, n, trial), so any row is independently reproducible.
The per-n aggregates (means, standard errors, theory limits) land in a
companion ``<out>.agg.csv`` and in the JSON-lines mirror.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core_peeler import core_statistics, k_core
from .degree_model import (
    DegreeLaw,
    DegreeSequence,
    TheoryConstants,
    parse_law_arg,
    theory_constants,
)
from .errors import FpplabError, InvalidArgumentError, RejectionFailureError
from .fpp_engine import (
    FppSummary,
    alpha_n,
    beta_n,
    diameter_and_flood,
    explore_replay,
    sssp,
)
from .graph_builder import sample_gnm, sample_gnp, sample_multigraph, sample_simple
from .seeding import Seed

CSV_HEADER = (
    "law,n,trial,seed,mode,diam_w,flood_w,diam_norm,flood_norm,"
    "core_ratio,q1_tilde_emp,t_alpha,t_beta,wall_ms"
)

AGG_HEADER = (
    "law,n,trials,diam_norm_mean,diam_norm_se,flood_norm_mean,flood_norm_se,"
    "core_ratio_mean,q1_tilde_mean,diam_limit,flood_limit"
)


@dataclass(frozen=True)
class SweepConfig:
    law: str
    n_grid: tuple
    trials: int
    master_seed: int
    mode: str = "simple"  # simple | multigraph | gnp | gnm
    diameter_mode: str = "auto"  # auto | exact | anchored | brute
    eps: float = 0.1
    out_csv: str | None = None
    out_jsonl: str | None = None
    workers: int = 1
    max_attempts: int = 10**5

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidArgumentError("trials must be >= 1")
        grid = tuple(int(n) for n in self.n_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidArgumentError("n grid must be increasing")
        object.__setattr__(self, "n_grid", grid)
        if self.mode not in ("simple", "multigraph", "gnp", "gnm"):
            raise InvalidArgumentError(f"unknown graph mode {self.mode!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        return cls(**d)


@dataclass(frozen=True)
class SweepRecord:
    law: str
    n: int
    trial: int
    seed: str
    mode: str
    diam_w: float
    flood_w: float
    diam_norm: float
    flood_norm: float
    core_ratio: float
    q1_tilde_emp: float
    t_alpha: float
    t_beta: float
    wall_ms: int
    extras: dict = field(default_factory=dict, compare=False)

    def csv_row(self) -> str:
        return ",".join(
            [
                self.law,
                str(self.n),
                str(self.trial),
                self.seed,
                self.mode,
                repr(self.diam_w),
                repr(self.flood_w),
                repr(self.diam_norm),
                repr(self.flood_norm),
                repr(self.core_ratio),
                repr(self.q1_tilde_emp),
                repr(self.t_alpha),
                repr(self.t_beta),
                str(self.wall_ms),
            ]
        )

    def json_record(self, config: SweepConfig) -> str:
        d = {k: v for k, v in asdict(self).items() if k != "extras"}
        d.update(self.extras)
        d["kind"] = "trial"
        d["config"] = asdict(config)
        return json.dumps(d, sort_keys=True)


def _realize_graph(law: DegreeLaw, n: int, mode: str, seed: Seed, max_attempts: int):
    if mode in ("simple", "multigraph"):
        seq = DegreeSequence.from_law(law, n, seed.derive("sequence"))
        if mode == "simple":
            return sample_simple(seq, seed, max_attempts=max_attempts)
        return sample_multigraph(seq, seed)
    if mode == "gnp":
        return sample_gnp(n, law.mu / n, seed).graph
    if mode == "gnm":
        return sample_gnm(n, int(round(law.mu * n / 2.0)), seed).graph
    raise InvalidArgumentError(f"unknown graph mode {mode!r}")


def run_trial(
    law: DegreeLaw,
    law_id: str,
    n: int,
    trial: int,
    master: Seed,
    constants: TheoryConstants,
    mode: str,
    diameter_mode: str,
    max_attempts: int = 10**5,
) -> SweepRecord:
    """One fully seeded experiment; raises on generation failure."""
    t0 = time.perf_counter()
    seed = master.derive(n, trial)
    graph = _realize_graph(law, n, mode, seed, max_attempts)
    summary = diameter_and_flood(graph, seed, mode=diameter_mode)
    core = k_core(graph, 2)
    stats = core_statistics(core, graph.n)

    a = alpha_n(graph.n)
    b, clamped = beta_n(graph.n, constants)
    trace = explore_replay(graph, summary.flood_source, max_steps=b)
    t_alpha = float(trace.T[a]) if trace.steps >= a else float("nan")
    t_beta = float(trace.T[b]) if trace.steps >= b else float("nan")

    log_n = math.log(graph.n) if graph.n > 1 else float("nan")
    wall_ms = int(round(1000 * (time.perf_counter() - t0)))
    return SweepRecord(
        law=law_id,
        n=n,
        trial=trial,
        seed=str(seed),
        mode=mode,
        diam_w=summary.diam_w,
        flood_w=summary.flood_w,
        diam_norm=summary.diam_w / log_n,
        flood_norm=summary.flood_w / log_n,
        core_ratio=stats.size_ratio,
        q1_tilde_emp=stats.q1_tilde_emp,
        t_alpha=t_alpha,
        t_beta=t_beta,
        wall_ms=wall_ms,
        extras={
            "flood_w_giant": summary.flood_w_giant,
            "flood_giant_norm": summary.flood_w_giant / log_n,
            "giant_size": summary.giant_size,
            "n_components": summary.n_components,
            "diam_is_exact": summary.diam_is_exact,
            "beta_clamped": clamped,
            "n_effective": graph.n,
            "mean_pair_dist": summary.mean_pair_dist,
        },
    )


@dataclass(frozen=True)
class Aggregate:
    law: str
    n: int
    trials: int
    diam_norm_mean: float
    diam_norm_se: float
    flood_norm_mean: float
    flood_norm_se: float
    core_ratio_mean: float
    q1_tilde_mean: float
    diam_limit: float
    flood_limit: float

    def csv_row(self) -> str:
        return ",".join(
            [
                self.law,
                str(self.n),
                str(self.trials),
                repr(self.diam_norm_mean),
                repr(self.diam_norm_se),
                repr(self.flood_norm_mean),
                repr(self.flood_norm_se),
                repr(self.core_ratio_mean),
                repr(self.q1_tilde_mean),
                repr(self.diam_limit),
                repr(self.flood_limit),
            ]
        )

    def json_record(self, config: SweepConfig) -> str:
        d = asdict(self)
        d["kind"] = "aggregate"
        d["config"] = asdict(config)
        return json.dumps(d, sort_keys=True)


def _se(values: np.ndarray) -> float:
    if values.size < 2:
        return float("nan")
    return float(values.std(ddof=1) / math.sqrt(values.size))


def aggregate_records(records, constants: TheoryConstants, law_id: str) -> list[Aggregate]:
    out = []
    by_n: dict[int, list[SweepRecord]] = {}
    for r in records:
        by_n.setdefault(r.n, []).append(r)
    for n in sorted(by_n):
        rs = by_n[n]
        dn = np.array([r.diam_norm for r in rs])
        fn = np.array([r.flood_norm for r in rs])
        cr = np.array([r.core_ratio for r in rs])
        q1 = np.array([r.q1_tilde_emp for r in rs])
        out.append(
            Aggregate(
                law=law_id,
                n=n,
                trials=len(rs),
                diam_norm_mean=float(dn.mean()),
                diam_norm_se=_se(dn),
                flood_norm_mean=float(fn.mean()),
                flood_norm_se=_se(fn),
                core_ratio_mean=float(cr.mean()),
                q1_tilde_mean=float(q1.mean()),
                diam_limit=constants.diam_limit,
                flood_limit=constants.flood_limit,
            )
        )
    return out


def _limit_worker_threads():
    import numba

    numba.set_num_threads(1)


def _trial_task(config_dict: dict, n: int, trial: int):
    config = SweepConfig.from_dict(config_dict)
    law = parse_law_arg(config.law)
    constants = theory_constants(law)
    try:
        return run_trial(
            law,
            str(law),
            n,
            trial,
            Seed(config.master_seed),
            constants,
            config.mode,
            config.diameter_mode,
            config.max_attempts,
        )
    except RejectionFailureError as exc:
        return {"n": n, "trial": trial, "error": str(exc), "attempts": exc.attempts}


def run_sweep(config: SweepConfig, progress=None):
    """Execute the whole grid; returns (records, aggregates, failures).

    Trial failures (e.g. simple-graph rejection exhaustion) are recorded
    and skipped without aborting the sweep.  Output files are written at
    the end when configured.  Rows are ordered by (n, trial) regardless
    of completion order; with workers > 1, trials run in separate
    processes (each pinned to one compute thread) and the stream is
    identical to the serial one.
    """
    law = parse_law_arg(config.law)
    law_id = str(law)
    constants = theory_constants(law)
    master = Seed(config.master_seed)
    records: list[SweepRecord] = []
    failures: list[dict] = []
    if config.workers > 1:
        import concurrent.futures as cf
        import multiprocessing as mp

        cfg = asdict(config)
        with cf.ProcessPoolExecutor(
            max_workers=config.workers,
            mp_context=mp.get_context("spawn"),
            initializer=_limit_worker_threads,
        ) as pool:
            futures = {}
            for n in config.n_grid:
                for trial in range(config.trials):
                    futures[(n, trial)] = pool.submit(_trial_task, cfg, n, trial)
            for (n, trial) in sorted(futures):
                out = futures[(n, trial)].result()
                if isinstance(out, SweepRecord):
                    records.append(out)
                else:
                    failures.append(out)
            if progress is not None:
                progress(f"{len(records)} trials via {config.workers} workers")
    else:
        for n in config.n_grid:
            t_n = time.perf_counter()
            for trial in range(config.trials):
                try:
                    rec = run_trial(
                        law,
                        law_id,
                        n,
                        trial,
                        master,
                        constants,
                        config.mode,
                        config.diameter_mode,
                        config.max_attempts,
                    )
                    records.append(rec)
                except RejectionFailureError as exc:
                    failures.append(
                        {"n": n, "trial": trial, "error": str(exc), "attempts": exc.attempts}
                    )
            if progress is not None:
                progress(
                    f"n={n}: {config.trials} trials in {time.perf_counter() - t_n:.1f}s"
                )
    aggregates = aggregate_records(records, constants, law_id)
    if config.out_csv:
        write_csv(records, config.out_csv)
        write_agg_csv(aggregates, agg_path(config.out_csv))
    if config.out_jsonl:
        with open(config.out_jsonl, "w", encoding="utf-8") as fh:
            const = {"kind": "constants", "law": law_id}
            const.update({k: v for k, v in constants.as_items()})
            fh.write(json.dumps(const, sort_keys=True) + "\n")
            for r in records:
                fh.write(r.json_record(config) + "\n")
            for a in aggregates:
                fh.write(a.json_record(config) + "\n")
            for f in failures:
                fh.write(json.dumps({"kind": "failure", **f}, sort_keys=True) + "\n")
    return records, aggregates, failures


def agg_path(csv_path: str) -> str:
    return csv_path[:-4] + ".agg.csv" if csv_path.endswith(".csv") else csv_path + ".agg"


def write_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(r.csv_row() + "\n")


def write_agg_csv(aggregates, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(AGG_HEADER + "\n")
        for a in aggregates:
            fh.write(a.csv_row() + "\n")


# ---------------------------------------------------------------------------
# Phase-timing diagnostics


@dataclass(frozen=True)
class PhaseTiming:
    """Ball-growth phase times for a sample of sources.

    gap = T(beta_n) - T(alpha_n).  Asymptotically gap / log n tends to
    1/(2 (nu-1)); at desk scale the finite-size prediction for the same
    quantity is log(beta_n/alpha_n) / (nu-1) because alpha_n = log^3 n
    is not yet negligible against sqrt(n log n).  Both normalizations
    are reported.
    """

    t_alpha: np.ndarray
    t_beta: np.ndarray
    excluded: int
    alpha: int
    beta: int
    beta_clamped: bool

    @property
    def gaps(self) -> np.ndarray:
        return self.t_beta - self.t_alpha

    def summary(self, n: int, constants: TheoryConstants) -> dict:
        gaps = self.gaps
        log_n = math.log(n)
        ref_asym = 1.0 / (2.0 * (constants.nu - 1.0))
        ref_finite = math.log(self.beta / self.alpha) / (constants.nu - 1.0)
        med = float(np.median(gaps)) if gaps.size else float("nan")
        return {
            "sources": int(gaps.size),
            "excluded": self.excluded,
            "alpha": self.alpha,
            "beta": self.beta,
            "beta_clamped": self.beta_clamped,
            "median_gap": med,
            "median_gap_over_logn": med / log_n if gaps.size else float("nan"),
            "asymptotic_ref": ref_asym,
            "median_gap_over_phase_window": (
                med / math.log(self.beta / self.alpha) if gaps.size else float("nan")
            ),
            "growth_rate_ref": 1.0 / (constants.nu - 1.0),
            "finite_n_gap_prediction": ref_finite,
        }


def phase_timing(graph, sources, constants: TheoryConstants) -> PhaseTiming:
    """Exact T(alpha_n), T(beta_n) per source from replay traces.

    Sources whose component holds fewer than beta_n + 1 vertices are
    excluded (counted); the caller sees only completed phase windows.
    """
    n = graph.n
    a = alpha_n(n)
    b, clamped = beta_n(n, constants)
    t_a, t_b = [], []
    excluded = 0
    for src in sources:
        trace = explore_replay(graph, int(src), max_steps=b)
        if trace.steps < b:
            excluded += 1
            continue
        t_a.append(float(trace.T[a]))
        t_b.append(float(trace.T[b]))
    return PhaseTiming(
        t_alpha=np.array(t_a),
        t_beta=np.array(t_b),
        excluded=excluded,
        alpha=a,
        beta=b,
        beta_clamped=clamped,
    )


# ---------------------------------------------------------------------------
# Ball-intersection diagnostic (distance vs T_u + T_v at the beta scale)


def ball_intersection_check(graph, constants: TheoryConstants, pairs: int, seed: Seed) -> dict:
    """Count sampled pairs with dist(u, v) > T_u(beta_n) + T_v(beta_n).

    The claim is that two beta_n-sized balls intersect, making the sum
    an upper bound on the distance; violations are counted and reported,
    never fatal.  Pairs whose components are smaller than beta_n are
    skipped.
    """
    n = graph.n
    b, _ = beta_n(n, constants)
    rng = seed.derive("pairs").generator()
    checked = 0
    skipped = 0
    violations = []
    for _ in range(pairs):
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        tu = explore_replay(graph, u, max_steps=b)
        tv = explore_replay(graph, v, max_steps=b)
        if tu.steps < b or tv.steps < b:
            skipped += 1
            continue
        d = float(sssp(graph, u).dist[v])
        if not math.isinf(d) and d > float(tu.T[b]) + float(tv.T[b]) + 1e-12:
            violations.append((u, v, d))
        checked += 1
    return {"checked": checked, "skipped": skipped, "violations": violations}
