"""Exact weighted distances, diameter/flooding, and exploration traces.

Distances are exact Dijkstra runs (compiled kernels, 64-bit floats, no
approximation).  The diameter is the maximum finite distance over all
ordered pairs; the default engine evaluates every vertex's eccentricity
either brute-force (small graphs) or through a certified-pruning pass:
full runs from a hub sample give per-vertex upper bounds
ecc(u) <= d(u, hub) + ecc(hub), and only vertices whose bound exceeds
the running maximum get their own full run.  The result equals the
brute-force maximum exactly; pruning only skips vertices whose bound
already proves they cannot move it.

The exploration statistics (discovery times, forward degrees, tree
excess, boundary counts) are produced in two ways: replayed on a
realized weighted graph, and by simultaneous construction of graph and
ball, whose trace has the same law by the memoryless property of
exponential weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import numba

from . import _kernels
from .degree_model import DegreeSequence, TheoryConstants
from .errors import InvalidArgumentError
from .graph_builder import WeightedGraph
from .seeding import Seed


def _nchunks(n_sources: int) -> int:
    return max(1, min(n_sources, 8 * numba.get_num_threads()))


def alpha_n(n: int) -> int:
    """Early-phase step count log^3 n (natural log), at least 1."""
    return max(1, int(math.log(n) ** 3))


def beta_n(n: int, constants: TheoryConstants) -> tuple[int, bool]:
    """Mid-phase step count 3 sqrt(mu/(nu-1) n log n), clamped to n-1.

    Returns (value, clamped_flag); small n can push the formula past the
    component budget.
    """
    raw = 3.0 * math.sqrt(constants.mu / (constants.nu - 1.0) * n * math.log(n))
    b = int(math.ceil(raw))
    if b > n - 1:
        return n - 1, True
    return b, False


# ---------------------------------------------------------------------------
# Single-source distances


@dataclass(frozen=True)
class DistanceVector:
    """Exact distances from one source; unreachable vertices hold +inf."""

    source: int
    dist: np.ndarray
    order: np.ndarray  # settled vertices by increasing distance

    @property
    def reached(self) -> int:
        return int(self.order.size)

    def eccentricity(self) -> float:
        return float(self.dist[self.order[-1]]) if self.reached else 0.0


def sssp(graph: WeightedGraph, source: int) -> DistanceVector:
    """Exact single-source shortest weighted distances.

    Self-loops never relax; parallel edges are all relaxed (minimum
    wins), consistent with path distance on a multigraph.
    """
    if not (0 <= source < graph.n):
        raise InvalidArgumentError(f"source {source} outside [0, {graph.n})")
    indptr, adj_v, adj_e, adj_w = graph.csr
    dist, order, _ = _kernels.dijkstra_full(indptr, adj_v, adj_w, source)
    return DistanceVector(source, dist, order)


# ---------------------------------------------------------------------------
# Diameter and flooding


@dataclass(frozen=True)
class FppSummary:
    diam_w: float
    flood_w: float
    flood_source: int
    diam_is_exact: bool
    flood_w_giant: float
    giant_flood_source: int
    giant_size: int
    n_components: int
    mean_pair_dist: float
    pairs_sampled: int
    pairs_infinite: int
    mode: str
    sssp_runs: int

    def as_items(self):
        return [
            ("diam_w", self.diam_w),
            ("flood_w", self.flood_w),
            ("flood_source", self.flood_source),
            ("diam_is_exact", int(self.diam_is_exact)),
            ("flood_w_giant", self.flood_w_giant),
            ("giant_flood_source", self.giant_flood_source),
            ("giant_size", self.giant_size),
            ("n_components", self.n_components),
            ("mean_pair_dist", self.mean_pair_dist),
            ("pairs_sampled", self.pairs_sampled),
            ("pairs_infinite", self.pairs_infinite),
            ("mode", self.mode),
            ("sssp_runs", self.sssp_runs),
        ]


_BRUTE_LIMIT = 3000  # components up to this size take the all-sources path
_EXACT_LIMIT = 2 * 10**5  # beyond this, "auto" switches to the anchored bound


def _ecc_of(graph, sources) -> np.ndarray:
    indptr, adj_v, adj_e, adj_w = graph.csr
    src = np.asarray(sources, dtype=np.int64)
    if src.size == 0:
        return np.zeros(0)
    ecc, _ = _kernels.ecc_from_sources(indptr, adj_v, adj_w, src, _nchunks(src.size))
    return ecc


def _exact_giant_diameter(graph, gverts: np.ndarray, seed: Seed) -> tuple[float, int]:
    """Exact max eccentricity over a (large) component via certified pruning.

    Full runs from a uniform hub sample give ecc(hub) exactly and, via the
    triangle inequality, a certified upper bound
    ecc(u) <= min_h d(u, h) + ecc(h) for everyone else.  Vertices whose
    bound exceeds the running maximum are evaluated exactly in blocks of
    decreasing bound, so the maximum rises to the diameter after the
    first blocks and the tail of candidates is certified away.  The
    result equals the brute-force maximum exactly.
    """
    indptr, adj_v, adj_e, adj_w = graph.csr
    ng = gverts.size
    if ng <= _BRUTE_LIMIT:
        return float(_ecc_of(graph, gverts).max()), ng
    h = max(64, min(ng // 25, 20000))
    rng = seed.derive("hubs").generator()
    hubs = rng.choice(gverts, size=h, replace=False).astype(np.int64)
    ecc_h = _ecc_of(graph, hubs)
    lb = float(ecc_h.max())
    hub_mark = np.full(graph.n, -1, dtype=np.int64)
    hub_mark[hubs] = np.arange(h)
    non_hubs = gverts[hub_mark[gverts] < 0].astype(np.int64)
    budget = max(2048, 64 * ng // h)
    bounds = _kernels.bound_via_hubs(
        indptr, adj_v, adj_w, hub_mark, ecc_h, non_hubs, 4, budget, _nchunks(non_hubs.size)
    )
    alive = bounds > lb
    cand = non_hubs[alive]
    cand_bounds = bounds[alive]
    sort = np.lexsort((cand, -cand_bounds))  # bound desc, index asc for ties
    cand = cand[sort]
    cand_bounds = cand_bounds[sort]
    runs = h
    block = 512
    for start in range(0, cand.size, block):
        if cand_bounds[start] <= lb:
            break  # sorted: everything from here on is certified below lb
        chunk = cand[start : start + block]
        keep = cand_bounds[start : start + block] > lb
        chunk = chunk[keep]
        if chunk.size == 0:
            continue
        lb = max(lb, float(_ecc_of(graph, chunk).max()))
        runs += chunk.size
    return lb, runs


def diameter_and_flood(
    graph: WeightedGraph,
    flood_seed: Seed,
    mode: str = "auto",
    n_anchor: int = 64,
    n_pairs: int = 64,
) -> FppSummary:
    """Weighted diameter (max over finite pairs) and flooding time.

    The flooding source is uniform over all vertices; because a source
    in a small component trivializes the statistic when d_min <= 2, a
    companion flood from a uniform giant-component vertex is reported
    alongside.  mode: "exact" | "anchored" | "brute" | "auto" (exact up
    to 2e5 vertices, anchored beyond).  Anchored mode reports a labeled
    lower bound on the diameter (eccentricities from minimum-degree
    anchors plus a double sweep), never silently substituted for the
    exact value: diam_is_exact is False.
    """
    n = graph.n
    if n == 0 or graph.m == 0:
        return FppSummary(0.0, 0.0, 0, True, 0.0, 0, n and 1, n, float("nan"), 0, 0, mode, 0)
    if mode == "auto":
        mode = "exact" if n <= _EXACT_LIMIT else "anchored"
    indptr, adj_v, adj_e, adj_w = graph.csr
    labels, sizes = _kernels.components(indptr, adj_v)
    giant = int(np.argmax(sizes))
    gverts = np.where(labels == giant)[0].astype(np.int64)
    runs = 0

    # flooding: ecc of a uniform source (and of a uniform giant source)
    rng = flood_seed.derive("flood").generator()
    flood_source = int(rng.integers(0, n))
    giant_flood_source = int(gverts[rng.integers(0, gverts.size)])
    flood_w = float(_ecc_of(graph, [flood_source])[0])
    flood_w_giant = float(_ecc_of(graph, [giant_flood_source])[0])
    runs += 2

    if mode == "brute":
        ecc = _ecc_of(graph, np.arange(n))
        diam = float(ecc.max())
        exact = True
        runs += n
    elif mode == "exact":
        diam = 0.0
        small = np.where(labels != giant)[0].astype(np.int64)
        if small.size:
            diam = float(_ecc_of(graph, small).max())
            runs += small.size
        dg, r = _exact_giant_diameter(graph, gverts, flood_seed)
        diam = max(diam, dg)
        runs += r
        exact = True
    elif mode == "anchored":
        dmin_verts = np.where(graph.degrees == graph.degrees.min())[0]
        anchors = dmin_verts[:n_anchor].astype(np.int64)
        lb = float(_ecc_of(graph, anchors).max()) if anchors.size else 0.0
        runs += anchors.size
        # double sweep: farthest vertex from a uniform start, then its ecc
        dv = sssp(graph, flood_source)
        far = int(dv.order[-1])
        lb = max(lb, float(_ecc_of(graph, [far])[0]))
        runs += 2
        diam = max(lb, flood_w, flood_w_giant)
        exact = False
    else:
        raise InvalidArgumentError(f"unknown diameter mode {mode!r}")

    # typical-distance sample over uniform pairs
    prng = flood_seed.derive("pairs").generator()
    srcs = prng.integers(0, n, size=n_pairs)
    dsts = prng.integers(0, n, size=n_pairs)
    vals = []
    infinite = 0
    for s, t in zip(srcs, dsts):
        d = sssp(graph, int(s)).dist[int(t)]
        runs += 1
        if np.isfinite(d):
            vals.append(float(d))
        else:
            infinite += 1
    mean_pair = float(np.mean(vals)) if vals else float("nan")

    return FppSummary(
        diam_w=diam,
        flood_w=flood_w,
        flood_source=flood_source,
        diam_is_exact=exact,
        flood_w_giant=flood_w_giant,
        giant_flood_source=giant_flood_source,
        giant_size=int(sizes[giant]),
        n_components=int(sizes.size),
        mean_pair_dist=mean_pair,
        pairs_sampled=int(n_pairs - infinite),
        pairs_infinite=infinite,
        mode=mode,
        sssp_runs=runs,
    )


# ---------------------------------------------------------------------------
# Exploration traces


@dataclass(frozen=True)
class ExplorationTrace:
    """Per-step ball-growth records from one source.

    Index i = 0 is the initial state; i >= 1 the i-th discovered vertex.
    Invariants (exact, every step):
      S_hat[i] = d_source + sum_{j<=i} d_hat[j] - i,
      S[i] = S_hat[i] - 2 X[i],
      X and gamma non-decreasing, T strictly increasing,
      S[I] = 0 exactly when the component is exhausted.
    """

    source: int
    T: np.ndarray
    d_hat: np.ndarray  # d_hat[0] holds the source degree
    X: np.ndarray
    gamma: np.ndarray
    order: np.ndarray
    exhausted: bool
    n: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def steps(self) -> int:
        return int(self.T.size - 1)

    @property
    def I_a(self) -> int | None:
        """Component size minus one; None if the trace was truncated."""
        return self.steps if self.exhausted else None

    @property
    def truncated(self) -> bool:
        return not self.exhausted

    @property
    def S_hat(self) -> np.ndarray:
        d_a = self.d_hat[0]
        inc = np.concatenate([[0], np.cumsum(self.d_hat[1:])])
        return d_a + inc - np.arange(self.T.size)

    @property
    def S(self) -> np.ndarray:
        return self.S_hat - 2 * self.X

    def T_bar(self, k: int) -> float:
        """First time the ball holds k vertices of forward degree >= 2."""
        idx = int(np.searchsorted(self.gamma, k, side="left"))
        if idx >= self.gamma.size or self.gamma[idx] < k:
            return float("inf")
        return float(self.T[idx])

    def dump_text(self) -> str:
        S_hat = self.S_hat
        S = self.S
        lines = []
        for i in range(self.T.size):
            lines.append(
                f"{i} {self.T[i]:.17g} {self.d_hat[i]} {S_hat[i]} {self.X[i]} "
                f"{S[i]} {self.gamma[i]}"
            )
        return "\n".join(lines) + "\n"


def explore_replay(
    graph: WeightedGraph, source: int, max_steps: int | None = None, stop_gamma: int = 0
) -> ExplorationTrace:
    """Grow the ball around ``source`` on the realized graph.

    Discovery times are the sorted finite distances from ``source``; the
    other fields are reconstructed from the ball boundary as each vertex
    settles.
    """
    if not (0 <= source < graph.n):
        raise InvalidArgumentError(f"source {source} outside [0, {graph.n})")
    indptr, adj_v, adj_e, adj_w = graph.csr
    cap = graph.n - 1 if max_steps is None else min(max_steps, graph.n - 1)
    T, dhat, X, gamma, order, steps, exhausted = _kernels.replay_trace(
        indptr, adj_v, adj_w, graph.degrees, source, cap, stop_gamma
    )
    return ExplorationTrace(
        source=source,
        T=T,
        d_hat=dhat,
        X=X,
        gamma=gamma,
        order=order,
        exhausted=bool(exhausted),
        n=graph.n,
    )


def explore_construct(
    seq: DegreeSequence, source: int, seed: Seed, horizon: int | None = None
) -> tuple[ExplorationTrace, WeightedGraph]:
    """Build graph and ball simultaneously (continuous-time exploration).

    Maintains the list L of unmatched half-edges of the current ball.
    Each step waits Exp(|L|), matches a uniform half-edge of L to a
    uniform half-edge outside L, then walks the new vertex's remaining
    half-edges: each goes back into L with probability |L|/(unmatched-1)
    (closing a cycle, weight revealed immediately) and joins L otherwise.
    The trace law equals explore_replay on a fresh weighted multigraph.

    Returns the trace and the partial graph of revealed edges (every
    revealed edge has both endpoints inside the ball; replaying on the
    partial graph reproduces the trace).
    """
    n = seq.n
    if not (0 <= source < n):
        raise InvalidArgumentError(f"source {source} outside [0, {n})")
    cap = n - 1 if horizon is None else min(horizon, n - 1)
    rng = seed.derive("construct").generator()
    degrees = seq.degrees
    m_half = seq.total_degree

    owner = np.repeat(np.arange(n, dtype=np.int64), degrees)
    starts = np.concatenate([[0], np.cumsum(degrees)])

    # outside pool: half-edges of vertices not yet in the ball (swap-remove)
    pool = list(range(m_half))
    pool_pos = list(range(m_half))

    def pool_remove(h):
        i = pool_pos[h]
        last = pool[-1]
        pool[i] = last
        pool_pos[last] = i
        pool.pop()
        pool_pos[h] = -1

    L: list[int] = []
    L_pos = [-1] * m_half
    arrival = [0.0] * m_half

    def L_add(h, t):
        L_pos[h] = len(L)
        L.append(h)
        arrival[h] = t

    def L_remove(h):
        i = L_pos[h]
        last = L[-1]
        L[i] = last
        L_pos[last] = i
        L.pop()
        L_pos[h] = -1

    matched = np.zeros(m_half, dtype=bool)
    edges_rev: list[tuple[int, int, float]] = []
    x_edges = 0

    def unmatched_count():
        return m_half - 2 * x_edges

    t = 0.0
    T = [0.0]
    dhat = [int(degrees[source])]
    X = [0]
    gamma = [0]
    order = [source]

    def absorb(v, t_now, discovery_half=None):
        """Move v into the ball; returns edges revealed (incl. discovery).

        A back edge consumes a half-edge of L whose clock has been running
        since its arrival without firing; by memorylessness its realized
        weight is the elapsed time plus a fresh exponential, which keeps
        the partial graph consistent with the trace (replaying it
        reproduces the same discoveries at the same times).
        """
        nonlocal x_edges
        new_edges = 0
        for h in range(starts[v], starts[v + 1]):
            if pool_pos[h] >= 0:
                pool_remove(h)
        for h in range(starts[v], starts[v + 1]):
            if matched[h] or h == discovery_half:
                continue
            ell = len(L)
            u_cnt = unmatched_count()
            if ell > 0 and rng.random() < ell / (u_cnt - 1):
                g = L[int(rng.integers(0, ell))]
                L_remove(g)
                matched[h] = True
                matched[g] = True
                x_edges += 1
                w = (t_now - arrival[g]) + _exp_weight(rng)
                edges_rev.append((v, int(owner[g]), w))
                new_edges += 1
            else:
                L_add(h, t_now)
        return new_edges

    # step 0: source enters the ball; self-matches among its own half-edges
    absorb(source, 0.0)
    in_ball_edges = x_edges  # all revealed edges so far are self-loops at source
    X[0] = in_ball_edges

    steps = 0
    while L and steps < cap:
        ell = len(L)
        t += float(rng.exponential(1.0 / ell))
        h_i = L[int(rng.integers(0, ell))]
        L_remove(h_i)
        g = pool[int(rng.integers(0, len(pool)))]
        v = int(owner[g])
        pool_remove(g)
        matched[h_i] = True
        matched[g] = True
        x_edges += 1
        w_disc = t - arrival[h_i]
        edges_rev.append((int(owner[h_i]), v, w_disc))
        back = absorb(v, t, discovery_half=g)
        steps += 1
        T.append(t)
        dhat.append(int(degrees[v]) - 1)
        X.append(X[-1] + back)  # discovery edge is the tree edge; back edges are excess
        gamma.append(gamma[-1] + (1 if degrees[v] - 1 >= 2 else 0))
        order.append(v)

    exhausted = not L
    eu = np.array([e[0] for e in edges_rev], dtype=np.int64)
    ev = np.array([e[1] for e in edges_rev], dtype=np.int64)
    ws = np.array([max(e[2], 5e-324) for e in edges_rev])
    partial = WeightedGraph(n, eu, ev, ws if ws.size else None, {"partial": True})
    trace = ExplorationTrace(
        source=source,
        T=np.array(T),
        d_hat=np.array(dhat, dtype=np.int64),
        X=np.array(X, dtype=np.int64),
        gamma=np.array(gamma, dtype=np.int64),
        order=np.array(order, dtype=np.int64),
        exhausted=exhausted,
        n=n,
        meta={"boundary_final": len(L)},
    )
    return trace, partial


def _exp_weight(rng) -> float:
    w = -math.log1p(-rng.random())
    while w == 0.0:
        w = -math.log1p(-rng.random())
    return w


# ---------------------------------------------------------------------------
# Event diagnostics


@dataclass(frozen=True)
class EventFlags:
    """Literal evaluation of the growth events on one trace.

    R_a   : S(k) >= d_min + gamma(k) for all 0 <= k <= alpha_n - 1
    R'_a  : S(k) >= gamma(k)         for all 0 <= k <= alpha_n - 1
    R''_a : S(k) >= (nu-1)/(1+eps) k for all alpha_n <= k <= beta_n
    None means indeterminate: the trace was truncated before the window.
    """

    R_a: bool | None
    R_prime: bool | None
    R_dprime: bool | None
    alpha: int
    beta: int
    beta_clamped: bool
    eps: float


def trace_events(
    trace: ExplorationTrace, constants: TheoryConstants, n: int, eps: float = 0.1
) -> EventFlags:
    a = alpha_n(n)
    b, clamped = beta_n(n, constants)
    S = trace.S
    gamma = trace.gamma
    steps = trace.steps
    d_min = constants.d_min

    def padded(arr, k, fill):
        return arr[k] if k <= steps else fill

    if trace.truncated and steps < a - 1:
        return EventFlags(None, None, None, a, b, clamped, eps)

    gamma_end = int(gamma[-1])
    r_a = True
    r_p = True
    for k in range(0, a):
        s_k = padded(S, k, 0)
        g_k = padded(gamma, k, gamma_end)
        if s_k < d_min + g_k:
            r_a = False
        if s_k < g_k:
            r_p = False
        if not r_a and not r_p:
            break

    if trace.truncated and steps < b:
        return EventFlags(r_a, r_p, None, a, b, clamped, eps)
    rate = (constants.nu - 1.0) / (1.0 + eps)
    r_pp = True
    for k in range(a, b + 1):
        if padded(S, k, 0) < rate * k:
            r_pp = False
            break
    return EventFlags(r_a, r_p, r_pp, a, b, clamped, eps)
