"""k-cores, augmented 2-cores, and degree-one cluster structure.

The 2-core is found by queue peeling (repeatedly deleting vertices of
degree below k); exempting a set W yields the W-augmented core, where W
members survive regardless of degree.  The empirical core statistics
are compared elsewhere against the thinning theory (core size fraction
h1(p_hat), size-biased mass at one equal to lambda_*).

Clusters C_a are the balls grown from a vertex until the first vertex
of forward degree >= 2 enters; their degree d_a + d_u - 2 is what the
lower-bound accounting of the diameter rests on, so they are exposed as
first-class measurements here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .degree_model import DegreeLaw, TheoryConstants, core_theory, size_biased
from .errors import InvalidArgumentError, SupercriticalityError
from .fpp_engine import ExplorationTrace, explore_replay
from .graph_builder import WeightedGraph


@dataclass(frozen=True)
class CoreResult:
    """Surviving subgraph of a (W-augmented) k-core peel."""

    k: int
    alive: np.ndarray  # bool mask over vertices
    edge_alive: np.ndarray  # bool mask over edge ids
    peel_order: np.ndarray  # removed vertices in removal order
    core_degrees: np.ndarray  # induced degree of every vertex (0 if removed)

    @property
    def n_vertices(self) -> int:
        return int(self.alive.sum())

    @property
    def n_edges(self) -> int:
        return int(self.edge_alive.sum())

    def degree_counts(self) -> dict[int, int]:
        d = self.core_degrees[self.alive]
        ks, cs = np.unique(d, return_counts=True)
        return {int(k): int(c) for k, c in zip(ks, cs)}


def k_core(
    graph: WeightedGraph, k: int = 2, W=None, stop_deg1_below: int = 0
) -> CoreResult:
    """Maximal induced subgraph where every vertex outside W has degree >= k.

    Removal order is arbitrary and irrelevant: the result is the unique
    maximal such subgraph (re-peeling it is the identity).  The optional
    ``stop_deg1_below`` (k = 2 only) aborts the peel the first time the
    alive degree-one count drops below the target; that intermediate
    state is order-dependent and serves only as a diagnostic.
    """
    if k < 2:
        raise InvalidArgumentError("k must be >= 2")
    if stop_deg1_below and (k != 2 or W is not None):
        raise InvalidArgumentError("the stopped peel is defined for plain k = 2 only")
    indptr, adj_v, adj_e, _ = graph.csr
    exempt = np.zeros(graph.n, dtype=np.uint8)
    if W is not None:
        W = np.asarray(list(W) if not isinstance(W, np.ndarray) else W, dtype=np.int64)
        if W.size and (W.min() < 0 or W.max() >= graph.n):
            raise InvalidArgumentError("W must be a subset of the vertex set")
        exempt[W] = 1
    alive_u8, order = _kernels.kcore_peel(indptr, adj_v, k, exempt, stop_deg1_below)
    alive = alive_u8.astype(bool)
    edge_alive = alive[graph.edge_u] & alive[graph.edge_v]
    core_deg = np.bincount(graph.edge_u[edge_alive], minlength=graph.n) + np.bincount(
        graph.edge_v[edge_alive], minlength=graph.n
    )
    return CoreResult(k, alive, edge_alive, order, core_deg.astype(np.int64))


def core_subgraph(graph: WeightedGraph, core: CoreResult):
    """Induced weighted subgraph and the old->new vertex index map."""
    relabel = np.cumsum(core.alive) - 1
    eu = relabel[graph.edge_u[core.edge_alive]]
    ev = relabel[graph.edge_v[core.edge_alive]]
    w = graph.weights[core.edge_alive] if graph.weights is not None else None
    sub = WeightedGraph(core.n_vertices, eu, ev, w, {"core_k": core.k})
    old_ids = np.where(core.alive)[0]
    return sub, old_ids


@dataclass(frozen=True)
class CoreStats:
    """Empirical core ratios for comparison with the thinning theory."""

    size_ratio: float
    edge_ratio: float
    degree_histogram: dict[int, int]
    q1_tilde_emp: float
    empty: bool


def core_statistics(core: CoreResult, n: int) -> CoreStats:
    """Size/edge ratios plus the empirical size-biased mass at one.

    q1_tilde is estimated as 2 * (#degree-2 core vertices) / (total core
    degree): the chance that a uniformly chosen core half-edge points at
    a vertex with exactly one further connection.
    """
    if core.n_vertices == 0:
        return CoreStats(0.0, 0.0, {}, 0.0, True)
    hist = core.degree_counts()
    total_deg = 2 * core.n_edges
    q1 = 2.0 * hist.get(2, 0) / total_deg if total_deg else 0.0
    return CoreStats(
        size_ratio=core.n_vertices / n,
        edge_ratio=core.n_edges / n,
        degree_histogram=hist,
        q1_tilde_emp=q1,
        empty=False,
    )


# ---------------------------------------------------------------------------
# Degree-one cluster structure


@dataclass(frozen=True)
class ClusterCa:
    """Ball grown from ``anchor`` until the first forward-degree->=2 vertex."""

    anchor: int
    members: np.ndarray
    terminal: int | None
    deg: int | None  # d_anchor + d_terminal - 2 when the terminal exists
    size: int
    escape_time: float  # T_bar(1); inf when the component died first
    trace: ExplorationTrace = field(compare=False, repr=False, default=None)


def cluster_Ca(graph: WeightedGraph, anchor: int) -> ClusterCa:
    """Grow B_w(anchor, .) until a vertex of forward degree >= 2 enters.

    When the component is exhausted first, the terminal is absent and
    the degree undefined (flagged by None).  Anchors that already have
    degree >= 3 stop at their weight-nearest neighbor of degree >= 3
    reachable without passing one, which the uniform rule handles with
    no special case.
    """
    trace = explore_replay(graph, anchor, stop_gamma=1)
    members = trace.order
    if trace.gamma[-1] >= 1:
        term = int(trace.order[trace.steps])
        deg = int(graph.degrees[anchor] + graph.degrees[term] - 2)
        t1 = float(trace.T[trace.steps])
    else:
        term = None
        deg = None
        t1 = float("inf")
    return ClusterCa(
        anchor=anchor,
        members=members,
        terminal=term,
        deg=deg,
        size=int(members.size),
        escape_time=t1,
        trace=trace,
    )


# ---------------------------------------------------------------------------
# Good-vertex counting


@dataclass(frozen=True)
class GoodVertexCount:
    Y: int
    witnesses: np.ndarray
    candidates: int
    K: int
    threshold: float
    branch: str


def _default_K(law: DegreeLaw, d_min: int) -> int:
    """Smallest K for which deg(C_u) <= K has positive probability.

    deg(C_u) = d_u + d_terminal - 2 with the terminal's forward degree
    size-biased (>= 2 for the d_min <= 2 branches; on the augmented core
    for d_min = 1).
    """
    q = size_biased(law)
    if d_min >= 3:
        return d_min + int(q.ks.min()) - 1
    if d_min == 2:
        ge2 = q.ks[q.ks >= 2]
        if ge2.size == 0:
            raise InvalidArgumentError("no forward degree >= 2 exists for this law")
        return 1 + int(ge2.min())
    ct = core_theory(law)
    if ct.tilde_law is None:
        raise SupercriticalityError("empty asymptotic core: cannot pick K")
    tilde_q_supp = ct.tilde_law.ks - 1  # size-biased support of the core law
    ge2 = tilde_q_supp[tilde_q_supp >= 2]
    return int(ge2.min()) if ge2.size else 2


def count_good_vertices(
    graph: WeightedGraph,
    law: DegreeLaw,
    constants: TheoryConstants,
    eps: float,
    K: int | None = None,
) -> GoodVertexCount:
    """Count minimum-degree vertices with a late escape and a small cluster.

    A vertex u of degree d_min is good when its cluster's escape time
    meets the branch threshold and deg(C_u) <= K:
      d_min >= 3: every incident weight >= (1-eps) log n / d_min (this
                  is exactly T_bar_u(1) >= threshold for such u);
      d_min  = 2: T_bar_u(1) >= (1-eps) log n / (2 (1-q1));
      d_min  = 1: T_bar_u(1) >= (1-eps) log n / (1-lambda_*), measured
                  on the 2-core augmented with all degree-one vertices.
    About n^eps vertices should qualify, which is what makes the lower
    bound on the diameter bite.
    """
    if not constants.supercritical:
        raise SupercriticalityError("good-vertex counting needs nu > 1")
    n = graph.n
    log_n = math.log(n)
    d_min = constants.d_min
    if K is None:
        K = _default_K(law, d_min)

    candidates = np.where(graph.degrees == d_min)[0]
    witnesses = []

    if d_min >= 3:
        threshold = (1.0 - eps) * log_n / d_min
        indptr, adj_v, adj_e, adj_w = graph.csr
        for u in candidates:
            if adj_w[indptr[u] : indptr[u + 1]].min() < threshold:
                continue
            c = cluster_Ca(graph, int(u))
            if c.deg is not None and c.deg <= K:
                witnesses.append(int(u))
        branch = "dmin>=3"
    elif d_min == 2:
        threshold = (1.0 - eps) * log_n / (2.0 * (1.0 - constants.q1))
        for u in candidates:
            c = cluster_Ca(graph, int(u))
            if c.escape_time >= threshold and c.deg is not None and c.deg <= K:
                witnesses.append(int(u))
        branch = "dmin=2"
    else:
        # The lower-bound construction stops the 2-core peel once few
        # degree-one vertices remain; those survivors are the candidate
        # set and the peel state is their augmented core.
        threshold = (1.0 - eps) * log_n / (1.0 - constants.lambda_star)
        target = max(1, int(n ** (1.0 - eps / 2.0)))
        core = k_core(graph, 2, stop_deg1_below=target)
        sub, old_ids = core_subgraph(graph, core)
        pos = -np.ones(n, dtype=np.int64)
        pos[old_ids] = np.arange(old_ids.size)
        candidates = old_ids[sub.degrees == 1]
        for u in candidates:
            c = cluster_Ca(sub, int(pos[u]))
            if c.escape_time >= threshold and c.deg is not None and c.deg <= K:
                witnesses.append(int(u))
        branch = "dmin=1"

    return GoodVertexCount(
        Y=len(witnesses),
        witnesses=np.array(witnesses, dtype=np.int64),
        candidates=int(candidates.size),
        K=K,
        threshold=threshold,
        branch=branch,
    )
