"""Configuration-model sampling and exponential edge weights.

Multigraphs come from a uniform perfect matching of half-edges (shuffle
the stub array, pair consecutive entries); simple graphs by rejection,
which conditions the matching on simplicity and therefore yields a
uniform simple graph with the given degrees.  G(n,p) and G(n,m) are
sampled directly; their degree sequences are what ties them back to the
configuration-model results.

Everything is a pure function of (inputs, Seed): topology, weights and
any auxiliary choices use independently derived streams, so a harness
can vary weights while freezing topology.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .degree_model import DegreeLaw, DegreeSequence
from .errors import InvalidArgumentError, RejectionFailureError
from .seeding import Seed


@dataclass(frozen=True)
class WeightedGraph:
    """Immutable multigraph with optional positive edge weights.

    Edges are stored as parallel arrays (edge id = index).  Adjacency is
    a CSR view holding, per vertex, (neighbor, edge id) for every
    incident half-edge; a self-loop therefore appears twice at its
    vertex and contributes 2 to the degree.
    """

    n: int
    edge_u: np.ndarray
    edge_v: np.ndarray
    weights: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.weights is not None and self.m and float(self.weights.min()) <= 0.0:
            raise InvalidArgumentError("edge weights must be strictly positive")

    @property
    def m(self) -> int:
        return int(self.edge_u.size)

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.bincount(self.edge_u, minlength=self.n)
        d += np.bincount(self.edge_v, minlength=self.n)
        return d.astype(np.int64)

    @cached_property
    def has_self_loops(self) -> bool:
        return bool(np.any(self.edge_u == self.edge_v))

    @cached_property
    def has_multi_edges(self) -> bool:
        if self.m == 0:
            return False
        lo = np.minimum(self.edge_u, self.edge_v)
        hi = np.maximum(self.edge_u, self.edge_v)
        key = lo.astype(np.int64) * self.n + hi
        return bool(np.unique(key).size < self.m)

    @property
    def is_simple(self) -> bool:
        return not (self.has_self_loops or self.has_multi_edges)

    @cached_property
    def csr(self):
        """(indptr, adj_vertex, adj_edge, adj_weight) arrays."""
        heads = np.concatenate([self.edge_u, self.edge_v])
        tails = np.concatenate([self.edge_v, self.edge_u])
        eids = np.concatenate([np.arange(self.m), np.arange(self.m)])
        order = np.argsort(heads, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, heads + 1, 1)
        indptr = np.cumsum(indptr)
        adj_v = tails[order].astype(np.int32)
        adj_e = eids[order].astype(np.int32)
        if self.weights is not None:
            adj_w = self.weights[adj_e]
        else:
            adj_w = np.ones(adj_e.size)
        return indptr, adj_v, adj_e, adj_w

    def with_weights(self, weights: np.ndarray) -> "WeightedGraph":
        return WeightedGraph(self.n, self.edge_u, self.edge_v, weights, dict(self.meta))

    def neighbors(self, v: int):
        indptr, adj_v, adj_e, _ = self.csr
        return adj_v[indptr[v] : indptr[v + 1]], adj_e[indptr[v] : indptr[v + 1]]

    # -- text dump (round-trips bit-exactly) ---------------------------

    def dumps(self) -> str:
        lines = [f"{self.n} {self.m} {int(self.is_simple)}"]
        w = self.weights
        for i in range(self.m):
            if w is None:
                lines.append(f"{self.edge_u[i]} {self.edge_v[i]}")
            else:
                lines.append(f"{self.edge_u[i]} {self.edge_v[i]} {w[i]:.17g}")
        return "\n".join(lines) + "\n"

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "WeightedGraph":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split()
        if len(head) != 3:
            raise InvalidArgumentError("graph dump header must be 'n m simple_flag'")
        n, m = int(head[0]), int(head[1])
        if len(lines) - 1 != m:
            raise InvalidArgumentError(f"expected {m} edge lines, got {len(lines) - 1}")
        eu = np.empty(m, dtype=np.int64)
        ev = np.empty(m, dtype=np.int64)
        ws = np.empty(m)
        weighted = None
        for i, ln in enumerate(lines[1:]):
            parts = ln.split()
            if weighted is None:
                weighted = len(parts) == 3
            if len(parts) != (3 if weighted else 2):
                raise InvalidArgumentError(f"bad edge line {i + 2}: {ln!r}")
            eu[i], ev[i] = int(parts[0]), int(parts[1])
            if weighted:
                ws[i] = float(parts[2])
        return cls(n, eu, ev, ws if weighted else None)

    @classmethod
    def load(cls, path) -> "WeightedGraph":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())


# ---------------------------------------------------------------------------
# Samplers


def _matching_edges(degrees: np.ndarray, rng: np.random.Generator):
    stubs = np.repeat(np.arange(degrees.size, dtype=np.int64), degrees)
    rng.shuffle(stubs)
    return stubs[0::2].copy(), stubs[1::2].copy()


def sample_multigraph(
    seq: DegreeSequence, seed: Seed, weighted: bool = True, weight_seed: Seed | None = None
) -> WeightedGraph:
    """Uniform configuration-model multigraph for the given degrees.

    The half-edge array is shuffled (Fisher-Yates) and consecutive
    entries paired, which realizes a uniform perfect matching in linear
    time.  Weights, when requested, come from an independent stream
    keyed by edge id.
    """
    rng = seed.derive("topology").generator()
    eu, ev = _matching_edges(seq.degrees, rng)
    g = WeightedGraph(seq.n, eu, ev, None, {"seed": str(seed)})
    if weighted:
        g = assign_weights(g, weight_seed if weight_seed is not None else seed)
    return g


def sample_multigraph_batch(seq: DegreeSequence, seed: Seed, count: int):
    """Edge arrays of ``count`` independent matchings from one stream.

    Used by the micro-law studies that need 10^5 draws of a tiny
    sequence; equivalent to repeated sample_multigraph but without the
    per-draw stream-derivation overhead.
    """
    rng = seed.derive("topology").generator()
    total = seq.total_degree
    stubs = np.repeat(np.arange(seq.n, dtype=np.int64), seq.degrees)
    mats = np.tile(stubs, (count, 1))
    mats = rng.permuted(mats, axis=1)
    return mats[:, 0::2], mats[:, 1::2]


def sample_simple(
    seq: DegreeSequence,
    seed: Seed,
    max_attempts: int = 10**5,
    weighted: bool = True,
) -> WeightedGraph:
    """Uniform simple graph with the given degrees, by rejection.

    Repeats the matching until it contains no self-loop and no repeated
    pair; conditional on simplicity the matching law is uniform over
    simple graphs.  Raises RejectionFailureError (with the observed
    acceptance-rate estimate) if ``max_attempts`` is exhausted.
    """
    if max_attempts < 1:
        raise InvalidArgumentError("max_attempts must be >= 1")
    for attempt in range(max_attempts):
        rng = seed.derive("topology", attempt).generator()
        eu, ev = _matching_edges(seq.degrees, rng)
        if np.any(eu == ev):
            continue
        lo = np.minimum(eu, ev)
        hi = np.maximum(eu, ev)
        key = lo * np.int64(seq.n) + hi
        if np.unique(key).size < eu.size:
            continue
        g = WeightedGraph(
            seq.n, eu, ev, None, {"seed": str(seed), "attempts": attempt + 1}
        )
        return assign_weights(g, seed) if weighted else g
    raise RejectionFailureError(
        f"no simple matching in {max_attempts} attempts",
        attempts=max_attempts,
        acceptance_estimate=0.0 if max_attempts == 0 else 1.0 / (max_attempts + 1),
    )


def assign_weights(graph: WeightedGraph, seed: Seed) -> WeightedGraph:
    """I.i.d. rate-one exponential weights, keyed by edge id.

    Each weight is -ln(U) with U uniform on (0,1); the stream is the
    ``weights`` derivation of ``seed``, so replays are bit-identical and
    independent of how the topology was produced.
    """
    rng = seed.derive("weights").generator()
    m = graph.m
    u = rng.random(m)
    w = -np.log1p(-u)
    while np.any(w == 0.0):  # u drew exactly 0; redraw those slots
        zero = w == 0.0
        w[zero] = -np.log1p(-rng.random(int(zero.sum())))
    return graph.with_weights(w)


# ---------------------------------------------------------------------------
# G(n,p) / G(n,m) by direct edge sampling


@dataclass(frozen=True)
class GnpSample:
    """A sampled Bernoulli/uniform-edge graph after isolated-vertex removal."""

    graph: WeightedGraph
    empirical_law: DegreeLaw | None
    n_original: int
    removed_isolated: int


def _decode_pairs(idx: np.ndarray, n: int):
    """Map linear indices in [0, C(n,2)) to pairs (i < j), row-major."""
    # row i occupies indices [i*n - i*(i+1)/2 - i, ...): solve by search
    starts = np.cumsum(np.concatenate([[0], np.arange(n - 1, 0, -1)]))
    i = np.searchsorted(starts, idx, side="right") - 1
    j = idx - starts[i] + i + 1
    return i.astype(np.int64), j.astype(np.int64)


def _sample_distinct(total: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """First m distinct uniform draws from range(total) (a uniform m-subset)."""
    if m > total:
        raise InvalidArgumentError("cannot sample more pairs than exist")
    seen = {}
    out = np.empty(m, dtype=np.int64)
    filled = 0
    while filled < m:
        batch = rng.integers(0, total, size=max(m - filled, 16) * 2)
        for x in batch:
            if x not in seen:
                seen[x] = None
                out[filled] = x
                filled += 1
                if filled == m:
                    break
    return out


def _finish_gn(
    eu: np.ndarray, ev: np.ndarray, n: int, seed: Seed, weighted: bool
) -> GnpSample:
    deg = np.bincount(eu, minlength=n) + np.bincount(ev, minlength=n)
    keep = deg > 0
    removed = int(n - keep.sum())
    relabel = np.cumsum(keep) - 1
    g = WeightedGraph(int(keep.sum()), relabel[eu], relabel[ev], None, {"seed": str(seed)})
    if weighted and g.m:
        g = assign_weights(g, seed)
    law = g.degrees
    ks, cs = np.unique(law, return_counts=True)
    emp = DegreeLaw(ks, cs / g.n, "explicit") if g.n else None
    return GnpSample(g, emp, n, removed)


def sample_gnm(n: int, m: int, seed: Seed, weighted: bool = True) -> GnpSample:
    """Uniform graph with n labeled vertices and m distinct edges.

    Isolated vertices are removed before analysis (they cannot affect
    the weighted diameter or flooding time); the empirical degree law of
    the kept vertices is reported alongside.
    """
    total = n * (n - 1) // 2
    rng = seed.derive("topology").generator()
    idx = _sample_distinct(total, m, rng)
    eu, ev = _decode_pairs(idx, n)
    return _finish_gn(eu, ev, n, seed, weighted)


def sample_gnp(n: int, p: float, seed: Seed, weighted: bool = True) -> GnpSample:
    """Bernoulli random graph: each of the C(n,2) pairs kept with probability p.

    Realized as a binomial edge count followed by a uniform distinct-edge
    set, which is the same distribution.
    """
    if not (0.0 < p <= 1.0):
        raise InvalidArgumentError("p must lie in (0, 1]")
    total = n * (n - 1) // 2
    rng = seed.derive("topology").generator()
    m = int(rng.binomial(total, p))
    idx = _sample_distinct(total, m, rng)
    eu, ev = _decode_pairs(idx, n)
    return _finish_gn(eu, ev, n, seed, weighted)
