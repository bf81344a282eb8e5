"""Compiled graph kernels (numba).

The sweep engine needs on the order of 10^4 full single-source runs on
graphs with 10^5 vertices per experiment, so the distance code lives
here as nopython kernels over CSR arrays.  Heaps are 8-ary: the sift
touches ~log_8 n cache lines instead of ~log_2 n, which is the dominant
cost at these sizes.

Every kernel is deterministic: thread scheduling only partitions the
source list, never reorders floating-point reductions within a source.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

INF = np.inf


# ---------------------------------------------------------------------------
# 8-ary heap primitives, inlined by hand in the kernels below for speed.
# Keys float64, payload int64.  Pop order for equal keys is unspecified in
# _ecc/_bound kernels (max-reductions are order-free); the full-SSSP kernel
# breaks ties by vertex index to honor the documented discovery order.


@njit(cache=True)
def _dijkstra_ecc(indptr, adj_v, adj_w, src, dist, state, hk, hv):
    """Eccentricity and reach count of one source. state must be zeroed."""
    dist[src] = 0.0
    state[src] = 1
    hk[0] = 0.0
    hv[0] = src
    hn = 1
    ecc = 0.0
    nsettle = 0
    while hn > 0:
        kd = hk[0]
        kv = hv[0]
        hn -= 1
        lk = hk[hn]
        lv = hv[hn]
        i = 0
        while True:
            c0 = 8 * i + 1
            if c0 >= hn:
                break
            cend = c0 + 8
            if cend > hn:
                cend = hn
            c = c0
            mk = hk[c0]
            for j in range(c0 + 1, cend):
                if hk[j] < mk:
                    mk = hk[j]
                    c = j
            if mk < lk:
                hk[i] = mk
                hv[i] = hv[c]
                i = c
            else:
                break
        hk[i] = lk
        hv[i] = lv
        if state[kv] == 2:
            continue
        state[kv] = 2
        ecc = kd
        nsettle += 1
        for e in range(indptr[kv], indptr[kv + 1]):
            u = adj_v[e]
            if state[u] == 2:
                continue
            nd = kd + adj_w[e]
            if state[u] == 0 or nd < dist[u]:
                dist[u] = nd
                state[u] = 1
                i = hn
                hk[i] = nd
                hv[i] = u
                hn += 1
                while i > 0:
                    p = (i - 1) >> 3
                    if hk[p] > hk[i]:
                        tk = hk[p]
                        hk[p] = hk[i]
                        hk[i] = tk
                        tv = hv[p]
                        hv[p] = hv[i]
                        hv[i] = tv
                        i = p
                    else:
                        break
    return ecc, nsettle


@njit(cache=True, parallel=True)
def ecc_from_sources(indptr, adj_v, adj_w, sources, nchunks):
    """Exact eccentricity (max finite distance) per source, in parallel."""
    n = indptr.shape[0] - 1
    ns = sources.shape[0]
    ecc = np.zeros(ns)
    cnt = np.zeros(ns, np.int64)
    csz = (ns + nchunks - 1) // nchunks
    for c in prange(nchunks):
        dist = np.empty(n)
        state = np.zeros(n, np.uint8)
        cap = indptr[n] + 16
        hk = np.empty(cap)
        hv = np.empty(cap, np.int64)
        lo = c * csz
        hi = min(ns, lo + csz)
        for s in range(lo, hi):
            state[:] = 0
            e, k = _dijkstra_ecc(indptr, adj_v, adj_w, sources[s], dist, state, hk, hv)
            ecc[s] = e
            cnt[s] = k
    return ecc, cnt


@njit(cache=True)
def dijkstra_full(indptr, adj_v, adj_w, src):
    """Full SSSP: (dist, order, count).

    order lists settled vertices by increasing distance; exact ties are
    broken toward the smaller vertex index (only reachable with crafted
    equal-weight inputs; exponential weights are a.s. tie-free).
    """
    n = indptr.shape[0] - 1
    dist = np.full(n, INF)
    order = np.full(n, -1, np.int64)
    state = np.zeros(n, np.uint8)
    cap = indptr[n] + 16
    hk = np.empty(cap)
    hv = np.empty(cap, np.int64)
    dist[src] = 0.0
    state[src] = 1
    hk[0] = 0.0
    hv[0] = src
    hn = 1
    nsettle = 0
    while hn > 0:
        kd = hk[0]
        kv = hv[0]
        hn -= 1
        lk = hk[hn]
        lv = hv[hn]
        i = 0
        while True:
            c0 = 8 * i + 1
            if c0 >= hn:
                break
            cend = c0 + 8
            if cend > hn:
                cend = hn
            c = c0
            mk = hk[c0]
            mv = hv[c0]
            for j in range(c0 + 1, cend):
                if hk[j] < mk or (hk[j] == mk and hv[j] < mv):
                    mk = hk[j]
                    mv = hv[j]
                    c = j
            if mk < lk or (mk == lk and mv < lv):
                hk[i] = mk
                hv[i] = mv
                i = c
            else:
                break
        hk[i] = lk
        hv[i] = lv
        if state[kv] == 2:
            continue
        state[kv] = 2
        order[nsettle] = kv
        nsettle += 1
        for e in range(indptr[kv], indptr[kv + 1]):
            u = adj_v[e]
            if state[u] == 2:
                continue
            nd = kd + adj_w[e]
            if state[u] == 0 or nd < dist[u]:
                dist[u] = nd
                state[u] = 1
                i = hn
                hk[i] = nd
                hv[i] = u
                hn += 1
                while i > 0:
                    p = (i - 1) >> 3
                    if hk[p] > hk[i] or (hk[p] == hk[i] and hv[p] > hv[i]):
                        tk = hk[p]
                        hk[p] = hk[i]
                        hk[i] = tk
                        tv = hv[p]
                        hv[p] = hv[i]
                        hv[i] = tv
                        i = p
                    else:
                        break
    return dist, order[:nsettle], nsettle


@njit(cache=True, parallel=True)
def bound_via_hubs(indptr, adj_v, adj_w, hub_mark, hub_ecc, sources, k_hubs, budget, nchunks):
    """Certified eccentricity upper bound per source.

    Runs a truncated Dijkstra from each source until ``k_hubs`` marked
    hubs settle (or ``budget`` settles), and returns
    min over settled hubs h of d(src, h) + hub_ecc[h]; +inf when no hub
    was reached.  By the triangle inequality this bounds ecc(src) from
    above, so any source whose bound is <= a known eccentricity lower
    bound cannot move the diameter.
    """
    n = indptr.shape[0] - 1
    ns = sources.shape[0]
    out = np.full(ns, INF)
    csz = (ns + nchunks - 1) // nchunks
    for c in prange(nchunks):
        dist = np.empty(n)
        state = np.zeros(n, np.uint8)
        touched = np.empty(n, np.int64)
        cap = 8 * budget + 64
        hk = np.empty(cap)
        hv = np.empty(cap, np.int64)
        lo = c * csz
        hi = min(ns, lo + csz)
        for s in range(lo, hi):
            src = sources[s]
            ntouch = 0
            dist[src] = 0.0
            state[src] = 1
            touched[ntouch] = src
            ntouch += 1
            hk[0] = 0.0
            hv[0] = src
            hn = 1
            nsettle = 0
            found = 0
            best = INF
            while hn > 0 and nsettle < budget and found < k_hubs:
                kd = hk[0]
                kv = hv[0]
                hn -= 1
                lk = hk[hn]
                lv = hv[hn]
                i = 0
                while True:
                    c0 = 8 * i + 1
                    if c0 >= hn:
                        break
                    cend = c0 + 8
                    if cend > hn:
                        cend = hn
                    cc = c0
                    mk = hk[c0]
                    for j in range(c0 + 1, cend):
                        if hk[j] < mk:
                            mk = hk[j]
                            cc = j
                    if mk < lk:
                        hk[i] = mk
                        hv[i] = hv[cc]
                        i = cc
                    else:
                        break
                hk[i] = lk
                hv[i] = lv
                if state[kv] == 2:
                    continue
                state[kv] = 2
                nsettle += 1
                if hub_mark[kv] >= 0:
                    found += 1
                    b = kd + hub_ecc[hub_mark[kv]]
                    if b < best:
                        best = b
                for e in range(indptr[kv], indptr[kv + 1]):
                    u = adj_v[e]
                    if state[u] == 2:
                        continue
                    nd = kd + adj_w[e]
                    if state[u] == 0 or nd < dist[u]:
                        if state[u] == 0:
                            touched[ntouch] = u
                            ntouch += 1
                        dist[u] = nd
                        state[u] = 1
                        if hn < cap:
                            i = hn
                            hk[i] = nd
                            hv[i] = u
                            hn += 1
                            while i > 0:
                                p = (i - 1) >> 3
                                if hk[p] > hk[i]:
                                    tk = hk[p]
                                    hk[p] = hk[i]
                                    hk[i] = tk
                                    tv = hv[p]
                                    hv[p] = hv[i]
                                    hv[i] = tv
                                    i = p
                                else:
                                    break
            out[s] = best
            for t in range(ntouch):
                state[touched[t]] = 0
    return out


@njit(cache=True)
def components(indptr, adj_v):
    """Connected component labels and sizes (BFS)."""
    n = indptr.shape[0] - 1
    label = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    ncomp = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = ncomp
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = queue[head]
            head += 1
            for e in range(indptr[v], indptr[v + 1]):
                u = adj_v[e]
                if label[u] < 0:
                    label[u] = ncomp
                    queue[tail] = u
                    tail += 1
        ncomp += 1
    sizes = np.zeros(ncomp, np.int64)
    for v in range(n):
        sizes[label[v]] += 1
    return label, sizes


@njit(cache=True)
def replay_trace(indptr, adj_v, adj_w, deg, src, max_steps, stop_gamma):
    """Exploration statistics on a realized weighted graph.

    Grows the ball around ``src`` in order of weighted distance and
    records, per settled vertex i >= 1: discovery time T(i), forward
    degree dhat(i) = deg - 1, tree excess X(i) (edges inside the ball
    minus ball size plus one), and gamma(i) (count of forward degrees
    >= 2).  Stops when the component is exhausted, after ``max_steps``
    settles, or once gamma reaches ``stop_gamma`` (0 disables).

    Returns (T, dhat, X, gamma, order, steps, exhausted) where arrays
    have length steps+1 and index 0 is the initial state (dhat[0] is the
    source degree for reference; X[0] counts self-loops at the source).
    """
    n = indptr.shape[0] - 1
    cap = max_steps if max_steps < n - 1 else n - 1
    T = np.zeros(cap + 1)
    dhat = np.zeros(cap + 1, np.int64)
    X = np.zeros(cap + 1, np.int64)
    gamma = np.zeros(cap + 1, np.int64)
    order = np.empty(cap + 1, np.int64)
    order[0] = src

    dist = np.full(n, INF)
    state = np.zeros(n, np.uint8)
    hcap = indptr[n] + 16
    hk = np.empty(hcap)
    hv = np.empty(hcap, np.int64)

    # initial state: self-loops at the source are inside-ball edges
    selfloops2 = 0
    for e in range(indptr[src], indptr[src + 1]):
        if adj_v[e] == src:
            selfloops2 += 1
    dhat[0] = deg[src]
    X[0] = selfloops2 // 2

    dist[src] = 0.0
    state[src] = 2
    hn = 0
    for e in range(indptr[src], indptr[src + 1]):
        u = adj_v[e]
        if u == src:
            continue
        nd = adj_w[e]
        if state[u] == 0 or nd < dist[u]:
            dist[u] = nd
            state[u] = 1
            i = hn
            hk[i] = nd
            hv[i] = u
            hn += 1
            while i > 0:
                p = (i - 1) >> 3
                if hk[p] > hk[i] or (hk[p] == hk[i] and hv[p] > hv[i]):
                    tk = hk[p]
                    hk[p] = hk[i]
                    hk[i] = tk
                    tv = hv[p]
                    hv[p] = hv[i]
                    hv[i] = tv
                    i = p
                else:
                    break

    steps = 0
    while hn > 0 and steps < cap:
        kd = hk[0]
        kv = hv[0]
        hn -= 1
        lk = hk[hn]
        lv = hv[hn]
        i = 0
        while True:
            c0 = 8 * i + 1
            if c0 >= hn:
                break
            cend = c0 + 8
            if cend > hn:
                cend = hn
            c = c0
            mk = hk[c0]
            mv = hv[c0]
            for j in range(c0 + 1, cend):
                if hk[j] < mk or (hk[j] == mk and hv[j] < mv):
                    mk = hk[j]
                    mv = hv[j]
                    c = j
            if mk < lk or (mk == lk and mv < lv):
                hk[i] = mk
                hv[i] = mv
                i = c
            else:
                break
        hk[i] = lk
        hv[i] = lv
        if state[kv] == 2:
            continue
        state[kv] = 2
        steps += 1
        # edges from kv into the current ball: settled neighbors plus own
        # self-loops (each self-loop appears twice in the adjacency)
        back = 0
        self2 = 0
        for e in range(indptr[kv], indptr[kv + 1]):
            u = adj_v[e]
            if u == kv:
                self2 += 1
            elif state[u] == 2:
                back += 1
        edges_new = back + self2 // 2
        T[steps] = kd
        dhat[steps] = deg[kv] - 1
        X[steps] = X[steps - 1] + edges_new - 1
        g = gamma[steps - 1]
        if deg[kv] - 1 >= 2:
            g += 1
        gamma[steps] = g
        order[steps] = kv
        if stop_gamma > 0 and g >= stop_gamma:
            break
        for e in range(indptr[kv], indptr[kv + 1]):
            u = adj_v[e]
            if state[u] == 2:
                continue
            nd = kd + adj_w[e]
            if state[u] == 0 or nd < dist[u]:
                dist[u] = nd
                state[u] = 1
                i = hn
                hk[i] = nd
                hv[i] = u
                hn += 1
                while i > 0:
                    p = (i - 1) >> 3
                    if hk[p] > hk[i] or (hk[p] == hk[i] and hv[p] > hv[i]):
                        tk = hk[p]
                        hk[p] = hk[i]
                        hk[i] = tk
                        tv = hv[p]
                        hv[p] = hv[i]
                        hv[i] = tv
                        i = p
                    else:
                        break
    # the heap may still hold stale (already settled) entries; the trace is
    # exhausted exactly when no unsettled vertex remains on it
    exhausted = True
    for i in range(hn):
        if state[hv[i]] != 2:
            exhausted = False
            break
    return (
        T[: steps + 1],
        dhat[: steps + 1],
        X[: steps + 1],
        gamma[: steps + 1],
        order[: steps + 1],
        steps,
        exhausted,
    )


@njit(cache=True)
def kcore_peel(indptr, adj_v, k, exempt, stop_deg1_below):
    """Peel to the ``exempt``-augmented k-core.

    Repeatedly removes vertices of current degree < k that are not
    exempt (queue-based, so linear in edges).  Returns the surviving
    mask and the removal order.

    ``stop_deg1_below`` > 0 (only meaningful for k = 2, no exempts)
    aborts the peel the first time the number of alive degree-one
    vertices drops strictly below that target; 0 runs to completion.
    """
    n = indptr.shape[0] - 1
    degree = np.empty(n, np.int64)
    deg1 = 0
    for v in range(n):
        degree[v] = indptr[v + 1] - indptr[v]
        if degree[v] == 1:
            deg1 += 1
    alive = np.ones(n, np.uint8)
    queue = np.empty(n, np.int64)
    head = 0
    tail = 0
    queued = np.zeros(n, np.uint8)
    for v in range(n):
        if degree[v] < k and exempt[v] == 0:
            queue[tail] = v
            tail += 1
            queued[v] = 1
    if stop_deg1_below > 0 and deg1 < stop_deg1_below:
        return alive, queue[:0]
    while head < tail:
        v = queue[head]
        head += 1
        alive[v] = 0
        if degree[v] == 1:
            deg1 -= 1
        for e in range(indptr[v], indptr[v + 1]):
            u = adj_v[e]
            if alive[u] == 0 or u == v:
                continue
            if degree[u] == 1:
                deg1 -= 1
            degree[u] -= 1
            if degree[u] == 1:
                deg1 += 1
            if degree[u] < k and exempt[u] == 0 and queued[u] == 0:
                queue[tail] = u
                tail += 1
                queued[u] = 1
        if stop_deg1_below > 0 and deg1 < stop_deg1_below:
            return alive, queue[:head]
    return alive, queue[:tail]
