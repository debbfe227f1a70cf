"""Transportation simplex on the dense bipartite graph (numba).

Basis = spanning tree over supply nodes 0..n-1 and demand nodes n..n+m-1,
stored child-side: parent[], the tree arc's (supply, demand) endpoints, and
its flow.  Entering arcs come from a block scan of the reduced costs
(most-negative within the block); after a configurable run of degenerate
pivots the rule degrades to first-negative (Bland style).  Potentials are
recomputed from the tree after every pivot, so no numerical drift
accumulates across iterations.
"""

import numpy as np
from numba import njit

OPTIMAL = 0
ITER_CAP = 1


@njit(cache=True)
def solve(C, a, b, max_iter, tol, bland_after):
    """Min-cost transportation plan for supplies a, demands b (balanced).

    Returns (status, parent, arc_i, arc_j, flow, u, v, n_iter); the basis
    arcs are (arc_i[w], arc_j[w]) with flow flow[w] for every non-root node w.
    """
    n, m = C.shape
    nn = n + m

    parent = np.full(nn, -1, np.int64)
    arc_i = np.full(nn, -1, np.int64)
    arc_j = np.full(nn, -1, np.int64)
    flow = np.zeros(nn, np.float64)
    depth = np.zeros(nn, np.int64)
    u = np.zeros(n, np.float64)
    v = np.zeros(m, np.float64)

    # --- northwest-corner basis ---
    nb = nn - 1
    bi = np.empty(nb, np.int64)
    bj = np.empty(nb, np.int64)
    bf = np.empty(nb, np.float64)
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    for k in range(nb):
        f = ra[i] if ra[i] < rb[j] else rb[j]
        bi[k] = i
        bj[k] = j
        bf[k] = f
        ra[i] -= f
        rb[j] -= f
        if i == n - 1:
            j += 1
        elif j == m - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1

    # --- tree structure from the basis (BFS from node 0) ---
    head = np.full(nn, -1, np.int64)
    nxt = np.full(2 * nb, -1, np.int64)
    to = np.full(2 * nb, -1, np.int64)
    eai = np.full(2 * nb, -1, np.int64)
    eaj = np.full(2 * nb, -1, np.int64)
    efl = np.full(2 * nb, 0.0, np.float64)
    order = np.empty(nn, np.int64)

    def_build = True
    if def_build:
        for k in range(nb):
            s = bi[k]
            d = n + bj[k]
            e = 2 * k
            to[e] = d
            nxt[e] = head[s]
            head[s] = e
            eai[e] = bi[k]
            eaj[e] = bj[k]
            efl[e] = bf[k]
            e = 2 * k + 1
            to[e] = s
            nxt[e] = head[d]
            head[d] = e
            eai[e] = bi[k]
            eaj[e] = bj[k]
            efl[e] = bf[k]
        parent[0] = 0
        order[0] = 0
        qt = 1
        qh = 0
        seen = np.zeros(nn, np.uint8)
        seen[0] = 1
        while qh < qt:
            x = order[qh]
            qh += 1
            e = head[x]
            while e != -1:
                y = to[e]
                if seen[y] == 0:
                    seen[y] = 1
                    parent[y] = x
                    arc_i[y] = eai[e]
                    arc_j[y] = eaj[e]
                    flow[y] = efl[e]
                    depth[y] = depth[x] + 1
                    order[qt] = y
                    qt += 1
                e = nxt[e]
        u[0] = 0.0
        for q in range(1, nn):
            x = order[q]
            if x >= n:
                v[x - n] = C[arc_i[x], arc_j[x]] - u[arc_i[x]]
            else:
                u[x] = C[arc_i[x], arc_j[x]] - v[arc_j[x]]

    total = n * m
    block = int(np.sqrt(total)) + 1  # LEMON-style block pricing
    if block > total:
        block = total
    cursor = 0
    degen_run = 0
    it = 0
    while True:
        it += 1
        if it > max_iter:
            return ITER_CAP, parent, arc_i, arc_j, flow, u, v, it

        # --- pricing ---
        bland = degen_run >= bland_after
        best = -tol
        ei = -1
        ej = -1
        scanned = 0
        while scanned < total:
            hi = cursor + block
            if hi > total:
                hi = total
            for idx in range(cursor, hi):
                ii = idx // m
                jj = idx - ii * m
                r = C[ii, jj] - u[ii] - v[jj]
                if r < best:
                    best = r
                    ei = ii
                    ej = jj
                    if bland:
                        break
            scanned += hi - cursor
            cursor = 0 if hi >= total else hi
            if ei >= 0:
                break
        if ei < 0:
            return OPTIMAL, parent, arc_i, arc_j, flow, u, v, it

        # --- cycle between ei and n+ej ---
        x = ei
        y = n + ej
        px = x
        py = y
        while depth[px] > depth[py]:
            px = parent[px]
        while depth[py] > depth[px]:
            py = parent[py]
        while px != py:
            px = parent[px]
            py = parent[py]
        lca = px

        delta = np.inf
        leave = -1
        t = x
        sgn = -1.0
        while t != lca:
            if sgn < 0.0 and flow[t] < delta:
                delta = flow[t]
                leave = t
            sgn = -sgn
            t = parent[t]
        t = y
        sgn = -1.0
        while t != lca:
            if sgn < 0.0 and flow[t] < delta:
                delta = flow[t]
                leave = t
            sgn = -sgn
            t = parent[t]

        degen_run = degen_run + 1 if delta <= 0.0 else 0

        t = x
        sgn = -1.0
        while t != lca:
            flow[t] += sgn * delta
            sgn = -sgn
            t = parent[t]
        t = y
        sgn = -1.0
        while t != lca:
            flow[t] += sgn * delta
            sgn = -sgn
            t = parent[t]

        # which side holds the leaving arc?
        on_x = False
        t = x
        while t != lca:
            if t == leave:
                on_x = True
                break
            t = parent[t]
        new_child = x if on_x else y
        attach_to = (n + ej) if on_x else ei

        # reverse the parent chain new_child -> leave, pushing arc data down
        prev_parent = attach_to
        prev_ai = ei
        prev_aj = ej
        prev_fl = delta
        t = new_child
        while True:
            nt = parent[t]
            oai = arc_i[t]
            oaj = arc_j[t]
            ofl = flow[t]
            parent[t] = prev_parent
            arc_i[t] = prev_ai
            arc_j[t] = prev_aj
            flow[t] = prev_fl
            if t == leave:
                break
            prev_parent = t
            prev_ai = oai
            prev_aj = oaj
            prev_fl = ofl
            t = nt

        # --- rebuild depth + potentials from the parent structure ---
        for q in range(nn):
            head[q] = -1
        e = 0
        for q in range(nn):
            if q == 0:
                continue
            p = parent[q]
            to[e] = q
            nxt[e] = head[p]
            head[p] = e
            e += 1
        order[0] = 0
        qt = 1
        qh = 0
        depth[0] = 0
        u[0] = 0.0
        while qh < qt:
            xq = order[qh]
            qh += 1
            ee = head[xq]
            while ee != -1:
                yq = to[ee]
                depth[yq] = depth[xq] + 1
                if yq >= n:
                    v[yq - n] = C[arc_i[yq], arc_j[yq]] - u[arc_i[yq]]
                else:
                    u[yq] = C[arc_i[yq], arc_j[yq]] - v[arc_j[yq]]
                order[qt] = yq
                qt += 1
                ee = nxt[ee]


@njit(cache=True)
def tree_flows(parent, arc_i, arc_j, a, b):
    """Recompute basis flows for exact marginals a, b on the final tree.

    Processes nodes deepest-first; flow on the arc child->parent equals the
    demand surplus of the child's subtree (sign-adjusted for arc direction).
    """
    n = a.shape[0]
    m = b.shape[0]
    nn = n + m
    # topological order via repeated BFS layering
    head = np.full(nn, -1, np.int64)
    nxt = np.full(nn, -1, np.int64)
    to = np.full(nn, -1, np.int64)
    e = 0
    for q in range(nn):
        if q == 0:
            continue
        p = parent[q]
        to[e] = q
        nxt[e] = head[p]
        head[p] = e
        e += 1
    order = np.empty(nn, np.int64)
    order[0] = 0
    qt = 1
    qh = 0
    while qh < qt:
        x = order[qh]
        qh += 1
        ee = head[x]
        while ee != -1:
            order[qt] = to[ee]
            qt += 1
            ee = nxt[ee]
    acc = np.empty(nn, np.float64)
    for q in range(n):
        acc[q] = -a[q]
    for q in range(m):
        acc[n + q] = b[q]
    flow = np.zeros(nn, np.float64)
    for qi in range(nn - 1, 0, -1):
        x = order[qi]
        f = acc[x]
        acc[parent[x]] += f
        flow[x] = f if x >= n else -f
    return flow
