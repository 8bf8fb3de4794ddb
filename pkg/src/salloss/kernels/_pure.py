"""Pure numpy/Python versions of the hot kernels.

Same signatures as the compiled module; used when the extension is not
built or when ``SALLOSS_PURE=1`` is set.
"""
from __future__ import annotations

from collections import deque

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d_forward(x, w, b):
    """Same-padded stride-1 correlation: x (Cin,H,W), w (Cout,Cin,k,k) -> (Cout,H,W)."""
    k = w.shape[2]
    p = k // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p)))
    win = sliding_window_view(xp, (k, k), axis=(1, 2))
    return np.einsum("chwij,ocij->ohw", win, w, optimize=True) + b[:, None, None]


def conv2d_backward(x, w, gout):
    """Gradients (dx, dw, db) of ``conv2d_forward`` given upstream ``gout``."""
    k = w.shape[2]
    p = k // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p)))
    win = sliding_window_view(xp, (k, k), axis=(1, 2))
    dw = np.einsum("ohw,chwij->ocij", gout, win, optimize=True)
    db = gout.sum(axis=(1, 2))
    gp = np.pad(gout, ((0, 0), (p, p), (p, p)))
    gwin = sliding_window_view(gp, (k, k), axis=(1, 2))
    dx = np.einsum("ohwij,ocij->chw", gwin, w[:, :, ::-1, ::-1], optimize=True)
    return dx, dw, db


def pricing_block(m, n):
    """Cells scanned per pricing block (partial pricing)."""
    return min(m * n, max(64, int(np.ceil(np.sqrt(m * n)))))


def cost_order(cost):
    """Cells sorted by cost, ties by row-major position."""
    return np.argsort(cost, axis=None, kind="stable")


def _least_cost_basis(a, b, cost):
    """Initial basis from the matrix-minimum rule.

    Every allocation retires exactly one row or column (both only at the
    very end), so the m + n - 1 cells always form a spanning tree even
    when some of them carry zero flow.
    """
    m, n = len(a), len(b)
    ra = a.copy()
    rb = b.copy()
    row_alive = np.ones(m, dtype=bool)
    col_alive = np.ones(n, dtype=bool)
    rows_left, cols_left = m, n
    rows, cols, flows = [], [], []
    for flat in cost_order(cost):
        i, j = divmod(int(flat), n)
        if not (row_alive[i] and col_alive[j]):
            continue
        x = min(ra[i], rb[j])
        rows.append(i)
        cols.append(j)
        flows.append(x)
        ra[i] -= x
        rb[j] -= x
        if rows_left == 1 and cols_left == 1:
            break
        if (ra[i] <= rb[j] and rows_left > 1) or cols_left == 1:
            row_alive[i] = False
            rows_left -= 1
        else:
            col_alive[j] = False
            cols_left -= 1
    return rows, cols, flows


def transport_simplex(a, b, cost, max_iter=0):
    """Exact balanced transportation problem by the MODI simplex method.

    ``a`` (m,) supplies and ``b`` (n,) demands must be positive with equal
    totals.  Returns ``(total_cost, flow)`` with ``flow`` an (m, n) array.
    Starts from a least-cost basis and prices in blocks: the first block
    (cyclically, from where the last scan stopped) holding a negative
    reduced cost supplies its most negative cell.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    m, n = len(a), len(b)
    rows, cols, flows = _least_cost_basis(a, b, cost)
    nb = m + n - 1
    total = m * n
    block = pricing_block(m, n)
    start = 0
    tol = 1e-12 * max(1.0, float(np.abs(cost).max()))
    if max_iter <= 0:
        max_iter = 50 * m * n + 1000
    u = np.empty(m)
    v = np.empty(n)
    for _ in range(max_iter):
        adj = [[] for _ in range(m + n)]
        for k in range(nb):
            adj[rows[k]].append(k)
            adj[m + cols[k]].append(k)
        # potentials: u_i + v_j = c_ij on the basis tree, rooted at row 0
        known = [False] * (m + n)
        known[0] = True
        u[0] = 0.0
        queue = deque([0])
        while queue:
            node = queue.popleft()
            for k in adj[node]:
                i, j = rows[k], cols[k]
                if node < m:
                    if not known[m + j]:
                        v[j] = cost[i, j] - u[i]
                        known[m + j] = True
                        queue.append(m + j)
                elif not known[i]:
                    u[i] = cost[i, j] - v[j]
                    known[i] = True
                    queue.append(i)
        reduced = (cost - u[:, None] - v[None, :]).ravel()
        neg = np.flatnonzero(reduced < -tol)
        if neg.size == 0:
            break
        rel = (neg - start) % total
        first = rel.min() // block
        pick = np.sort(rel[rel // block == first])
        cells = (pick + start) % total
        flat = int(cells[np.argmin(reduced[cells])])
        start = int((start + (first + 1) * block) % total)
        p, q = divmod(flat, n)
        # path p -> column q through the tree
        parent = [-1] * (m + n)
        seen = [False] * (m + n)
        seen[p] = True
        queue = deque([p])
        target = m + q
        while queue:
            node = queue.popleft()
            if node == target:
                break
            for k in adj[node]:
                other = m + cols[k] if node < m else rows[k]
                if not seen[other]:
                    seen[other] = True
                    parent[other] = k
                    queue.append(other)
        path = []
        node = target
        while node != p:
            k = parent[node]
            path.append(k)
            node = rows[k] if node >= m else m + cols[k]
        path.reverse()
        minus = path[0::2]
        plus = path[1::2]
        leave = min(minus, key=lambda k: flows[k])
        theta = flows[leave]
        for k in minus:
            flows[k] -= theta
        for k in plus:
            flows[k] += theta
        rows[leave], cols[leave], flows[leave] = p, q, theta
    else:
        raise RuntimeError("transportation simplex did not converge")
    flow = np.zeros((m, n))
    for k in range(nb):
        flow[rows[k], cols[k]] += flows[k]
    np.maximum(flow, 0.0, out=flow)
    return float(np.sum(flow * cost)), flow
