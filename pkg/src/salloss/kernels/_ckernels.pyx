# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: same-padded 2-D convolution and the transportation simplex."""
import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, sqrt

cnp.import_array()


def conv2d_forward(double[:, :, ::1] x, double[:, :, :, ::1] w, double[::1] b):
    cdef Py_ssize_t cin = x.shape[0], h = x.shape[1], wd = x.shape[2]
    cdef Py_ssize_t cout = w.shape[0], k = w.shape[2], p = k // 2
    out_arr = np.empty((cout, h, wd), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t o, c, y, xx, i, j, yy, xc
    cdef double acc
    with nogil:
        for o in range(cout):
            for y in range(h):
                for xx in range(wd):
                    acc = b[o]
                    for c in range(cin):
                        for i in range(k):
                            yy = y + i - p
                            if yy < 0 or yy >= h:
                                continue
                            for j in range(k):
                                xc = xx + j - p
                                if xc < 0 or xc >= wd:
                                    continue
                                acc = acc + w[o, c, i, j] * x[c, yy, xc]
                    out[o, y, xx] = acc
    return out_arr


def conv2d_backward(double[:, :, ::1] x, double[:, :, :, ::1] w, double[:, :, ::1] gout):
    cdef Py_ssize_t cin = x.shape[0], h = x.shape[1], wd = x.shape[2]
    cdef Py_ssize_t cout = w.shape[0], k = w.shape[2], p = k // 2
    dx_arr = np.zeros((cin, h, wd), dtype=np.float64)
    dw_arr = np.zeros((cout, cin, k, k), dtype=np.float64)
    db_arr = np.zeros(cout, dtype=np.float64)
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t o, c, y, xx, i, j, yy, xc
    cdef double g
    with nogil:
        for o in range(cout):
            for y in range(h):
                for xx in range(wd):
                    g = gout[o, y, xx]
                    if g == 0.0:
                        continue
                    db[o] += g
                    for c in range(cin):
                        for i in range(k):
                            yy = y + i - p
                            if yy < 0 or yy >= h:
                                continue
                            for j in range(k):
                                xc = xx + j - p
                                if xc < 0 or xc >= wd:
                                    continue
                                dw[o, c, i, j] += g * x[c, yy, xc]
                                dx[c, yy, xc] += g * w[o, c, i, j]
    return dx_arr, dw_arr, db_arr


def transport_simplex(a_in, b_in, cost_in, Py_ssize_t max_iter=0):
    """Exact balanced transportation problem by the MODI simplex method."""
    cdef double[::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cost_arr = np.ascontiguousarray(cost_in, dtype=np.float64)
    cdef double[:, ::1] cost = cost_arr
    cdef Py_ssize_t m = a.shape[0], n = b.shape[0], nb = m + n - 1, nn = m + n
    cdef Py_ssize_t[::1] rows = np.empty(nb, dtype=np.intp)
    cdef Py_ssize_t[::1] cols = np.empty(nb, dtype=np.intp)
    cdef double[::1] flows = np.empty(nb, dtype=np.float64)
    cdef double[::1] ra = np.array(a, dtype=np.float64)
    cdef double[::1] rb = np.array(b, dtype=np.float64)
    cdef double[::1] u = np.zeros(m, dtype=np.float64)
    cdef double[::1] v = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t[::1] deg = np.zeros(nn + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] fill = np.zeros(nn, dtype=np.intp)
    cdef Py_ssize_t[::1] adj = np.zeros(2 * nb, dtype=np.intp)
    cdef Py_ssize_t[::1] queue = np.zeros(nn, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = np.zeros(nn, dtype=np.intp)
    cdef signed char[::1] known = np.zeros(nn, dtype=np.int8)
    cdef Py_ssize_t[::1] path = np.zeros(nn, dtype=np.intp)
    cdef Py_ssize_t i = 0, j = 0, kk, node, other, head, tail, p = 0, q = 0, target, plen, it, leave
    cdef double x, rmin, r, theta, cmax = 0.0, tol
    cdef bint optimal = False
    cdef Py_ssize_t[::1] order = np.argsort(cost_arr, axis=None, kind="stable").astype(np.intp)
    cdef signed char[::1] row_alive = np.zeros(m, dtype=np.int8)
    cdef signed char[::1] col_alive = np.zeros(n, dtype=np.int8)
    cdef Py_ssize_t rows_left, cols_left, c, total = m * n, start = 0, rel, cell, best
    cdef Py_ssize_t block = min(m * n, max(64, <Py_ssize_t>ceil(sqrt(<double>(m * n)))))

    for i in range(m):
        for j in range(n):
            if abs(cost[i, j]) > cmax:
                cmax = abs(cost[i, j])
    tol = 1e-12 * (cmax if cmax > 1.0 else 1.0)
    if max_iter <= 0:
        max_iter = 50 * m * n + 1000

    # least-cost initial basis; each allocation retires one row or column
    for i in range(m):
        row_alive[i] = 1
    for j in range(n):
        col_alive[j] = 1
    rows_left = m
    cols_left = n
    kk = 0
    for c in range(m * n):
        i = order[c] // n
        j = order[c] % n
        if not (row_alive[i] and col_alive[j]):
            continue
        x = ra[i] if ra[i] < rb[j] else rb[j]
        rows[kk] = i
        cols[kk] = j
        flows[kk] = x
        kk += 1
        ra[i] -= x
        rb[j] -= x
        if rows_left == 1 and cols_left == 1:
            break
        if (ra[i] <= rb[j] and rows_left > 1) or cols_left == 1:
            row_alive[i] = 0
            rows_left -= 1
        else:
            col_alive[j] = 0
            cols_left -= 1

    with nogil:
        for it in range(max_iter):
            # CSR adjacency of the basis tree
            for node in range(nn + 1):
                deg[node] = 0
            for kk in range(nb):
                deg[rows[kk] + 1] += 1
                deg[m + cols[kk] + 1] += 1
            for node in range(nn):
                deg[node + 1] += deg[node]
                fill[node] = deg[node]
            for kk in range(nb):
                adj[fill[rows[kk]]] = kk
                fill[rows[kk]] += 1
                adj[fill[m + cols[kk]]] = kk
                fill[m + cols[kk]] += 1
            # potentials
            for node in range(nn):
                known[node] = 0
            known[0] = 1
            u[0] = 0.0
            head = 0
            tail = 1
            queue[0] = 0
            while head < tail:
                node = queue[head]
                head += 1
                for other in range(deg[node], deg[node + 1]):
                    kk = adj[other]
                    i = rows[kk]
                    j = cols[kk]
                    if node < m:
                        if not known[m + j]:
                            v[j] = cost[i, j] - u[i]
                            known[m + j] = 1
                            queue[tail] = m + j
                            tail += 1
                    elif not known[i]:
                        u[i] = cost[i, j] - v[j]
                        known[i] = 1
                        queue[tail] = i
                        tail += 1
            # entering cell: block pricing, cyclic from the last stop
            best = -1
            rmin = -tol
            for rel in range(total):
                cell = start + rel
                if cell >= total:
                    cell -= total
                i = cell // n
                j = cell - i * n
                r = cost[i, j] - u[i] - v[j]
                if r < rmin:
                    rmin = r
                    best = cell
                if best >= 0 and ((rel + 1) % block == 0 or rel == total - 1):
                    start = (start + (rel // block + 1) * block) % total
                    break
            if best < 0:
                optimal = True
                break
            p = best // n
            q = best - p * n
            # path from row p to column q
            for node in range(nn):
                known[node] = 0
                parent[node] = -1
            known[p] = 1
            head = 0
            tail = 1
            queue[0] = p
            target = m + q
            while head < tail:
                node = queue[head]
                head += 1
                if node == target:
                    break
                for other in range(deg[node], deg[node + 1]):
                    kk = adj[other]
                    if node < m:
                        i = m + cols[kk]
                    else:
                        i = rows[kk]
                    if not known[i]:
                        known[i] = 1
                        parent[i] = kk
                        queue[tail] = i
                        tail += 1
            plen = 0
            node = target
            while node != p:
                kk = parent[node]
                path[plen] = kk
                plen += 1
                if node >= m:
                    node = rows[kk]
                else:
                    node = m + cols[kk]
            # path is target->p; reverse order so index 0 touches row p
            for i in range(plen // 2):
                kk = path[i]
                path[i] = path[plen - 1 - i]
                path[plen - 1 - i] = kk
            leave = path[0]
            theta = flows[leave]
            for i in range(2, plen, 2):
                if flows[path[i]] < theta:
                    theta = flows[path[i]]
                    leave = path[i]
            for i in range(plen):
                if i % 2 == 0:
                    flows[path[i]] -= theta
                else:
                    flows[path[i]] += theta
            rows[leave] = p
            cols[leave] = q
            flows[leave] = theta

    if not optimal:
        raise RuntimeError("transportation simplex did not converge")
    flow = np.zeros((m, n), dtype=np.float64)
    for kk in range(nb):
        flow[rows[kk], cols[kk]] += flows[kk]
    np.maximum(flow, 0.0, out=flow)
    return float(np.sum(flow * cost_arr)), flow
