"""Compiled inner loop shared by every row-action method.

One call advances the iteration by at most ``n_steps`` steps and writes
trace records into caller-provided buffers. The arithmetic mirrors the
reference functions in `matkaczmarz.solvers.steps`.
"""

import time

import numba as nb
import numpy as np

SEL_CYCLIC = 0
SEL_RBK = 1
SEL_GREEDY = 2
SEL_MAXRATIO = 3

STOP_NONE = 0
STOP_RSE = 1
STOP_UPDATE = 2
STOP_RESIDUAL = 3

ST_RUNNING = 0
ST_RSE = 1
ST_UPDATE = 2
ST_RESIDUAL = 3
ST_ZERO = 4
ST_MAXITER = 5


@nb.njit(cache=True)
def _now():
    with nb.objmode(t="float64"):
        t = time.perf_counter()
    return t


@nb.njit(cache=True)
def refresh_residual(indptr, indices, data, B, C, X, R, rnorm2, b_identity):
    """Overwrite ``R`` with ``C - A X B`` and its squared row norms."""
    m, n = C.shape
    if b_identity:
        XB = X
    else:
        XB = X @ B
    for i in range(m):
        acc2 = 0.0
        for j in range(n):
            s = 0.0
            for t in range(indptr[i], indptr[i + 1]):
                s += data[t] * XB[indices[t], j]
            v = C[i, j] - s
            R[i, j] = v
            acc2 += v * v
        rnorm2[i] = acc2


@nb.njit(cache=True)
def _err2_row(X, xs, j):
    s = 0.0
    for c in range(X.shape[1]):
        d = X[j, c] - xs[j, c]
        s += d * d
    return s


@nb.njit(cache=True)
def _search_right(cum, target):
    # first index with cum[idx] > target, clipped to the last entry
    lo = 0
    hi = cum.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > target:
            hi = mid
        else:
            lo = mid + 1
    if lo >= cum.shape[0]:
        lo = cum.shape[0] - 1
    return lo


@nb.njit(cache=True)
def _sum(v):
    s = 0.0
    for j in range(v.shape[0]):
        s += v[j]
    return s


@nb.njit(cache=True)
def _block_max(ratios, bmax, barg, bs, blk):
    lo = blk * bs
    hi = min(lo + bs, ratios.shape[0])
    mx = -1.0
    arg = lo
    for r in range(lo, hi):
        if ratios[r] > mx:
            mx = ratios[r]
            arg = r
    bmax[blk] = mx
    barg[blk] = arg


@nb.njit(cache=True)
def _argmax_blocks(bmax, barg):
    # strict comparisons at both levels keep the smallest maximizing index
    mx = -1.0
    arg = 0
    for b in range(bmax.shape[0]):
        if bmax[b] > mx:
            mx = bmax[b]
            arg = barg[b]
    return arg, mx


@nb.njit(cache=True)
def run_chunk(sel, indptr, indices, data, rn2, cum_w, a_fro2, B, C, X, R,
              rnorm2, maintain_r, b_identity, g_indptr, g_indices, g_data,
              alpha, theta, uniforms, k_start, n_steps, max_iters,
              stop_kind, tol, xs, xs_norm, err2_rows, refresh_every,
              stride, t_k, t_row, t_rse, t_res, t_wall, t0):
    """Advance the iteration; returns ``(status, k, n_records, t0)``.

    A negative `t0` starts the clock on entry, so dispatch and compilation
    are never counted as solve time.

    The squared solution error and residual norm are tracked incrementally
    over the rows each step touches, and re-summed exactly every
    ``max(m, p)`` steps, at trace records and whenever the running value
    comes near the stopping tolerance.
    """
    if t0 < 0.0:
        t0 = _now()
    m = rn2.shape[0]
    q, n = B.shape
    has_xs = xs_norm > 0.0
    u = np.empty(q)
    w = np.empty(n)
    ri = np.empty(n)
    ratios = np.empty(m)
    exact_every = max(m, err2_rows.shape[0])
    e2 = _sum(err2_rows) if has_xs else 0.0
    r2 = 0.0
    if maintain_r:
        r2 = _sum(rnorm2)
        for r in range(m):
            ratios[r] = rnorm2[r] / rn2[r]
    # two-level maxima of the ratios: sqrt(m) blocks, rescanned only where touched
    use_blocks = sel == SEL_MAXRATIO
    bs = max(1, int(np.sqrt(m)))
    nblk = (m + bs - 1) // bs
    bmax = np.empty(nblk if use_blocks else 1)
    barg = np.empty(nblk if use_blocks else 1, np.int64)
    if use_blocks:
        for b in range(nblk):
            _block_max(ratios, bmax, barg, bs, b)
    near_e2 = 4.0 * tol * tol * xs_norm * xs_norm
    near_r2 = 4.0 * tol * tol
    since_exact = 0
    nrec = 0
    k = k_start
    status = ST_RUNNING
    for step in range(n_steps):
        # ---- selection
        if sel == SEL_CYCLIC:
            i = k % m
        elif sel == SEL_RBK:
            i = _search_right(cum_w, uniforms[step] * cum_w[m - 1])
        elif use_blocks:
            i, mx = _argmax_blocks(bmax, barg)
            if mx <= 0.0:
                status = ST_ZERO
                break
        else:
            mx = 0.0
            for r in range(m):
                if ratios[r] > mx:
                    mx = ratios[r]
            if mx == 0.0:
                status = ST_ZERO
                break
            xi = theta * mx + (1.0 - theta) * (_sum(rnorm2) / a_fro2)
            if xi > mx:
                xi = mx
            wt = 0.0
            last = -1
            for r in range(m):
                if ratios[r] >= xi:
                    wt += rnorm2[r]
                    last = r
            target = uniforms[step] * wt
            acc = 0.0
            i = last
            for r in range(m):
                if ratios[r] >= xi:
                    # theta = 1 keeps only maximal rows; take the smallest index
                    if theta >= 1.0:
                        i = r
                        break
                    acc += rnorm2[r]
                    if acc > target:
                        i = r
                        break

        # ---- residual row and projected direction u = r_i B^T
        if maintain_r:
            for j in range(n):
                ri[j] = R[i, j]
        else:
            for c in range(q):
                s = 0.0
                for t in range(indptr[i], indptr[i + 1]):
                    s += data[t] * X[indices[t], c]
                u[c] = s  # scratch: A_i X
            for j in range(n):
                if b_identity:
                    s = u[j]
                else:
                    s = 0.0
                    for c in range(q):
                        s += u[c] * B[c, j]
                ri[j] = C[i, j] - s
        if b_identity:
            for c in range(q):
                u[c] = ri[c]
        else:
            for c in range(q):
                s = 0.0
                for j in range(n):
                    s += ri[j] * B[c, j]
                u[c] = s

        scale = alpha / rn2[i]
        unorm2 = 0.0
        for c in range(q):
            unorm2 += u[c] * u[c]
        upd = alpha * np.sqrt(unorm2) / np.sqrt(rn2[i])

        # ---- X update on the support of row i
        for t in range(indptr[i], indptr[i + 1]):
            col = indices[t]
            f = scale * data[t]
            for c in range(q):
                X[col, c] += f * u[c]
            if has_xs:
                new = _err2_row(X, xs, col)
                e2 += new - err2_rows[col]
                err2_rows[col] = new

        # ---- residual recurrence R -= scale (A A_i^T) (u B)
        if maintain_r:
            if b_identity:
                for j in range(n):
                    w[j] = u[j]
            else:
                for j in range(n):
                    s = 0.0
                    for c in range(q):
                        s += u[c] * B[c, j]
                    w[j] = s
            for t in range(g_indptr[i], g_indptr[i + 1]):
                r = g_indices[t]
                f = scale * g_data[t]
                acc2 = 0.0
                for j in range(n):
                    v = R[r, j] - f * w[j]
                    R[r, j] = v
                    acc2 += v * v
                r2 += acc2 - rnorm2[r]
                rnorm2[r] = acc2
                ratios[r] = acc2 / rn2[r]
            if use_blocks:
                # gram row indices are sorted, so touched blocks come in runs
                prev = -1
                for t in range(g_indptr[i], g_indptr[i + 1]):
                    b = g_indices[t] // bs
                    if b != prev:
                        _block_max(ratios, bmax, barg, bs, b)
                        prev = b

        k += 1
        since_exact += 1
        if maintain_r and refresh_every > 0 and k % refresh_every == 0:
            refresh_residual(indptr, indices, data, B, C, X, R, rnorm2, b_identity)
            for r in range(m):
                ratios[r] = rnorm2[r] / rn2[r]
            r2 = _sum(rnorm2)
            if use_blocks:
                for b in range(nblk):
                    _block_max(ratios, bmax, barg, bs, b)

        # ---- metrics and stopping
        record = k % stride == 0 or k >= max_iters
        if since_exact >= exact_every or record:
            e2 = _sum(err2_rows) if has_xs else 0.0
            r2 = _sum(rnorm2) if maintain_r else 0.0
            since_exact = 0
        if stop_kind == STOP_RSE and e2 <= near_e2:
            e2 = _sum(err2_rows)
        if stop_kind == STOP_RESIDUAL and r2 <= near_r2:
            r2 = _sum(rnorm2)
        rse = np.sqrt(max(e2, 0.0)) / xs_norm if has_xs else np.nan
        res = np.sqrt(max(r2, 0.0)) if maintain_r else np.nan

        if stop_kind == STOP_RSE and rse <= tol:
            status = ST_RSE
        elif stop_kind == STOP_UPDATE and upd <= tol:
            status = ST_UPDATE
        elif stop_kind == STOP_RESIDUAL and res <= tol:
            status = ST_RESIDUAL
        elif k >= max_iters:
            status = ST_MAXITER

        if status != ST_RUNNING or record:
            if since_exact != 0:
                if has_xs:
                    rse = np.sqrt(_sum(err2_rows)) / xs_norm
                if maintain_r:
                    res = np.sqrt(_sum(rnorm2))
            t_k[nrec] = k
            t_row[nrec] = i
            t_rse[nrec] = rse
            t_res[nrec] = res
            t_wall[nrec] = _now() - t0
            nrec += 1
        if status != ST_RUNNING:
            break
    return status, k, nrec, t0
