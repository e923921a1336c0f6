"""Compiled inner loops: LLR recursion, lazy-copy list decoding, Fano search.

Layout conventions shared by all kernels:

* Channel LLRs are given in the "z" order (``z_j = x_{rev(j)}``), so the tree
  splits every node into contiguous halves and phase ``i`` reads its path from
  the most significant of its ``m`` bits.
* Depth ``d`` (1..m) arrays hold ``n >> d`` values; per-path pools put depth
  ``d`` at ``L * (n - 2 * (n >> d))`` and slot ``s`` at ``s * (n >> d)`` past it.
* Shift registers pack the carrier history as bit ``j-1`` = ``v_{i-j}``.
"""
import math

import numpy as np
from numba import njit

LN2 = math.log(2.0)

# counter slots
C_NODES = 0
C_F = 1
C_G = 2
C_PEN = 3
C_CMP = 4
C_CLONE = 5
N_COUNTERS = 6


@njit(cache=True, inline="always")
def _softplus_neg(x):
    # log(1 + exp(-x)), overflow safe
    if x >= 0.0:
        if x > 36.0:
            # log1p(e) == e to double precision here
            return math.exp(-x)
        return math.log1p(math.exp(-x))
    return -x + math.log1p(math.exp(x))


@njit(cache=True, inline="always")
def boxplus(a, b):
    """Exact check-node LLR combination 2 atanh(tanh(a/2) tanh(b/2))."""
    aa = abs(a)
    ab = abs(b)
    mn = aa if aa < ab else ab
    if (a < 0.0) != (b < 0.0):
        mn = -mn
    p = abs(a + b)
    q = abs(a - b)
    if p > 36.0 and q > 36.0:
        return mn + (math.exp(-p) - math.exp(-q))
    ep = math.exp(-p)
    eq = math.exp(-q)
    return mn + math.log1p((ep - eq) / (1.0 + eq))


@njit(cache=True, inline="always")
def penalty(lam, u):
    """-ln P(u | lam) for an LLR lam (positive favours 0)."""
    if u:
        return _softplus_neg(-lam)
    return _softplus_neg(lam)


@njit(cache=True, inline="always")
def parity64(x):
    x ^= x >> np.uint64(32)
    x ^= x >> np.uint64(16)
    x ^= x >> np.uint64(8)
    x ^= x >> np.uint64(4)
    x ^= x >> np.uint64(2)
    x ^= x >> np.uint64(1)
    return np.uint8(x & np.uint64(1))


@njit(cache=True, inline="always")
def _trailing_zeros(x):
    t = 0
    while x & 1 == 0:
        x >>= 1
        t += 1
    return t


# ---------------------------------------------------------------------------------
# single-path SC engine with id-tagged caches (Fano, teacher forcing)
# ---------------------------------------------------------------------------------


@njit(cache=True)
def _sp_reset(llr_id, lb_id, uhat):
    llr_id[:] = -1
    lb_id[:] = -1
    uhat[:] = 255


@njit(cache=True)
def _sp_ensure_lb(n, m, d, node, lb, lb_id, uhat):
    if lb_id[d] == node:
        return
    size = n >> d
    off = n - 2 * size
    start = node * size
    for t in range(size):
        lb[off + t] = uhat[start + t]
    half = 1
    while half < size:
        for blk in range(0, size, 2 * half):
            for t in range(half):
                lb[off + blk + t] ^= lb[off + blk + half + t]
        half *= 2
    lb_id[d] = node


@njit(cache=True)
def _sp_compute(n, m, i, chan, llr, llr_id, lb, lb_id, uhat, counters):
    """LLR of phase i given the current prefix; reuses every still-valid node."""
    for d in range(1, m + 1):
        node = i >> (m - d)
        if llr_id[d] == node:
            continue
        size = n >> d
        dst = n - 2 * size
        if node & 1:
            _sp_ensure_lb(n, m, d, node - 1, lb, lb_id, uhat)
            lbo = n - 2 * size
            if d == 1:
                for t in range(size):
                    a = chan[t]
                    b = chan[size + t]
                    llr[dst + t] = b + a if lb[lbo + t] == 0 else b - a
            else:
                src = n - 4 * size
                for t in range(size):
                    a = llr[src + t]
                    b = llr[src + size + t]
                    llr[dst + t] = b + a if lb[lbo + t] == 0 else b - a
            counters[C_G] += size
        else:
            if d == 1:
                for t in range(size):
                    llr[dst + t] = boxplus(chan[t], chan[size + t])
            else:
                src = n - 4 * size
                for t in range(size):
                    llr[dst + t] = boxplus(llr[src + t], llr[src + size + t])
            counters[C_F] += size
        llr_id[d] = node
    if m == 0:
        return chan[0]
    return llr[n - 2]


@njit(cache=True)
def _sp_set_bit(n, m, i, b, lb, lb_id, llr_id, uhat, scratch):
    if uhat[i] != b:
        uhat[i] = b
        for d in range(1, m + 1):
            if llr_id[d] >= 0 and (llr_id[d] << (m - d)) > i:
                llr_id[d] = -1
            if lb_id[d] >= 0 and ((lb_id[d] + 1) << (m - d)) > i:
                lb_id[d] = -1
    scratch[0] = b
    size = 1
    d = m
    node = i
    while d >= 1 and node & 1:
        _sp_ensure_lb(n, m, d, node - 1, lb, lb_id, uhat)
        off = n - 2 * size
        for t in range(size):
            scratch[size + t] = scratch[t]
            scratch[t] ^= lb[off + t]
        size *= 2
        d -= 1
        node >>= 1
    if d >= 1:
        off = n - 2 * size
        for t in range(size):
            lb[off + t] = scratch[t]
        lb_id[d] = node


@njit(cache=True)
def teacher_forced_metric(chan, uhat_target, counters):
    """Sum of SC penalties along the fixed path uhat_target."""
    n = chan.shape[0]
    m = 0
    while (1 << m) < n:
        m += 1
    llr = np.zeros(n, dtype=np.float64)
    lb = np.zeros(n, dtype=np.uint8)
    llr_id = np.empty(m + 1, dtype=np.int64)
    lb_id = np.empty(m + 1, dtype=np.int64)
    uhat = np.empty(n, dtype=np.uint8)
    scratch = np.zeros(2 * n, dtype=np.uint8)
    _sp_reset(llr_id, lb_id, uhat)
    pm = 0.0
    for i in range(n):
        lam = _sp_compute(n, m, i, chan, llr, llr_id, lb, lb_id, uhat, counters)
        pm += penalty(lam, uhat_target[i])
        counters[C_PEN] += 1
        _sp_set_bit(n, m, i, uhat_target[i], lb, lb_id, llr_id, uhat, scratch)
    return pm


@njit(cache=True)
def fano_search(chan, frozen, cmask, nu, bias, delta, cycle_cap, counters, uhat_out, vhat_out):
    """Fano sequential decoding over the irregular polar tree.

    Returns (status, cycles, final_metric, backtracks); status 0 = reached a leaf,
    1 = cycle cap exhausted.
    """
    n = chan.shape[0]
    m = 0
    while (1 << m) < n:
        m += 1
    regmask = np.uint64(0xFFFFFFFFFFFFFFFF) if nu >= 64 else np.uint64((1 << nu) - 1)
    llr = np.zeros(n, dtype=np.float64)
    lb = np.zeros(n, dtype=np.uint8)
    llr_id = np.empty(m + 1, dtype=np.int64)
    lb_id = np.empty(m + 1, dtype=np.int64)
    uhat = np.empty(n, dtype=np.uint8)
    scratch = np.zeros(2 * n, dtype=np.uint8)
    _sp_reset(llr_id, lb_id, uhat)

    metric = np.zeros(n + 1, dtype=np.float64)
    sreg = np.zeros(n + 1, dtype=np.uint64)
    nchild = np.zeros(n, dtype=np.int64)
    child_u = np.zeros((n, 2), dtype=np.uint8)
    child_g = np.zeros((n, 2), dtype=np.float64)
    choice = np.zeros(n, dtype=np.int64)
    vbits = np.zeros(n, dtype=np.uint8)

    T = 0.0
    i = 0
    cycles = 0
    backtracks = 0
    status = 0

    # children of the root
    lam = _sp_compute(n, m, 0, chan, llr, llr_id, lb, lb_id, uhat, counters)
    u0 = parity64(sreg[0] & cmask)
    if frozen[0]:
        nchild[0] = 1
        child_u[0, 0] = u0
        child_g[0, 0] = -penalty(lam, u0) / LN2 - bias[0]
        counters[C_PEN] += 1
    else:
        g0 = -penalty(lam, 0) / LN2 - bias[0]
        g1 = -penalty(lam, 1) / LN2 - bias[0]
        counters[C_PEN] += 2
        counters[C_CMP] += 1
        nchild[0] = 2
        if g1 > g0:
            child_u[0, 0] = 1
            child_u[0, 1] = 0
            child_g[0, 0] = g1
            child_g[0, 1] = g0
        else:
            child_u[0, 0] = 0
            child_u[0, 1] = 1
            child_g[0, 0] = g0
            child_g[0, 1] = g1
    rank = 0

    while True:
        if rank < nchild[i]:
            mf = metric[i] + child_g[i, rank]
            counters[C_CMP] += 1
            if mf >= T:
                # forward move
                u = child_u[i, rank]
                u0 = parity64(sreg[i] & cmask)
                v = u ^ u0
                _sp_set_bit(n, m, i, u, lb, lb_id, llr_id, uhat, scratch)
                vbits[i] = v
                sreg[i + 1] = ((sreg[i] << np.uint64(1)) | np.uint64(v)) & regmask
                metric[i + 1] = mf
                choice[i] = rank
                if nchild[i] == 2:
                    counters[C_NODES] += 1
                if metric[i] < T + delta:
                    while mf >= T + delta:
                        T += delta
                        counters[C_CMP] += 1
                cycles += 1
                i += 1
                if i == n:
                    status = 0
                    break
                if cycles >= cycle_cap:
                    status = 1
                    break
                lam = _sp_compute(n, m, i, chan, llr, llr_id, lb, lb_id, uhat, counters)
                u0 = parity64(sreg[i] & cmask)
                if frozen[i]:
                    nchild[i] = 1
                    child_u[i, 0] = u0
                    child_g[i, 0] = -penalty(lam, u0) / LN2 - bias[i]
                    counters[C_PEN] += 1
                else:
                    g0 = -penalty(lam, 0) / LN2 - bias[i]
                    g1 = -penalty(lam, 1) / LN2 - bias[i]
                    counters[C_PEN] += 2
                    counters[C_CMP] += 1
                    nchild[i] = 2
                    if g1 > g0:
                        child_u[i, 0] = 1
                        child_u[i, 1] = 0
                        child_g[i, 0] = g1
                        child_g[i, 1] = g0
                    else:
                        child_u[i, 0] = 0
                        child_u[i, 1] = 1
                        child_g[i, 0] = g0
                        child_g[i, 1] = g1
                rank = 0
                continue
        # look back
        counters[C_CMP] += 1
        if i == 0 or metric[i - 1] < T:
            T -= delta
            rank = 0
            continue
        i -= 1
        cycles += 1
        backtracks += 1
        if cycles >= cycle_cap:
            status = 1
            break
        rank = choice[i] + 1

    for t in range(n):
        uhat_out[t] = uhat[t] if t < i else 0
        vhat_out[t] = vbits[t] if t < i else 0
    return status, cycles, metric[i], backtracks


# ---------------------------------------------------------------------------------
# lazy-copy successive-cancellation list decoder
# ---------------------------------------------------------------------------------


@njit(cache=True)
def store_init(n, m, L, path_llr, path_lb, ref_llr, ref_lb, free_llr, free_llr_top,
               free_lb, free_lb_top, inactive, inactive_top, active, pm, sreg, vhat, counters):
    for d in range(m + 1):
        for s in range(L):
            free_llr[d, s] = L - 1 - s
            free_lb[d, s] = L - 1 - s
            ref_llr[d, s] = 0
            ref_lb[d, s] = 0
            path_llr[d, s] = -1
            path_lb[d, s] = -1
        free_llr_top[d] = L
        free_lb_top[d] = L
    for s in range(L):
        inactive[s] = L - 1 - s
        active[s] = 0
        pm[s] = 0.0
        sreg[s] = 0
    inactive_top[0] = L
    counters[:] = 0
    # initial path
    inactive_top[0] -= 1
    ell = inactive[inactive_top[0]]
    active[ell] = 1
    for d in range(1, m + 1):
        free_llr_top[d] -= 1
        s = free_llr[d, free_llr_top[d]]
        ref_llr[d, s] = 1
        path_llr[d, ell] = s
        free_lb_top[d] -= 1
        s = free_lb[d, free_lb_top[d]]
        ref_lb[d, s] = 1
        path_lb[d, ell] = s
    for t in range(n):
        vhat[ell, t] = 0
    return ell


@njit(cache=True, inline="always")
def _writable(d, ell, path_arr, ref, free, free_top):
    s = path_arr[d, ell]
    if ref[d, s] > 1:
        ref[d, s] -= 1
        free_top[d] -= 1
        s = free[d, free_top[d]]
        ref[d, s] = 1
        path_arr[d, ell] = s
    return s


@njit(cache=True)
def store_kill(m, ell, path_llr, path_lb, ref_llr, ref_lb, free_llr, free_llr_top,
               free_lb, free_lb_top, inactive, inactive_top, active):
    active[ell] = 0
    inactive[inactive_top[0]] = ell
    inactive_top[0] += 1
    for d in range(1, m + 1):
        s = path_llr[d, ell]
        ref_llr[d, s] -= 1
        if ref_llr[d, s] == 0:
            free_llr[d, free_llr_top[d]] = s
            free_llr_top[d] += 1
        s = path_lb[d, ell]
        ref_lb[d, s] -= 1
        if ref_lb[d, s] == 0:
            free_lb[d, free_lb_top[d]] = s
            free_lb_top[d] += 1


@njit(cache=True)
def store_clone(n, m, ell, path_llr, path_lb, ref_llr, ref_lb, inactive, inactive_top,
                active, pm, sreg, vhat, lam):
    inactive_top[0] -= 1
    new = inactive[inactive_top[0]]
    active[new] = 1
    for d in range(1, m + 1):
        s = path_llr[d, ell]
        path_llr[d, new] = s
        ref_llr[d, s] += 1
        s = path_lb[d, ell]
        path_lb[d, new] = s
        ref_lb[d, s] += 1
    pm[new] = pm[ell]
    sreg[new] = sreg[ell]
    lam[new] = lam[ell]
    for t in range(n):
        vhat[new, t] = vhat[ell, t]
    return new


@njit(cache=True)
def store_calc_llr(n, m, L, phi, chan, llr_pool, lb_pool, path_llr, path_lb, ref_llr,
                   free_llr, free_llr_top, active, lam, counters):
    if phi == 0:
        d0 = 1
    else:
        d0 = m - _trailing_zeros(phi)
    for ell in range(L):
        if not active[ell]:
            continue
        for d in range(d0, m + 1):
            size = n >> d
            s = _writable(d, ell, path_llr, ref_llr, free_llr, free_llr_top)
            dst = L * (n - 2 * size) + s * size
            node = phi >> (m - d)
            if d == 1:
                if node & 1:
                    lbo = L * (n - 2 * size) + path_lb[d, ell] * size
                    for t in range(size):
                        a = chan[t]
                        b = chan[size + t]
                        llr_pool[dst + t] = b + a if lb_pool[lbo + t] == 0 else b - a
                else:
                    for t in range(size):
                        llr_pool[dst + t] = boxplus(chan[t], chan[size + t])
            else:
                src = L * (n - 4 * size) + path_llr[d - 1, ell] * (2 * size)
                if node & 1:
                    lbo = L * (n - 2 * size) + path_lb[d, ell] * size
                    for t in range(size):
                        a = llr_pool[src + t]
                        b = llr_pool[src + size + t]
                        llr_pool[dst + t] = b + a if lb_pool[lbo + t] == 0 else b - a
                else:
                    for t in range(size):
                        llr_pool[dst + t] = boxplus(llr_pool[src + t], llr_pool[src + size + t])
            if node & 1:
                counters[C_G] += size
            else:
                counters[C_F] += size
        if m == 0:
            lam[ell] = chan[0]
        else:
            lam[ell] = llr_pool[L * (n - 2) + path_llr[m, ell]]


@njit(cache=True)
def store_update_bits(n, m, L, phi, ell, b, lb_pool, path_lb, ref_lb, free_lb, free_lb_top, scratch):
    scratch[0] = b
    size = 1
    d = m
    node = phi
    while d >= 1 and node & 1:
        off = L * (n - 2 * size) + path_lb[d, ell] * size
        for t in range(size):
            scratch[size + t] = scratch[t]
            scratch[t] ^= lb_pool[off + t]
        size *= 2
        d -= 1
        node >>= 1
    if d >= 1:
        s = _writable(d, ell, path_lb, ref_lb, free_lb, free_lb_top)
        off = L * (n - 2 * size) + s * size
        for t in range(size):
            lb_pool[off + t] = scratch[t]


@njit(cache=True)
def store_update_all_bits(n, m, L, phi, active, ubits, lb_pool, path_lb, ref_lb, free_lb,
                          free_lb_top, scratch):
    # phases ending a left leaf only store one bit; handle that without the walk
    if phi & 1 == 0:
        base = L * (n - 2)
        for ell in range(L):
            if active[ell]:
                s = _writable(m, ell, path_lb, ref_lb, free_lb, free_lb_top)
                lb_pool[base + s] = ubits[ell]
        return
    for ell in range(L):
        if active[ell]:
            store_update_bits(n, m, L, phi, ell, ubits[ell], lb_pool, path_lb, ref_lb,
                              free_lb, free_lb_top, scratch)


@njit(cache=True)
def store_extend_frozen(n, m, L, phi, cmask, regmask, lb_pool, path_lb, ref_lb, free_lb,
                        free_lb_top, active, pm, sreg, vhat, lam, ubits, counters):
    for ell in range(L):
        if not active[ell]:
            continue
        u = parity64(sreg[ell] & cmask)
        pm[ell] += penalty(lam[ell], u)
        counters[C_PEN] += 1
        sreg[ell] = (sreg[ell] << np.uint64(1)) & regmask
        vhat[ell, phi] = 0
        ubits[ell] = u


@njit(cache=True)
def store_fork(n, m, L, phi, cmask, regmask, path_llr, path_lb, ref_llr, ref_lb, free_llr,
               free_llr_top, free_lb, free_lb_top, inactive, inactive_top, active, pm, sreg,
               vhat, lam, ubits, cand, forks, counters):
    """Unfrozen phase: score both children of every path, keep the best L."""
    n_active = 0
    for ell in range(L):
        forks[ell, 0] = 0
        forks[ell, 1] = 0
        if active[ell]:
            n_active += 1
            counters[C_NODES] += 1
    # candidate metrics indexed (ell, u)
    k = 0
    for ell in range(L):
        if active[ell]:
            cand[2 * k] = pm[ell] + penalty(lam[ell], 0)
            cand[2 * k + 1] = pm[ell] + penalty(lam[ell], 1)
            k += 1
    counters[C_PEN] += 2 * n_active
    n_cand = 2 * n_active
    if n_cand <= L:
        for ell in range(L):
            if active[ell]:
                forks[ell, 0] = 1
                forks[ell, 1] = 1
    else:
        counters[C_CMP] += n_cand
        work = cand[:n_cand].copy()
        thr = np.partition(work, L - 1)[L - 1]
        n_less = 0
        for t in range(n_cand):
            if cand[t] < thr:
                n_less += 1
        need_eq = L - n_less
        k = 0
        for ell in range(L):
            if not active[ell]:
                continue
            for b in range(2):
                c = cand[2 * k + b]
                if c < thr:
                    forks[ell, b] = 1
                elif c == thr and need_eq > 0:
                    forks[ell, b] = 1
                    need_eq -= 1
            k += 1
    # kill paths with no surviving child
    for ell in range(L):
        if active[ell] and forks[ell, 0] == 0 and forks[ell, 1] == 0:
            store_kill(m, ell, path_llr, path_lb, ref_llr, ref_lb, free_llr, free_llr_top,
                       free_lb, free_lb_top, inactive, inactive_top, active)
    for ell in range(L):
        if forks[ell, 0] == 0 and forks[ell, 1] == 0:
            continue
        u0 = parity64(sreg[ell] & cmask)
        base = (sreg[ell] << np.uint64(1)) & regmask
        if forks[ell, 0] == 1 and forks[ell, 1] == 1:
            new = store_clone(n, m, ell, path_llr, path_lb, ref_llr, ref_lb, inactive,
                              inactive_top, active, pm, sreg, vhat, lam)
            counters[C_CLONE] += 1
            # original keeps v = 0, clone takes v = 1
            pm[ell] += penalty(lam[ell], u0)
            sreg[ell] = base
            vhat[ell, phi] = 0
            ubits[ell] = u0
            pm[new] += penalty(lam[new], u0 ^ 1)
            sreg[new] = (base | np.uint64(1)) & regmask
            vhat[new, phi] = 1
            ubits[new] = u0 ^ 1
        else:
            u = 0 if forks[ell, 0] == 1 else 1
            v = u ^ u0
            pm[ell] += penalty(lam[ell], u)
            sreg[ell] = (base | np.uint64(v)) & regmask
            vhat[ell, phi] = v
            ubits[ell] = u


@njit(cache=True)
def store_run(n, m, L, phi_start, phi_stop, frozen, cmask, regmask, chan, llr_pool, lb_pool,
              path_llr, path_lb, ref_llr, ref_lb, free_llr, free_llr_top, free_lb, free_lb_top,
              inactive, inactive_top, active, pm, sreg, vhat, lam, ubits, cand, forks,
              scratch, counters):
    for phi in range(phi_start, phi_stop):
        store_calc_llr(n, m, L, phi, chan, llr_pool, lb_pool, path_llr, path_lb, ref_llr,
                       free_llr, free_llr_top, active, lam, counters)
        if frozen[phi]:
            store_extend_frozen(n, m, L, phi, cmask, regmask, lb_pool, path_lb, ref_lb,
                                free_lb, free_lb_top, active, pm, sreg, vhat, lam, ubits,
                                counters)
        else:
            store_fork(n, m, L, phi, cmask, regmask, path_llr, path_lb, ref_llr, ref_lb,
                       free_llr, free_llr_top, free_lb, free_lb_top, inactive, inactive_top,
                       active, pm, sreg, vhat, lam, ubits, cand, forks, counters)
        store_update_all_bits(n, m, L, phi, active, ubits, lb_pool, path_lb, ref_lb,
                              free_lb, free_lb_top, scratch)
