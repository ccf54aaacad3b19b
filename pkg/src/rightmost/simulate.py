"""Batch Monte Carlo kernels.

Trials run in a numba ``prange`` loop.  Each trial owns its bond stream
(:mod:`rightmost.rng`) and writes to its own output slot, so results are
bit-identical for any thread count.  Bonds are evaluated lazily at occupied
sites only; they coincide with :func:`rightmost.lattice.sample_environment`
on the same window.
"""
from __future__ import annotations

import os
import warnings

import numba
import numpy as np
from numba import njit, prange

from . import rng

numba.config.THREADING_LAYER = "omp"

DEAD = -1
TOO_SHALLOW = -2
OVERFLOW = -3


def set_threads(threads: int | None = None) -> int:
    """Size the worker pool; ``None`` falls back to ``$RIGHTMOST_THREADS``."""
    if threads is None:
        env = os.environ.get("RIGHTMOST_THREADS")
        threads = int(env) if env else numba.config.NUMBA_NUM_THREADS
    threads = max(1, int(threads))
    limit = numba.config.NUMBA_NUM_THREADS
    if threads > limit:
        warnings.warn(f"{threads} threads requested, numba allows {limit}; using {limit}")
        threads = limit
    numba.set_num_threads(threads)
    return threads


@njit(cache=True)
def _advance(occ, new, lo, hi, k, origin, key, p, full_left):
    """One level of the window update; returns ``(lo, hi, overflow)`` of ``new``.

    ``new`` must be all False on entry; ``occ`` is cleared on exit.
    """
    W = occ.size
    o = origin + (k & 1)
    nlo = W
    nhi = -1
    if (k & 1) == 0:
        for j in range(lo, hi + 1):
            if occ[j]:
                x = o + 2 * j
                if rng.bond_uniform(key, k, x, rng.RIGHT) < p:
                    new[j] = True
                    if j < nlo:
                        nlo = j
                    if j > nhi:
                        nhi = j
                if j > 0 and rng.bond_uniform(key, k, x, rng.LEFT) < p:
                    new[j - 1] = True
                    if j - 1 < nlo:
                        nlo = j - 1
                    if j - 1 > nhi:
                        nhi = j - 1
                occ[j] = False
    else:
        for j in range(lo, hi + 1):
            if occ[j]:
                x = o + 2 * j
                if rng.bond_uniform(key, k, x, rng.LEFT) < p:
                    new[j] = True
                    if j < nlo:
                        nlo = j
                    if j > nhi:
                        nhi = j
                if rng.bond_uniform(key, k, x, rng.RIGHT) < p:
                    if j + 1 >= W:
                        occ[j] = False
                        return nlo, nhi, True
                    new[j + 1] = True
                    if j + 1 < nlo:
                        nlo = j + 1
                    if j + 1 > nhi:
                        nhi = j + 1
                occ[j] = False
        if full_left and rng.bond_uniform(key, k, o - 2, rng.RIGHT) < p:
            new[0] = True
            nlo = 0
            if nhi < 0:
                nhi = 0
    return nlo, nhi, False


@njit(cache=True)
def _pattern_code(occ, hi, r, full_left):
    if hi < 0:
        return TOO_SHALLOW
    code = 0
    for t in range(1, r + 1):
        j = hi - t
        if j < 0:
            if full_left:
                return TOO_SHALLOW
            continue
        if occ[j]:
            code |= 1 << (t - 1)
    return code


@njit(cache=True, parallel=True)
def simulate_patterns(keys, p, init_occ, origin, full_left, n_max, record_levels, r):
    """Run every trial to ``n_max`` (or death).

    Returns ``(codes, death, overflow)``: ``codes[t, i]`` is the radius-``r``
    pattern code of the anchored chain at ``record_levels[i]`` (``DEAD`` after
    absorption, ``TOO_SHALLOW`` when the window cannot resolve it, unused when
    ``r == 0``); ``death[t]`` is the absorption level or ``n_max + 1``.
    """
    T = keys.size
    W = init_occ.size
    nrec = record_levels.size
    codes = np.full((T, nrec), DEAD, dtype=np.int64)
    death = np.full(T, n_max + 1, dtype=np.int64)
    overflow = np.zeros(T, dtype=np.bool_)
    lo0 = W
    hi0 = -1
    for j in range(W):
        if init_occ[j]:
            if j < lo0:
                lo0 = j
            hi0 = j
    for t in prange(T):
        occ = init_occ.copy()
        new = np.zeros(W, dtype=np.bool_)
        lo = lo0
        hi = hi0
        ri = 0
        while ri < nrec and record_levels[ri] == 0:
            codes[t, ri] = _pattern_code(occ, hi, r, full_left) if r > 0 else 0
            ri += 1
        if hi < 0 and not full_left:
            death[t] = 0
            continue
        for k in range(n_max):
            lo, hi, ovf = _advance(occ, new, lo, hi, k, origin, keys[t], p, full_left)
            occ, new = new, occ
            if ovf:
                overflow[t] = True
                break
            if hi < 0 and not full_left:
                death[t] = k + 1
                break
            while ri < nrec and record_levels[ri] == k + 1:
                codes[t, ri] = _pattern_code(occ, hi, r, full_left) if r > 0 else 0
                ri += 1
    return codes, death, overflow


@njit(cache=True)
def forward_history(key, p, init_occ, origin, full_left, n):
    """Occupancy of levels ``0..n`` plus the open bonds of occupied sites."""
    W = init_occ.size
    occ = np.zeros((n + 1, W), dtype=np.bool_)
    left = np.zeros((n, W), dtype=np.bool_)
    right = np.zeros((n, W), dtype=np.bool_)
    occ[0] = init_occ
    for k in range(n):
        o = origin + (k & 1)
        odd = (k & 1) == 1
        for j in range(W):
            if occ[k, j]:
                x = o + 2 * j
                lb = rng.bond_uniform(key, k, x, rng.LEFT) < p
                rb = rng.bond_uniform(key, k, x, rng.RIGHT) < p
                left[k, j] = lb
                right[k, j] = rb
                if odd:
                    if lb:
                        occ[k + 1, j] = True
                    if rb:
                        if j + 1 >= W:
                            return occ, left, right, True
                        occ[k + 1, j + 1] = True
                else:
                    if rb:
                        occ[k + 1, j] = True
                    if lb and j > 0:
                        occ[k + 1, j - 1] = True
        if odd and full_left and rng.bond_uniform(key, k, o - 2, rng.RIGHT) < p:
            occ[k + 1, 0] = True
    return occ, left, right, False


@njit(cache=True)
def renewal_trace(occ, left, right, origin, n, max_pairs):
    """Renewal pairs of one realized history.

    ``occ``/``left``/``right`` describe the forward history from the start set
    (bonds only matter at occupied sites).  Returns ``(xs, ys, count)`` where
    ``xs[i]``/``ys[i]`` are the site and level of pair ``i`` for
    ``i < count``; the last pair repeats the one before it, so ``I =
    count - 2``.  ``count == 0`` means no start site reaches level ``n``.
    """
    W = occ.shape[1]
    alive = np.zeros((n + 1, W), dtype=np.bool_)
    alive[n] = occ[n]
    for k in range(n - 1, -1, -1):
        odd = (k & 1) == 1
        for j in range(W):
            if occ[k, j]:
                if odd:
                    a = (left[k, j] and alive[k + 1, j]) or (
                        right[k, j] and j + 1 < W and alive[k + 1, j + 1])
                else:
                    a = (right[k, j] and alive[k + 1, j]) or (
                        left[k, j] and j > 0 and alive[k + 1, j - 1])
                alive[k, j] = a
    xs = np.zeros(max_pairs, dtype=np.int64)
    ys = np.zeros(max_pairs, dtype=np.int64)
    jx = -1
    for j in range(W - 1, -1, -1):
        if alive[0, j]:
            jx = j
            break
    if jx < 0:
        return xs, ys, 0
    y = 0
    xs[0] = origin + 2 * jx
    ys[0] = 0
    count = 1
    cur = np.zeros(W, dtype=np.bool_)
    nxt = np.zeros(W, dtype=np.bool_)
    while count < max_pairs:
        xc = xs[count - 1]
        cur[:] = False
        any_u = False
        for j in range(jx + 1, W):
            if occ[y, j]:
                cur[j] = True
                any_u = True
        best = y
        k = y
        while any_u and k < n:
            nxt[:] = False
            any_u = False
            odd = (k & 1) == 1
            for j in range(W):
                if cur[j]:
                    if odd:
                        if left[k, j]:
                            nxt[j] = True
                            any_u = True
                        if right[k, j] and j + 1 < W:
                            nxt[j + 1] = True
                            any_u = True
                    else:
                        if right[k, j]:
                            nxt[j] = True
                            any_u = True
                        if left[k, j] and j > 0:
                            nxt[j - 1] = True
                            any_u = True
            k += 1
            cur, nxt = nxt, cur
            if any_u:
                ok = origin + (k & 1)
                reach = k - y
                for j in range(W):
                    if cur[j]:
                        v = ok + 2 * j
                        if v - xc <= reach and xc - v <= reach:
                            best = k
                            break
        if best == y:
            xs[count] = xc
            ys[count] = y
            count += 1
            break
        y = best
        jx = -1
        for j in range(W - 1, -1, -1):
            if occ[y, j] and alive[y, j]:
                jx = j
                break
        xs[count] = origin + (y & 1) + 2 * jx
        ys[count] = y
        count += 1
    return xs, ys, count


@njit(cache=True, parallel=True)
def simulate_renewal(keys, p, init_occ, origin, full_left, n, max_pairs):
    """Per trial: ``(I, Y_I, X_0, status)``; status 1 = trace complete,
    0 = no start site reaches level ``n``, -1 = window overflow,
    -2 = trace longer than ``max_pairs``."""
    T = keys.size
    out_I = np.full(T, -1, dtype=np.int64)
    out_Y = np.full(T, -1, dtype=np.int64)
    out_X = np.zeros(T, dtype=np.int64)
    status = np.zeros(T, dtype=np.int64)
    for t in prange(T):
        occ, left, right, ovf = forward_history(keys[t], p, init_occ, origin, full_left, n)
        if ovf:
            status[t] = -1
            continue
        xs, ys, count = renewal_trace(occ, left, right, origin, n, max_pairs)
        if count == 0:
            continue
        if count >= 2 and ys[count - 1] == ys[count - 2] and xs[count - 1] == xs[count - 2]:
            out_I[t] = count - 2
            out_Y[t] = ys[count - 1]
            out_X[t] = xs[0]
            status[t] = 1
        else:
            status[t] = -2
    return out_I, out_Y, out_X, status


@njit(cache=True, parallel=True)
def simulate_cone_entry(keys, p, n_cap):
    """Highest level ``<= n_cap`` at which an open path started from some
    ``y > 0`` at level 0 lies in the cone ``|v| <= k`` of the origin
    (0 if none)."""
    T = keys.size
    half = n_cap // 2 + 2
    origin = -2 * half
    W = half + n_cap + n_cap // 2 + 4
    j0 = half  # index of site 0 at level 0
    out = np.zeros(T, dtype=np.int64)
    for t in prange(T):
        occ = np.zeros(W, dtype=np.bool_)
        new = np.zeros(W, dtype=np.bool_)
        for i in range(1, n_cap + 1):
            occ[j0 + i] = True
        lo = j0 + 1
        hi = j0 + n_cap
        best = 0
        for k in range(n_cap):
            lo, hi, ovf = _advance(occ, new, lo, hi, k, origin, keys[t], p, False)
            occ, new = new, occ
            if hi < 0:
                break
            o = origin + ((k + 1) & 1)
            # leftmost occupied site decides cone membership: paths from y > 0
            # stay strictly right of -k
            if o + 2 * lo <= k + 1:
                best = k + 1
        out[t] = best
    return out


@njit(cache=True, parallel=True)
def simulate_coupled(keys, p_list, init_occ, origin, full_left, n):
    """Run each trial at every ``p`` in ``p_list`` (increasing) on the same
    uniforms.  Returns ``(nested, overflow)``: ``nested[t]`` is True iff the
    occupancy at each ``p`` is contained in the one at the next ``p`` at
    every level ``0..n``."""
    T = keys.size
    W = init_occ.size
    P = p_list.size
    nested = np.ones(T, dtype=np.bool_)
    overflow = np.zeros(T, dtype=np.bool_)
    hi0 = -1
    lo0 = W
    for j in range(W):
        if init_occ[j]:
            if j < lo0:
                lo0 = j
            hi0 = j
    for t in prange(T):
        occ = np.zeros((P, W), dtype=np.bool_)
        new = np.zeros((P, W), dtype=np.bool_)
        los = np.full(P, lo0, dtype=np.int64)
        his = np.full(P, hi0, dtype=np.int64)
        for i in range(P):
            occ[i] = init_occ
        for k in range(n):
            for i in range(P):
                if his[i] < 0 and not full_left:
                    continue
                lo = los[i] if his[i] >= 0 else W
                lo, hi, ovf = _advance(occ[i], new[i], lo, his[i], k, origin,
                                       keys[t], p_list[i], full_left)
                if ovf:
                    overflow[t] = True
                los[i] = lo
                his[i] = hi
            occ, new = new, occ
            if overflow[t]:
                break
            for i in range(P - 1):
                for j in range(W):
                    if occ[i, j] and not occ[i + 1, j]:
                        nested[t] = False
    return nested, overflow
