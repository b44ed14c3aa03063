"""Compiled event loop for :mod:`econcast.simulator`.

Exponential transitions are drawn with the direct (Gillespie) method and
resampled after every event. Packet ends, multiplier updates and snapshots
are deterministic events. Only this module touches numba.
"""

import math

import numpy as np
from numba import njit

from . import protocol

_node_rates = njit(cache=True)(protocol.node_rates)
_continuation = njit(cache=True)(protocol.continuation_probability)
_multiplier_step = njit(cache=True)(protocol.multiplier_step)


@njit(cache=True)
def seed_rng(seed):
    np.random.seed(seed)


@njit(cache=True)
def ping_count(k, interval, ping_len):
    """Pings from ``k`` listeners surviving collisions on one pinging interval."""
    if k <= 1:
        return k
    span = interval - ping_len
    starts = np.empty(k)
    for a in range(k):
        starts[a] = np.random.random() * span
    count = 0
    for a in range(k):
        alone = True
        for b in range(k):
            if a != b and abs(starts[a] - starts[b]) < ping_len:
                alone = False
                break
        if alone:
            count += 1
    return count


@njit(cache=True)
def ping_counts(k, interval, ping_len, draws, seed):
    np.random.seed(seed)
    out = np.empty(draws, np.int64)
    for d in range(draws):
        out[d] = ping_count(k, interval, ping_len)
    return out


@njit(cache=True)
def _rank(st, n, counts):
    idx = 0
    for p in range(n):
        v = st[p]
        r = n - p - 1
        if v == 1:
            idx += counts[r]
        elif v == 2:
            idx += 2 * counts[r]
            for q in range(p + 1, n):
                r -= 1
                idx += st[q] << r
            return idx
    return idx


@njit(cache=True)
def _grow(a, k):
    if k < a.shape[0]:
        return a
    b = np.empty(a.shape[0] * 2, a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def simulate(
    indptr,
    indices,
    rho,
    L,
    X,
    u,
    sigma,
    capture,
    groupput,
    packet,
    ping_mode,
    ping_interval,
    ping_len,
    ping_tx_listen,
    duration,
    warmup,
    tau,
    delta,
    theorem,
    phase,
    freeze,
    eta0,
    cap_lo,
    cap_hi,
    seed,
    max_events,
    collect_occ,
    state_counts,
    max_trace,
    snap_every,
):
    n = rho.shape[0]
    np.random.seed(seed)
    inf = np.inf
    unit = packet + (ping_interval if ping_mode else 0.0)

    st = np.zeros(n, np.int64)
    eta = eta0.copy()
    bat = np.zeros(n)
    bat0 = np.zeros(n)
    kint = np.zeros(n, np.int64)
    busy = np.zeros(n, np.int64)
    nlis = np.zeros(n, np.int64)
    f_sl = np.empty(n)
    f_lx = np.empty(n)
    for i in range(n):
        r = _node_rates(eta[i], L[i], X[i], sigma, True, 0.0, True)
        f_sl[i] = r[0]
        f_lx[i] = r[2]
    expc = np.empty(n + 1)
    for c in range(n + 1):
        expc[c] = math.exp(c / sigma)

    tx_end = np.full(n, inf)
    txs = np.zeros(n)
    next_upd = np.full(n, inf)
    if not freeze:
        for i in range(n):
            next_upd[i] = phase[i] + tau
    next_snap = snap_every if snap_every > 0 else inf

    rxsrc = np.full(n, -1, np.int64)
    rxbad = np.zeros(n, np.bool_)
    bsrc = np.full(n, -1, np.int64)
    bn = np.zeros(n, np.int64)
    blast = np.zeros(n)
    has_last = np.zeros(n, np.bool_)
    last_end = np.zeros(n)
    slept = np.zeros(n, np.bool_)
    ep_c = np.zeros(n, np.int64)
    ep_n = np.zeros(n, np.int64)

    rtot = np.zeros(n)
    rlx = np.zeros(n)

    meas_listen = np.zeros(n)
    meas_tx = np.zeros(n)
    meas_txping = np.zeros(n)
    consumed = np.zeros(n)
    occ = np.zeros(state_counts[n] if collect_occ else 1)
    g_credit = 0.0
    a_credit = 0.0
    packets = 0
    collided = 0.0
    ntx = 0
    max_ntx = 0

    bursts = np.empty(1024, np.int64)
    nb = 0
    bnode = np.empty(1024, np.int64)
    episodes = np.empty(1024, np.int64)
    ne = 0
    lat = np.empty(1024)
    lat_node = np.empty(1024, np.int64)
    lat_start = np.empty(1024)
    nl = 0
    snaps_t = np.empty(64)
    snaps = np.empty((64, n))
    ns = 0

    tr_t = np.empty(max_trace)
    tr_node = np.empty(max_trace, np.int64)
    tr_old = np.empty(max_trace, np.int64)
    tr_new = np.empty(max_trace, np.int64)
    ntr = 0
    tr_dropped = 0

    t = 0.0
    events = 0
    while True:
        if events >= max_events:
            break
        # exponential rates, per packet time
        R = 0.0
        for i in range(n):
            s = st[i]
            if busy[i] > 0 or s == 2:
                rtot[i] = 0.0
                continue
            if s == 0:
                rtot[i] = f_sl[i]
            else:
                if capture:
                    lx = f_lx[i]
                else:
                    est = nlis[i]
                    if ping_mode:
                        est = ping_count(est, ping_interval, ping_len)
                    if not groupput and est > 1:
                        est = 1
                    lx = f_lx[i] * expc[est]
                rlx[i] = lx
                rtot[i] = 1.0 + lx
            R += rtot[i]

        # next deterministic event: 0 end, 1 packet end, 2 update, 3 snapshot
        t_det = duration
        kind = 0
        who = -1
        for i in range(n):
            if tx_end[i] < t_det:
                t_det = tx_end[i]
                kind = 1
                who = i
        for i in range(n):
            if next_upd[i] < t_det:
                t_det = next_upd[i]
                kind = 2
                who = i
        if next_snap < t_det:
            t_det = next_snap
            kind = 3

        t_exp = inf
        if R > 0.0:
            t_exp = t - math.log(1.0 - np.random.random()) * packet / R
        if t_exp < t_det:
            tn = t_exp
            kind = 4
        else:
            tn = t_det

        # advance clocks, batteries and measurements to tn
        dt = tn - t
        m0 = t if t > warmup else warmup
        dtm = tn - m0 if tn > m0 else 0.0
        for i in range(n):
            s = st[i]
            draw = 0.0
            if s == 1:
                draw = L[i] * dt
                if dtm > 0.0:
                    meas_listen[i] += dtm
                    consumed[i] += L[i] * dtm
            elif s == 2:
                pe = txs[i] + packet
                a = (tn if tn < pe else pe) - t
                if a < 0.0:
                    a = 0.0
                lp = L[i] if ping_tx_listen else X[i]
                draw = X[i] * a + lp * (dt - a)
                if dtm > 0.0:
                    am = (tn if tn < pe else pe) - m0
                    if am < 0.0:
                        am = 0.0
                    meas_tx[i] += dtm
                    meas_txping[i] += dtm - am
                    consumed[i] += X[i] * am + lp * (dtm - am)
            b = bat[i] + rho[i] * dt - draw
            if b < cap_lo:
                b = cap_lo
            if b > cap_hi:
                b = cap_hi
            bat[i] = b
        if dtm > 0.0:
            if collect_occ:
                occ[_rank(st, n, state_counts)] += dtm
            for j in range(n):
                if st[j] == 1 and busy[j] >= 2:
                    collided += dtm
        t = tn

        if kind == 0:
            break
        if kind == 3:
            snaps_t = _grow(snaps_t, ns)
            if ns >= snaps.shape[0]:
                bigger = np.empty((snaps.shape[0] * 2, n))
                bigger[: snaps.shape[0]] = snaps
                snaps = bigger
            snaps_t[ns] = t
            snaps[ns] = eta
            ns += 1
            next_snap += snap_every
            continue
        if kind == 2:
            i = who
            kint[i] += 1
            k = kint[i]
            if theorem:
                dk = 1.0 / ((k + 1) * math.log(k + 1))
                tk = k * tau
            else:
                dk = delta
                tk = tau
            eta[i] = _multiplier_step(eta[i], dk / (u[i] * u[i]), tk, bat[i] - bat0[i])
            bat0[i] = bat[i]
            r = _node_rates(eta[i], L[i], X[i], sigma, True, 0.0, True)
            f_sl[i] = r[0]
            f_lx[i] = r[2]
            next_upd[i] += (k + 1) * tau if theorem else tau
            continue

        events += 1
        if kind == 4:
            x = np.random.random() * R
            i = 0
            acc = rtot[0]
            while acc <= x and i < n - 1:
                i += 1
                acc += rtot[i]
            while rtot[i] == 0.0:
                i -= 1
            old = st[i]
            if old == 0:
                new = 1
            elif np.random.random() * rtot[i] < 1.0:
                new = 0
            else:
                new = 2
            # leaving listen ends any burst being received
            if old == 1 and bn[i] > 0:
                if blast[i] >= warmup:
                    bursts = _grow(bursts, nb)
                    bnode = _grow(bnode, nb)
                    bursts[nb] = bn[i]
                    bnode[nb] = i
                    nb += 1
                has_last[i] = True
                last_end[i] = blast[i]
                slept[i] = False
                bn[i] = 0
                bsrc[i] = -1
            st[i] = new
            delta_l = (1 if new == 1 else 0) - (1 if old == 1 else 0)
            for q in range(indptr[i], indptr[i + 1]):
                nlis[indices[q]] += delta_l
            if new == 0:
                slept[i] = True
            if ntr < max_trace:
                tr_t[ntr] = t
                tr_node[ntr] = i
                tr_old[ntr] = old
                tr_new[ntr] = new
                ntr += 1
            else:
                tr_dropped += 1
            if new == 2:
                ep_c[i] = nlis[i]
                ep_n[i] = 0
                starting = i
            else:
                starting = -1
        else:
            # packet (unit) end of transmitter `who`
            i = who
            ok = 0
            for q in range(indptr[i], indptr[i + 1]):
                j = indices[q]
                busy[j] -= 1
                if st[j] == 1 and rxsrc[j] == i:
                    rxsrc[j] = -1
                    if not rxbad[j]:
                        ok += 1
                        if bsrc[j] == i and bn[j] > 0:
                            bn[j] += 1
                        else:
                            if bn[j] > 0:
                                if blast[j] >= warmup:
                                    bursts = _grow(bursts, nb)
                                    bnode = _grow(bnode, nb)
                                    bursts[nb] = bn[j]
                                    bnode[nb] = j
                                    nb += 1
                                has_last[j] = True
                                last_end[j] = blast[j]
                                slept[j] = False
                            elif has_last[j] and slept[j] and last_end[j] >= warmup:
                                lat = _grow(lat, nl)
                                lat_node = _grow(lat_node, nl)
                                lat_start = _grow(lat_start, nl)
                                lat[nl] = txs[i] - last_end[j]
                                lat_node[nl] = j
                                lat_start[nl] = last_end[j]
                                nl += 1
                            bsrc[j] = i
                            bn[j] = 1
                        blast[j] = txs[i] + packet
                    elif bn[j] > 0:
                        if blast[j] >= warmup:
                            bursts = _grow(bursts, nb)
                            bnode = _grow(bnode, nb)
                            bursts[nb] = bn[j]
                            bnode[nb] = j
                            nb += 1
                        has_last[j] = True
                        last_end[j] = blast[j]
                        slept[j] = False
                        bn[j] = 0
                        bsrc[j] = -1
                    rxbad[j] = False
            ntx -= 1
            tx_end[i] = inf
            if txs[i] + packet >= warmup:
                packets += 1
                g_credit += ok * packet
                if ok > 0:
                    a_credit += packet
            ep_n[i] += 1
            starting = -1
            again = False
            if capture:
                est = ping_count(ok, ping_interval, ping_len) if ping_mode else nlis[i]
                if not groupput and est > 1:
                    est = 1
                again = np.random.random() < _continuation(est, sigma)
            if again:
                starting = i
            else:
                st[i] = 1
                for q in range(indptr[i], indptr[i + 1]):
                    nlis[indices[q]] += 1
                if ep_c[i] >= 1 and t >= warmup:
                    episodes = _grow(episodes, ne)
                    episodes[ne] = ep_n[i]
                    ne += 1
                if ntr < max_trace:
                    tr_t[ntr] = t
                    tr_node[ntr] = i
                    tr_old[ntr] = 2
                    tr_new[ntr] = 1
                    ntr += 1
                else:
                    tr_dropped += 1

        if starting >= 0:
            i = starting
            txs[i] = t
            tx_end[i] = t + unit
            ntx += 1
            if ntx > max_ntx:
                max_ntx = ntx
            for q in range(indptr[i], indptr[i + 1]):
                j = indices[q]
                if st[j] == 1:
                    if busy[j] == 0:
                        rxsrc[j] = i
                        rxbad[j] = False
                    else:
                        rxbad[j] = True
                busy[j] += 1

    return (
        t,
        events,
        packets,
        g_credit,
        a_credit,
        meas_listen,
        meas_tx,
        meas_txping,
        consumed,
        occ,
        bursts[:nb].copy(),
        bnode[:nb].copy(),
        episodes[:ne].copy(),
        lat[:nl].copy(),
        lat_node[:nl].copy(),
        lat_start[:nl].copy(),
        snaps_t[:ns].copy(),
        snaps[:ns].copy(),
        eta,
        bat,
        collided,
        max_ntx,
        tr_t[:ntr].copy(),
        tr_node[:ntr].copy(),
        tr_old[:ntr].copy(),
        tr_new[:ntr].copy(),
        tr_dropped,
    )
