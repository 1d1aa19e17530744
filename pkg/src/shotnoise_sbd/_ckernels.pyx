# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled card-stack kernels.  Same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

DEF REGULAR = 0
DEF ZOMBIE = 1
DEF ANTIZOMBIE = 2

DEF EV_KILL = 0
DEF EV_ZOMBIE_DIES = 1
DEF EV_BECOMES_ANTIZOMBIE = 2
DEF EV_ANTIZOMBIE_DIES = 3
DEF EV_BECOMES_ZOMBIE = 4
DEF EV_NOOP = 5

DEF OK = 0
DEF BUDGET_EXCEEDED = 1
DEF BROKEN_TWIN = 2


def resolve_single(const cnp.int64_t[:] start, const cnp.int64_t[:] end,
                   const cnp.int64_t[:] owner, const cnp.int64_t[:] other,
                   const double[:] time, const cnp.int64_t[:] order, long long budget):
    cdef Py_ssize_t n = start.shape[0]
    cdef Py_ssize_t ncard = time.shape[0]
    death_a = np.full(n, np.inf)
    killer_a = np.full(n, -1, dtype=np.int64)
    top_a = np.array(start, dtype=np.int64)
    inv_a = np.empty(ncard + 1, dtype=np.int64)
    cdef double[:] death = death_a
    cdef cnp.int64_t[:] killer = killer_a
    cdef cnp.int64_t[:] top = top_a
    cdef cnp.int64_t[:] inv = inv_a
    cdef Py_ssize_t depth = 0, max_depth = 0, k, p, q, c, v
    cdef long long steps = 0
    cdef double T
    cdef int status = OK
    for k in range(order.shape[0]):
        p = order[k]
        while killer[p] < 0 and top[p] < end[p]:
            inv[depth] = top[p]
            depth += 1
            top[p] += 1
            while depth > 0:
                if depth > max_depth:
                    max_depth = depth
                steps += 1
                if steps > budget:
                    status = BUDGET_EXCEEDED
                    break
                c = inv[depth - 1]
                q = other[c]
                T = time[c]
                if killer[q] >= 0:
                    if death[q] < T:
                        depth -= 1
                        continue
                elif top[q] < end[q] and time[top[q]] < T:
                    inv[depth] = top[q]
                    depth += 1
                    top[q] += 1
                    continue
                v = owner[c]
                death[v] = T
                killer[v] = q
                depth -= 1
            if status != OK:
                break
        if status != OK:
            break
    return death_a, killer_a, int(steps), int(max_depth), status


def resolve_double(const cnp.int64_t[:] start, const cnp.int64_t[:] end,
                   const cnp.int64_t[:] owner, const cnp.int64_t[:] other,
                   const double[:] time, const cnp.int8_t[:] dies_owner,
                   const cnp.int64_t[:] order, long long budget):
    cdef Py_ssize_t n = start.shape[0]
    cdef Py_ssize_t ncard = time.shape[0]
    death_a = np.full(n, np.inf)
    killer_a = np.full(n, -1, dtype=np.int64)
    top_a = np.array(start, dtype=np.int64)
    inv_a = np.empty(ncard + 1, dtype=np.int64)
    cdef double[:] death = death_a
    cdef cnp.int64_t[:] killer = killer_a
    cdef cnp.int64_t[:] top = top_a
    cdef cnp.int64_t[:] inv = inv_a
    cdef Py_ssize_t depth = 0, max_depth = 0, k, p, q, a, c, cq, victim, winner
    cdef long long steps = 0
    cdef double T
    cdef int status = OK
    for k in range(order.shape[0]):
        p = order[k]
        while killer[p] < 0 and top[p] < end[p]:
            inv[depth] = top[p]
            depth += 1
            while depth > 0:
                if depth > max_depth:
                    max_depth = depth
                steps += 1
                if steps > budget:
                    status = BUDGET_EXCEEDED
                    break
                c = inv[depth - 1]
                a = owner[c]
                q = other[c]
                T = time[c]
                if killer[q] >= 0:
                    top[a] += 1
                    depth -= 1
                    continue
                cq = top[q]
                if time[cq] < T:
                    inv[depth] = cq
                    depth += 1
                    continue
                if time[cq] != T or other[cq] != a:
                    status = BROKEN_TWIN
                    break
                if dies_owner[c]:
                    victim = a
                    winner = q
                else:
                    victim = q
                    winner = a
                death[victim] = T
                killer[victim] = winner
                top[winner] += 1
                depth -= 1
            if status != OK:
                break
        if status != OK:
            break
    return death_a, killer_a, int(steps), int(max_depth), status


cdef inline bint _finished(Py_ssize_t x, cnp.int64_t[:] top, const cnp.int64_t[:] end,
                           const cnp.int8_t[:] aug, double[:] e, double[:] e2) nogil:
    if top[x] >= end[x]:
        return True
    if aug[x]:
        return e2[x] < INFINITY
    return e[x] < INFINITY and e2[x] < INFINITY


def resolve_coupled(const cnp.int64_t[:] start, const cnp.int64_t[:] end,
                    const cnp.int64_t[:] owner, const cnp.int64_t[:] other,
                    const double[:] time, const cnp.int8_t[:] dies_owner,
                    const cnp.int64_t[:] order, const cnp.int8_t[:] is_aug, double t0,
                    long long budget, Py_ssize_t event_capacity):
    cdef Py_ssize_t n = start.shape[0]
    cdef Py_ssize_t ncard = time.shape[0]
    aug_np = np.asarray(is_aug, dtype=np.int8)
    e_a = np.where(aug_np != 0, t0, np.inf)
    e2_a = np.full(n, np.inf)
    k1_a = np.full(n, -1, dtype=np.int64)
    k2_a = np.full(n, -1, dtype=np.int64)
    status_a = np.where(aug_np != 0, ZOMBIE, REGULAR).astype(np.int8)
    family_a = np.where(aug_np != 0, np.arange(n), -1).astype(np.int64)
    s_start_a = np.where(aug_np != 0, t0, np.inf)
    s_end_a = np.full(n, np.inf)
    top_a = np.array(start, dtype=np.int64)
    inv_a = np.empty(ncard + 1, dtype=np.int64)
    evt_a = np.empty(event_capacity, dtype=np.float64)
    evc_a = np.empty(event_capacity, dtype=np.int8)
    eva_a = np.empty(event_capacity, dtype=np.int64)
    evb_a = np.empty(event_capacity, dtype=np.int64)
    cdef double[:] e = e_a
    cdef double[:] e2 = e2_a
    cdef cnp.int64_t[:] k1 = k1_a
    cdef cnp.int64_t[:] k2 = k2_a
    cdef cnp.int8_t[:] status = status_a
    cdef cnp.int64_t[:] family = family_a
    cdef double[:] s_start = s_start_a
    cdef double[:] s_end = s_end_a
    cdef cnp.int64_t[:] top = top_a
    cdef cnp.int64_t[:] inv = inv_a
    cdef double[:] evt = evt_a
    cdef cnp.int8_t[:] evc = evc_a
    cdef cnp.int64_t[:] eva = eva_a
    cdef cnp.int64_t[:] evb = evb_a
    cdef Py_ssize_t nev = 0, depth = 0, max_depth = 0, k, p0, p, q, c, cq, v, w, tmp
    cdef long long steps = 0
    cdef double T
    cdef int err = OK, I, sp, sq, code
    for k in range(order.shape[0]):
        p0 = order[k]
        while not _finished(p0, top, end, is_aug, e, e2):
            inv[depth] = top[p0]
            depth += 1
            while depth > 0:
                if depth > max_depth:
                    max_depth = depth
                steps += 1
                if steps > budget:
                    err = BUDGET_EXCEEDED
                    break
                c = inv[depth - 1]
                p = owner[c]
                q = other[c]
                T = time[c]
                if _finished(q, top, end, is_aug, e, e2):
                    top[p] += 1
                    depth -= 1
                    continue
                cq = top[q]
                if time[cq] < T:
                    inv[depth] = cq
                    depth += 1
                    continue
                if time[cq] != T or other[cq] != p:
                    err = BROKEN_TWIN
                    break
                I = dies_owner[c]
                sp = status[p]
                sq = status[q]
                if (sp == REGULAR and sq != REGULAR) or (sp == ANTIZOMBIE and sq == ZOMBIE):
                    tmp = p
                    p = q
                    q = tmp
                    tmp = sp
                    sp = sq
                    sq = tmp
                    I = 1 - I
                if sp == REGULAR:
                    if I:
                        v = p
                        w = q
                    else:
                        v = q
                        w = p
                    e[v] = T
                    e2[v] = T
                    k1[v] = w
                    k2[v] = w
                    top[w] += 1
                    code = EV_KILL
                elif sp == ZOMBIE and sq == REGULAR:
                    if I:
                        v = p
                        w = q
                        e2[p] = T
                        k2[p] = q
                        s_end[p] = T
                        top[q] += 1
                        code = EV_ZOMBIE_DIES
                    else:
                        v = q
                        w = p
                        e2[q] = T
                        k2[q] = p
                        status[q] = ANTIZOMBIE
                        family[q] = family[p]
                        s_start[q] = T
                        top[p] += 1
                        top[q] += 1
                        code = EV_BECOMES_ANTIZOMBIE
                elif sp == ANTIZOMBIE and sq == REGULAR:
                    if I:
                        v = p
                        w = q
                        e[p] = T
                        k1[p] = q
                        s_end[p] = T
                        top[q] += 1
                        code = EV_ANTIZOMBIE_DIES
                    else:
                        v = q
                        w = p
                        e[q] = T
                        k1[q] = p
                        status[q] = ZOMBIE
                        family[q] = family[p]
                        s_start[q] = T
                        top[p] += 1
                        top[q] += 1
                        code = EV_BECOMES_ZOMBIE
                elif sp == ZOMBIE and sq == ZOMBIE:
                    if I:
                        v = p
                        w = q
                    else:
                        v = q
                        w = p
                    e2[v] = T
                    k2[v] = w
                    s_end[v] = T
                    top[w] += 1
                    code = EV_ZOMBIE_DIES
                elif sp == ANTIZOMBIE and sq == ANTIZOMBIE:
                    if I:
                        v = p
                        w = q
                    else:
                        v = q
                        w = p
                    e[v] = T
                    k1[v] = w
                    s_end[v] = T
                    top[w] += 1
                    code = EV_ANTIZOMBIE_DIES
                else:
                    v = p
                    w = q
                    top[p] += 1
                    top[q] += 1
                    code = EV_NOOP
                evt[nev] = T
                evc[nev] = code
                eva[nev] = v
                evb[nev] = w
                nev += 1
                depth -= 1
            if err != OK:
                break
        if err != OK:
            break
    return {
        "e": e_a,
        "e_aug": e2_a,
        "killer": k1_a,
        "killer_aug": k2_a,
        "status": status_a,
        "family": family_a,
        "special_start": s_start_a,
        "special_end": s_end_a,
        "event_time": evt_a[:nev].copy(),
        "event_code": evc_a[:nev].copy(),
        "event_a": eva_a[:nev].copy(),
        "event_b": evb_a[:nev].copy(),
        "steps": int(steps),
        "max_depth": int(max_depth),
        "error": err,
    }
