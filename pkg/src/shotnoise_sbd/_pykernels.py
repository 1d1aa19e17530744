"""Pure-Python card-stack kernels; reference twin of ``_ckernels.pyx``.

Stacks are CSR slices ``[start[p], end[p])`` of the card arrays, sorted by
time, earliest first; ``top[p]`` is the index of the card currently on top.
Card ``c`` belongs to ``owner[c]`` and names its opponent ``other[c]``.
Both backends return exactly the same arrays for the same input.
"""

from __future__ import annotations

import math

import numpy as np

INF = math.inf

REGULAR, ZOMBIE, ANTIZOMBIE = 0, 1, 2

# coupled event codes
EV_KILL = 0  # regular kills regular: victim dies in both processes
EV_ZOMBIE_DIES = 1  # a zombie is killed (augmented process)
EV_BECOMES_ANTIZOMBIE = 2  # a zombie kills a regular point
EV_ANTIZOMBIE_DIES = 3  # an antizombie is killed (empty-start process)
EV_BECOMES_ZOMBIE = 4  # an antizombie kills a regular point
EV_NOOP = 5  # zombie meets antizombie: both cards discarded

OK, BUDGET_EXCEEDED, BROKEN_TWIN = 0, 1, 2


def _result(death, killer, steps, max_depth, status):
    return np.array(death, dtype=np.float64), np.array(killer, dtype=np.int64), steps, max_depth, status


def resolve_single(start, end, owner, other, time, order, budget):
    """Death-sentence stacks.  Returns ``(death, killer, steps, max_depth, status)``.

    A sentence is moved from its owner's stack onto the investigation stack,
    so while it is under investigation the owner shows its next sentence.
    """
    end = end.tolist()
    owner = owner.tolist()
    other = other.tolist()
    time = time.tolist()
    top = start.tolist()
    n = len(top)
    death = [INF] * n
    killer = [-1] * n
    inv: list[int] = []
    steps = 0
    max_depth = 0
    for p in order.tolist():
        while killer[p] < 0 and top[p] < end[p]:
            inv.append(top[p])
            top[p] += 1
            while inv:
                if len(inv) > max_depth:
                    max_depth = len(inv)
                steps += 1
                if steps > budget:
                    return _result(death, killer, steps, max_depth, BUDGET_EXCEEDED)
                c = inv[-1]
                q = other[c]
                T = time[c]
                if killer[q] >= 0:
                    if death[q] < T:
                        inv.pop()  # killer already dead: sentence discarded
                        continue
                elif top[q] < end[q] and time[top[q]] < T:
                    inv.append(top[q])
                    top[q] += 1
                    continue
                v = owner[c]
                death[v] = T
                killer[v] = q
                inv.pop()
    return _result(death, killer, steps, max_depth, OK)


def resolve_double(start, end, owner, other, time, dies_owner, order, budget):
    """Duel-card stacks; each duel sits in both stacks and its direction is
    only read when the duel is realised."""
    end = end.tolist()
    owner = owner.tolist()
    other = other.tolist()
    time = time.tolist()
    dies_owner = dies_owner.tolist()
    top = start.tolist()
    n = len(top)
    death = [INF] * n
    killer = [-1] * n
    inv: list[int] = []
    steps = 0
    max_depth = 0
    for p in order.tolist():
        while killer[p] < 0 and top[p] < end[p]:
            inv.append(top[p])
            while inv:
                if len(inv) > max_depth:
                    max_depth = len(inv)
                steps += 1
                if steps > budget:
                    return _result(death, killer, steps, max_depth, BUDGET_EXCEEDED)
                c = inv[-1]
                a = owner[c]
                q = other[c]
                T = time[c]
                if killer[q] >= 0:
                    top[a] += 1
                    inv.pop()
                    continue
                cq = top[q]
                if time[cq] < T:
                    inv.append(cq)
                    continue
                if time[cq] != T or other[cq] != a:
                    return _result(death, killer, steps, max_depth, BROKEN_TWIN)
                if dies_owner[c]:
                    victim, winner = a, q
                else:
                    victim, winner = q, a
                death[victim] = T
                killer[victim] = winner
                top[winner] += 1
                inv.pop()
    return _result(death, killer, steps, max_depth, OK)


def resolve_coupled(start, end, owner, other, time, dies_owner, order, is_aug, t0, budget,
                    event_capacity):
    """Joint resolution of the empty-start and augmented processes.

    Returns a dict of arrays: ``e``/``e_aug`` (death times), ``killer``/
    ``killer_aug``, ``status`` (special kind ever taken), ``family``,
    ``special_start``/``special_end``, the event log and counters.
    """
    end = end.tolist()
    owner = owner.tolist()
    other = other.tolist()
    time = time.tolist()
    dies_owner = dies_owner.tolist()
    aug = is_aug.tolist()
    top = start.tolist()
    n = len(top)
    e = [t0 if aug[p] else INF for p in range(n)]
    e2 = [INF] * n
    k1 = [-1] * n
    k2 = [-1] * n
    status = [ZOMBIE if aug[p] else REGULAR for p in range(n)]
    family = [p if aug[p] else -1 for p in range(n)]
    s_start = [t0 if aug[p] else INF for p in range(n)]
    s_end = [INF] * n
    ev_time: list[float] = []
    ev_code: list[int] = []
    ev_a: list[int] = []
    ev_b: list[int] = []
    inv: list[int] = []
    steps = 0
    max_depth = 0
    err = OK

    def finished(x):
        if top[x] >= end[x]:
            return True
        if aug[x]:
            return e2[x] < INF
        return e[x] < INF and e2[x] < INF

    def log(T, code, a, b):
        ev_time.append(T)
        ev_code.append(code)
        ev_a.append(a)
        ev_b.append(b)

    for p0 in order.tolist():
        if err:
            break
        while not finished(p0):
            inv.append(top[p0])
            while inv:
                if len(inv) > max_depth:
                    max_depth = len(inv)
                steps += 1
                if steps > budget:
                    err = BUDGET_EXCEEDED
                    break
                c = inv[-1]
                p = owner[c]
                q = other[c]
                T = time[c]
                if finished(q):
                    top[p] += 1
                    inv.pop()
                    continue
                cq = top[q]
                if time[cq] < T:
                    inv.append(cq)
                    continue
                if time[cq] != T or other[cq] != p:
                    err = BROKEN_TWIN
                    break
                I = dies_owner[c]
                sp, sq = status[p], status[q]
                if (sp == REGULAR and sq != REGULAR) or (sp == ANTIZOMBIE and sq == ZOMBIE):
                    p, q = q, p
                    sp, sq = sq, sp
                    I = 1 - I
                if sp == REGULAR:  # both regular
                    if I:
                        v, w = p, q
                    else:
                        v, w = q, p
                    e[v] = e2[v] = T
                    k1[v] = k2[v] = w
                    top[w] += 1
                    log(T, EV_KILL, v, w)
                elif sp == ZOMBIE and sq == REGULAR:
                    if I:
                        e2[p] = T
                        k2[p] = q
                        s_end[p] = T
                        top[q] += 1
                        log(T, EV_ZOMBIE_DIES, p, q)
                    else:
                        e2[q] = T
                        k2[q] = p
                        status[q] = ANTIZOMBIE
                        family[q] = family[p]
                        s_start[q] = T
                        top[p] += 1
                        top[q] += 1
                        log(T, EV_BECOMES_ANTIZOMBIE, q, p)
                elif sp == ANTIZOMBIE and sq == REGULAR:
                    if I:
                        e[p] = T
                        k1[p] = q
                        s_end[p] = T
                        top[q] += 1
                        log(T, EV_ANTIZOMBIE_DIES, p, q)
                    else:
                        e[q] = T
                        k1[q] = p
                        status[q] = ZOMBIE
                        family[q] = family[p]
                        s_start[q] = T
                        top[p] += 1
                        top[q] += 1
                        log(T, EV_BECOMES_ZOMBIE, q, p)
                elif sp == ZOMBIE and sq == ZOMBIE:
                    if I:
                        v, w = p, q
                    else:
                        v, w = q, p
                    e2[v] = T
                    k2[v] = w
                    s_end[v] = T
                    top[w] += 1
                    log(T, EV_ZOMBIE_DIES, v, w)
                elif sp == ANTIZOMBIE and sq == ANTIZOMBIE:
                    if I:
                        v, w = p, q
                    else:
                        v, w = q, p
                    e[v] = T
                    k1[v] = w
                    s_end[v] = T
                    top[w] += 1
                    log(T, EV_ANTIZOMBIE_DIES, v, w)
                else:  # zombie meets antizombie
                    top[p] += 1
                    top[q] += 1
                    log(T, EV_NOOP, p, q)
                inv.pop()
            if err:
                break
    return {
        "e": np.array(e, dtype=np.float64),
        "e_aug": np.array(e2, dtype=np.float64),
        "killer": np.array(k1, dtype=np.int64),
        "killer_aug": np.array(k2, dtype=np.int64),
        "status": np.array(status, dtype=np.int8),
        "family": np.array(family, dtype=np.int64),
        "special_start": np.array(s_start, dtype=np.float64),
        "special_end": np.array(s_end, dtype=np.float64),
        "event_time": np.array(ev_time, dtype=np.float64),
        "event_code": np.array(ev_code, dtype=np.int8),
        "event_a": np.array(ev_a, dtype=np.int64),
        "event_b": np.array(ev_b, dtype=np.int64),
        "steps": steps,
        "max_depth": max_depth,
        "error": err,
    }

