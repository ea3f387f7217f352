"""Many-to-many F-UE/subchannel matching.

F-UEs rank subchannels by serving-link gain and propose down their lists;
each (F-AP, subchannel) group takes proposals while it has room and, once
full, keeps whichever q-subset of incumbents plus proposer has the highest
net utility under an equal-power proxy. With q = 1 and q_ue = 1 this is the
OFDMA baseline.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from nomafran import phy
from nomafran.allocation import Matching
from nomafran.errors import InstanceTooLarge
from nomafran.game import mean_mue_gain

BRUTE_FORCE_LIMIT = 10**7


@dataclass(eq=False)
class PreferenceState:
    ue_pref: np.ndarray  # (M, N) subchannels, most preferred first
    alive: np.ndarray  # (M, N) by list position; False once proposed to or unacceptable
    groups: dict  # (F-AP, subchannel) -> sorted tuple of accepted F-UEs

    def next_choice(self, m):
        """First entry not yet proposed to (entries are consumed in order)."""
        row = self.alive[m]
        i = int(row.argmax())
        return int(self.ue_pref[m, i]) if row[i] else None

    def rank(self, m, n):
        return int(np.flatnonzero(self.ue_pref[m] == n)[0])


def build_preferences(ch, t=None):
    """Each F-UE's subchannels by decreasing serving gain (ties: lower index)."""
    m, n = ch.serving_gain.shape
    pref = np.empty((m, n), dtype=int)
    cols = np.arange(n)
    for u in range(m):
        pref[u] = np.lexsort((cols, -ch.serving_gain[u]))
    return PreferenceState(ue_pref=pref, alive=np.ones((m, n), dtype=bool), groups={})


def proxy_power(params, q, n_subchannels):
    """Equal split of the F-AP budget over q users on every subchannel."""
    return min(params.p_max_fap / (q * n_subchannels), params.pair_cap)


class SubsetEvaluator:
    """Scores candidate groups for one drop; tables are built once so the
    proposal loop only does scalar arithmetic."""

    def __init__(self, ch, cache, params, q, cell_power=None):
        self.ch = ch
        self.q = q
        self.p = proxy_power(params, q, ch.n_subchannels)
        self.bw = ch.subchannel_bw
        self.price_term = (params.price * self.p * mean_mue_gain(ch)).tolist()  # [k][n]
        self.weight = (1.0 + params.beta * cache.theta).tolist()
        self.static = (ch.mrrh_fue * ch.mrrh_power + ch.noise_power).tolist()
        self.h = ch.serving_gain.tolist()
        self.crnn = ch.crnn.tolist()
        self.cell = ch.fue_cell.tolist()
        self.cross = ch.fap_fue.transpose(1, 2, 0).tolist()  # [m][n][k]
        self.cell_power = None if cell_power is None else np.asarray(cell_power, dtype=float)

    def others(self, k, n, counts):
        """Per-F-AP power on ``n`` seen as co-tier interference, or None."""
        if self.cell_power is not None:
            out = self.cell_power[:, n].tolist()
        elif counts is not None:
            out = (counts[:, n] * self.p).tolist()
        else:
            return None
        out[k] = 0.0
        return out if any(out) else None

    def _outside(self, u, n, others):
        """Interference plus noise at ``u`` that does not come from its own cell."""
        a = self.static[u][n]
        if others is not None:
            a += sum(g * w for g, w in zip(self.cross[u][n], others))
        return a

    def _score(self, n, order, outside, price):
        p = self.p
        size = len(order)
        value = 0.0
        for i, u in enumerate(order):
            h = self.h[u][n]
            value += self.weight[u] * self.bw * math.log2(1.0 + p * h / (h * p * (size - i - 1) + outside[u]))
        return value - size * price

    def _sic(self, n, members):
        crnn = self.crnn
        return sorted(members, key=lambda u: (crnn[u][n], u))

    def acceptable(self):
        """(M, N) mask of subchannels where an F-UE alone, at the proxy power
        and without co-tier load, earns positive net utility."""
        out = np.zeros((self.ch.n_fues, self.ch.n_subchannels), dtype=bool)
        for u in range(self.ch.n_fues):
            for n in range(self.ch.n_subchannels):
                out[u, n] = self._score(n, [u], {u: self.static[u][n]}, self.price_term[self.cell[u]][n]) > 0
        return out

    def __call__(self, n, candidates, counts=None):
        if not candidates:
            return 0.0
        order = self._sic(n, candidates)
        k = self.cell[order[0]]
        others = self.others(k, n, counts)
        outside = {u: self._outside(u, n, others) for u in order}
        return self._score(n, order, outside, self.price_term[k][n])

    def best_swap(self, n, current, u, counts=None):
        """Best group after proposer ``u`` replaces one member of the full
        group ``current``. Returns (new group, dropped member) when that
        strictly beats keeping ``current``, else None. Equal values go to
        the lexicographically smaller group."""
        k = self.cell[u]
        others = self.others(k, n, counts)
        everyone = self._sic(n, list(current) + [u])
        outside = {v: self._outside(v, n, others) for v in everyone}
        price = self.price_term[k][n]
        best_value = self._score(n, [v for v in everyone if v != u], outside, price)
        best = None
        for v in current:
            trial = tuple(sorted(w for w in everyone if w != v))
            value = self._score(n, [w for w in everyone if w != v], outside, price)
            if value > best_value or (best is not None and value == best_value and trial < best[0]):
                best, best_value = (trial, v), value
        return best


def evaluate_subset(n, candidates, ch, cache, params, q, counts=None, cell_power=None):
    """Net utility of putting ``candidates`` (one cell's F-UEs) on subchannel ``n``.

    Every pair gets the proxy power. Other cells contribute co-tier
    interference through ``counts`` (F-UEs per cell on ``n`` times the proxy
    power) or through an explicit ``cell_power`` (K, N) array when given.
    """
    candidates = [int(u) for u in candidates]
    cells = {int(ch.fue_cell[u]) for u in candidates}
    if len(cells) > 1:
        raise ValueError("a superposition group must come from a single F-AP")
    return SubsetEvaluator(ch, cache, params, q, cell_power)(n, candidates, counts)


def _counts(groups, n_faps, n_subchannels):
    c = np.zeros((n_faps, n_subchannels), dtype=int)
    for (k, n), members in groups.items():
        c[k, n] = len(members)
    return c


def matching_value(matching, ch, cache, params, cell_power=None):
    """Sum of evaluate_subset over every non-empty (F-AP, subchannel) group."""
    groups = _groups_of(matching, ch)
    counts = _counts(groups, ch.n_faps, ch.n_subchannels)
    ev = SubsetEvaluator(ch, cache, params, matching.q, cell_power)
    return sum(ev(n, g, counts) for (k, n), g in sorted(groups.items()))


def _groups_of(matching, ch):
    groups = {}
    for m, n in sorted(matching.pairs):
        groups.setdefault((int(ch.fue_cell[m]), n), []).append(m)
    return {key: tuple(v) for key, v in groups.items()}


def run_matching(ch, cache, params, q, q_ue=None, cell_power=None, stabilize=True):
    """Proposal rounds until no F-UE with spare quota has a list entry left.

    F-UEs only list subchannels they find acceptable (see
    ``SubsetEvaluator.acceptable``). ``q_ue=None`` puts no cap on subchannels
    per F-UE. With ``stabilize`` the rounds are followed by blocking-pair
    resolution (see ``_stabilize``). ``Matching.proposals`` counts list
    proposals, ``Matching.repairs`` the resolutions.
    """
    q_ue = ch.n_subchannels if q_ue is None else q_ue
    if q < 1 or q_ue < 1:
        raise ValueError("quotas must be >= 1")
    ev = SubsetEvaluator(ch, cache, params, q, cell_power)
    ok = ev.acceptable()
    state = build_preferences(ch)
    state.alive &= np.take_along_axis(ok, state.ue_pref, axis=1)
    k_count, n_count = ch.n_faps, ch.n_subchannels
    held = np.zeros(ch.n_fues, dtype=int)
    counts = np.zeros((k_count, n_count), dtype=int)
    groups = state.groups
    order = sorted(range(ch.n_fues), key=lambda u: (int(ch.fue_cell[u]), u))
    proposals = 0
    while True:
        # F-UEs displaced during a round wait for the next one
        eligible = [u for u in order if held[u] < q_ue and state.alive[u].any()]
        if not eligible:
            break
        for u in eligible:
            if held[u] >= q_ue:
                continue
            n = state.next_choice(u)
            if n is None:
                continue
            state.alive[u, state.rank(u, n)] = False
            proposals += 1
            k = int(ch.fue_cell[u])
            current = groups.get((k, n), ())
            if len(current) < q:
                groups[(k, n)] = tuple(sorted(current + (u,)))
                held[u] += 1
                counts[k, n] += 1
                continue
            swap = ev.best_swap(n, current, u, counts)
            if swap is not None:
                groups[(k, n)], dropped = swap
                held[u] += 1
                held[dropped] -= 1
    repairs = 0
    if stabilize:
        repairs = _stabilize(ch, ev, state, ok, groups, counts, held, q, q_ue)
    pairs = [(u, n) for (k, n), members in groups.items() for u in members]
    return Matching.from_pairs(pairs, ch.n_fues, n_count, q, q_ue, proposals, repairs)


def _stabilize(ch, ev, state, ok, groups, counts, held, q, q_ue, limit=None):
    """Resolve blocking pairs until none is left or ``limit`` resolutions.

    Group values depend on the whole group, so a rejection can become an
    acceptance once the group has changed; the proposal rounds never revisit
    such entries. Each resolution lets the blocking F-UE join (displacing the
    member the group values least, as in a proposal) and, if that breaks its
    quota, leave its least preferred subchannel. Groups are rescanned in
    (F-AP, subchannel) order whenever their contents or co-tier load change.
    """
    k_count, n_count = ch.n_faps, ch.n_subchannels
    limit = ch.n_fues * n_count if limit is None else limit
    rank = np.empty_like(state.ue_pref)
    np.put_along_axis(rank, state.ue_pref, np.arange(n_count)[None, :], axis=1)
    members = [[int(u) for u in ch.cell_members(k)] for k in range(k_count)]
    mine = [set() for _ in range(ch.n_fues)]
    for (k, n), g in groups.items():
        for u in g:
            mine[u].add(n)
    dirty = {(k, n) for k in range(k_count) for n in range(n_count)}
    repairs = 0

    def touch(k, n, resized):
        dirty.add((k, n))
        if resized:  # co-tier load on n changed for every other cell
            dirty.update((kk, n) for kk in range(k_count) if kk != k)

    while dirty and repairs < limit:
        k, n = min(dirty)
        dirty.discard((k, n))
        current = groups.get((k, n), ())
        for u in members[k]:
            if u in current or not ok[u, n]:
                continue
            worst = max(mine[u], key=lambda c: rank[u, c]) if mine[u] else None
            if held[u] >= q_ue and rank[u, n] > rank[u, worst]:
                continue
            if len(current) < q:
                groups[(k, n)] = tuple(sorted(current + (u,)))
                counts[k, n] += 1
                touch(k, n, True)
            else:
                swap = ev.best_swap(n, current, u, counts)
                if swap is None:
                    continue
                groups[(k, n)], dropped = swap
                mine[dropped].discard(n)
                held[dropped] -= 1
                touch(k, n, False)
            mine[u].add(n)
            held[u] += 1
            if held[u] > q_ue:
                groups[(k, worst)] = tuple(v for v in groups[(k, worst)] if v != u)
                counts[k, worst] -= 1
                mine[u].discard(worst)
                held[u] -= 1
                touch(k, worst, True)
            repairs += 1
            break
    return repairs


def blocking_pairs(matching, ch, cache, params, rtol=1e-12):
    """(F-UE, subchannel) pairs violating pairwise stability.

    F-UE u blocks with acceptable subchannel c when u has spare quota or
    prefers c to one of its current subchannels, and c's group would take u:
    it has room, or swapping u in for an incumbent strictly raises the
    group's value.
    """
    state = build_preferences(ch)
    groups = _groups_of(matching, ch)
    counts = _counts(groups, ch.n_faps, ch.n_subchannels)
    ev = SubsetEvaluator(ch, cache, params, matching.q)
    ok = ev.acceptable()
    out = []
    for u in range(ch.n_fues):
        k = int(ch.fue_cell[u])
        mine = matching.subchannels_of(u)
        spare = len(mine) < matching.ue_quota
        worst = max((state.rank(u, n) for n in mine), default=-1)
        for c in range(ch.n_subchannels):
            if c in mine or not ok[u, c] or not (spare or state.rank(u, c) < worst):
                continue
            current = groups.get((k, c), ())
            if len(current) < matching.q:
                out.append((u, c))
                continue
            base = ev(c, current, counts)
            for v in current:
                trial = set(current) - {v} | {u}
                value = ev(c, sorted(trial), counts)
                if value > base + rtol * abs(base):
                    out.append((u, c))
                    break
    return out


def enumeration_size(ch, q):
    total = 1
    for k in range(ch.n_faps):
        size = len(ch.cell_members(k))
        per_group = sum(math.comb(size, i) for i in range(min(q, size) + 1))
        total *= per_group ** ch.n_subchannels
    return total


def brute_force_optimum(ch, cache, params, q, q_ue=None, limit=BRUTE_FORCE_LIMIT):
    """Best quota-feasible matching by exhaustive enumeration, scored with
    the same evaluator as run_matching. Ties go to the lexicographically
    smallest pair list."""
    q_ue = ch.n_subchannels if q_ue is None else q_ue
    size = enumeration_size(ch, q)
    if size > limit:
        raise InstanceTooLarge(f"{size} candidate matchings exceed the limit of {limit}")
    slots = [(k, n) for k in range(ch.n_faps) for n in range(ch.n_subchannels)]
    options = {}
    for k in range(ch.n_faps):
        members = [int(u) for u in ch.cell_members(k)]
        options[k] = [c for i in range(min(q, len(members)) + 1) for c in itertools.combinations(members, i)]
    ev = SubsetEvaluator(ch, cache, params, q)
    held = np.zeros(ch.n_fues, dtype=int)
    chosen = {}
    memo = {}
    best = [-math.inf, None]

    def score():
        counts = _counts(chosen, ch.n_faps, ch.n_subchannels)
        total = 0.0
        for (k, n), g in chosen.items():
            if not g:
                continue
            key = (n, g, tuple(counts[:, n]))
            if key not in memo:
                memo[key] = ev(n, g, counts)
            total += memo[key]
        return total

    def visit(i):
        if i == len(slots):
            value = score()
            pairs = tuple(sorted((u, n) for (k, n), g in chosen.items() for u in g))
            if value > best[0] or (value == best[0] and pairs < best[1]):
                best[0], best[1] = value, pairs
            return
        k, n = slots[i]
        for g in options[k]:
            if any(held[u] >= q_ue for u in g):
                continue
            for u in g:
                held[u] += 1
            chosen[(k, n)] = g
            visit(i + 1)
            for u in g:
                held[u] -= 1
        chosen.pop((k, n), None)

    visit(0)
    return Matching.from_pairs(best[1], ch.n_fues, ch.n_subchannels, q, q_ue), best[0]
