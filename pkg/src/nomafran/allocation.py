"""Shared allocation containers: which F-UE uses which subchannel, and with
how much power."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Matching:
    """F-UE/subchannel pairs. F-UE indices are global; the quota ``q`` applies
    to each (F-AP, subchannel) superposition group, ``q_ue`` to each F-UE."""

    pairs: frozenset
    n_fues: int
    n_subchannels: int
    q: int = 2
    q_ue: int | None = None  # None: no per-F-UE cap
    proposals: int = 0
    repairs: int = 0  # blocking pairs resolved after the proposal rounds

    @classmethod
    def from_pairs(cls, pairs, n_fues, n_subchannels, q=2, q_ue=None, proposals=0, repairs=0):
        return cls(frozenset((int(m), int(n)) for m, n in pairs), n_fues, n_subchannels, q, q_ue,
                   proposals, repairs)

    @classmethod
    def empty(cls, n_fues, n_subchannels, q=2, q_ue=None):
        return cls(frozenset(), n_fues, n_subchannels, q, q_ue)

    @property
    def ue_quota(self):
        return self.n_subchannels if self.q_ue is None else self.q_ue

    def mask(self):
        out = np.zeros((self.n_fues, self.n_subchannels), dtype=bool)
        for m, n in self.pairs:
            out[m, n] = True
        return out

    def subchannels_of(self, m):
        return sorted(n for mm, n in self.pairs if mm == m)

    def group(self, fue_cell, k, n):
        """F-UEs of cell ``k`` sharing subchannel ``n``, ascending index."""
        return sorted(m for m, nn in self.pairs if nn == n and fue_cell[m] == k)

    def quota_violations(self, fue_cell):
        bad = []
        per_ue = np.zeros(self.n_fues, dtype=int)
        groups = {}
        for m, n in self.pairs:
            per_ue[m] += 1
            key = (int(fue_cell[m]), n)
            groups[key] = groups.get(key, 0) + 1
        bad += [("q_ue", int(m)) for m in np.flatnonzero(per_ue > self.ue_quota)]
        bad += [("q", key) for key, c in sorted(groups.items()) if c > self.q]
        return bad


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Transmit power in W for each matched (F-UE, subchannel); the serving
    F-AP is implied by the F-UE. Unmatched entries are zero."""

    p: np.ndarray  # (M, N)

    @classmethod
    def uniform(cls, matching, value):
        return cls(matching.mask() * float(value))

    def cell_totals(self, fue_cell, n_faps):
        out = np.zeros((n_faps, self.p.shape[1]))
        np.add.at(out, fue_cell, self.p)
        return out

    def budget_ok(self, fue_cell, n_faps, p_max_fap, tol=1e-12):
        return bool(np.all(self.cell_totals(fue_cell, n_faps).sum(axis=1) <= p_max_fap + tol))
