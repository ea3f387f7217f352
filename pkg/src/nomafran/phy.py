"""Downlink NOMA physical layer: SIC ordering, SINR, Shannon rate, and the
interference the fog tier causes at macro UEs.

Each F-UE cancels co-channel users of its own cell with lower CRNN and
treats the higher-CRNN ones as interference; SIC is perfect. Other cells
interfere with their total per-subchannel power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nomafran.errors import UnmatchedError


@dataclass(frozen=True, eq=False)
class RateReport:
    sinr: np.ndarray  # (M, N)
    rate: np.ndarray  # (M, N) bit/s
    intra_interference: np.ndarray  # (M, N) W, same-cell NOMA interference at each receiver

    @property
    def total(self):
        return self.rate.sum(axis=1)


@dataclass(frozen=True, eq=False)
class MacroInterference:
    per_subchannel: np.ndarray  # (U, N) W

    @property
    def total(self):
        return self.per_subchannel.sum(axis=1)

    @property
    def peak(self):
        return float(self.per_subchannel.max()) if self.per_subchannel.size else 0.0


def sic_order(cell, n, ues, ch):
    """Decoding order on one subchannel: ascending CRNN, ties by F-UE index."""
    ues = [int(u) for u in ues]
    for u in ues:
        if ch.fue_cell[u] != cell:
            raise ValueError(f"F-UE {u} is not served by F-AP {cell}")
    return sorted(ues, key=lambda u: (ch.crnn[u, n], u))


def rate(sinr, subchannel_bw):
    return subchannel_bw * np.log2(1.0 + np.asarray(sinr, dtype=float))


def sinr(ue, n, matching, power, ch, t=None):
    """SINR of one matched pair, evaluated term by term."""
    if (ue, n) not in matching.pairs:
        raise UnmatchedError(f"F-UE {ue} is not matched to subchannel {n}")
    k = int(ch.fue_cell[ue])
    p = power.p
    group = matching.group(ch.fue_cell, k, n)
    order = sic_order(k, n, group, ch)
    later = order[order.index(ue) + 1:]
    h = ch.fap_fue[k, ue, n]
    intra = h * sum(p[j, n] for j in later)
    co_tier = 0.0
    for kk in range(ch.n_faps):
        if kk == k:
            continue
        cell_p = sum(p[j, n] for j, nn in matching.pairs if nn == n and ch.fue_cell[j] == kk)
        co_tier += ch.fap_fue[kk, ue, n] * cell_p
    cross_tier = ch.mrrh_fue[ue, n] * ch.mrrh_power[n]
    return p[ue, n] * h / (intra + co_tier + cross_tier + ch.noise_power)


def cell_power(p, ch):
    """Total transmit power of each F-AP on each subchannel, (K, N)."""
    out = np.zeros((ch.n_faps, ch.n_subchannels))
    np.add.at(out, ch.fue_cell, p)
    return out


def external_interference(cell_p, ch):
    """Co-tier + cross-tier interference plus noise at each F-UE, (M, N)."""
    if ch.n_fues == 0:
        return np.zeros((0, ch.n_subchannels))
    co = np.einsum("kmn,kn->mn", ch.co_tier_gain, cell_p)
    return co + ch.mrrh_fue * ch.mrrh_power + ch.noise_power


def later_masks(mask, ch):
    """For each cell, a boolean (Mk, Mk, N) array whose [a, b, n] entry says
    member b is matched on n and decoded after member a."""
    out = {}
    for k in range(ch.n_faps):
        idx = ch.cell_members(k)
        c = ch.crnn[idx]
        gt = c[None, :, :] > c[:, None, :]
        tie = (c[None, :, :] == c[:, None, :]) & (idx[None, :, None] > idx[:, None, None])
        out[k] = (gt | tie) & mask[idx][None, :, :]
    return out


def intra_interference_power(p, mask, ch, masks=None):
    """Sum of same-cell co-channel powers each F-UE cannot cancel, (M, N)."""
    masks = masks if masks is not None else later_masks(mask, ch)
    out = np.zeros_like(p)
    for k, later in masks.items():
        idx = ch.cell_members(k)
        out[idx] = (later * p[idx][None, :, :]).sum(axis=1)
    return out * mask


def sinr_matrix(p, mask, ch, masks=None):
    p = p * mask
    h = ch.serving_gain
    intra = intra_interference_power(p, mask, ch, masks)
    denom = h * intra + external_interference(cell_power(p, ch), ch)
    return np.where(mask, p * h / denom, 0.0)


def rate_report(matching, power, ch):
    mask = matching.mask()
    p = power.p * mask
    intra = intra_interference_power(p, mask, ch)
    s = sinr_matrix(p, mask, ch)
    return RateReport(sinr=s, rate=rate(s, ch.subchannel_bw), intra_interference=intra * ch.serving_gain)


def macro_interference(matching, power, ch):
    """Interference from all F-APs at every MUE: sum_k g(k, mue, n) P(k, n)."""
    p = power.p * matching.mask()
    cp = cell_power(p, ch)
    return MacroInterference(np.einsum("kun,kn->un", ch.fap_mue, cp))
