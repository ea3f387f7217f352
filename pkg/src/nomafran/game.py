"""Non-cooperative power allocation with interference pricing and a caching
reward.

Every matched (F-UE, subchannel) pair is a player maximising

    (1 + beta * theta) * B * log2(1 + p * h / I) - price * gbar * p

where ``I`` is everything in its SINR denominator and ``gbar`` is the mean
gain from its F-AP to the macro UEs on that subchannel. Powers start at
``p_min`` and are updated by best response, pair after pair, until a sweep
moves nothing by ``epsilon_converge``. If any macro UE still sees more than
the interference threshold, the price grows and the game is replayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from nomafran import phy
from nomafran.allocation import PowerAllocation
from nomafran.errors import ValidationError
from nomafran.units import dbm_to_watt

LN2 = math.log(2.0)


@dataclass(frozen=True)
class UtilityParams:
    price: float = 1e15  # lambda, bit/s per (W x linear gain)
    beta: float = 0.5
    interference_threshold: float = float(dbm_to_watt(-90.0))  # W per MUE per subchannel
    p_min: float = 1e-6
    p_max_per_pair: float | None = None  # defaults to p_max_fap / 4
    p_max_fap: float = float(dbm_to_watt(41.0))
    epsilon_converge: float = 1e-9
    max_inner_iters: int = 500
    max_outer_iters: int = 20
    lambda_growth: float = 2.0

    @property
    def pair_cap(self):
        return self.p_max_fap / 4.0 if self.p_max_per_pair is None else self.p_max_per_pair

    def validate(self):
        if not self.p_max_fap > 0:
            raise ValidationError("p_max_fap", "must be > 0")
        if not 0 < self.p_min <= self.pair_cap:
            raise ValidationError("p_min", "must satisfy 0 < p_min <= p_max_per_pair")
        if self.price < 0:
            raise ValidationError("price", "must be >= 0")
        if self.beta < 0:
            raise ValidationError("beta", "must be >= 0")
        if not self.lambda_growth > 1:
            raise ValidationError("lambda_growth", "must be > 1")
        if not self.epsilon_converge > 0:
            raise ValidationError("epsilon_converge", "must be > 0")
        if self.max_inner_iters < 1 or self.max_outer_iters < 1:
            raise ValidationError("max_inner_iters", "iteration limits must be >= 1")
        if not self.interference_threshold > 0:
            raise ValidationError("interference_threshold", "must be > 0")
        return self


@dataclass(frozen=True, eq=False)
class GameResult:
    powers: PowerAllocation
    converged: bool
    inner_iterations: int  # sweeps, summed over all price levels
    outer_iterations: int
    threshold_satisfied: bool
    final_lambda: float
    utility: np.ndarray  # (M,) net utility per F-UE at final_lambda
    interference_history: tuple = field(default=())  # peak MUE interference per price level
    last_change: float = 0.0


def mean_mue_gain(ch):
    """Pricing gain per (F-AP, subchannel): mean gain towards the macro UEs."""
    if ch.n_mues == 0:
        return np.zeros((ch.n_faps, ch.n_subchannels))
    return ch.fap_mue.mean(axis=1)


def best_response_power(weight, bw, price_gain, interference_over_gain, p_cap):
    """Closed-form maximiser of weight*bw*log2(1 + p/x) - price_gain*p on [0, p_cap],
    with x = interference_over_gain. Works elementwise on arrays."""
    weight, price_gain, x = np.broadcast_arrays(
        np.asarray(weight, float), np.asarray(price_gain, float), np.asarray(interference_over_gain, float))
    with np.errstate(divide="ignore", over="ignore"):
        level = np.where(price_gain > 0, weight * bw / (LN2 * np.where(price_gain > 0, price_gain, 1.0)), np.inf)
    out = np.clip(level - x, 0.0, p_cap)
    return out if out.ndim else float(out)


def pair_utility(p, weight, bw, price_gain, interference_over_gain):
    return weight * bw * np.log2(1.0 + p / interference_over_gain) - price_gain * p


def net_utility(ue, matching, power, ch, cache, params, price=None):
    """Net utility of one F-UE summed over its subchannels, computed term by term."""
    price = params.price if price is None else price
    gbar = mean_mue_gain(ch)
    k = int(ch.fue_cell[ue])
    weight = 1.0 + params.beta * cache.theta[ue]
    total = 0.0
    for n in matching.subchannels_of(ue):
        r = float(phy.rate(phy.sinr(ue, n, matching, power, ch), ch.subchannel_bw))
        total += weight * r - price * power.p[ue, n] * gbar[k, n]
    return total


def net_utilities(mask, p, ch, cache, params, price=None, masks=None):
    """Vectorised per-F-UE net utility, (M,)."""
    price = params.price if price is None else price
    s = phy.sinr_matrix(p, mask, ch, masks)
    weight = 1.0 + params.beta * cache.theta
    gbar = mean_mue_gain(ch)[ch.fue_cell]
    terms = weight[:, None] * phy.rate(s, ch.subchannel_bw) - price * p * gbar
    return (terms * mask).sum(axis=1)


def best_response(ue, n, matching, power, ch, cache, params, price=None):
    """Best power for pair (ue, n) with every other power frozen at ``power``."""
    price = params.price if price is None else price
    probe = PowerAllocation(power.p.copy())
    probe.p[ue, n] = 1.0
    x = 1.0 / phy.sinr(ue, n, matching, probe, ch)  # I / h; raises if unmatched
    k = int(ch.fue_cell[ue])
    weight = 1.0 + params.beta * cache.theta[ue]
    return best_response_power(weight, ch.subchannel_bw, price * mean_mue_gain(ch)[k, n], x, params.pair_cap)


def _play(mask, ch, weight, price_gain, params, masks):
    """Gauss-Seidel best-response sweeps from p_min. Pairs on different
    subchannels do not interact, so each F-UE updates all its subchannels
    at once while F-APs and F-UEs are visited in index order."""
    p = params.p_min * mask.astype(float)
    cp = phy.cell_power(p, ch)
    h_all = ch.serving_gain
    static = (ch.mrrh_fue * ch.mrrh_power + ch.noise_power) / np.where(mask, h_all, 1.0)
    cross = np.ascontiguousarray(ch.co_tier_gain.transpose(1, 0, 2))  # (M, K, N)
    # water level per pair; the best response is clip(level - I/h, 0, cap)
    level = best_response_power(weight[:, None], ch.subchannel_bw, price_gain[ch.fue_cell], 0.0, np.inf)
    cells = [(k, ch.cell_members(k)) for k in range(ch.n_faps)]
    rows = {k: [(a, m) for a, m in enumerate(idx) if mask[m].any()] for k, idx in cells}
    cap = params.pair_cap
    change = np.inf
    sweeps = 0
    while sweeps < params.max_inner_iters:
        sweeps += 1
        before = p.copy()
        for k, idx in cells:
            later = masks[k]
            for a, m in rows[k]:
                h = h_all[m]
                x = (later[a] * p[idx]).sum(axis=0) + (cross[m] * cp).sum(axis=0) / h + static[m]
                new = np.clip(level[m] - x, 0.0, cap)
                new *= mask[m]
                cp[k] += new - p[m]
                p[m] = new
            total = p[idx].sum()
            if total > params.p_max_fap:
                p[idx] *= params.p_max_fap / total
                cp[k] = p[idx].sum(axis=0)
        change = float(np.abs(p - before).max()) if p.size else 0.0
        if change < params.epsilon_converge:
            return p, True, sweeps, change
    return p, False, sweeps, change


def run_power_game(matching, ch, cache, params):
    params.validate()
    mask = matching.mask()
    m_count = ch.n_fues
    if not mask.any():
        return GameResult(PowerAllocation(np.zeros(mask.shape)), True, 0, 0, True,
                          params.price, np.zeros(m_count), (0.0,), 0.0)
    masks = phy.later_masks(mask, ch)
    weight = 1.0 + params.beta * cache.theta
    gbar = mean_mue_gain(ch)
    price = params.price
    history = []
    inner_total = 0
    for outer in range(1, params.max_outer_iters + 1):
        p, converged, sweeps, change = _play(mask, ch, weight, price * gbar, params, masks)
        inner_total += sweeps
        power = PowerAllocation(p)
        mi = phy.macro_interference(matching, power, ch)
        history.append(mi.peak)
        satisfied = bool(np.all(mi.per_subchannel <= params.interference_threshold))
        if satisfied or outer == params.max_outer_iters or price == 0.0:
            break  # a zero price cannot be grown
        price *= params.lambda_growth
    utility = net_utilities(mask, p, ch, cache, params, price, masks)
    return GameResult(power, converged, inner_total, outer, satisfied, price, utility, tuple(history), change)
