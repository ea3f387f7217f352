"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line with the measured quantity. Drop
results are cached per (geometry, scheme) so the NOMA-over-OFDMA check reuses
the n_fues_per_fap=30 runs of the quota-ordering sweep.
"""

import time
from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest

from nomafran import phy
from nomafran.allocation import Matching, PowerAllocation
from nomafran.channel import draw_channel_gains
from nomafran.config import SimConfig, parse_config_text, parse_scheme
from nomafran.caching import content_popularity, place_cache
from nomafran.game import best_response_power, run_power_game
from nomafran.harness import HEADER, mean_ci, run_drop, run_sweep, tasks, write_csv
from nomafran.matching import blocking_pairs, brute_force_optimum, matching_value, run_matching
from nomafran.topology import generate_topology
from oracles import make_channel, pair_deviation_gain, small_drop, small_params

N_DROPS = 100


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    return emit


def _cfg(n_faps=4, n_fues=10):
    cfg = SimConfig()
    return replace(cfg, geometry=replace(cfg.geometry, n_faps=n_faps, n_fues_per_fap=n_fues))


@lru_cache(maxsize=None)
def drops(n_faps, n_fues, label):
    cfg = _cfg(n_faps, n_fues)
    scheme = parse_scheme(label, cfg.q_ue)
    return tuple(run_drop(cfg, cfg.base_seed + i, scheme) for i in range(N_DROPS))


def utilities(n_faps, n_fues, label):
    return np.array([r.total_net_utility for r in drops(n_faps, n_fues, label)])


def test_quota_ordering(report):
    lines, ok = [], True
    for n_fues in (10, 20, 30):
        m3, c3 = mean_ci(utilities(4, n_fues, "noma-q3"))
        m2, c2 = mean_ci(utilities(4, n_fues, "noma-q2"))
        m1, _ = mean_ci(utilities(4, n_fues, "ofdma"))
        slack = 0.5 * max(c3, c2)
        good = m3 >= m2 - slack and m2 >= m1
        ok &= good
        lines.append(f"F-UEs={n_fues}: q3={m3:.4g} q2={m2:.4g} ofdma={m1:.4g}")
    report(2, ok, "; ".join(lines))
    assert ok


def test_noma_beats_ofdma(report):
    start = time.perf_counter()
    noma = utilities(4, 30, "noma-q2")
    ofdma = utilities(4, 30, "ofdma")
    gain = noma.mean() / ofdma.mean() - 1.0
    wins = float(np.mean(noma >= ofdma))
    ok = gain >= 0.15 and wins >= 0.90
    report(1, ok, f"mean gain {gain:.1%}, NOMA wins {wins:.0%} of {N_DROPS} paired seeds "
                  f"({time.perf_counter() - start:.0f} s beyond the shared sweep)")
    assert ok


def test_fap_scaling(report):
    means = [utilities(k, 10, "noma-q2").mean() for k in (1, 2, 3, 4)]
    ok = all(b > a for a, b in zip(means, means[1:]))
    report(3, ok, "mean net utility for 1..4 F-APs " + ", ".join(f"{m:.4g}" for m in means))
    assert ok


def _nash_gap(seed):
    ch, cache = small_drop(seed, n_faps=2, n_fues=2, n_sub=4)
    params = small_params(4)
    pairs = [(m, n) for m in range(ch.n_fues) for n in range(ch.n_subchannels)]
    matching = Matching.from_pairs(pairs, ch.n_fues, ch.n_subchannels, q=2)
    res = run_power_game(matching, ch, cache, params)
    p = res.powers.p
    totals = res.powers.cell_totals(ch.fue_cell, ch.n_faps).sum(axis=1)
    worst = 0.0
    for ue, n in sorted(matching.pairs):
        k = int(ch.fue_cell[ue])
        hi = min(params.pair_cap, params.p_max_fap - (totals[k] - p[ue, n]))
        gain, now = pair_deviation_gain(ue, n, sorted(matching.pairs), p, ch, cache.theta, params.beta,
                                        res.final_lambda, hi, points=1000)
        worst = max(worst, gain / max(abs(now), 1.0))
    return worst, res.converged


def test_eps_nash(report):
    gaps, conv = zip(*(_nash_gap(s) for s in range(20)))
    worst = max(gaps)
    ok = worst <= 1e-6 and all(conv)
    report(4, ok, f"worst relative grid improvement {worst:.2e} over 20 instances, all converged={all(conv)}")
    assert ok


def test_matching_oracle_ratio(report):
    ratios, quota_ok, stable = [], 0, 0
    for seed in range(50):
        ch, cache = small_drop(seed, n_faps=1, n_fues=4, n_sub=2)
        params = small_params(2)
        m = run_matching(ch, cache, params, 2, 1)
        _, best = brute_force_optimum(ch, cache, params, 2, 1)
        ratios.append(matching_value(m, ch, cache, params) / best)
        quota_ok += not m.quota_violations(ch.fue_cell)
        stable += not blocking_pairs(m, ch, cache, params)
    worst = min(ratios)
    ok = worst >= 0.8 and quota_ok == 50 and stable == 50
    report(5, ok, f"min ratio {worst:.3f} (mean {np.mean(ratios):.3f}), quota ok {quota_ok}/50, "
                  f"stable {stable}/50")
    assert ok


def test_best_response_vs_grid(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        p_max = 10 ** rng.uniform(-4, 0.5)
        weight = 1.0 + rng.uniform(0, 1)
        bw = 10 ** rng.uniform(4, 6)
        price_gain = 10 ** rng.uniform(6, 12)
        x = 10 ** rng.uniform(-7, 0) * p_max
        p = best_response_power(weight, bw, price_gain, x, p_max)
        step = p_max / 1e6
        grid = np.arange(1_000_001) * step
        u = weight * bw * np.log2(1.0 + grid / x) - price_gain * grid
        worst = max(worst, abs(grid[np.argmax(u)] - p) / step)
    ok = worst <= 1.0
    report(6, ok, f"largest closed-form/grid gap {worst:.3f} grid steps over 1000 draws")
    assert ok


def _without_wall(text):
    idx = HEADER.index("wall_ms")
    return "\n".join(",".join(c for i, c in enumerate(line.split(",")) if i != idx)
                     for line in text.splitlines())


def test_determinism(report):
    cfg = parse_config_text("sweep_param = n_faps\nsweep_values = 1, 3\nschemes = noma-q2, ofdma\n"
                            "n_drops = 5\nbase_seed = 77")
    first = _without_wall(write_csv(run_sweep(cfg)))
    second = _without_wall(write_csv(run_sweep(cfg)))
    order = np.random.default_rng(1).permutation(len(tasks(cfg)))
    permuted = _without_wall(write_csv(run_sweep(cfg, order=list(order))))
    ok = first.encode() == second.encode() == permuted.encode()
    report(7, ok, f"{len(first.splitlines())} CSV lines identical across reruns and permuted order: {ok}")
    assert ok


def _stress_instance():
    """Default geometry with one macro UE placed 15 m from F-AP 0."""
    cfg = _cfg()
    rng = np.random.default_rng(5)
    topo = generate_topology(cfg.geometry, rng)
    mues = topo.mue_positions.copy()
    mues[0] = topo.fap_positions[0] + np.array([15.0, 0.0])
    topo = replace(topo, mue_positions=mues)
    ch = draw_channel_gains(topo, cfg.spectrum, rng, cfg.radio)
    cache = place_cache(content_popularity(cfg.cache.n_contents, cfg.cache.zipf_exponent), cfg.cache, topo, rng)
    return cfg, ch, cache


def test_interference_threshold(report):
    checked = violated = 0
    for key in [(4, n, s) for n in (10, 20, 30) for s in ("noma-q2", "noma-q3", "ofdma")]:
        for r in drops(*key):
            if r.threshold_satisfied:
                checked += 1
                violated += r.max_mue_interference > _cfg().utility.interference_threshold
    cfg, ch, cache = _stress_instance()
    matching = run_matching(ch, cache, cfg.utility, 2)
    res = run_power_game(matching, ch, cache, cfg.utility)
    recomputed = phy.macro_interference(matching, res.powers, ch).per_subchannel
    hist = np.array(res.interference_history)
    monotone = bool(np.all(np.diff(hist) < 0))
    ok = (violated == 0 and res.threshold_satisfied and monotone and res.outer_iterations > 1
          and np.all(recomputed <= cfg.utility.interference_threshold))
    report(8, ok, f"{checked} satisfied drops, {violated} over threshold; stress instance peak "
                  f"{hist[0]:.2e} -> {hist[-1]:.2e} W over {res.outer_iterations} price levels, "
                  f"strictly decreasing={monotone}")
    assert ok


def test_phy_invariants(report):
    rng = np.random.default_rng(99)
    bound_fail = 0
    for _ in range(10_000):
        size = rng.integers(1, 6)
        crnn = 10 ** rng.uniform(-2, 8, size)
        split = rng.dirichlet(np.ones(size))
        total = 10 ** rng.uniform(-6, 1)
        ch = make_channel(crnn[:, None], noise=1.0)
        m = Matching.from_pairs([(u, 0) for u in range(size)], size, 1, q=size)
        r = phy.rate_report(m, PowerAllocation(total * split[:, None]), ch).rate.sum()
        bound_fail += r > ch.subchannel_bw * np.log2(1.0 + total * crnn.max()) * (1 + 1e-12)

    mono_fail = 0
    channels = [small_drop(seed, n_faps=2, n_fues=3, n_sub=2)[0] for seed in range(50)]
    for trial in range(10_000):
        ch = channels[trial % 50]
        mask = rng.random((ch.n_fues, 2)) < 0.7
        m = Matching.from_pairs([tuple(x) for x in np.argwhere(mask)], ch.n_fues, 2, q=3)
        if not m.pairs:
            continue
        p = rng.uniform(0, 0.2, mask.shape) * mask
        base = phy.sinr_matrix(p, mask, ch)
        ue, n = sorted(m.pairs)[rng.integers(len(m.pairs))]
        bumped = p.copy()
        bumped[ue, n] += rng.uniform(1e-6, 0.2)
        after = phy.sinr_matrix(bumped, mask, ch)
        others = mask.copy()
        others[ue, n] = False
        mono_fail += after[ue, n] < base[ue, n] or bool(np.any(after[others] > base[others] * (1 + 1e-12)))
    ok = bound_fail == 0 and mono_fail == 0
    report(9, ok, f"sum-rate bound violations {bound_fail}/10000, SINR monotonicity violations {mono_fail}/10000")
    assert ok
