"""Seeded Monte Carlo drops, scheme comparison and CSV output."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from nomafran import phy
from nomafran.caching import content_popularity, place_cache
from nomafran.channel import draw_channel_gains
from nomafran.config import SchemeSpec, parse_value
from nomafran.game import run_power_game
from nomafran.matching import run_matching
from nomafran.topology import generate_topology

HEADER = (
    "sweep_param", "sweep_value", "scheme", "q", "seed", "total_net_utility_bps", "sum_rate_bps",
    "max_mue_interference_w", "game_converged", "inner_iters", "outer_iters", "proposals", "wall_ms",
)
SUMMARY_EXTRA = ("total_net_utility_ci95", "sum_rate_ci95", "max_mue_interference_ci95")
Z95 = 1.959963984540054


@dataclass(frozen=True)
class DropResult:
    seed: int
    scheme: str
    q: int
    total_net_utility: float
    sum_rate: float
    max_mue_interference: float
    game_converged: bool
    inner_iters: int
    outer_iters: int
    proposals: int
    wall_ms: float
    threshold_satisfied: bool = True
    max_intra_interference: float = 0.0
    n_pairs: int = 0
    repairs: int = 0


def run_drop(cfg, seed, scheme=None):
    """One realisation of the full pipeline. Same (cfg, seed) gives the same
    topology and fading for every scheme."""
    scheme = scheme or cfg.scheme_specs()[0]
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    topo = generate_topology(cfg.geometry, rng)
    ch = draw_channel_gains(topo, cfg.spectrum, rng, cfg.radio)
    pop = content_popularity(cfg.cache.n_contents, cfg.cache.zipf_exponent)
    cache = place_cache(pop, cfg.cache, topo, rng)
    q, q_ue = (1, 1) if scheme.name == "ofdma" else (scheme.q, scheme.q_ue)
    matching = run_matching(ch, cache, cfg.utility, q, q_ue)
    game = run_power_game(matching, ch, cache, cfg.utility)
    proposals, repairs = matching.proposals, matching.repairs
    if cfg.rematch:
        cell_p = game.powers.cell_totals(ch.fue_cell, ch.n_faps)
        matching = run_matching(ch, cache, cfg.utility, q, q_ue, cell_power=cell_p)
        proposals += matching.proposals
        repairs += matching.repairs
        inner, outer = game.inner_iterations, game.outer_iterations
        game = run_power_game(matching, ch, cache, cfg.utility)
        game = replace(game, inner_iterations=game.inner_iterations + inner,
                       outer_iterations=game.outer_iterations + outer)
    report = phy.rate_report(matching, game.powers, ch)
    mi = phy.macro_interference(matching, game.powers, ch)
    wall = (time.perf_counter() - start) * 1e3
    return DropResult(
        seed=int(seed),
        scheme=scheme.label,
        q=q,
        total_net_utility=float(game.utility.sum()),
        sum_rate=float(report.rate.sum()),
        max_mue_interference=mi.peak,
        game_converged=game.converged,
        inner_iters=game.inner_iterations,
        outer_iters=game.outer_iterations,
        proposals=proposals,
        wall_ms=wall,
        threshold_satisfied=game.threshold_satisfied,
        max_intra_interference=float(report.intra_interference.max()) if report.intra_interference.size else 0.0,
        n_pairs=len(matching.pairs),
        repairs=repairs,
    )


@dataclass(frozen=True)
class Task:
    sweep_value: object
    scheme: SchemeSpec
    seed: int


def sweep_points(cfg):
    if cfg.sweep_param is None:
        return [(None, cfg)]
    return [(v, cfg.with_value(cfg.sweep_param, parse_value(cfg.sweep_param, str(v)))) for v in cfg.sweep_values]


def tasks(cfg):
    """Every (sweep value, scheme, seed) combination, in output order."""
    return [Task(v, s, cfg.base_seed + i)
            for v, _ in sweep_points(cfg) for s in cfg.scheme_specs() for i in range(cfg.n_drops)]


def _run_task(args):
    point_cfg, task = args
    return run_drop(point_cfg, task.seed, task.scheme)


def run_tasks(cfg, order=None, workers=1):
    """Run every task; ``order`` permutes execution only, never the result order."""
    points = dict(sweep_points(cfg))
    todo = tasks(cfg)
    idx = list(range(len(todo))) if order is None else list(order)
    assert sorted(idx) == list(range(len(todo))), "order must be a permutation of the tasks"
    jobs = [(points[todo[i].sweep_value], todo[i]) for i in idx]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_run_task, jobs, chunksize=4))
    else:
        done = [_run_task(j) for j in jobs]
    results = [None] * len(todo)
    for i, r in zip(idx, done):
        results[i] = r
    return list(zip(todo, results))


def _fmt(x):
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _row(cfg, task, r):
    return [
        cfg.sweep_param or "", "" if task.sweep_value is None else task.sweep_value, r.scheme, r.q, r.seed,
        r.total_net_utility, r.sum_rate, r.max_mue_interference, r.game_converged, r.inner_iters,
        r.outer_iters, r.proposals, round(r.wall_ms, 3),
    ]


def mean_ci(values):
    """Mean and normal-approximation 95% half-width."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    half = Z95 * x.std(ddof=1) / math.sqrt(x.size) if x.size > 1 else 0.0
    return float(x.mean()), float(half)


def summarize(group):
    cols = {
        "total_net_utility": [r.total_net_utility for r in group],
        "sum_rate": [r.sum_rate for r in group],
        "max_mue_interference": [r.max_mue_interference for r in group],
    }
    out = {name: mean_ci(v) for name, v in cols.items()}
    out["game_converged"] = float(np.mean([r.game_converged for r in group]))
    for name in ("inner_iters", "outer_iters", "proposals", "wall_ms"):
        out[name] = float(np.mean([getattr(r, name) for r in group]))
    return out


def run_sweep(cfg, order=None, workers=1):
    """CSV rows (header first): one per (sweep value, scheme, drop), then a
    ``seed=summary`` row per (sweep value, scheme) holding means with 95%
    half-widths appended."""
    done = run_tasks(cfg, order=order, workers=workers)
    rows = [list(HEADER)]
    groups = {}
    for task, r in done:
        key = (task.sweep_value, task.scheme.label)
        groups.setdefault(key, []).append((task, r))
    for (value, label), members in groups.items():
        for task, r in members:
            rows.append(_row(cfg, task, r))
        s = summarize([r for _, r in members])
        q = members[0][1].q
        rows.append([
            cfg.sweep_param or "", "" if value is None else value, label, q, "summary",
            s["total_net_utility"][0], s["sum_rate"][0], s["max_mue_interference"][0], s["game_converged"],
            s["inner_iters"], s["outer_iters"], s["proposals"], round(s["wall_ms"], 3),
            s["total_net_utility"][1], s["sum_rate"][1], s["max_mue_interference"][1],
        ])
    return [[_fmt(x) for x in row] for row in rows]


def write_csv(rows, path=None):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def summary_table(rows):
    """Summary rows keyed by (sweep_value, scheme) -> (mean utility, ci95)."""
    out = {}
    for row in rows[1:]:
        if row[4] == "summary":
            out[(row[1], row[2])] = (float(row[5]), float(row[13]))
    return out
