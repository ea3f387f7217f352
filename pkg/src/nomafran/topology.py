"""Random network geometry: one MRRH at the origin, F-APs in an annulus
around it, F-UEs in each F-AP's disk, and macro UEs in the macro annulus."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nomafran.errors import FeasibilityError, ValidationError

ATTEMPT_BUDGET = 100_000


@dataclass(frozen=True)
class GeometryConfig:
    macro_radius: float = 500.0
    fap_radius: float = 10.0
    d_min_mrrh_fap: float = 300.0
    d_min_mrrh_mue: float = 50.0
    d_min_fap_fap: float = 40.0
    n_faps: int = 4
    n_fues_per_fap: int = 10
    n_mues: int = 2

    def validate(self):
        for name in ("macro_radius", "fap_radius", "d_min_mrrh_fap", "d_min_mrrh_mue", "d_min_fap_fap"):
            if not getattr(self, name) > 0:
                raise ValidationError(name, "must be strictly positive")
        if self.d_min_mrrh_fap >= self.macro_radius:
            raise ValidationError("d_min_mrrh_fap", "must be smaller than macro_radius")
        if self.d_min_mrrh_mue >= self.macro_radius:
            raise ValidationError("d_min_mrrh_mue", "must be smaller than macro_radius")
        for name in ("n_faps", "n_fues_per_fap", "n_mues"):
            if getattr(self, name) < 0:
                raise ValidationError(name, "must be >= 0")
        return self


@dataclass(frozen=True)
class NetworkTopology:
    """Node positions in meters. F-UE ``m`` is served by F-AP ``fue_cell[m]``;
    F-UEs are stored cell-major, so each cell's F-UEs are contiguous."""

    mrrh_position: np.ndarray
    macro_radius: float
    fap_positions: np.ndarray  # (K, 2)
    fap_radius: float
    fue_cell: np.ndarray  # (M,) int
    fue_positions: np.ndarray  # (M, 2)
    mue_positions: np.ndarray  # (U, 2)

    @property
    def n_faps(self):
        return len(self.fap_positions)

    @property
    def n_fues(self):
        return len(self.fue_positions)

    @property
    def n_mues(self):
        return len(self.mue_positions)

    def cell_members(self, k):
        return np.flatnonzero(self.fue_cell == k)


def distance(a, b):
    """Euclidean distance between two 2-D points (or broadcastable arrays)."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return np.hypot(d[..., 0], d[..., 1])


def _annulus_points(rng, n, r_in, r_out):
    # inverse CDF of the radius makes the points uniform in area
    r = np.sqrt(rng.uniform(r_in**2, r_out**2, size=n))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def _place_faps(cfg, rng, budget):
    placed = np.empty((0, 2))
    for k in range(cfg.n_faps):
        attempts = 0
        batch = 16
        while True:
            n = min(batch, budget - attempts)
            if n <= 0:
                raise FeasibilityError(
                    f"could not place F-AP {k} of {cfg.n_faps} within {budget} attempts "
                    f"(d_min_fap_fap={cfg.d_min_fap_fap} m)"
                )
            cand = _annulus_points(rng, n, cfg.d_min_mrrh_fap, cfg.macro_radius)
            if len(placed):
                ok = (distance(cand[:, None, :], placed[None, :, :]) >= cfg.d_min_fap_fap).all(axis=1)
            else:
                ok = np.ones(n, dtype=bool)
            hit = np.flatnonzero(ok)
            if hit.size:
                placed = np.vstack((placed, cand[hit[0]]))
                break
            attempts += n
            batch = min(batch * 2, 4096)
    return placed


def generate_topology(config, rng, attempt_budget=ATTEMPT_BUDGET):
    """Draw a topology by rejection sampling.

    F-APs are uniform on the annulus [d_min_mrrh_fap, macro_radius] subject to
    the pairwise separation; F-UEs are uniform in their F-AP's disk; MUEs are
    uniform on [d_min_mrrh_mue, macro_radius]. Raises FeasibilityError when an
    F-AP cannot be placed within ``attempt_budget`` candidate draws.
    """
    config.validate()
    faps = _place_faps(config, rng, attempt_budget)
    k_count = len(faps)
    cells = np.repeat(np.arange(k_count), config.n_fues_per_fap)
    if cells.size:
        offsets = _annulus_points(rng, cells.size, 0.0, config.fap_radius)
        fues = faps[cells] + offsets
    else:
        fues = np.empty((0, 2))
    mues = _annulus_points(rng, config.n_mues, config.d_min_mrrh_mue, config.macro_radius)
    return NetworkTopology(
        mrrh_position=np.zeros(2),
        macro_radius=float(config.macro_radius),
        fap_positions=faps,
        fap_radius=float(config.fap_radius),
        fue_cell=cells.astype(int),
        fue_positions=fues,
        mue_positions=mues.reshape(-1, 2),
    )


@dataclass(frozen=True)
class Violation:
    constraint: str
    nodes: tuple
    detail: str = ""


def validate_topology(t, config):
    """Return every broken geometry invariant; an empty list means valid."""
    out = []
    origin = np.asarray(t.mrrh_position, dtype=float)
    tol = 1e-9
    for k, pos in enumerate(t.fap_positions):
        d = float(distance(pos, origin))
        if d > config.macro_radius + tol:
            out.append(Violation("fap_outside_macro", (("fap", k),), f"{d:.3f} m"))
        if d < config.d_min_mrrh_fap - tol:
            out.append(Violation("fap_too_close_to_mrrh", (("fap", k),), f"{d:.3f} m"))
    for i in range(t.n_faps):
        for j in range(i + 1, t.n_faps):
            d = float(distance(t.fap_positions[i], t.fap_positions[j]))
            if d < config.d_min_fap_fap - tol:
                out.append(Violation("fap_separation", (("fap", i), ("fap", j)), f"{d:.3f} m"))
    for m, (k, pos) in enumerate(zip(t.fue_cell, t.fue_positions)):
        if not 0 <= k < t.n_faps:
            out.append(Violation("fue_unknown_cell", (("fue", m),), f"cell {k}"))
            continue
        d = float(distance(pos, t.fap_positions[k]))
        if d > config.fap_radius + tol:
            out.append(Violation("fue_outside_cell", (("fue", m), ("fap", int(k))), f"{d:.3f} m"))
    for u, pos in enumerate(t.mue_positions):
        d = float(distance(pos, origin))
        if d > config.macro_radius + tol:
            out.append(Violation("mue_outside_macro", (("mue", u),), f"{d:.3f} m"))
        if d < config.d_min_mrrh_mue - tol:
            out.append(Violation("mue_too_close_to_mrrh", (("mue", u),), f"{d:.3f} m"))
    return out
