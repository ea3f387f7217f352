"""Path loss, Rayleigh block fading and CRNN values for every link family."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nomafran.errors import DomainError, ValidationError
from nomafran.topology import distance
from nomafran.units import db_to_linear, dbm_to_watt

MACRO_LINK = "macro_link"
FOG_LINK = "fog_link"


@dataclass(frozen=True)
class SpectrumConfig:
    total_bandwidth: float = 5e6
    n_subchannels: int = 50
    noise_psd: float = -174.0  # dBm/Hz

    @property
    def subchannel_bw(self):
        return self.total_bandwidth / self.n_subchannels

    @property
    def noise_power(self):
        """Noise power per subchannel, W."""
        return float(dbm_to_watt(self.noise_psd)) * self.subchannel_bw

    def validate(self):
        if not self.total_bandwidth > 0:
            raise ValidationError("total_bandwidth", "must be > 0")
        if self.n_subchannels < 1:
            raise ValidationError("n_subchannels", "must be >= 1")
        return self


@dataclass(frozen=True)
class RadioConfig:
    """Propagation and macro-tier settings the allocation problem leaves open."""

    macro_pl_intercept: float = 128.1
    macro_pl_slope: float = 37.6
    fog_pl_intercept: float = 38.46
    fog_pl_slope: float = 20.0
    mrrh_power_dbm: float = 43.0  # total over all subchannels
    shadowing_std_db: float = 0.0
    min_link_distance: float = 1.0
    rayleigh: bool = True

    def validate(self):
        if self.shadowing_std_db < 0:
            raise ValidationError("shadowing_std_db", "must be >= 0")
        if not self.min_link_distance > 0:
            raise ValidationError("min_link_distance", "must be > 0")
        return self


def path_loss_db(link_kind, d, radio=None):
    """Distance-dependent path loss in dB.

    ``macro_link``: 128.1 + 37.6 log10(d / 1 km); ``fog_link``: 38.46 + 20 log10(d).
    """
    radio = radio or RadioConfig()
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError(f"path loss needs d > 0, got {d}")
    if link_kind == MACRO_LINK:
        return radio.macro_pl_intercept + radio.macro_pl_slope * np.log10(d / 1000.0)
    if link_kind == FOG_LINK:
        return radio.fog_pl_intercept + radio.fog_pl_slope * np.log10(d)
    raise DomainError(f"unknown link kind {link_kind!r}")


@dataclass(frozen=True, eq=False)
class ChannelState:
    """Linear power gains for one drop.

    Arrays are indexed [transmitter, receiver, subchannel]; F-UE indices are
    global and ``fue_cell`` gives the serving F-AP of each F-UE.
    """

    fap_fue: np.ndarray  # (K, M, N)
    fap_mue: np.ndarray  # (K, U, N)
    mrrh_fue: np.ndarray  # (M, N)
    mrrh_mue: np.ndarray  # (U, N)
    fue_cell: np.ndarray  # (M,)
    subchannel_bw: float
    noise_power: float  # W per subchannel
    mrrh_power: np.ndarray  # (N,) W per subchannel

    def __post_init__(self):
        k, m, n = self.fap_fue.shape
        u = self.fap_mue.shape[1]
        assert self.fap_mue.shape == (k, u, n)
        assert self.mrrh_fue.shape == (m, n)
        assert self.mrrh_mue.shape == (u, n)
        assert self.fue_cell.shape == (m,)
        assert self.mrrh_power.shape == (n,)
        for arr in (self.fap_fue, self.fap_mue, self.mrrh_fue, self.mrrh_mue):
            assert np.all(np.isfinite(arr)) and np.all(arr > 0), "gains must be finite and > 0"
        assert self.noise_power > 0
        serving = self.fap_fue[self.fue_cell, np.arange(m), :] if m else np.empty((0, n))
        # F-AP -> F-UE gains with the serving links zeroed: the co-tier paths only
        co_tier = self.fap_fue.copy()
        co_tier[self.fue_cell, np.arange(m), :] = 0.0
        for name, value in (("serving_gain", serving), ("crnn", serving / self.noise_power),
                            ("co_tier_gain", co_tier)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_faps(self):
        return self.fap_fue.shape[0]

    @property
    def n_fues(self):
        return self.fap_fue.shape[1]

    @property
    def n_mues(self):
        return self.fap_mue.shape[1]

    @property
    def n_subchannels(self):
        return self.fap_fue.shape[2]

    def cell_members(self, k):
        return np.flatnonzero(self.fue_cell == k)

    def gain(self, tx, rx, n):
        """Look up one gain by node labels, e.g. ``gain(("fap", 0), ("mue", 1), 3)``
        or ``gain("mrrh", ("fue", 4), 0)``."""
        rx_kind, r = rx
        if tx == "mrrh" or tx == ("mrrh",):
            table = self.mrrh_fue if rx_kind == "fue" else self.mrrh_mue
            return float(table[r, n])
        _, k = tx
        table = self.fap_fue if rx_kind == "fue" else self.fap_mue
        return float(table[k, r, n])


def _link_gains(kind, d, shape, radio, rng):
    d = np.maximum(d, radio.min_link_distance)
    g = db_to_linear(-path_loss_db(kind, d, radio))
    g = np.broadcast_to(g[..., None], shape).copy()
    if radio.shadowing_std_db > 0:
        # one log-normal draw per link, shared by all subchannels
        g *= db_to_linear(rng.normal(0.0, radio.shadowing_std_db, size=shape[:-1]))[..., None]
    if radio.rayleigh:
        g *= rng.exponential(1.0, size=shape)
    return g


def draw_channel_gains(t, spectrum, rng, radio=None):
    """Draw every link gain: path loss x unit-mean exponential fading, i.i.d.
    per link and subchannel."""
    spectrum.validate()
    radio = (radio or RadioConfig()).validate()
    k, m, u, n = t.n_faps, t.n_fues, t.n_mues, spectrum.n_subchannels
    fap_fue = _link_gains(FOG_LINK, distance(t.fap_positions[:, None, :], t.fue_positions[None, :, :]),
                          (k, m, n), radio, rng)
    fap_mue = _link_gains(FOG_LINK, distance(t.fap_positions[:, None, :], t.mue_positions[None, :, :]),
                          (k, u, n), radio, rng)
    mrrh_fue = _link_gains(MACRO_LINK, distance(t.fue_positions, t.mrrh_position), (m, n), radio, rng)
    mrrh_mue = _link_gains(MACRO_LINK, distance(t.mue_positions, t.mrrh_position), (u, n), radio, rng)
    mrrh_power = np.full(n, float(dbm_to_watt(radio.mrrh_power_dbm)) / n)
    return ChannelState(
        fap_fue=fap_fue,
        fap_mue=fap_mue,
        mrrh_fue=mrrh_fue,
        mrrh_mue=mrrh_mue,
        fue_cell=np.asarray(t.fue_cell, dtype=int),
        subchannel_bw=spectrum.subchannel_bw,
        noise_power=spectrum.noise_power,
        mrrh_power=mrrh_power,
    )
