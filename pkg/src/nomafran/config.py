"""Simulation configuration and the flat ``key = value`` file format.

Every key belongs to exactly one section; absent keys keep their defaults.
Powers and the interference threshold are written in dBm in the file and
held in watts in memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from nomafran.caching import CacheConfig
from nomafran.channel import RadioConfig, SpectrumConfig
from nomafran.errors import ParseError, ValidationError
from nomafran.game import UtilityParams
from nomafran.topology import GeometryConfig
from nomafran.units import dbm_to_watt, watt_to_dbm

SCHEMES = ("noma", "ofdma")


@dataclass(frozen=True)
class SchemeSpec:
    name: str  # "noma" or "ofdma"
    q: int
    q_ue: int | None  # None: no cap on subchannels per F-UE

    @property
    def label(self):
        return "ofdma" if self.name == "ofdma" else f"noma-q{self.q}"


@dataclass(frozen=True)
class SimConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    cache: CacheConfig = field(default_factory=CacheConfig)
    utility: UtilityParams = field(default_factory=UtilityParams)
    q: int = 2
    q_ue: int | None = None
    scheme: str = "noma"
    n_drops: int = 100
    base_seed: int = 0
    sweep_param: str | None = None
    sweep_values: tuple = ()
    schemes: tuple = ()  # e.g. ("noma-q2", "noma-q3", "ofdma"); empty -> scheme/q
    rematch: bool = False

    def validate(self):
        self.geometry.validate()
        self.spectrum.validate()
        self.radio.validate()
        self.cache.validate()
        self.utility.validate()
        if self.q < 1:
            raise ValidationError("q", "must be >= 1")
        if self.q_ue is not None and self.q_ue < 1:
            raise ValidationError("q_ue", "must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValidationError("scheme", f"must be one of {SCHEMES}")
        if self.n_drops < 1:
            raise ValidationError("n_drops", "must be >= 1")
        if self.sweep_param is not None:
            if self.sweep_param not in KEYS or KEYS[self.sweep_param][0] == "sim":
                raise ValidationError("sweep_param", f"cannot sweep {self.sweep_param!r}")
            if not self.sweep_values:
                raise ValidationError("sweep_values", "needed when sweep_param is set")
            for v in self.sweep_values:
                self.with_value(self.sweep_param, v).validate_sections()
        for label in self.schemes:
            parse_scheme(label, self.q_ue)
        return self

    def validate_sections(self):
        self.geometry.validate()
        self.spectrum.validate()
        self.radio.validate()
        self.cache.validate()
        self.utility.validate()

    def scheme_specs(self):
        if self.schemes:
            return [parse_scheme(s, self.q_ue) for s in self.schemes]
        return [SchemeSpec(self.scheme, 1, 1) if self.scheme == "ofdma" else SchemeSpec("noma", self.q, self.q_ue)]

    def with_value(self, key, value):
        """Copy with one flat key replaced (value already parsed)."""
        section, name, _ = KEYS[key]
        if name.endswith("_dbm") and section == "utility":
            name, value = name[: -len("_dbm")], float(dbm_to_watt(value))
        if section == "sim":
            return replace(self, **{name: value})
        return replace(self, **{section: replace(getattr(self, section), **{name: value})})


def parse_scheme(label, q_ue=None):
    label = label.strip().lower()
    if label == "ofdma":
        return SchemeSpec("ofdma", 1, 1)
    if label.startswith("noma-q"):
        try:
            q = int(label[len("noma-q"):])
        except ValueError:
            q = 0
        if q >= 1:
            return SchemeSpec("noma", q, q_ue)
    raise ValidationError("schemes", f"unknown scheme {label!r}; use ofdma or noma-q<n>")


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _str_list(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _num_list(text):
    out = []
    for s in _str_list(text):
        v = float(s)
        out.append(int(v) if v.is_integer() and "." not in s and "e" not in s.lower() else v)
    return tuple(out)


def _opt_int(text):
    return None if text.strip().lower() in ("", "none", "auto") else int(text)


def _opt_str(text):
    return None if text.strip().lower() in ("", "none") else text.strip()


# flat key -> (section, attribute, parser)
KEYS = {
    "macro_radius": ("geometry", "macro_radius", float),
    "fap_radius": ("geometry", "fap_radius", float),
    "d_min_mrrh_fap": ("geometry", "d_min_mrrh_fap", float),
    "d_min_mrrh_mue": ("geometry", "d_min_mrrh_mue", float),
    "d_min_fap_fap": ("geometry", "d_min_fap_fap", float),
    "n_faps": ("geometry", "n_faps", int),
    "n_fues_per_fap": ("geometry", "n_fues_per_fap", int),
    "n_mues": ("geometry", "n_mues", int),
    "total_bandwidth": ("spectrum", "total_bandwidth", float),
    "n_subchannels": ("spectrum", "n_subchannels", int),
    "noise_psd": ("spectrum", "noise_psd", float),
    "macro_pl_intercept": ("radio", "macro_pl_intercept", float),
    "macro_pl_slope": ("radio", "macro_pl_slope", float),
    "fog_pl_intercept": ("radio", "fog_pl_intercept", float),
    "fog_pl_slope": ("radio", "fog_pl_slope", float),
    "mrrh_power_dbm": ("radio", "mrrh_power_dbm", float),
    "shadowing_std_db": ("radio", "shadowing_std_db", float),
    "min_link_distance": ("radio", "min_link_distance", float),
    "rayleigh": ("radio", "rayleigh", _bool),
    "n_contents": ("cache", "n_contents", int),
    "zipf_exponent": ("cache", "zipf_exponent", float),
    "cache_slots_per_fap": ("cache", "cache_slots_per_fap", int),
    "personalized_requests": ("cache", "personalized_requests", _bool),
    "price": ("utility", "price", float),
    "beta": ("utility", "beta", float),
    "interference_threshold_dbm": ("utility", "interference_threshold_dbm", float),
    "p_min": ("utility", "p_min", float),
    "p_max_per_pair": ("utility", "p_max_per_pair", _opt_float),
    "p_max_fap_dbm": ("utility", "p_max_fap_dbm", float),
    "epsilon_converge": ("utility", "epsilon_converge", float),
    "max_inner_iters": ("utility", "max_inner_iters", int),
    "max_outer_iters": ("utility", "max_outer_iters", int),
    "lambda_growth": ("utility", "lambda_growth", float),
    "q": ("sim", "q", int),
    "q_ue": ("sim", "q_ue", _opt_int),
    "scheme": ("sim", "scheme", str.strip),
    "n_drops": ("sim", "n_drops", int),
    "base_seed": ("sim", "base_seed", int),
    "sweep_param": ("sim", "sweep_param", _opt_str),
    "sweep_values": ("sim", "sweep_values", _num_list),
    "schemes": ("sim", "schemes", _str_list),
    "rematch": ("sim", "rematch", _bool),
}


def parse_value(key, text):
    if key not in KEYS:
        raise KeyError(key)
    return KEYS[key][2](text)


def parse_config_text(text):
    cfg = SimConfig()
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ParseError(lineno, f"unknown key {key!r}")
        if key in seen:
            raise ParseError(lineno, f"duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        try:
            parsed = parse_value(key, value)
        except ValueError as exc:
            raise ParseError(lineno, f"bad value for {key}: {exc}") from None
        cfg = cfg.with_value(key, parsed)
    return cfg.validate()


def load_config(path):
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def flat_items(cfg):
    """The config as (key, value) pairs in file units, for logging."""
    out = []
    for key, (section, name, _) in KEYS.items():
        obj = cfg if section == "sim" else getattr(cfg, section)
        if name.endswith("_dbm") and section == "utility":
            value = float(watt_to_dbm(getattr(obj, name[: -len("_dbm")])))
        else:
            value = getattr(obj, name)
        out.append((key, value))
    return out
