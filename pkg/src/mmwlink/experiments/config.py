"""Campaign configuration dataclasses and strict JSON loading.

The JSON file mirrors :class:`CampaignConfig` field for field; unknown keys
anywhere in the tree are rejected so typos cannot silently fall back to
defaults.
"""

from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field

CAMPAIGN_KINDS = ("snr_sweep", "angle_spread_sweep", "coverage")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent campaign configurations."""


@dataclass(frozen=True)
class ArrayParams:
    """Planar array shapes at both link ends, spacing in wavelengths."""

    bs_rows: int = 8
    bs_cols: int = 8
    ms_rows: int = 4
    ms_cols: int = 4
    spacing: float = 0.5


@dataclass(frozen=True)
class ChannelParams:
    n_clusters: int = 1
    rays_per_cluster: int = 1
    angle_spread_deg: float = 0.0
    mean_gain_power: float = 1.0


@dataclass(frozen=True)
class CodebookParams:
    """Stage-1 search space: exact path steering or finite codebooks."""

    continuous: bool = True
    bs_az: int = 16
    bs_el: int = 8
    ms_az: int = 8
    ms_el: int = 4
    bs_phase_bits: int = 0
    ms_phase_bits: int = 0


@dataclass(frozen=True)
class CoverageParams:
    """Random network geometry and radio parameters for coverage runs."""

    bs_density_per_km2: float = 25.0
    ms_density_factor: float = 30.0
    window_km2: float = 4.0
    users_per_cell: int = 4
    los_decay_m: float = 141.0
    pl_exponent_los: float = 2.0
    pl_exponent_nlos: float = 4.0
    ref_loss_db_1m: float = 61.4
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0
    bandwidth_hz: float = 1e8


@dataclass(frozen=True)
class CampaignConfig:
    """One Monte Carlo campaign: what to sweep, how many trials, the seed.

    ``sweep`` holds the axis values: SNRs in dB for ``snr_sweep``, angle
    spreads in degrees for ``angle_spread_sweep``, rate thresholds in
    bits/s/Hz for ``coverage`` (where ``trials`` counts network
    realizations).
    """

    kind: str
    sweep: tuple[float, ...]
    trials: int
    seed: int
    n_users: int = 4
    snr_db: float = 0.0
    arrays: ArrayParams = field(default_factory=ArrayParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    codebook: CodebookParams = field(default_factory=CodebookParams)
    coverage: typing.Optional[CoverageParams] = None
    output: typing.Optional[str] = None


def _convert(value, ftype, path: str):
    origin = typing.get_origin(ftype)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(ftype)
        if value is None:
            if type(None) in args:
                return None
            raise ConfigError(f"{path}: null is not allowed")
        inner = [a for a in args if a is not type(None)]
        return _convert(value, inner[0], path)
    if dataclasses.is_dataclass(ftype):
        return _build(ftype, value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        elem = typing.get_args(ftype)[0]
        return tuple(_convert(v, elem, f"{path}[{i}]") for i, v in enumerate(value))
    if ftype is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if ftype is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if ftype is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if ftype is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    raise ConfigError(f"{path}: unsupported field type {ftype!r}")


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {unknown}")
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        kwargs[name] = _convert(value, hints[name], sub)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def campaign_from_dict(data: dict) -> CampaignConfig:
    """Build and validate a campaign from a plain dict (parsed JSON)."""
    cfg = _build(CampaignConfig, data, "")
    validate_campaign(cfg)
    return cfg


def validate_campaign(cfg: CampaignConfig) -> None:
    """Check cross-field consistency. Raises ConfigError on any violation."""
    if cfg.kind not in CAMPAIGN_KINDS:
        raise ConfigError(f"kind: must be one of {list(CAMPAIGN_KINDS)}, got {cfg.kind!r}")
    if cfg.trials < 1:
        raise ConfigError(f"trials: must be >= 1, got {cfg.trials}")
    if len(cfg.sweep) == 0:
        raise ConfigError("sweep: needs at least one point")
    if len(set(cfg.sweep)) != len(cfg.sweep):
        raise ConfigError("sweep: axis values must be distinct")
    if cfg.n_users < 1:
        raise ConfigError(f"n_users: must be >= 1, got {cfg.n_users}")
    a = cfg.arrays
    if min(a.bs_rows, a.bs_cols, a.ms_rows, a.ms_cols) < 1:
        raise ConfigError("arrays: all row/column counts must be >= 1")
    if a.spacing <= 0:
        raise ConfigError(f"arrays.spacing: must be positive, got {a.spacing}")
    if cfg.n_users > a.bs_rows * a.bs_cols:
        raise ConfigError("n_users: cannot exceed the BS element count")
    ch = cfg.channel
    if ch.n_clusters < 1 or ch.rays_per_cluster < 1:
        raise ConfigError("channel: cluster and ray counts must be >= 1")
    if ch.angle_spread_deg < 0:
        raise ConfigError("channel.angle_spread_deg: must be >= 0")
    if ch.mean_gain_power <= 0:
        raise ConfigError("channel.mean_gain_power: must be positive")
    cb = cfg.codebook
    if min(cb.bs_az, cb.bs_el, cb.ms_az, cb.ms_el) < 1:
        raise ConfigError("codebook: grid sizes must be >= 1")
    if cb.bs_phase_bits < 0 or cb.ms_phase_bits < 0:
        raise ConfigError("codebook: phase bits must be >= 0")

    if cfg.kind == "snr_sweep":
        if ch.n_clusters != 1 or ch.rays_per_cluster != 1:
            raise ConfigError("snr_sweep: requires single-path channels "
                              "(n_clusters = rays_per_cluster = 1)")
    if cfg.kind == "angle_spread_sweep":
        if cb.continuous:
            raise ConfigError("angle_spread_sweep: requires codebook mode "
                              "(codebook.continuous = false)")
        if any(v < 0 for v in cfg.sweep):
            raise ConfigError("angle_spread_sweep: spreads must be >= 0 degrees")

    if cfg.kind == "coverage":
        if cfg.coverage is None:
            raise ConfigError("coverage: section required for coverage campaigns")
        cov = cfg.coverage
        if cov.bs_density_per_km2 <= 0 or cov.ms_density_factor <= 0:
            raise ConfigError("coverage: densities must be positive")
        if cov.window_km2 <= 0:
            raise ConfigError("coverage.window_km2: must be positive")
        if cov.window_km2 * cov.bs_density_per_km2 < 100:
            raise ConfigError(
                "coverage: window side must be at least 10 mean BS spacings "
                "(window_km2 * bs_density_per_km2 >= 100) to keep edge effects small"
            )
        if cov.users_per_cell < 1:
            raise ConfigError("coverage.users_per_cell: must be >= 1")
        if cov.users_per_cell > a.bs_rows * a.bs_cols:
            raise ConfigError("coverage.users_per_cell: cannot exceed the BS element count")
        if cov.los_decay_m <= 0:
            raise ConfigError("coverage.los_decay_m: must be positive")
        if cov.pl_exponent_los <= 0 or cov.pl_exponent_nlos <= 0:
            raise ConfigError("coverage: path loss exponents must be positive")
        if cov.bandwidth_hz <= 0:
            raise ConfigError("coverage.bandwidth_hz: must be positive")
        if any(v < 0 for v in cfg.sweep):
            raise ConfigError("coverage: rate thresholds must be >= 0")
    elif cfg.coverage is not None:
        raise ConfigError(f"coverage: section only applies to coverage campaigns, not {cfg.kind}")


def load_campaign(path: str) -> CampaignConfig:
    """Read, parse and validate a campaign config JSON file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return campaign_from_dict(data)


def to_jsonable(cfg: CampaignConfig) -> dict:
    """Plain-dict form of a config (tuples become lists), for manifests."""

    def cleanup(obj):
        if isinstance(obj, dict):
            return {k: cleanup(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [cleanup(v) for v in obj]
        return obj

    return cleanup(dataclasses.asdict(cfg))
