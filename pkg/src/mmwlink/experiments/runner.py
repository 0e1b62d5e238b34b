"""Deterministic, mergeable Monte Carlo execution for the rate sweeps.

Every trial draws its own generator from a seed derived as
blake2b(master seed, campaign kind, point index, trial index), so a trial's
randomness depends only on its coordinates. Trials are processed in fixed
chunks and chunk statistics are merged in chunk order, which makes the
emitted numbers byte-identical for any worker count.

In codebook mode, independent beam selection occasionally hands two users
the same analog beam; the effective channel is then singular and the trial
is discarded (for all series, keeping them paired) and counted. The
reported trial count is the number of completed trials.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..arrays import ArrayGeometry, upa_geometry
from ..channel import clustered_ensemble, single_path_ensemble
from ..codebook import Codebook, build_beamsteering_codebook
from ..metrics import SystemConfig, rate_lower_bound, user_rates
from ..precoding import SingularEffectiveChannelError, analog_only_precoder, design_hybrid_precoders
from .config import CampaignConfig
from .output import ResultRow, ResultTable

log = logging.getLogger(__name__)

CHUNK_SIZE = 512

SWEEP_SERIES = {
    "snr_sweep": ("hybrid", "single_user", "beamsteering", "lower_bound"),
    "angle_spread_sweep": ("hybrid", "single_user", "beamsteering"),
}


def trial_seed(master: int, kind: str, point_index: int, trial_index: int) -> int:
    """Stable per-trial seed from the campaign coordinates."""
    message = f"{master}:{kind}:{point_index}:{trial_index}".encode()
    return int.from_bytes(hashlib.blake2b(message, digest_size=8).digest(), "big")


class RunningStat:
    """Mergeable running mean / variance accumulator over fixed-size vectors."""

    __slots__ = ("count", "mean", "m2")

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def add(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float)
        self.count += 1
        delta = values - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (values - self.mean)

    def merge(self, other: "RunningStat") -> "RunningStat":
        """Fold another accumulator into this one (associative up to roundoff)."""
        if other.count == 0:
            return self
        if self.count == 0:
            self.count = other.count
            self.mean = other.mean.copy()
            self.m2 = other.m2.copy()
            return self
        n1, n2 = self.count, other.count
        total = n1 + n2
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (n2 / total)
        self.m2 = self.m2 + other.m2 + delta**2 * (n1 * n2 / total)
        self.count = total
        return self

    def stderr(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.m2 / (self.count - 1) / self.count)


@dataclass(frozen=True, eq=False)
class _PointContext:
    """Prepared per-point objects shared by all trials of a sweep point."""

    kind: str
    system: SystemConfig
    bs_geom: ArrayGeometry
    ms_geom: ArrayGeometry
    f_cb: Codebook | None
    w_cb: Codebook | None
    continuous: bool
    mean_gain_power: float
    n_clusters: int
    rays_per_cluster: int
    angle_spread_rad: float


_CONTEXT_CACHE: dict = {}


def _point_context(cfg: CampaignConfig, axis_value: float) -> _PointContext:
    key = (cfg, axis_value)
    ctx = _CONTEXT_CACHE.get(key)
    if ctx is not None:
        return ctx
    a = cfg.arrays
    bs_geom = upa_geometry(a.bs_rows, a.bs_cols, a.spacing)
    ms_geom = upa_geometry(a.ms_rows, a.ms_cols, a.spacing)
    snr_db = axis_value if cfg.kind == "snr_sweep" else cfg.snr_db
    system = SystemConfig(
        n_bs=bs_geom.count,
        n_ms=ms_geom.count,
        n_rf=cfg.n_users,
        n_users=cfg.n_users,
        snr_db=float(snr_db),
    )
    cb = cfg.codebook
    f_cb = w_cb = None
    if not cb.continuous:
        f_cb = build_beamsteering_codebook(bs_geom, cb.bs_az, cb.bs_el, cb.bs_phase_bits)
        w_cb = build_beamsteering_codebook(ms_geom, cb.ms_az, cb.ms_el, cb.ms_phase_bits)
    spread_deg = axis_value if cfg.kind == "angle_spread_sweep" else cfg.channel.angle_spread_deg
    ctx = _PointContext(
        kind=cfg.kind,
        system=system,
        bs_geom=bs_geom,
        ms_geom=ms_geom,
        f_cb=f_cb,
        w_cb=w_cb,
        continuous=cb.continuous,
        mean_gain_power=cfg.channel.mean_gain_power,
        n_clusters=cfg.channel.n_clusters,
        rays_per_cluster=cfg.channel.rays_per_cluster,
        angle_spread_rad=math.radians(spread_deg),
    )
    if len(_CONTEXT_CACHE) > 16:
        _CONTEXT_CACHE.clear()
    _CONTEXT_CACHE[key] = ctx
    return ctx


def _aligned_beam_rates(ensemble, combiners, f_rf, system) -> np.ndarray:
    """Interference-free rates through each user's selected beam pair."""
    q = system.per_stream_snr
    rates = np.empty(system.n_users)
    for u, ch in enumerate(ensemble.users):
        gain = abs((combiners.w[u].conj() @ ch.h) @ f_rf.f_rf[:, u]) ** 2
        rates[u] = math.log2(1.0 + q * gain)
    return rates


def _snr_trial(ctx: _PointContext, rng: np.random.Generator) -> np.ndarray | None:
    ens = single_path_ensemble(
        ctx.bs_geom, ctx.ms_geom, ctx.system.n_users, ctx.mean_gain_power, rng
    )
    try:
        f_rf, combiners, f_bb, _ = design_hybrid_precoders(
            ens, ctx.f_cb, ctx.w_cb, continuous=ctx.continuous
        )
    except SingularEffectiveChannelError:
        return None
    hybrid = user_rates(ens, combiners, f_rf, f_bb, ctx.system).mean()
    single = _aligned_beam_rates(ens, combiners, f_rf, ctx.system).mean()
    analog = user_rates(ens, combiners, f_rf, analog_only_precoder(f_rf), ctx.system).mean()
    alphas = np.array([ch.paths[0].gain for ch in ens.users])
    aods = [ch.paths[0].aod for ch in ens.users]
    bounds, _ = rate_lower_bound(alphas, aods, ctx.bs_geom, ctx.system)
    return np.array([hybrid, single, analog, bounds.mean()])


def _spread_trial(ctx: _PointContext, rng: np.random.Generator) -> np.ndarray | None:
    ens = clustered_ensemble(
        ctx.bs_geom, ctx.ms_geom, ctx.system.n_users,
        ctx.n_clusters, ctx.rays_per_cluster, ctx.angle_spread_rad,
        ctx.mean_gain_power, rng,
    )
    try:
        f_rf, combiners, f_bb, _ = design_hybrid_precoders(ens, ctx.f_cb, ctx.w_cb)
    except SingularEffectiveChannelError:
        return None
    hybrid = user_rates(ens, combiners, f_rf, f_bb, ctx.system).mean()
    single = _aligned_beam_rates(ens, combiners, f_rf, ctx.system).mean()
    analog = user_rates(ens, combiners, f_rf, analog_only_precoder(f_rf), ctx.system).mean()
    return np.array([hybrid, single, analog])


_TRIAL_FNS = {
    "snr_sweep": _snr_trial,
    "angle_spread_sweep": _spread_trial,
}


def _run_sweep_chunk(args) -> tuple[RunningStat, int]:
    cfg, point_index, axis_value, start, stop = args
    ctx = _point_context(cfg, axis_value)
    trial_fn = _TRIAL_FNS[cfg.kind]
    stat = RunningStat(len(SWEEP_SERIES[cfg.kind]))
    discards = 0
    for t in range(start, stop):
        rng = np.random.default_rng(trial_seed(cfg.seed, cfg.kind, point_index, t))
        values = trial_fn(ctx, rng)
        if values is None:
            discards += 1
        else:
            stat.add(values)
    return stat, discards


def _chunk_bounds(trials: int, chunk: int = CHUNK_SIZE):
    return [(start, min(start + chunk, trials)) for start in range(0, trials, chunk)]


def run_sweep(cfg: CampaignConfig, workers: int = 1) -> ResultTable:
    """Run an SNR or angle-spread sweep and reduce per-point statistics."""
    if cfg.kind not in SWEEP_SERIES:
        raise ValueError(f"not a sweep campaign: {cfg.kind}")
    series = SWEEP_SERIES[cfg.kind]
    jobs = [
        (cfg, pi, float(axis), start, stop)
        for pi, axis in enumerate(cfg.sweep)
        for start, stop in _chunk_bounds(cfg.trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(_run_sweep_chunk, jobs))
    else:
        chunk_results = [_run_sweep_chunk(job) for job in jobs]

    rows = []
    discarded = 0
    per_point = len(_chunk_bounds(cfg.trials))
    for pi, axis in enumerate(cfg.sweep):
        total = RunningStat(len(series))
        for stat, chunk_discards in chunk_results[pi * per_point:(pi + 1) * per_point]:
            total.merge(stat)
            discarded += chunk_discards
        if total.count == 0:
            raise RuntimeError(
                f"every trial at sweep point {axis} hit a singular effective "
                "channel; the codebook is too coarse for this many users"
            )
        err = total.stderr()
        for si, name in enumerate(series):
            rows.append(
                ResultRow(
                    axis=float(axis), series=name, mean=float(total.mean[si]),
                    stderr=float(err[si]), count=total.count,
                )
            )
    if discarded:
        log.warning(
            "discarded %d trial(s) whose beam selections collided into a "
            "singular effective channel", discarded,
        )
    return ResultTable(rows=tuple(rows))


def run_snr_sweep(cfg: CampaignConfig, workers: int = 1) -> ResultTable:
    if cfg.kind != "snr_sweep":
        raise ValueError(f"expected an snr_sweep campaign, got {cfg.kind}")
    return run_sweep(cfg, workers)


def run_angle_spread_sweep(cfg: CampaignConfig, workers: int = 1) -> ResultTable:
    if cfg.kind != "angle_spread_sweep":
        raise ValueError(f"expected an angle_spread_sweep campaign, got {cfg.kind}")
    return run_sweep(cfg, workers)


def run_campaign(cfg: CampaignConfig, workers: int = 1) -> ResultTable:
    """Dispatch a validated campaign to its runner."""
    if cfg.kind == "coverage":
        from .coverage import run_coverage

        return run_coverage(cfg, workers)
    return run_sweep(cfg, workers)
