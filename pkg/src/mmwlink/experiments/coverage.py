"""Random-network coverage: rate CCDFs under hybrid and analog-only precoding.

One realization drops base stations and mobiles as independent Poisson
processes in a square window, associates every mobile with its
least-path-loss BS under random LOS blockage, and lets each BS serve up to
``users_per_cell`` of its mobiles with single-path links (Rayleigh gains
around the path-loss mean, uniform azimuths, broadside elevation as the
arrays steer in azimuth only). Every BS designs its own precoders; all other
BSs' transmissions contribute interference at each served user's combiner
output. Reported per threshold: the fraction of served users whose rate
meets it.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..arrays import steering_vectors, upa_geometry
from ..precoding import (
    EffectiveChannel,
    RfPrecoder,
    SingularEffectiveChannelError,
    analog_only_precoder,
    zf_baseband,
)
from .config import CampaignConfig
from .output import ResultRow, ResultTable
from .runner import trial_seed

log = logging.getLogger(__name__)

COVERAGE_SERIES = ("hybrid", "beamsteering")

TWO_PI = 2.0 * math.pi
THERMAL_NOISE_DBM_PER_HZ = -174.0


def _noise_watts(cov) -> float:
    noise_dbm = (
        THERMAL_NOISE_DBM_PER_HZ
        + 10.0 * math.log10(cov.bandwidth_hz)
        + cov.noise_figure_db
    )
    return 10.0 ** ((noise_dbm - 30.0) / 10.0)


def _empty_result(n_eta: int):
    zero = np.zeros(n_eta, dtype=np.int64)
    return zero, zero.copy(), 0, 0, 1


def _realization(cfg: CampaignConfig, rng: np.random.Generator, etas: np.ndarray):
    """One network drop. Returns (hits_hybrid, hits_analog, samples, skipped_cells, discarded)."""
    cov = cfg.coverage
    arr = cfg.arrays
    bs_geom = upa_geometry(arr.bs_rows, arr.bs_cols, arr.spacing)
    ms_geom = upa_geometry(arr.ms_rows, arr.ms_cols, arr.spacing)
    side_m = math.sqrt(cov.window_km2) * 1000.0

    n_bs = int(rng.poisson(cov.bs_density_per_km2 * cov.window_km2))
    n_ms = int(rng.poisson(cov.bs_density_per_km2 * cov.ms_density_factor * cov.window_km2))
    if n_bs == 0 or n_ms == 0:
        return _empty_result(etas.size)
    bs_xy = rng.uniform(0.0, side_m, size=(n_bs, 2))
    ms_xy = rng.uniform(0.0, side_m, size=(n_ms, 2))

    dist = np.hypot(
        ms_xy[:, None, 0] - bs_xy[None, :, 0],
        ms_xy[:, None, 1] - bs_xy[None, :, 1],
    )
    np.maximum(dist, 1.0, out=dist)
    los = rng.random((n_ms, n_bs)) < np.exp(-dist / cov.los_decay_m)
    exponent = np.where(los, cov.pl_exponent_los, cov.pl_exponent_nlos)
    pl_db = cov.ref_loss_db_1m + 10.0 * exponent * np.log10(dist)
    serving = np.argmin(pl_db, axis=1)

    # Each BS picks up to users_per_cell of its associated mobiles.
    served_ms: list[int] = []
    cell_of: list[int] = []
    cells: list[tuple[int, list[int]]] = []
    for b in range(n_bs):
        members = np.flatnonzero(serving == b)
        if members.size == 0:
            continue
        take = min(cov.users_per_cell, int(members.size))
        chosen = rng.choice(members, size=take, replace=False)
        positions = list(range(len(served_ms), len(served_ms) + take))
        served_ms.extend(int(m) for m in chosen)
        cell_of.extend([b] * take)
        cells.append((b, positions))
    n_served = len(served_ms)
    if n_served == 0:
        return _empty_result(etas.size)
    served_ms_arr = np.array(served_ms)
    cell_of_arr = np.array(cell_of)

    # Link randomness for every (served user, BS) pair: azimuth-only angles,
    # Rayleigh gain with the path-loss power.
    aod_az = rng.uniform(0.0, TWO_PI, size=(n_served, n_bs))
    aoa_az = rng.uniform(0.0, TWO_PI, size=(n_served, n_bs))
    gain_power = 10.0 ** (-pl_db[served_ms_arr, :] / 10.0)
    gains = (
        rng.standard_normal((n_served, n_bs)) + 1j * rng.standard_normal((n_served, n_bs))
    ) * np.sqrt(gain_power / 2.0)

    array_gain = bs_geom.count * ms_geom.count
    amp = math.sqrt(array_gain)
    tx_w = 10.0 ** ((cov.tx_power_dbm - 30.0) / 10.0)
    noise_w = _noise_watts(cov)

    # Combiners aligned to the serving link's arrival azimuth.
    w_all = steering_vectors(
        ms_geom, aoa_az[np.arange(n_served), cell_of_arr], 0.0
    )

    # Per-cell two-stage precoders over that cell's own links.
    transmit_hy: dict[int, np.ndarray] = {}
    transmit_an: dict[int, np.ndarray] = {}
    skipped_cells = 0
    inactive: set[int] = set()
    for b, positions in cells:
        a_own = steering_vectors(bs_geom, aod_az[positions, b], 0.0)
        f_rf = RfPrecoder(f_rf=a_own, selected=tuple(positions))
        own_gains = gains[positions, b]
        h_bar = (amp * own_gains)[:, None] * (a_own.conj().T @ a_own)
        try:
            f_bb = zf_baseband(EffectiveChannel(h_bar=h_bar), f_rf)
        except SingularEffectiveChannelError:
            skipped_cells += 1
            inactive.add(b)
            continue
        transmit_hy[b] = f_rf.f_rf @ f_bb.f_bb
        transmit_an[b] = f_rf.f_rf @ analog_only_precoder(f_rf).f_bb

    # Received stream powers, every user against every transmitting cell.
    rx_hy = np.zeros(n_served)
    rx_an = np.zeros(n_served)
    sig_hy = np.zeros(n_served)
    sig_an = np.zeros(n_served)
    for b, positions in cells:
        if b in inactive:
            continue
        p_stream = tx_w / len(positions)
        a_bs_all = steering_vectors(bs_geom, aod_az[:, b], 0.0)
        a_ms_all = steering_vectors(ms_geom, aoa_az[:, b], 0.0)
        rho = np.einsum("ns,ns->s", w_all.conj(), a_ms_all)
        base = p_stream * array_gain * np.abs(gains[:, b]) ** 2 * np.abs(rho) ** 2
        coupling_hy = np.abs(a_bs_all.conj().T @ transmit_hy[b]) ** 2
        coupling_an = np.abs(a_bs_all.conj().T @ transmit_an[b]) ** 2
        rx_hy += base * coupling_hy.sum(axis=1)
        rx_an += base * coupling_an.sum(axis=1)
        for stream, pos in enumerate(positions):
            sig_hy[pos] = base[pos] * coupling_hy[pos, stream]
            sig_an[pos] = base[pos] * coupling_an[pos, stream]

    active = np.array([c not in inactive for c in cell_of], dtype=bool)
    rate_hy = np.log2(1.0 + sig_hy[active] / (rx_hy[active] - sig_hy[active] + noise_w))
    rate_an = np.log2(1.0 + sig_an[active] / (rx_an[active] - sig_an[active] + noise_w))
    hits_hy = (rate_hy[:, None] >= etas[None, :]).sum(axis=0).astype(np.int64)
    hits_an = (rate_an[:, None] >= etas[None, :]).sum(axis=0).astype(np.int64)
    return hits_hy, hits_an, int(active.sum()), skipped_cells, 0


def _coverage_chunk(args):
    cfg, realization_index = args
    etas = np.asarray(cfg.sweep, dtype=float)
    rng = np.random.default_rng(trial_seed(cfg.seed, cfg.kind, 0, realization_index))
    return _realization(cfg, rng, etas)


def run_coverage(cfg: CampaignConfig, workers: int = 1) -> ResultTable:
    """Run the coverage campaign: cfg.trials network realizations."""
    if cfg.kind != "coverage" or cfg.coverage is None:
        raise ValueError("expected a validated coverage campaign")
    etas = np.asarray(cfg.sweep, dtype=float)
    jobs = [(cfg, r) for r in range(cfg.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_coverage_chunk, jobs))
    else:
        results = [_coverage_chunk(job) for job in jobs]

    hits_hy = np.zeros(etas.size, dtype=np.int64)
    hits_an = np.zeros(etas.size, dtype=np.int64)
    samples = 0
    skipped = 0
    discarded = 0
    for h_hy, h_an, n, sk, disc in results:
        hits_hy += h_hy
        hits_an += h_an
        samples += n
        skipped += sk
        discarded += disc
    if discarded:
        log.warning("discarded %d empty coverage realization(s)", discarded)
    if skipped:
        log.warning("skipped %d cell(s) with singular effective channels", skipped)
    if samples == 0:
        raise RuntimeError("coverage campaign produced no user samples")

    rows = []
    for name, hits in (("hybrid", hits_hy), ("beamsteering", hits_an)):
        for e_idx, eta in enumerate(etas):
            p = hits[e_idx] / samples
            rows.append(
                ResultRow(
                    axis=float(eta), series=name, mean=float(p),
                    stderr=float(math.sqrt(p * (1.0 - p) / samples)),
                    count=samples,
                )
            )
    return ResultTable(rows=tuple(rows))
