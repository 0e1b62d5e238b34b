"""Rates, the closed-form lower bound, and asymptotic-gap diagnostics.

All rates are spectral efficiencies in bits/s/Hz with unit noise power, so
the configured SNR equals the total transmit power, which is split evenly
over the served streams (per-stream power SNR / n_users).

For single-path channels with exact beam alignment the zero-forced rate of
user u has the closed form

    R_u = log2(1 + (SNR / U) * N_bs * N_ms * |alpha_u|^2 / invdiag_u),

where invdiag_u is diagonal element u of the inverse Gram matrix of the
departure steering vectors. A matched-filter bound (the interference-free
single-user rate) and an analog-only beamsteering baseline share the same
ingredients, and a deterministic lower bound follows from bounding invdiag
by the Gram matrix's extreme eigenvalue ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .arrays import ArrayGeometry, Direction, steering_matrix, steering_vectors, ula_geometry
from .channel import ChannelEnsemble
from .precoding import BasebandPrecoder, CombinerSet, RfPrecoder

GRAM_COND_LIMIT = 1e12


@dataclass(frozen=True)
class SystemConfig:
    """Static link parameters: array sizes, RF chains, users, operating SNR."""

    n_bs: int
    n_ms: int
    n_rf: int
    n_users: int
    snr_db: float

    def __post_init__(self) -> None:
        if min(self.n_bs, self.n_ms, self.n_rf, self.n_users) < 1:
            raise ValueError("all counts must be positive")
        if not (self.n_users <= self.n_rf <= self.n_bs):
            raise ValueError(
                f"need n_users <= n_rf <= n_bs, got {self.n_users}, {self.n_rf}, {self.n_bs}"
            )
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")

    @property
    def snr(self) -> float:
        """Linear total transmit SNR (noise power is one)."""
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def per_stream_snr(self) -> float:
        return self.snr / self.n_users


def user_rates(
    ensemble: ChannelEnsemble,
    combiners: CombinerSet,
    f_rf: RfPrecoder,
    f_bb: BasebandPrecoder,
    config: SystemConfig,
) -> np.ndarray:
    """SINR rates of every user under the given precoders and combiners.

    Treating residual inter-stream leakage as noise, user u gets
    log2(1 + q |g_u|^2 / (q sum_{n != u} |g_n|^2 + 1)) with
    g_n = w_u^H H_u F_RF f_n and q the per-stream SNR.
    """
    if ensemble.n_users != config.n_users:
        raise ValueError("ensemble size does not match the configuration")
    cascade = f_rf.f_rf @ f_bb.f_bb
    q = config.per_stream_snr
    rates = np.empty(config.n_users)
    for u, ch in enumerate(ensemble.users):
        power = np.abs((combiners.w[u].conj() @ ch.h) @ cascade) ** 2
        signal = power[u]
        interference = float(power.sum() - signal)
        rates[u] = math.log2(1.0 + q * signal / (q * interference + 1.0))
    return rates


def per_user_rate(
    ensemble: ChannelEnsemble,
    combiners: CombinerSet,
    f_rf: RfPrecoder,
    f_bb: BasebandPrecoder,
    config: SystemConfig,
    user: int,
) -> float:
    """Rate of one user; see :func:`user_rates`."""
    if not 0 <= user < config.n_users:
        raise ValueError(f"user index {user} out of range")
    return float(user_rates(ensemble, combiners, f_rf, f_bb, config)[user])


def gram_matrix(bs_geom: ArrayGeometry, aods: Sequence[Direction]) -> np.ndarray:
    """Gram matrix A^H A of the departure steering vectors (unit diagonal)."""
    a = steering_matrix(bs_geom, aods)
    return a.conj().T @ a


def _check_formula_inputs(
    alphas: np.ndarray,
    aods: Sequence[Direction],
    bs_geom: ArrayGeometry,
    config: SystemConfig,
) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=complex)
    if alphas.shape != (config.n_users,) or len(aods) != config.n_users:
        raise ValueError("need one gain and one departure direction per user")
    if bs_geom.count != config.n_bs:
        raise ValueError("BS geometry does not match the configuration")
    return alphas


def closed_form_zf_rate(
    alphas: np.ndarray,
    aods: Sequence[Direction],
    bs_geom: ArrayGeometry,
    config: SystemConfig,
) -> np.ndarray:
    """Closed-form per-user rates of the two-stage design (aligned single path).

    Raises:
        numpy.linalg.LinAlgError: if the steering Gram matrix is numerically
            singular (condition number >= 1e12).
    """
    alphas = _check_formula_inputs(alphas, aods, bs_geom, config)
    gram = gram_matrix(bs_geom, aods)
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond >= GRAM_COND_LIMIT:
        raise np.linalg.LinAlgError(
            f"steering Gram matrix is numerically singular (condition number {cond:.3e})"
        )
    invdiag = np.real(np.diag(np.linalg.inv(gram)))
    c = config.per_stream_snr * config.n_bs * config.n_ms
    return np.log2(1.0 + c * np.abs(alphas) ** 2 / invdiag)


def single_user_rate(alpha: complex | np.ndarray, config: SystemConfig) -> np.ndarray:
    """Interference-free matched-filter rate(s) at full array gain."""
    c = config.per_stream_snr * config.n_bs * config.n_ms
    return np.log2(1.0 + c * np.abs(np.asarray(alpha)) ** 2)


def beamsteering_rate(
    alphas: np.ndarray,
    aods: Sequence[Direction],
    bs_geom: ArrayGeometry,
    config: SystemConfig,
) -> np.ndarray:
    """Analog-only baseline rates (aligned single path, no baseband ZF).

    Residual interference at user u scales with the squared cross
    correlations |a(aod_u)^H a(aod_n)|^2 of the departure steering vectors.
    """
    alphas = _check_formula_inputs(alphas, aods, bs_geom, config)
    gram = gram_matrix(bs_geom, aods)
    cross = np.sum(np.abs(gram) ** 2, axis=1) - np.abs(np.diag(gram)) ** 2
    c = config.per_stream_snr * config.n_bs * config.n_ms
    s = c * np.abs(alphas) ** 2
    return np.log2(1.0 + s / (s * cross + 1.0))


def rate_lower_bound(
    alphas: np.ndarray,
    aods: Sequence[Direction],
    bs_geom: ArrayGeometry,
    config: SystemConfig,
) -> tuple[np.ndarray, float]:
    """Deterministic lower bound on the closed-form rates.

    Scales each user's matched-filter SNR by
    4 / (r + 1/r + 2), r being the ratio of largest to smallest squared
    singular value of the stacked departure steering matrix. The factor is
    1 exactly when the steering vectors are orthogonal and decays as they
    crowd together.

    Returns:
        (per-user bounds, factor).

    Raises:
        numpy.linalg.LinAlgError: if the steering matrix is rank deficient.
    """
    alphas = _check_formula_inputs(alphas, aods, bs_geom, config)
    a = steering_matrix(bs_geom, aods)
    svals = np.linalg.svd(a, compute_uv=False)
    if svals[-1] <= svals[0] * 1e-12:
        raise np.linalg.LinAlgError("steering matrix is rank deficient")
    ratio = (svals[0] / svals[-1]) ** 2
    factor = 4.0 / (ratio + 1.0 / ratio + 2.0)
    c = config.per_stream_snr * config.n_bs * config.n_ms
    bounds = np.log2(1.0 + c * np.abs(alphas) ** 2 * factor)
    return bounds, float(factor)


class KantorovichResult(NamedTuple):
    holds: bool
    min_slack: float


def kantorovich_check(gram: np.ndarray) -> KantorovichResult:
    """Check the diagonal inverse bound on a Hermitian positive definite matrix.

    For every diagonal index u the inverse must satisfy
    (P^{-1})_uu <= (r + 1/r + 2) / (4 P_uu) with r the extreme eigenvalue
    ratio of P. Returns whether the bound holds everywhere and the smallest
    slack (bound minus actual).

    Raises:
        ValueError: if the input is not Hermitian within 1e-10 or not
            positive definite.
    """
    p = np.asarray(gram, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"expected a square matrix, got {p.shape}")
    scale = max(1.0, float(np.max(np.abs(p))))
    if np.max(np.abs(p - p.conj().T)) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian within 1e-10")
    evals = np.linalg.eigvalsh(p)
    if evals[0] <= 0:
        raise ValueError("matrix is not positive definite")
    ratio = evals[-1] / evals[0]
    bound = (ratio + 1.0 / ratio + 2.0) / (4.0 * np.real(np.diag(p)))
    slack = bound - np.real(np.diag(np.linalg.inv(p)))
    return KantorovichResult(holds=bool(np.all(slack >= 0.0)), min_slack=float(slack.min()))


@dataclass(frozen=True, eq=False)
class RateReport:
    """Per-realization rate summary for the aligned single-path regime."""

    per_user: np.ndarray
    sum_rate: float
    closed_form: np.ndarray
    lower_bound: np.ndarray
    single_user: np.ndarray
    beamsteering: np.ndarray
    orthogonality_factor: float

    def __post_init__(self) -> None:
        for name in ("per_user", "closed_form", "lower_bound", "single_user", "beamsteering"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} rates must be finite and non-negative")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not 0.0 <= self.orthogonality_factor <= 1.0 + 1e-12:
            raise ValueError("orthogonality factor must lie in [0, 1]")


def trial_rate_report(
    ensemble: ChannelEnsemble,
    combiners: CombinerSet,
    f_rf: RfPrecoder,
    f_bb: BasebandPrecoder,
    config: SystemConfig,
) -> RateReport:
    """Evaluate simulated and closed-form rates for one single-path realization.

    Raises:
        ValueError: if any user's channel has more than one path.
    """
    if any(len(ch.paths) != 1 for ch in ensemble.users):
        raise ValueError("rate report is defined for single-path ensembles")
    alphas = np.array([ch.paths[0].gain for ch in ensemble.users])
    aods = [ch.paths[0].aod for ch in ensemble.users]
    rates = user_rates(ensemble, combiners, f_rf, f_bb, config)
    bounds, factor = rate_lower_bound(alphas, aods, ensemble.bs_geom, config)
    return RateReport(
        per_user=rates,
        sum_rate=float(rates.sum()),
        closed_form=closed_form_zf_rate(alphas, aods, ensemble.bs_geom, config),
        lower_bound=bounds,
        single_user=single_user_rate(alphas, config),
        beamsteering=beamsteering_rate(alphas, aods, ensemble.bs_geom, config),
        orthogonality_factor=factor,
    )


@dataclass(frozen=True, eq=False)
class AsymptoticGapDiagnostics:
    """Monte Carlo gap estimates behind the three asymptotic claims.

    gap_* arrays estimate E[single-user rate - zero-forced rate]; the
    beamsteering gain estimates E[zero-forced rate - analog-only rate].
    """

    n_bs_values: tuple[int, ...]
    gap_mean_by_n_bs: np.ndarray
    gap_median_by_n_bs: np.ndarray
    snr_values_db: tuple[float, ...]
    gap_mean_by_snr: np.ndarray
    n_ms_values: tuple[int, ...]
    beamsteering_gain_by_n_ms: np.ndarray
    trials: int


def _batched_draws(rng: np.random.Generator, trials: int, n_users: int):
    az = rng.uniform(0.0, 2.0 * math.pi, size=(trials, n_users))
    el = rng.uniform(-math.pi / 2, math.pi / 2, size=(trials, n_users))
    alpha = (
        rng.standard_normal((trials, n_users)) + 1j * rng.standard_normal((trials, n_users))
    ) / math.sqrt(2.0)
    return az, el, alpha


def _batched_gram_stats(
    geom: ArrayGeometry, az: np.ndarray, el: np.ndarray, batch: int = 2048
):
    """Inverse-Gram diagonals and squared cross correlations per trial."""
    trials, n_users = az.shape
    invdiag = np.empty((trials, n_users))
    cross = np.empty((trials, n_users))
    for start in range(0, trials, batch):
        stop = min(start + batch, trials)
        a = steering_vectors(geom, az[start:stop].ravel(), el[start:stop].ravel())
        a = a.reshape(geom.count, stop - start, n_users)
        gram = np.einsum("nbu,nbv->buv", a.conj(), a)
        invdiag[start:stop] = np.real(
            np.diagonal(np.linalg.inv(gram), axis1=1, axis2=2)
        )
        cross[start:stop] = (
            np.sum(np.abs(gram) ** 2, axis=2)
            - np.abs(np.diagonal(gram, axis1=1, axis2=2)) ** 2
        )
    return invdiag, cross


def asymptotic_gap_diagnostics(
    n_bs_values: Sequence[int] = (16, 64, 256),
    snr_values_db: Sequence[float] = (0.0, 20.0),
    n_ms_values: Sequence[int] = (4, 16, 64),
    *,
    n_users: int = 4,
    n_bs_fixed: int = 64,
    n_ms_fixed: int = 16,
    snr_db_fixed: float = 10.0,
    trials: int = 10_000,
    seed: int = 0,
) -> AsymptoticGapDiagnostics:
    """Estimate the asymptotic-gap behavior with closed-form Monte Carlo.

    Uses linear BS arrays, uniform angle draws and unit-power Rayleigh
    gains. The SNR sweep reuses one set of draws (paired estimates); the
    array sweeps draw independently per point.
    """
    root = np.random.SeedSequence(seed)
    gap_mean, gap_median = [], []
    for n_bs, child in zip(n_bs_values, root.spawn(len(n_bs_values))):
        rng = np.random.default_rng(child)
        az, el, alpha = _batched_draws(rng, trials, n_users)
        invdiag, _ = _batched_gram_stats(ula_geometry(n_bs), az, el)
        c = (10.0 ** (snr_db_fixed / 10.0) / n_users) * n_bs * n_ms_fixed
        s = c * np.abs(alpha) ** 2
        gap = np.mean(np.log2(1.0 + s) - np.log2(1.0 + s / invdiag), axis=1)
        gap_mean.append(gap.mean())
        gap_median.append(float(np.median(gap)))

    rng = np.random.default_rng(root.spawn(1)[0])
    az, el, alpha = _batched_draws(rng, trials, n_users)
    invdiag, cross = _batched_gram_stats(ula_geometry(n_bs_fixed), az, el)
    gap_by_snr = []
    for snr_db in snr_values_db:
        c = (10.0 ** (snr_db / 10.0) / n_users) * n_bs_fixed * n_ms_fixed
        s = c * np.abs(alpha) ** 2
        gap_by_snr.append(np.mean(np.log2(1.0 + s) - np.log2(1.0 + s / invdiag)))

    gain_by_n_ms = []
    for n_ms in n_ms_values:
        c = (10.0 ** (snr_db_fixed / 10.0) / n_users) * n_bs_fixed * n_ms
        s = c * np.abs(alpha) ** 2
        zf = np.log2(1.0 + s / invdiag)
        analog = np.log2(1.0 + s / (s * cross + 1.0))
        gain_by_n_ms.append(np.mean(zf - analog))

    return AsymptoticGapDiagnostics(
        n_bs_values=tuple(int(n) for n in n_bs_values),
        gap_mean_by_n_bs=np.array(gap_mean),
        gap_median_by_n_bs=np.array(gap_median),
        snr_values_db=tuple(float(s) for s in snr_values_db),
        gap_mean_by_snr=np.array(gap_by_snr),
        n_ms_values=tuple(int(n) for n in n_ms_values),
        beamsteering_gain_by_n_ms=np.array(gain_by_n_ms),
        trials=trials,
    )
