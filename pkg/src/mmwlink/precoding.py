"""Two-stage hybrid precoding: analog beam selection plus baseband zero-forcing.

Stage 1 picks, independently per user, the combiner/beamformer pair that
maximizes the single-user array gain |w^H H f| (exhaustively over codebooks,
or in closed form from the path angles in continuous mode). Stage 2 stacks
the resulting effective channel rows w_u^H H_u F_RF and zero-forces the
residual multi-user interference at baseband, normalizing each baseband
column so the cascaded per-user transmit power ||F_RF f_u|| is one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .arrays import steering_vector
from .channel import ChannelEnsemble, ChannelMatrix
from .codebook import Codebook

COND_LIMIT = 1e12


class SingularEffectiveChannelError(RuntimeError):
    """Effective channel too ill-conditioned for zero-forcing."""

    def __init__(self, condition_number: float):
        self.condition_number = float(condition_number)
        super().__init__(
            "effective channel is numerically singular "
            f"(condition number {condition_number:.3e})"
        )


@dataclass(frozen=True, eq=False)
class RfPrecoder:
    """Analog precoder: unit-modulus columns, one per user.

    ``selected`` records what stage 1 chose per user: a codebook column
    index in codebook mode, or the departure Direction in continuous mode.
    """

    f_rf: np.ndarray
    selected: tuple

    def __post_init__(self) -> None:
        f = np.asarray(self.f_rf, dtype=complex)
        if f.ndim != 2 or f.shape[1] != len(self.selected):
            raise ValueError("f_rf must be (n_bs, n_users) matching selections")
        target = 1.0 / math.sqrt(f.shape[0])
        if np.max(np.abs(np.abs(f) - target)) > 1e-12:
            raise ValueError("analog precoder entries must have modulus 1/sqrt(N_bs)")
        f = f.copy()
        f.flags.writeable = False
        object.__setattr__(self, "f_rf", f)
        object.__setattr__(self, "selected", tuple(self.selected))

    @property
    def n_users(self) -> int:
        return int(self.f_rf.shape[1])


@dataclass(frozen=True, eq=False)
class CombinerSet:
    """Per-user receive combining vectors (unit modulus entries)."""

    w: tuple[np.ndarray, ...]
    selected: tuple

    def __post_init__(self) -> None:
        if len(self.w) != len(self.selected):
            raise ValueError("one selection record per combiner required")
        frozen = []
        for vec in self.w:
            v = np.asarray(vec, dtype=complex)
            if v.ndim != 1 or v.size < 1:
                raise ValueError("combiners must be non-empty 1-D vectors")
            target = 1.0 / math.sqrt(v.size)
            if np.max(np.abs(np.abs(v) - target)) > 1e-12:
                raise ValueError("combiner entries must have modulus 1/sqrt(N_ms)")
            v = v.copy()
            v.flags.writeable = False
            frozen.append(v)
        object.__setattr__(self, "w", tuple(frozen))
        object.__setattr__(self, "selected", tuple(self.selected))


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """Rows w_u^H H_u F_RF stacked into a (n_users, n_users) matrix."""

    h_bar: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.h_bar, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"effective channel must be square, got {h.shape}")
        h = h.copy()
        h.flags.writeable = False
        object.__setattr__(self, "h_bar", h)


@dataclass(frozen=True, eq=False)
class BasebandPrecoder:
    """Baseband precoder plus the per-column normalization gains."""

    f_bb: np.ndarray
    column_gains: np.ndarray

    def __post_init__(self) -> None:
        f = np.asarray(self.f_bb, dtype=complex)
        g = np.asarray(self.column_gains, dtype=float)
        if f.ndim != 2 or g.shape != (f.shape[1],):
            raise ValueError("f_bb must be 2-D with one gain per column")
        f = f.copy()
        g = g.copy()
        f.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "f_bb", f)
        object.__setattr__(self, "column_gains", g)


def stage1_select(
    channel: ChannelMatrix,
    f_cb: Codebook,
    w_cb: Codebook,
) -> tuple[np.ndarray, np.ndarray, tuple[int, int]]:
    """Exhaustive single-user beam pair search over both codebooks.

    Maximizes |w^H H f|; ties resolve to the lowest (combiner index,
    beamformer index) pair in lexicographic order, which is what the
    row-major argmax over the objective table delivers.

    Returns:
        (f, w, (w_index, f_index)) with copies of the winning columns.
    """
    if f_cb.geom.count != channel.bs_geom.count:
        raise ValueError("beamformer codebook does not match the BS array")
    if w_cb.geom.count != channel.ms_geom.count:
        raise ValueError("combiner codebook does not match the MS array")
    table = np.abs(w_cb.vectors.conj().T @ (channel.h @ f_cb.vectors))
    w_idx, f_idx = divmod(int(np.argmax(table)), table.shape[1])
    return (
        f_cb.vectors[:, f_idx].copy(),
        w_cb.vectors[:, w_idx].copy(),
        (w_idx, f_idx),
    )


def stage1_continuous(channel: ChannelMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Ideal beam pair for a single-path channel: exact steering vectors.

    Raises:
        ValueError: if the channel has more than one path.
    """
    if len(channel.paths) != 1:
        raise ValueError(
            f"continuous selection needs a single-path channel, got {len(channel.paths)} paths"
        )
    path = channel.paths[0]
    return (
        steering_vector(channel.bs_geom, path.aod),
        steering_vector(channel.ms_geom, path.aoa),
    )


def effective_channel(
    ensemble: ChannelEnsemble,
    combiners: CombinerSet,
    f_rf: RfPrecoder,
) -> EffectiveChannel:
    """Combine each user's channel through its combiner and the analog precoder."""
    n_users = ensemble.n_users
    if len(combiners.w) != n_users or f_rf.n_users != n_users:
        raise ValueError("user counts of ensemble, combiners and precoder must agree")
    if f_rf.f_rf.shape[0] != ensemble.bs_geom.count:
        raise ValueError("analog precoder height does not match the BS array")
    rows = np.empty((n_users, n_users), dtype=complex)
    for u, ch in enumerate(ensemble.users):
        w = combiners.w[u]
        if w.size != ch.ms_geom.count:
            raise ValueError(f"combiner {u} does not match its MS array")
        rows[u] = (w.conj() @ ch.h) @ f_rf.f_rf
    return EffectiveChannel(h_bar=rows)


def zf_baseband(
    h_bar: EffectiveChannel,
    f_rf: RfPrecoder,
    cond_limit: float = COND_LIMIT,
) -> BasebandPrecoder:
    """Zero-forcing baseband precoder with per-column power normalization.

    Computes H_bar^H (H_bar H_bar^H)^{-1}, then scales column u by
    1 / ||F_RF f_u|| so each user's cascaded precoder has unit power. The
    reciprocal scalings are returned as ``column_gains``: they are the
    diagonal gains the zero-forced streams see.

    Raises:
        SingularEffectiveChannelError: if cond(H_bar) >= cond_limit, or if
            the factorization fails outright. No regularization is
            attempted.
    """
    hb = h_bar.h_bar
    if f_rf.f_rf.shape[1] != hb.shape[0]:
        raise ValueError("analog precoder and effective channel disagree on user count")
    cond = np.linalg.cond(hb)
    if not np.isfinite(cond) or cond >= cond_limit:
        raise SingularEffectiveChannelError(cond)
    # with H_bar^H = Q R the target is Q R^{-H}; going through the QR
    # factors keeps the residual at cond(H_bar) * eps, where forming the
    # Gram would square the condition number
    q, r = np.linalg.qr(hb.conj().T)
    try:
        raw = q @ np.linalg.inv(r).conj().T
    except np.linalg.LinAlgError as exc:
        raise SingularEffectiveChannelError(cond) from exc
    norms = np.linalg.norm(f_rf.f_rf @ raw, axis=0)
    gains = 1.0 / norms
    return BasebandPrecoder(f_bb=raw * gains, column_gains=gains)


def analog_only_precoder(f_rf: RfPrecoder) -> BasebandPrecoder:
    """Pass-through baseband for the beamsteering baseline.

    A diagonal matrix scaled so ||F_RF f_u|| = 1 per column; identity
    whenever the analog columns already have unit norm.
    """
    norms = np.linalg.norm(f_rf.f_rf, axis=0)
    gains = 1.0 / norms
    return BasebandPrecoder(f_bb=np.diag(gains.astype(complex)), column_gains=gains)


def design_hybrid_precoders(
    ensemble: ChannelEnsemble,
    f_cb: Codebook | None = None,
    w_cb: Codebook | None = None,
    *,
    continuous: bool = False,
    cond_limit: float = COND_LIMIT,
) -> tuple[RfPrecoder, CombinerSet, BasebandPrecoder, EffectiveChannel]:
    """Run both precoding stages for every user of an ensemble.

    Codebook mode (default) needs both codebooks; continuous mode ignores
    them and requires single-path channels.
    """
    beams, combs, sel_f, sel_w = [], [], [], []
    for ch in ensemble.users:
        if continuous:
            f, w = stage1_continuous(ch)
            sel_f.append(ch.paths[0].aod)
            sel_w.append(ch.paths[0].aoa)
        else:
            if f_cb is None or w_cb is None:
                raise ValueError("codebook mode requires both codebooks")
            f, w, (w_idx, f_idx) = stage1_select(ch, f_cb, w_cb)
            sel_f.append(f_idx)
            sel_w.append(w_idx)
        beams.append(f)
        combs.append(w)
    f_rf = RfPrecoder(f_rf=np.column_stack(beams), selected=tuple(sel_f))
    combiners = CombinerSet(w=tuple(combs), selected=tuple(sel_w))
    h_bar = effective_channel(ensemble, combiners, f_rf)
    f_bb = zf_baseband(h_bar, f_rf, cond_limit)
    return f_rf, combiners, f_bb, h_bar


def dump_precoders_csv(
    f_rf: RfPrecoder,
    f_bb: BasebandPrecoder,
    combiners: CombinerSet,
    path: str,
) -> None:
    """Write F_RF, F_BB and every combiner to one CSV (matrix, row, col, re, im)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("matrix", "row", "col", "re", "im"))

        def emit(name: str, mat: np.ndarray) -> None:
            m = np.atleast_2d(mat)
            for r in range(m.shape[0]):
                for c in range(m.shape[1]):
                    writer.writerow(
                        (name, r, c, repr(float(m[r, c].real)), repr(float(m[r, c].imag)))
                    )

        emit("f_rf", f_rf.f_rf)
        emit("f_bb", f_bb.f_bb)
        for u, w in enumerate(combiners.w):
            emit(f"w_{u}", w.reshape(1, -1))
