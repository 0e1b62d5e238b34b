"""Geometric narrowband mmWave channel generation.

A channel between an N_bs-antenna transmitter and an N_ms-antenna receiver
is a finite sum of plane-wave paths,

    H = sqrt(N_bs * N_ms / L) * sum_l  alpha_l * a_ms(aoa_l) @ a_bs(aod_l)^H,

with L the number of paths, alpha_l the complex path gain, and a_bs / a_ms
the unit-norm array responses at departure / arrival. Two samplers are
provided: a single Rayleigh path with uniform angles, and a clustered model
(several clusters of Laplacian-offset rays) for angle-spread studies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arrays import ArrayGeometry, Direction, steering_vectors

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PathComponent:
    """One propagation path: complex gain plus departure/arrival directions."""

    gain: complex
    aod: Direction
    aoa: Direction

    def __post_init__(self) -> None:
        g = complex(self.gain)
        if not (math.isfinite(g.real) and math.isfinite(g.imag)):
            raise ValueError("path gain must be finite")
        object.__setattr__(self, "gain", g)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Assembled channel with the path list it was built from."""

    h: np.ndarray
    paths: tuple[PathComponent, ...]
    bs_geom: ArrayGeometry
    ms_geom: ArrayGeometry

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=complex)
        if h.shape != (self.ms_geom.count, self.bs_geom.count):
            raise ValueError(
                f"channel shape {h.shape} does not match geometries "
                f"({self.ms_geom.count}, {self.bs_geom.count})"
            )
        if not np.all(np.isfinite(h)):
            raise ValueError("channel entries must be finite")
        if len(self.paths) < 1:
            raise ValueError("a channel needs at least one path")
        h = h.copy()
        h.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "paths", tuple(self.paths))


@dataclass(frozen=True, eq=False)
class ChannelEnsemble:
    """Per-user channels for one downlink realization (shared BS array)."""

    users: tuple[ChannelMatrix, ...]

    def __post_init__(self) -> None:
        users = tuple(self.users)
        if len(users) < 1:
            raise ValueError("ensemble needs at least one user")
        first = users[0].bs_geom
        if any(ch.bs_geom is not first for ch in users[1:]):
            raise ValueError("all users must share the same BS geometry")
        object.__setattr__(self, "users", users)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def bs_geom(self) -> ArrayGeometry:
        return self.users[0].bs_geom


def assemble_channel(
    paths: Sequence[PathComponent],
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
) -> np.ndarray:
    """Build the (N_ms, N_bs) channel matrix from a path list.

    Applies the sqrt(N_bs * N_ms / L) scaling, so the expected squared
    Frobenius norm equals N_bs * N_ms when path gains have unit mean power.

    Raises:
        ValueError: on an empty path list.
    """
    if len(paths) == 0:
        raise ValueError("cannot assemble a channel from zero paths")
    gains = np.array([p.gain for p in paths])
    a_bs = steering_vectors(
        bs_geom,
        np.array([p.aod.azimuth for p in paths]),
        np.array([p.aod.elevation for p in paths]),
    )
    a_ms = steering_vectors(
        ms_geom,
        np.array([p.aoa.azimuth for p in paths]),
        np.array([p.aoa.elevation for p in paths]),
    )
    scale = math.sqrt(bs_geom.count * ms_geom.count / len(paths))
    return scale * ((a_ms * gains) @ a_bs.conj().T)


def _as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _uniform_direction(rng: np.random.Generator) -> Direction:
    return Direction(
        azimuth=rng.uniform(0.0, TWO_PI),
        elevation=rng.uniform(-math.pi / 2, math.pi / 2),
    )


def _complex_normal(rng: np.random.Generator, power: float) -> complex:
    re, im = rng.standard_normal(2)
    return complex(re, im) * math.sqrt(power / 2.0)


def draw_single_path(
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
    mean_gain_power: float = 1.0,
    rng: np.random.Generator | int | None = None,
) -> ChannelMatrix:
    """Draw a one-path channel: Rayleigh gain, uniform angles.

    The gain is circularly symmetric complex Gaussian with mean power
    ``mean_gain_power``; azimuths are uniform on [0, 2*pi) and elevations
    uniform on [-pi/2, pi/2] for both ends of the link.
    """
    if mean_gain_power <= 0:
        raise ValueError(f"mean gain power must be positive, got {mean_gain_power}")
    rng = _as_rng(rng)
    path = PathComponent(
        gain=_complex_normal(rng, mean_gain_power),
        aod=_uniform_direction(rng),
        aoa=_uniform_direction(rng),
    )
    h = assemble_channel([path], bs_geom, ms_geom)
    return ChannelMatrix(h=h, paths=(path,), bs_geom=bs_geom, ms_geom=ms_geom)


def draw_clustered(
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
    n_clusters: int,
    rays_per_cluster: int,
    angle_spread: float,
    mean_gain_power: float = 1.0,
    rng: np.random.Generator | int | None = None,
) -> ChannelMatrix:
    """Draw a clustered multipath channel.

    Cluster centers are drawn like single-path angles. Each ray offsets the
    center azimuth and elevation (both ends, independently) by zero-mean
    Laplacian noise whose standard deviation is ``angle_spread`` radians,
    i.e. Laplacian scale ``angle_spread / sqrt(2)``. Ray gains are i.i.d.
    circularly symmetric complex Gaussian with mean power
    ``mean_gain_power``, which together with the assembly prefactor keeps
    E[||H||_F^2] = N_bs * N_ms * mean_gain_power regardless of the cluster
    and ray counts.

    Args:
        n_clusters: number of scattering clusters, >= 1.
        rays_per_cluster: rays per cluster, >= 1.
        angle_spread: per-ray angular standard deviation in radians, >= 0.

    Raises:
        ValueError: on non-positive counts or negative spread.
    """
    if n_clusters < 1:
        raise ValueError(f"cluster count must be >= 1, got {n_clusters}")
    if rays_per_cluster < 1:
        raise ValueError(f"rays per cluster must be >= 1, got {rays_per_cluster}")
    if angle_spread < 0:
        raise ValueError(f"angle spread must be >= 0, got {angle_spread}")
    if mean_gain_power <= 0:
        raise ValueError(f"mean gain power must be positive, got {mean_gain_power}")
    rng = _as_rng(rng)
    lap_scale = angle_spread / math.sqrt(2.0)
    paths = []
    for _ in range(n_clusters):
        center_aod = _uniform_direction(rng)
        center_aoa = _uniform_direction(rng)
        for _ in range(rays_per_cluster):
            gain = _complex_normal(rng, mean_gain_power)
            if lap_scale > 0:
                off = rng.laplace(0.0, lap_scale, size=4)
            else:
                off = np.zeros(4)
            paths.append(
                PathComponent(
                    gain=gain,
                    aod=Direction(center_aod.azimuth + off[0], center_aod.elevation + off[1]),
                    aoa=Direction(center_aoa.azimuth + off[2], center_aoa.elevation + off[3]),
                )
            )
    h = assemble_channel(paths, bs_geom, ms_geom)
    return ChannelMatrix(h=h, paths=tuple(paths), bs_geom=bs_geom, ms_geom=ms_geom)


def single_path_ensemble(
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
    n_users: int,
    mean_gain_power: float = 1.0,
    rng: np.random.Generator | int | None = None,
) -> ChannelEnsemble:
    """Draw independent single-path channels for ``n_users`` users."""
    rng = _as_rng(rng)
    return ChannelEnsemble(
        users=tuple(
            draw_single_path(bs_geom, ms_geom, mean_gain_power, rng)
            for _ in range(n_users)
        )
    )


def clustered_ensemble(
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
    n_users: int,
    n_clusters: int,
    rays_per_cluster: int,
    angle_spread: float,
    mean_gain_power: float = 1.0,
    rng: np.random.Generator | int | None = None,
) -> ChannelEnsemble:
    """Draw independent clustered channels for ``n_users`` users."""
    rng = _as_rng(rng)
    return ChannelEnsemble(
        users=tuple(
            draw_clustered(
                bs_geom, ms_geom, n_clusters, rays_per_cluster, angle_spread,
                mean_gain_power, rng,
            )
            for _ in range(n_users)
        )
    )


PATH_CSV_HEADER = (
    "user", "path", "gain_re", "gain_im",
    "aod_azimuth", "aod_elevation", "aoa_azimuth", "aoa_elevation",
)


def dump_paths_csv(ensemble: ChannelEnsemble, path: str) -> None:
    """Write every path of every user to a CSV file, one row per path."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PATH_CSV_HEADER)
        for u, ch in enumerate(ensemble.users):
            for p_idx, p in enumerate(ch.paths):
                writer.writerow(
                    [
                        u, p_idx, repr(p.gain.real), repr(p.gain.imag),
                        repr(p.aod.azimuth), repr(p.aod.elevation),
                        repr(p.aoa.azimuth), repr(p.aoa.elevation),
                    ]
                )
