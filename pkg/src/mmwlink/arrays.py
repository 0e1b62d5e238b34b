"""Antenna array geometries and array response (steering) vectors.

Angle convention used throughout the package: a direction is an
(azimuth, elevation) pair in radians. Azimuth is measured in the horizontal
plane from the +x axis toward +y and lives on [0, 2*pi); elevation is
measured from the horizontal plane toward +z and lives on [-pi/2, pi/2].
The matching unit propagation vector is

    k = (cos(el) * cos(az), cos(el) * sin(az), sin(el)).

Element positions are expressed in carrier wavelengths, so element i of an
N-element array responds to a plane wave from (az, el) with
exp(+1j * 2 * pi * <k, p_i>), and response vectors carry a 1/sqrt(N)
normalization (unit Euclidean norm, constant per-entry modulus).

Uniform linear arrays extend along the x axis. Uniform planar arrays fill
the x-z plane (columns step along x, rows step along z), so a one-row UPA
is exactly a ULA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def _canonical_angles(azimuth: float, elevation: float) -> tuple[float, float]:
    """Wrap an angle pair onto azimuth [0, 2*pi), elevation [-pi/2, pi/2].

    Elevations beyond +-pi/2 are folded over the pole (el -> pi - el with a
    half-turn in azimuth), which leaves the propagation vector unchanged.
    """
    el = math.remainder(elevation, TWO_PI)
    if el > math.pi / 2:
        el = math.pi - el
        azimuth = azimuth + math.pi
    elif el < -math.pi / 2:
        el = -math.pi - el
        azimuth = azimuth + math.pi
    az = azimuth % TWO_PI
    return az, el


@dataclass(frozen=True)
class Direction:
    """A propagation direction, canonicalized on construction."""

    azimuth: float
    elevation: float

    def __post_init__(self) -> None:
        az = float(self.azimuth)
        el = float(self.elevation)
        if not (math.isfinite(az) and math.isfinite(el)):
            raise ValueError("direction angles must be finite")
        az, el = _canonical_angles(az, el)
        object.__setattr__(self, "azimuth", az)
        object.__setattr__(self, "elevation", el)

    def wave_vector(self) -> np.ndarray:
        """Unit propagation vector (3,) for this direction."""
        ce = math.cos(self.elevation)
        return np.array(
            [
                ce * math.cos(self.azimuth),
                ce * math.sin(self.azimuth),
                math.sin(self.elevation),
            ]
        )


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element positions in carrier wavelengths, one (x, y, z) row each."""

    positions: np.ndarray

    def __post_init__(self) -> None:
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError("positions must be a non-empty (count, 3) array")
        if not np.all(np.isfinite(pos)):
            raise ValueError("element positions must be finite")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])


def ula_geometry(n: int, spacing: float = 0.5) -> ArrayGeometry:
    """Uniform linear array of n elements along x, spacing in wavelengths."""
    if n < 1:
        raise ValueError(f"element count must be >= 1, got {n}")
    if spacing <= 0:
        raise ValueError(f"element spacing must be positive, got {spacing}")
    pos = np.zeros((n, 3))
    pos[:, 0] = spacing * np.arange(n)
    return ArrayGeometry(pos)


def upa_geometry(rows: int, cols: int, spacing: float = 0.5) -> ArrayGeometry:
    """Uniform planar array in the x-z plane.

    Element (r, c) sits at (c * spacing, 0, r * spacing); elements are
    ordered row-major, so ``upa_geometry(1, n, d)`` equals
    ``ula_geometry(n, d)``.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid must be at least 1x1, got {rows}x{cols}")
    if spacing <= 0:
        raise ValueError(f"element spacing must be positive, got {spacing}")
    cc, rr = np.meshgrid(np.arange(cols), np.arange(rows))
    pos = np.zeros((rows * cols, 3))
    pos[:, 0] = spacing * cc.ravel()
    pos[:, 2] = spacing * rr.ravel()
    return ArrayGeometry(pos)


def steering_vector(geom: ArrayGeometry, direction: Direction) -> np.ndarray:
    """Unit-norm array response vector for one direction.

    Args:
        geom: array whose response is evaluated.
        direction: arrival/departure direction.

    Returns:
        Complex (N,) vector with constant entry modulus 1/sqrt(N).
    """
    phases = geom.positions @ direction.wave_vector()
    return np.exp(1j * TWO_PI * phases) / math.sqrt(geom.count)


def steering_vectors(
    geom: ArrayGeometry,
    azimuths: np.ndarray,
    elevations: np.ndarray,
) -> np.ndarray:
    """Vectorized array responses for flat angle arrays.

    ``azimuths`` and ``elevations`` are broadcast against each other; the
    result has shape (N, K) where K is the broadcast size. Used on the hot
    paths (codebook construction, batched rate formulas).
    """
    az, el = np.broadcast_arrays(np.atleast_1d(azimuths), np.atleast_1d(elevations))
    ce = np.cos(el)
    k = np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=0)
    phases = geom.positions @ k.reshape(3, -1)
    return np.exp(1j * TWO_PI * phases) / math.sqrt(geom.count)


def steering_matrix(geom: ArrayGeometry, directions: Sequence[Direction]) -> np.ndarray:
    """Stack steering vectors for several directions into an (N, U) matrix."""
    if len(directions) == 0:
        raise ValueError("need at least one direction")
    az = np.array([d.azimuth for d in directions])
    el = np.array([d.elevation for d in directions])
    return steering_vectors(geom, az, el)
