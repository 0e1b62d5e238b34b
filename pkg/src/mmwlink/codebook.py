"""Beamsteering codebooks with optional phase-shifter quantization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, Direction, steering_vectors

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class Codebook:
    """Column-stacked beam vectors plus the angle grid that produced them."""

    vectors: np.ndarray
    grid: tuple[Direction, ...]
    phase_bits: int
    geom: ArrayGeometry

    def __post_init__(self) -> None:
        vecs = np.asarray(self.vectors, dtype=complex)
        n = self.geom.count
        if vecs.ndim != 2 or vecs.shape[0] != n or vecs.shape[1] != len(self.grid):
            raise ValueError(
                f"vectors must be ({n}, {len(self.grid)}), got {vecs.shape}"
            )
        target = 1.0 / math.sqrt(n)
        if np.max(np.abs(np.abs(vecs) - target)) > 1e-12:
            raise ValueError("codebook entries must have constant modulus 1/sqrt(N)")
        vecs = vecs.copy()
        vecs.flags.writeable = False
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "grid", tuple(self.grid))

    @property
    def size(self) -> int:
        return int(self.vectors.shape[1])


def quantize_phases(v: np.ndarray, bits: int) -> np.ndarray:
    """Project a complex vector onto constant-modulus quantized phases.

    Every entry is replaced by exp(1j * phi_hat) / sqrt(N) where phi_hat is
    the entry's phase snapped to the 2**bits-point uniform grid
    {2*pi*k / 2**bits}. Exact midpoints round toward the lower grid point.
    ``bits = 0`` keeps the exact phases (constant-modulus projection only).

    Raises:
        ValueError: if bits is negative or v is not a 1-D vector.
    """
    if bits < 0:
        raise ValueError(f"phase bits must be >= 0, got {bits}")
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("expected a non-empty 1-D complex vector")
    phases = np.angle(v)
    if bits > 0:
        levels = 1 << bits
        step = TWO_PI / levels
        idx = np.ceil(phases / step - 0.5)
        phases = (idx % levels) * step
    return np.exp(1j * phases) / math.sqrt(v.size)


def build_beamsteering_codebook(
    geom: ArrayGeometry,
    n_az: int,
    n_el: int,
    phase_bits: int = 0,
) -> Codebook:
    """Steering vectors on a product angle grid, optionally phase-quantized.

    Azimuths: n_az points 2*pi*k / n_az on [0, 2*pi). Elevations: n_el
    cell-centered points -pi/2 + (j + 0.5) * pi / n_el on [-pi/2, pi/2]
    (so n_el = 1 is broadside and the degenerate poles are never hit).
    Grid order is azimuth-major: entry i*n_el + j pairs azimuth i with
    elevation j.
    """
    if n_az < 1 or n_el < 1:
        raise ValueError(f"grid must be at least 1x1, got {n_az}x{n_el}")
    if phase_bits < 0:
        raise ValueError(f"phase bits must be >= 0, got {phase_bits}")
    azimuths = TWO_PI * np.arange(n_az) / n_az
    elevations = -math.pi / 2 + (np.arange(n_el) + 0.5) * math.pi / n_el
    grid = tuple(
        Direction(az, el) for az in azimuths for el in elevations
    )
    az_flat = np.array([d.azimuth for d in grid])
    el_flat = np.array([d.elevation for d in grid])
    vecs = steering_vectors(geom, az_flat, el_flat)
    if phase_bits > 0:
        vecs = np.column_stack(
            [quantize_phases(vecs[:, i], phase_bits) for i in range(vecs.shape[1])]
        )
    return Codebook(vectors=vecs, grid=grid, phase_bits=phase_bits, geom=geom)


CODEBOOK_CSV_HEADER = ("index", "azimuth", "elevation")


def export_csv(codebook: Codebook, path: str) -> None:
    """Write the codebook to CSV: grid angles plus interleaved Re/Im entries."""
    n = codebook.geom.count
    header = list(CODEBOOK_CSV_HEADER)
    for i in range(n):
        header += [f"re_{i}", f"im_{i}"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx in range(codebook.size):
            d = codebook.grid[idx]
            col = codebook.vectors[:, idx]
            row = [idx, repr(d.azimuth), repr(d.elevation)]
            for i in range(n):
                row += [repr(float(col[i].real)), repr(float(col[i].imag))]
            writer.writerow(row)
