"""Codebook construction and phase quantization tests."""

import csv
import math

import numpy as np
import pytest

from mmwlink.arrays import Direction, steering_vector, ula_geometry, upa_geometry
from mmwlink.codebook import Codebook, build_beamsteering_codebook, export_csv, quantize_phases

TWO_PI = 2.0 * math.pi


def phase_distance_to_grid(vec, bits):
    """Largest circular distance from any entry phase to the quantizer grid."""
    step = TWO_PI / (1 << bits)
    frac = np.angle(vec) / step
    return float(np.max(np.abs(frac - np.round(frac)))) * step


def test_default_grid_sizes():
    bs = build_beamsteering_codebook(upa_geometry(8, 8), 16, 8)
    ms = build_beamsteering_codebook(upa_geometry(4, 4), 8, 4)
    assert bs.size == 128
    assert ms.size == 32
    assert bs.vectors.shape == (64, 128)
    assert ms.vectors.shape == (16, 32)


def test_grid_layout_azimuth_major():
    cb = build_beamsteering_codebook(ula_geometry(4), 4, 2)
    assert cb.size == 8
    azs = sorted({d.azimuth for d in cb.grid})
    els = sorted({d.elevation for d in cb.grid})
    assert np.allclose(azs, [0.0, math.pi / 2, math.pi, 3 * math.pi / 2], atol=1e-12)
    # cell-centered elevations never hit the degenerate poles
    assert np.allclose(els, [-math.pi / 4, math.pi / 4], atol=1e-12)
    # entry i*n_el + j pairs azimuth i with elevation j
    assert cb.grid[3].azimuth == pytest.approx(math.pi / 2)
    assert cb.grid[3].elevation == pytest.approx(math.pi / 4)


def test_single_elevation_row_is_broadside():
    cb = build_beamsteering_codebook(ula_geometry(8), 6, 1)
    assert all(d.elevation == pytest.approx(0.0) for d in cb.grid)


def test_unquantized_vectors_equal_steering():
    geom = upa_geometry(2, 4)
    cb = build_beamsteering_codebook(geom, 5, 3, phase_bits=0)
    for i, d in enumerate(cb.grid):
        assert np.allclose(cb.vectors[:, i], steering_vector(geom, d), atol=0.0)


def test_quantized_phases_live_on_grid():
    geom = upa_geometry(4, 4)
    for bits in (1, 3, 6):
        cb = build_beamsteering_codebook(geom, 8, 4, phase_bits=bits)
        assert cb.phase_bits == bits
        for i in range(cb.size):
            assert phase_distance_to_grid(cb.vectors[:, i], bits) <= 1e-9
            assert abs(np.linalg.norm(cb.vectors[:, i]) - 1.0) <= 1e-12


def test_quantize_two_entry_frozen_case():
    # phases 0.1 and 3.0 with one bit snap to 0 and pi
    v = np.exp(1j * np.array([0.1, 3.0])) / math.sqrt(2)
    q = quantize_phases(v, 1)
    assert np.allclose(np.angle(q), [0.0, math.pi], atol=1e-12)


def test_quantize_zero_bits_keeps_phases():
    rng = np.random.default_rng(6)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    q = quantize_phases(v, 0)
    assert np.allclose(np.angle(q), np.angle(v), atol=0.0)
    assert np.allclose(np.abs(q), 1.0 / 4.0, atol=1e-15)


def test_quantize_error_half_width():
    rng = np.random.default_rng(17)
    bits = 10
    for _ in range(50):
        v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        q = quantize_phases(v, bits)
        diff = np.angle(q * np.conj(v / np.abs(v)))
        assert np.max(np.abs(diff)) <= math.pi / 2**bits + 1e-12


def test_quantize_idempotent():
    rng = np.random.default_rng(29)
    for bits in (1, 2, 5):
        v = rng.standard_normal(24) + 1j * rng.standard_normal(24)
        once = quantize_phases(v, bits)
        twice = quantize_phases(once, bits)
        assert np.array_equal(once, twice)


def test_quantize_midpoint_rounds_down():
    # exact midpoint between grid points 0 and pi/2 at 2 bits
    v = np.array([np.exp(1j * math.pi / 4)])
    q = quantize_phases(v, 2)
    assert np.angle(q[0]) == pytest.approx(0.0, abs=1e-15)


def test_euclidean_error_non_increasing_in_bits():
    # nested phase grids: refining the quantizer never moves an entry away
    rng = np.random.default_rng(41)
    geom = upa_geometry(4, 4)
    for _ in range(25):
        d = Direction(rng.uniform(0, TWO_PI), rng.uniform(-math.pi / 2, math.pi / 2))
        a = steering_vector(geom, d)
        errors = [np.linalg.norm(quantize_phases(a, b) - a) for b in range(1, 9)]
        for coarse, fine in zip(errors, errors[1:]):
            assert fine <= coarse + 1e-12
        assert errors[-1] <= math.pi / 2**8  # small residual at 8 bits


def test_quantize_validation():
    with pytest.raises(ValueError):
        quantize_phases(np.ones(4, complex), -1)
    with pytest.raises(ValueError):
        quantize_phases(np.ones((2, 2), complex), 2)
    with pytest.raises(ValueError):
        build_beamsteering_codebook(ula_geometry(4), 0, 1)


def test_codebook_rejects_wrong_modulus():
    geom = ula_geometry(4)
    bad = np.ones((4, 2), complex)  # modulus 1, not 1/2
    with pytest.raises(ValueError):
        Codebook(vectors=bad, grid=(Direction(0, 0), Direction(1, 0)), phase_bits=0, geom=geom)


def test_ula_dft_correlation_pattern():
    # 8 azimuth beams on ULA(8, 0.5) against the closed-form Dirichlet kernel
    geom = ula_geometry(8, 0.5)
    cb = build_beamsteering_codebook(geom, 8, 1)
    n = geom.count

    def dirichlet(delta_cos):
        # |sum_m exp(j 2 pi 0.5 m delta)| / n
        x = math.pi * 0.5 * delta_cos
        if abs(math.sin(x)) < 1e-15:
            return 1.0
        return abs(math.sin(n * x) / (n * math.sin(x)))

    for i in range(cb.size):
        for j in range(cb.size):
            di, dj = cb.grid[i], cb.grid[j]
            expect = dirichlet(math.cos(dj.azimuth) - math.cos(di.azimuth))
            got = abs(np.vdot(cb.vectors[:, i], cb.vectors[:, j]))
            assert got == pytest.approx(expect, abs=1e-10)


def test_export_csv(tmp_path):
    geom = ula_geometry(3)
    cb = build_beamsteering_codebook(geom, 4, 1, phase_bits=2)
    out = tmp_path / "codebook.csv"
    export_csv(cb, str(out))
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["index", "azimuth", "elevation"]
    assert rows[0][3:] == ["re_0", "im_0", "re_1", "im_1", "re_2", "im_2"]
    assert len(rows) == 1 + cb.size
    # repr round-trip of the first vector entry
    assert float(rows[1][3]) == cb.vectors[0, 0].real
    assert float(rows[1][4]) == cb.vectors[0, 0].imag
