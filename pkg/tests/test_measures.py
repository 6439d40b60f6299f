import numpy as np
import pytest
from hypothesis import given, strategies as st

from stoch_euler.grid import AREA, GridField, mesh
from stoch_euler.measures import (CurveSpec, ParticleMeasure, TestFamily, blob_grid, fourier_coefficient,
                                  heat_kernel, load_particles, mass, mollify, pair, sample_vortex_sheet,
                                  save_particles, sobolev_norm, total_variation, weakstar_distance)


def circle(n=256, m=1.0):
    return sample_vortex_sheet(CurveSpec("circle", center=(np.pi, np.pi), radius=1.0), n, m)


def test_dirac_fourier_coefficient():
    mu = ParticleMeasure([[1.0, 2.0]], [3.0])
    assert fourier_coefficient(mu, (2, -1)) == pytest.approx(3.0 * np.exp(-1j * 0.0) / AREA)
    assert fourier_coefficient(mu, (1, 0)) == pytest.approx(3.0 * np.exp(-1j) / AREA)


def test_total_variation_merges_coincident_atoms():
    mu = ParticleMeasure([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]], [1.0, -1.0, 0.5])
    assert total_variation(mu) == pytest.approx(0.5)


def test_sheet_mass_and_atoms():
    mu = circle(100, 2.0)
    assert len(mu) == 100
    assert mass(mu) == pytest.approx(2.0)
    r = np.hypot(mu.positions[:, 0] - np.pi, mu.positions[:, 1] - np.pi)
    np.testing.assert_allclose(r, 1.0)


def test_sheet_rejects_bad_curves():
    with pytest.raises(ValueError):
        sample_vortex_sheet(CurveSpec("circle", radius=4.0), 10, 1.0)
    with pytest.raises(ValueError):
        sample_vortex_sheet(CurveSpec("spiral"), 10, 1.0)


def test_mollify_mass_and_sign():
    g = mollify(circle(), 0.1, 64)
    assert g.integral() == pytest.approx(1.0, abs=1e-13)
    assert g.values.min() >= 0.0


def test_mollify_spectrum_matches_heat_kernel_factor():
    mu = ParticleMeasure([[1.3, 4.0]], [1.0])
    eps = 0.3
    g = mollify(mu, eps, 64)
    for k in ((1, 0), (2, 3), (5, -4)):
        expect = np.exp(-0.5 * eps**2 * (k[0] ** 2 + k[1] ** 2)) * fourier_coefficient(mu, k)
        assert abs(fourier_coefficient(g, k) - expect) <= 1e-8


def test_mollify_matches_series_heat_kernel():
    eps = 0.4
    g = mollify(ParticleMeasure([[0.0, 0.0]], [1.0]), eps, 64)
    x1, x2 = mesh(64)
    np.testing.assert_allclose(g.values, heat_kernel(x1, x2, eps), atol=1e-8)


def test_mollify_requires_resolution():
    with pytest.raises(ValueError, match="too coarse"):
        mollify(circle(), 0.01, 64)


def test_weakstar_is_zero_on_self_and_detects_shift():
    mu = circle()
    assert weakstar_distance(mu, mu) == 0.0
    moved = mu.with_positions(mu.positions + [0.1, 0.0])
    assert weakstar_distance(mu, moved) > 1e-3


def test_weakstar_particles_vs_their_grid_density():
    # trapezoid pairings are exact for the family modes, so only the smoothing shows
    mu = blob_grid(16, 1.0)
    g = mollify(mu, 0.05, 128)
    assert weakstar_distance(mu, g) < 1e-3


def test_sobolev_norms():
    x1, x2 = mesh(32)
    g = GridField(np.cos(2 * x1))
    # |fhat| = 1/2 at k = (+-2, 0): norm^2 = (2pi)^2 * 2 * (1/4) * 5^s
    assert sobolev_norm(g, 0.0, 4) == pytest.approx(np.sqrt(AREA * 0.5))
    assert sobolev_norm(g, -1.0, 4) == pytest.approx(np.sqrt(AREA * 0.5 / 5))
    assert sobolev_norm(g, -1.0, 1) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        sobolev_norm(g, 1.0, 4)


def test_test_family_shape():
    fam = TestFamily.default(40)
    assert len(fam) == 40
    assert fam.kinds[0] == "const"
    assert np.all(np.diff(fam.lipschitz) >= 0)


def test_particle_file_roundtrip(tmp_path):
    mu = circle(17, 0.5)
    save_particles(mu, tmp_path / "p.jsonl", note="x")
    again, header = load_particles(tmp_path / "p.jsonl")
    assert header["note"] == "x"
    assert np.array_equal(again.positions, mu.positions)
    assert np.array_equal(again.weights, mu.weights)


def test_particle_file_rejects_tv_above_bound(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"type": "header", "M": 0.5, "n": 1}\n{"x1": 0, "x2": 0, "w": 1.0}\n')
    with pytest.raises(ValueError, match="total variation"):
        load_particles(p)


@given(st.lists(st.tuples(st.floats(0, 6.28), st.floats(0, 6.28), st.floats(0, 1)), min_size=1, max_size=20))
def test_pair_with_constant_is_mass(atoms):
    a = np.array(atoms)
    mu = ParticleMeasure(a[:, :2], a[:, 2])
    assert pair(mu, lambda x, y: np.ones_like(x)) == pytest.approx(mu.mass, abs=1e-12)
