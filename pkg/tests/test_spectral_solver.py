import numpy as np
import pytest

from stoch_euler.grid import AREA, GridField, mesh
from stoch_euler.measures import blob_grid, mollify
from stoch_euler.noise_model import make_basis
from stoch_euler.rng import brownian_increments
from stoch_euler.spectral_solver import (CFLError, SpectralState, energy, energy_balance_residual,
                                         energy_terms, enstrophy, rhs_drift, step_ito)


def smooth_state(n=32):
    x1, x2 = mesh(n)
    return SpectralState.from_field(GridField(1.0 + np.cos(x1) * np.sin(2 * x2) + 0.5 * np.sin(x1 - x2)
                                              + 0.3 * np.cos(3 * x1)))


def random_state(n, seed=0):
    g = np.random.default_rng(seed)
    return SpectralState.from_field(GridField(g.standard_normal((n, n))))


def test_shear_mode_is_steady_without_noise():
    x1, _ = mesh(32)
    s = SpectralState.from_field(GridField(np.cos(x1)))
    np.testing.assert_allclose(rhs_drift(s, None).values, 0.0, atol=1e-14)
    nxt = step_ito(s, 1e-2, None, None)
    assert np.max(np.abs(nxt.coeffs - s.coeffs)) <= 1e-12


def test_constant_field_has_zero_drift(basis):
    s = SpectralState.from_field(GridField(np.full((32, 32), 3.0)))
    np.testing.assert_allclose(rhs_drift(s, basis).values, 0.0, atol=1e-14)
    nxt = step_ito(s, 1e-2, np.zeros(basis.size), basis)
    assert np.array_equal(nxt.coeffs, s.coeffs)


def test_random_drift_is_mean_free(basis):
    d = rhs_drift(random_state(32), basis)
    assert abs(d.mean()) <= 1e-12


def test_mean_mode_bitwise_and_mask(basis):
    s = random_state(32, 1)
    for i in range(10):
        n = step_ito(s, 1e-3, brownian_increments(basis.size, 1e-3, 0, 0, i), basis)
        assert n.coeffs[0, 0] == s.coeffs[0, 0]
        s = n
    from stoch_euler.grid import dealias_mask
    assert np.all(s.coeffs[~dealias_mask(32)] == 0)


def test_reality_of_state(basis):
    s = random_state(32, 2)
    s = step_ito(s, 1e-3, brownian_increments(basis.size, 1e-3, 0, 0, 0), basis)
    imag = np.fft.ifft2(s.coeffs).imag * 32 * 32
    assert np.max(np.abs(imag)) <= 1e-12 * np.max(np.abs(s.xi.values))


def test_cfl_violation_aborts():
    with pytest.raises(CFLError, match="CFL"):
        step_ito(smooth_state(), 5.0, None, None)


def test_integrating_factor_damps_exactly():
    b = make_basis(4.0, 8)
    x1, _ = mesh(32)
    s = SpectralState.from_field(GridField(np.cos(3 * x1)))
    n = step_ito(s, 1e-2, np.zeros(b.size), b, advect=False)
    assert n.coeffs[3, 0].real == pytest.approx(0.5 * np.exp(-0.5 * b.c * 9 * 1e-2), rel=1e-13)


def test_energy_and_enstrophy_of_single_mode():
    x1, _ = mesh(32)
    s = SpectralState.from_field(GridField(np.cos(2 * x1)))
    assert enstrophy(s) == pytest.approx(AREA / 2)
    assert energy(s) == pytest.approx(AREA / 2 / 4)


def test_energy_terms_vanish_for_zero_field(basis):
    s = SpectralState.from_field(GridField(np.zeros((32, 32))))
    t = energy_terms(s, basis)
    assert t["nonlinear"] == 0 and t["dissipation"] == 0 and t["quadratic_variation"] == 0
    traj = [(s, np.zeros(basis.size), 1e-3), (s, None, 1e-3)]
    assert np.all(energy_balance_residual(traj, basis) == 0)


def test_nonlinear_energy_term_vanishes():
    t = energy_terms(smooth_state(), None)
    assert abs(t["nonlinear"]) <= 1e-13


def test_deterministic_energy_drift_quarters():
    drifts = []
    for dt in (4e-3, 2e-3):
        s = smooth_state()
        traj = []
        for _ in range(int(round(0.04 / dt))):
            nxt = step_ito(s, dt, None, None)
            traj.append((s, None, dt))
            s = nxt
        traj.append((s, None, dt))
        drifts.append(np.max(np.abs(energy_balance_residual(traj, None))))
    assert drifts[1] / drifts[0] == pytest.approx(0.25, abs=0.08)


def test_mollified_blob_enstrophy_short_time(basis):
    # smooth positive datum: expected enstrophy conserved to O(dt) over a short horizon
    xi0 = mollify(blob_grid(16, 1.0, 0.9), 0.3, 32)
    e0 = SpectralState.from_field(xi0)
    vals = []
    for m in range(16):
        s = e0
        for i in range(50):
            s = step_ito(s, 1e-3, brownian_increments(basis.size, 1e-3, 5, m, i), basis)
        vals.append(enstrophy(s))
    vals = np.array(vals)
    assert abs(vals.mean() - enstrophy(e0)) <= 3 * vals.std(ddof=1) / 4 + 0.05 * enstrophy(e0)
