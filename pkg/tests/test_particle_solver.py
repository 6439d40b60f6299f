import numpy as np
import pytest
from hypothesis import given, strategies as st

from stoch_euler.measures import CurveSpec, ParticleMeasure, sample_vortex_sheet, weakstar_distance
from stoch_euler.nonlinear import TestFunction
from stoch_euler.particle_solver import (BlobKernel, SimState, StepPlan, StepRejected, cached_table, drift,
                                         drift_all, integrate, rotation_period, step, weak_form_residual)
from stoch_euler.diagnostics import record
from stoch_euler.rng import brownian_path, coarsen

PLAN = StepPlan(1e-3, noise=False)


def sheet(n, m=1.0, kind="circle"):
    if kind == "circle":
        return sample_vortex_sheet(CurveSpec("circle", center=(np.pi, np.pi), radius=1.0), n, m)
    return sample_vortex_sheet(CurveSpec("segment", start=(1.5, 2.0), end=(3.5, 2.8)), n, m)


def test_single_particle_has_no_drift():
    mu = ParticleMeasure([[1.0, 2.0]], [1.0])
    np.testing.assert_array_equal(drift(mu, 0, PLAN), [0.0, 0.0])
    np.testing.assert_array_equal(drift_all(mu, PLAN.kernel), [[0.0, 0.0]])


@pytest.mark.parametrize("sep", [(0.5, 0.0), (0.0, 0.37), (0.3, 0.3), (0.41, -0.41)])
def test_two_equal_vortices_corotate(sep):
    # the periodic kernel is exactly perpendicular along the lattice reflection axes
    mu = ParticleMeasure([[2.9, 3.1], np.add([2.9, 3.1], sep)], [0.5, 0.5])
    d0, d1 = drift(mu, 0, PLAN), drift(mu, 1, PLAN)
    assert np.hypot(*d0) == pytest.approx(np.hypot(*d1), rel=1e-12)
    assert abs(d0 @ sep) <= 1e-10 and abs(d1 @ sep) <= 1e-10
    np.testing.assert_allclose(drift_all(mu, PLAN.kernel), [d0, d1], atol=1e-15)


def test_rotation_period_self_convergence():
    # separation 0.5, weights 0.5; reference at dt/16
    coarse = rotation_period(0.5, 0.5, StepPlan(4e-3, noise=False))
    fine = rotation_period(0.5, 0.5, StepPlan(2.5e-4, noise=False))
    assert abs(coarse - fine) / fine <= 0.01


def test_blob_cap_bounds_near_field():
    k = BlobKernel(cached_table(1024, 32), 2 * 2 * np.pi / 1024)
    close = np.array([[1e-4, 0.0], [0.0, 3e-3]])
    assert np.all(np.hypot(*k(close).T) <= k.cap + 1e-15)
    with pytest.raises(ValueError):
        StepPlan(1e-3, blob_radius=1e-4)


@given(st.integers(2, 40), st.integers(0, 10_000))
def test_total_momentum_vanishes(n, seed):
    g = np.random.default_rng(seed)
    mu = ParticleMeasure(g.uniform(0, 2 * np.pi, (n, 2)), g.uniform(0, 1, n))
    v = drift_all(mu, PLAN.kernel)
    assert np.max(np.abs(mu.weights @ v)) <= 1e-13 * max(1.0, np.max(np.abs(v)))


def test_zero_weights_noise_off_only_time_moves():
    mu = ParticleMeasure([[1.0, 1.0], [2.0, 3.0]], [0.0, 0.0])
    s = step(SimState.initial(mu, None), PLAN, None)
    assert np.array_equal(s.particles.positions, mu.positions)
    assert s.t == pytest.approx(1e-3) and s.step_index == 1


def test_coincident_passive_atoms_move_identically(basis):
    mu = ParticleMeasure([[1.0, 1.0], [1.0, 1.0], [4.0, 0.5]], [0.0, 0.0, 0.0])
    s = SimState.initial(mu, basis, seed=3)
    for _ in range(5):
        s = step(s, StepPlan(1e-2), basis)
    p = s.particles.positions
    assert np.array_equal(p[0], p[1])
    assert not np.array_equal(p[0], mu.positions[0])


def test_mass_and_weights_exact_along_run(basis):
    mu = sheet(64)
    traj = integrate(SimState.initial(mu, basis, seed=1), StepPlan(1e-3), basis, 200, every=20)
    for s in traj.states:
        assert np.array_equal(s.particles.weights, mu.weights)
        assert s.particles.mass == mu.mass


def test_T_zero_trajectory():
    mu = sheet(8)
    traj = integrate(SimState.initial(mu, None), PLAN, None, 0, on_output=lambda s: record(s, mu))
    assert len(traj) == 1 and len(traj.records) == 1
    assert traj.records[0].weakstar_dist_to_init == 0.0


def test_huge_step_rejected(basis):
    mu = ParticleMeasure([[1.0, 1.0]], [0.0])
    with pytest.raises(StepRejected) as info:
        step(SimState.initial(mu, basis), StepPlan(5.0), basis)
    assert info.value.step_index == 0


def test_determinism_bitwise(basis):
    mu = sheet(32)

    def run():
        return integrate(SimState.initial(mu, basis, seed=9, member=2), StepPlan(2e-3), basis, 50).states[-1]

    a, b = run(), run()
    assert np.array_equal(a.particles.positions, b.particles.positions)
    assert np.array_equal(a.brownian_path, b.brownian_path)


def test_permutation_equivariance(basis):
    mu = sheet(48, kind="segment")
    perm = np.random.default_rng(0).permutation(48)
    nu = ParticleMeasure(mu.positions[perm], mu.weights[perm])
    a = integrate(SimState.initial(mu, basis, seed=4), StepPlan(2e-3), basis, 30).states[-1]
    b = integrate(SimState.initial(nu, basis, seed=4), StepPlan(2e-3), basis, 30).states[-1]
    np.testing.assert_allclose(a.particles.positions[perm], b.particles.positions, atol=1e-12)
    ra, rb = record(a, mu), record(b, nu)
    np.testing.assert_allclose(ra.row(), rb.row(), atol=1e-12)


def test_strong_order(basis):
    # 8 coupled paths, 32 weak vortices, dt from T/256 down to T/2048; measured order 0.43
    mu = sheet(32, 0.1)
    T, nf = 0.5, 2048
    err = {f: [] for f in (8, 4, 2, 1)}
    for m in range(8):
        fine = brownian_path(basis.size, T / nf, nf, 0, m)
        sol = {}
        for f in (16, 8, 4, 2, 1):
            inc = coarsen(fine, f)
            tr = integrate(SimState.initial(mu, basis), StepPlan(T / nf * f), basis, len(inc),
                           every=len(inc), increments=inc)
            sol[f] = tr.states[-1].particles.positions
        for f in err:
            d = (sol[2 * f] - sol[f] + np.pi) % (2 * np.pi) - np.pi
            err[f].append(np.mean(np.sum(d**2, axis=1)))
    e = np.sqrt([np.mean(err[f]) for f in (8, 4, 2, 1)])
    order = np.polyfit(np.log2([8, 4, 2, 1]), np.log2(e), 1)[0]
    assert order >= 0.4


def test_noise_off_sheet_self_convergence():
    mu = sheet(128)
    out = []
    for dt in (1e-3, 1.25e-4):
        steps = int(round(1.0 / dt))
        out.append(integrate(SimState.initial(mu, None), StepPlan(dt, noise=False), None, steps,
                             every=steps).states[-1].particles)
    assert weakstar_distance(out[0], out[1]) <= 1e-3


def test_noise_only_flow_preserves_uniform_density(basis):
    side = 32
    g = (np.arange(side) + 0.5) * 2 * np.pi / side
    X, Y = np.meshgrid(g, g, indexing="ij")
    mu = ParticleMeasure(np.stack([X.ravel(), Y.ravel()], 1), np.zeros(side * side))
    traj = integrate(SimState.initial(mu, basis, seed=5), StepPlan(1e-3), basis, 1000, every=1000)
    p = traj.states[-1].particles.positions
    counts, _, _ = np.histogram2d(p[:, 0], p[:, 1], bins=4, range=[[0, 2 * np.pi]] * 2)
    expect = side * side / 16
    se = np.sqrt(expect * (1 - 1 / 16))
    assert np.max(np.abs(counts - expect)) <= 3 * se


class TestWeakForm:
    def test_constant_test_function_residual_exactly_zero(self, basis):
        mu = sheet(16)
        tr = integrate(SimState.initial(mu, basis, seed=2), StepPlan(1e-3), basis, 20)
        r = weak_form_residual(tr, TestFunction.constant(1.0), basis, StepPlan(1e-3).kernel)
        assert np.all(r == 0.0)

    def test_two_atoms_noise_off_dyadic(self):
        mu = ParticleMeasure([[2.9, 3.1], [3.4, 3.3]], [0.5, 0.3])
        phi = TestFunction.trig((1, 1), "sin")
        res = []
        for dt in (4e-3, 2e-3, 1e-3):
            plan = StepPlan(dt, noise=False)
            tr = integrate(SimState.initial(mu, None), plan, None, int(round(0.2 / dt)))
            res.append(abs(weak_form_residual(tr, phi, None, plan.kernel)[-1]))
        for a, b in zip(res, res[1:]):
            assert 0.35 <= b / a <= 0.65

    def test_ensemble_mean_residual(self, basis):
        mu = sheet(8, kind="segment")
        phi = TestFunction.trig((1, 1), "sin")
        dt = 2e-3
        plan = StepPlan(dt)
        r = []
        for m in range(64):
            tr = integrate(SimState.initial(mu, basis, seed=11, member=m), plan, basis, int(round(0.5 / dt)))
            r.append(weak_form_residual(tr, phi, basis, plan.kernel)[-1])
        r = np.array(r)
        assert abs(r.mean()) <= 2 * r.std(ddof=1) / 8 + dt
