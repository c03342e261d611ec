import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import A, make_beams
from troop import constants as C
from troop.dynamics import (AtomSample, LinearForceModel, SimParams, check_timestep, escape_fraction,
                            run_ensemble, step)
from troop.errors import NumericalError, ValidationError
from troop.force import TrapModel
from troop.trapchar import characterize

M = C.CS_MASS


def _exact_oscillator(r0, v0, kappa, alpha, t):
    """Closed-form damped oscillator state via the matrix exponential of the phase-space flow."""
    L = np.array([[0.0, 1.0], [-kappa / M, -alpha / M]])
    return expm(L * t) @ np.array([r0, v0])


@pytest.fixture(scope="module")
def nominal_char(nominal_model):
    return characterize(nominal_model)


def test_ballistic_motion_exact():
    params = SimParams(dt=1e-5, diffusion_factor=0.0)
    pipe = LinearForceModel(0.0, 0.0, 0.0)
    s = AtomSample([1e-4, -2e-4, 3e-4], [0.1, 0.2, -0.3])
    r0, v0 = s.r.copy(), s.v.copy()
    for _ in range(100):
        s = step(s, params, pipe, noise=np.random.default_rng(0).standard_normal(3))
    assert np.array_equal(s.v, v0)
    assert s.r == pytest.approx(r0 + v0 * 100 * 1e-5, rel=1e-12, abs=1e-18)


def test_damped_oscillator_convergence():
    kappa, alpha = 4.5e-20, 1500 * M
    pipe = LinearForceModel(kappa, alpha, 0.0)
    r0, v0 = 1e-4, 0.0
    local, glob = [], []
    for dt in (2e-5, 1e-5, 5e-6):
        params = SimParams(dt=dt)
        s = step(AtomSample([r0, 0, 0], [v0, 0, 0]), params, pipe)
        local.append(abs(s.r[0] - _exact_oscillator(r0, v0, kappa, alpha, dt)[0]))
        s = AtomSample([r0, 0, 0], [v0, 0, 0])
        n = int(round(5e-3 / dt))
        for _ in range(n):
            s = step(s, params, pipe)
        glob.append(abs(s.r[0] - _exact_oscillator(r0, v0, kappa, alpha, n * dt)[0]))
    # one step carries an O(dt^2) error, the accumulated error is O(dt)
    assert local[0] / local[1] == pytest.approx(4, rel=0.1)
    assert local[1] / local[2] == pytest.approx(4, rel=0.1)
    assert glob[0] / glob[1] == pytest.approx(2, rel=0.1)
    assert glob[-1] < 0.01 * r0


def test_ou_stationary_variance():
    kappa, alpha, D = 4.5e-20, 2000 * M, 1.2e-48
    params = SimParams(n_atoms=1000, dt=1e-5, n_steps=20000, seed=3, burn_in_fraction=0.5, init_radius=0.0)
    res = run_ensemble(params, LinearForceModel(kappa, alpha, D))
    assert res.stats.n_samples >= 1e7
    assert res.stats.radius_1_over_sqrt_e ** 2 == pytest.approx(np.full(3, D / (alpha * kappa)), rel=0.05)
    assert res.stats.temperature == pytest.approx(np.full(3, D / alpha / C.KB), rel=0.05)


def test_seed_determinism_and_partitioning(nominal_model):
    params = SimParams(n_atoms=12, n_steps=300, seed=7, record_stride=50)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a = run_ensemble(params, nominal_model, workers=1)
        b = run_ensemble(params, nominal_model, workers=1)
        c = run_ensemble(params, nominal_model, workers=3)
        d = run_ensemble(SimParams(n_atoms=12, n_steps=300, seed=8), nominal_model, workers=1)
    assert np.array_equal(a.r, b.r) and np.array_equal(a.v, b.v)
    assert np.array_equal(a.trajectory, b.trajectory)
    assert a.trajectory.shape == (12 * 6, 8)
    np.testing.assert_allclose(c.r, a.r, rtol=1e-9, atol=1e-15)
    assert not np.array_equal(d.r, a.r)


def test_dt_halving_changes_radii_little(nominal_model, nominal_char):
    _, D, _ = nominal_model.langevin_terms(np.zeros((1, 3)), np.zeros((1, 3)))
    pipe = LinearForceModel(nominal_char.stiffness, nominal_char.friction, D[0])
    radii = []
    for dt, n in ((2e-5, 20000), (1e-5, 40000)):
        params = SimParams(n_atoms=2000, dt=dt, n_steps=n, seed=11)
        radii.append(run_ensemble(params, pipe).stats.radius_1_over_sqrt_e)
    assert np.abs(radii[0] / radii[1] - 1).max() < 0.02


def test_escape_nominal_vs_same_helicity(nominal_model, same_model):
    params = SimParams(n_atoms=200, n_steps=5000, seed=1)
    assert escape_fraction(params, nominal_model, 1e-3, focus_distance=A) < 0.05
    assert escape_fraction(params, same_model, 1e-3, focus_distance=A) > 0.9
    with pytest.raises(ValidationError):
        escape_fraction(params, nominal_model, 2 * A, focus_distance=A)


def test_escape_grows_with_imbalance(nominal_model, gamma, cs):
    m = np.sqrt(1.2)
    imbalanced = TrapModel(make_beams(gamma, rabi_multipliers=[m, m, 1, 1, 1, 1]), cs)
    params = SimParams(n_atoms=400, n_steps=5000, seed=2)
    balanced = escape_fraction(params, nominal_model, 0.5e-3)
    assert escape_fraction(params, imbalanced, 0.5e-3) > balanced


def test_equipartition(nominal_model):
    params = SimParams(n_atoms=200, n_steps=6000, seed=4)
    T = run_ensemble(params, nominal_model).stats.temperature
    assert T.max() / T.min() < 1.1


@pytest.mark.slow
def test_frozen_populations_do_not_confine(frozen_model):
    params = SimParams(n_atoms=60, dt=6e-5, n_steps=100000, seed=5, burn_in_fraction=0.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        res = run_ensemble(params, frozen_model)
    # second-moment growth between the two halves of the run
    assert res.stats.stationary is False and any("drift" in str(w.message) for w in caught)
    out = (np.linalg.norm(res.r, axis=1) > 0.5 * A) | res.lost
    assert out.mean() > 0.2


def test_non_finite_state_aborts():
    class Broken:
        def langevin_terms(self, r, v, diffusion_factor=None):
            return np.full_like(r, np.nan), np.zeros(len(r)), np.ones(len(r), dtype=bool)

    with pytest.raises(NumericalError, match="non-finite"):
        run_ensemble(SimParams(n_atoms=3, n_steps=5), Broken())
    with pytest.raises(NumericalError):
        AtomSample([np.inf, 0, 0], [0, 0, 0])


def test_timestep_bound_and_params():
    check_timestep(SimParams(dt=2e-5), 1500.0)
    with pytest.raises(ValidationError, match="stability"):
        check_timestep(SimParams(dt=1e-3), 1500.0)
    for bad in (dict(n_atoms=0), dict(dt=0.0), dict(seed=-1), dict(burn_in_fraction=1.0), dict(mass=0.0)):
        with pytest.raises(ValidationError):
            SimParams(**bad)
