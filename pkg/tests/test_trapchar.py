import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import A, make_beams
from troop.errors import ValidationError
from troop.force import TrapModel
from troop.trapchar import (characterize, doppler_temperature, earnshaw_flux, friction, mu_extract, scan,
                            stiffness)


@pytest.fixture(scope="module")
def K_nominal(nominal_model):
    return stiffness(nominal_model)


def test_stiffness_ratio_and_symmetry(K_nominal):
    assert K_nominal[2, 2] / K_nominal[0, 0] == pytest.approx(2.0, rel=0.05)
    assert K_nominal[0, 0] == pytest.approx(K_nominal[1, 1], rel=0.01)
    assert np.abs(K_nominal - K_nominal.T).max() <= 1e-3 * np.abs(K_nominal).max()
    assert np.all(np.diag(K_nominal) > 0)


def test_frozen_trace_vanishes(frozen_model, K_nominal):
    K0 = stiffness(frozen_model)
    assert abs(np.trace(K0)) <= 1e-4 * np.trace(K_nominal)


def test_same_helicity_has_no_stiffness(same_model, K_nominal):
    K = stiffness(same_model)
    assert np.abs(np.diag(K)).max() < 0.05 * np.diag(K_nominal).min()


def test_mu_estimates_agree(nominal_model, K_nominal):
    mu_xi, mu_z, spread = mu_extract(K_nominal, nominal_model.f0, A)
    assert spread < 0.05
    assert mu_z == pytest.approx(mu_xi, rel=0.05)


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(0.01, 5.0), f0=st.floats(1e-22, 1e-18), a=st.floats(1e-3, 0.1))
def test_mu_extract_recovers_synthetic_mu(mu, f0, a):
    K = np.diag([mu * f0 / a, mu * f0 / a, 2 * mu * f0 / a])
    mu_xi, mu_z, spread = mu_extract(K, f0, a)
    assert mu_xi == pytest.approx(mu, rel=1e-12)
    assert mu_z == pytest.approx(mu, rel=1e-12)
    assert spread < 1e-12


def test_mu_extract_rejects_bad_input():
    with pytest.raises(ValidationError):
        mu_extract(np.eye(3), 0.0, A)
    with pytest.raises(ValidationError):
        mu_extract(np.ones((3, 3)), 1.0, A)


@pytest.mark.parametrize("detuning, sign", [(-2.0, 1), (2.0, -1)])
def test_friction_sign_follows_detuning(gamma, cs, detuning, sign):
    Afr = friction(TrapModel(make_beams(gamma, detuning=detuning), cs))
    eig = np.linalg.eigvalsh(0.5 * (Afr + Afr.T))
    assert np.all(sign * eig > 0)


def test_no_light_no_friction(gamma, cs):
    model = TrapModel(make_beams(gamma, rabi=0.0), cs)
    assert np.all(friction(model) == 0)
    ch = characterize(model)
    assert np.isnan(ch.mu_xi) and np.isnan(ch.mu_z)


def test_stiffness_step_bounds(nominal_model):
    with pytest.raises(ValidationError):
        stiffness(nominal_model, h=1e-9 * A)
    with pytest.raises(ValidationError):
        stiffness(nominal_model, h=0.1 * A)


def test_flux_frozen_and_pumped(frozen_model, nominal_model):
    r = 0.05 * A
    scale = 4 * np.pi * r ** 2 * frozen_model.f0
    assert abs(earnshaw_flux(frozen_model, r)) <= 1e-6 * scale
    assert earnshaw_flux(nominal_model, r) < 0


def test_small_sphere_flux_matches_trace(nominal_model, K_nominal):
    r = 0.005 * A
    flux = earnshaw_flux(nominal_model, r)
    assert flux / (4 * np.pi * r ** 3 / 3) == pytest.approx(-np.trace(K_nominal), rel=0.02)
    with pytest.raises(ValidationError):
        earnshaw_flux(nominal_model, A)


def test_imbalance_weakens_transverse_axes(gamma, cs, K_nominal):
    m = np.sqrt(1.2)
    beams = make_beams(gamma, rabi_multipliers=[m, m, 1, 1, 1, 1])
    K = stiffness(TrapModel(beams, cs))
    assert K[1, 1] < K_nominal[1, 1]
    assert K[2, 2] < K_nominal[2, 2]


def test_characterize_summary(nominal_model):
    ch = characterize(nominal_model)
    d = ch.to_dict()
    assert d["stiffness_ratio_zz_xx"] == pytest.approx(2.0, rel=0.05)
    assert abs(ch.earnshaw_trace) <= 1e-4 * np.trace(ch.stiffness)
    assert ch.mu_spread < 0.05


def test_doppler_temperature_positive(nominal_model):
    T = doppler_temperature(nominal_model)
    assert np.all(T > 0) and np.all(np.isfinite(T))
    assert T == pytest.approx(np.full(3, T.mean()), rel=1e-6)


def test_scan_rabi_scaling_and_consistency(nominal_beams, cs, gamma, K_nominal):
    rows = scan(nominal_beams, cs, [-2.0 * gamma], [0.8 * gamma, 1.6 * gamma], temperature=1e-4)
    assert [r["status"] for r in rows] == ["ok", "ok"]
    assert rows[0]["K_xx"] == pytest.approx(K_nominal[0, 0], rel=1e-9)
    for key in ("K_xx", "K_yy", "K_zz"):
        assert rows[1][key] == pytest.approx(4 * rows[0][key], rel=1e-6)
    assert rows[0]["radius_z"] == pytest.approx(np.sqrt(1.380649e-23 * 1e-4 / K_nominal[2, 2]), rel=1e-9)


def test_scan_grid_order_and_failures(nominal_beams, cs, gamma):
    rows = scan(nominal_beams, cs, [-1.0 * gamma, -3.0 * gamma], [0.0, gamma])
    assert [(round(r["detuning_gamma"], 6), round(r["rabi_gamma"], 6)) for r in rows] == \
        [(-3.0, 0.0), (-3.0, 1.0), (-1.0, 0.0), (-1.0, 1.0)]
    failed = [r for r in rows if r["rabi_gamma"] == 0]
    assert all(r["status"].startswith("failed") and np.isnan(r["K_xx"]) for r in failed)
    assert all(r["status"] == "ok" for r in rows if r["rabi_gamma"] > 0)
    with pytest.raises(ValidationError):
        scan(nominal_beams, cs, [], [gamma])
