"""
scikit-learn style front end.

:class:`TroopTrap` is fit by characterizing the trap at its operating
point; ``predict`` maps positions to forces and ``transform`` maps them to
ground-state populations. :class:`CloudSimulator` wraps an ensemble run
around a trap estimator. Both support ``get_params`` / ``set_params`` and
``sklearn.base.clone``, which is how parameter scans are built.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import constants as C
from .angular import TransitionSpec, line_strengths
from .dynamics import SimParams, escape_fraction, run_ensemble
from .errors import ValidationError
from .force import TrapModel
from .optics import BeamSet
from .trapchar import characterize


def check_points(X, name="X") -> np.ndarray:
    """Validate an (n, 3) array of finite coordinates."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, input_name=name)
    if X.shape[1] != 3:
        raise ValidationError(f"{name} must have 3 columns (x, y, z), got {X.shape[1]}")
    return X


class TroopTrap(TransformerMixin, BaseEstimator):
    """Six-beam optical-pumping trap at one operating point.

    Parameters
    ----------
    jg : int, float or str
        Ground angular momentum (J_e = J_g + 1).
    detuning_gamma, rabi_gamma : float
        Detuning and per-beam center Rabi frequency in units of Gamma.
    focus_distance : float
        Distance a from the center to each focus (m).
    half_angle_deg : float
        Divergence half-angle.
    helicities : tuple
        (h_x, h_y, h_z).
    rabi_multipliers : tuple or None
        Per-beam Rabi scale, order x+, x-, y+, y-, z+, z-.
    gamma, wavelength, mass : float
        Transition linewidth (rad/s), wavelength (m) and atomic mass (kg).
    pumping : bool
        False freezes populations at uniform (scalar-atom reference).
    step : float
        Finite-difference step as a fraction of ``focus_distance``.

    Attributes
    ----------
    model_ : TrapModel
    characterization_ : TrapCharacterization
    stiffness_, friction_ : ndarray of shape (3, 3)
    mu_xi_, mu_z_, f0_ : float
    """

    def __init__(self, jg=4, detuning_gamma=C.DETUNING_GAMMA, rabi_gamma=C.RABI_GAMMA,
                 focus_distance=C.FOCUS_DISTANCE, half_angle_deg=C.HALF_ANGLE_DEG, helicities=(-1, -1, 1),
                 rabi_multipliers=None, gamma=C.CS_GAMMA, wavelength=C.CS_WAVELENGTH, mass=C.CS_MASS,
                 pumping=True, step=1e-4):
        self.jg = jg
        self.detuning_gamma = detuning_gamma
        self.rabi_gamma = rabi_gamma
        self.focus_distance = focus_distance
        self.half_angle_deg = half_angle_deg
        self.helicities = helicities
        self.rabi_multipliers = rabi_multipliers
        self.gamma = gamma
        self.wavelength = wavelength
        self.mass = mass
        self.pumping = pumping
        self.step = step

    def build_model(self) -> TrapModel:
        spec = TransitionSpec.from_jg(self.jg, self.gamma, self.wavelength)
        beams = BeamSet.symmetric(self.focus_distance, self.rabi_gamma * self.gamma,
                                  self.detuning_gamma * self.gamma, helicities=tuple(self.helicities),
                                  half_angle=np.deg2rad(self.half_angle_deg),
                                  rabi_multipliers=self.rabi_multipliers)
        return TrapModel(beams, spec, line_strengths(spec), pumping=self.pumping)

    def fit(self, X=None, y=None):
        """Characterize the trap; ``X`` and ``y`` are ignored."""
        self.model_ = self.build_model()
        self.characterization_ = characterize(self.model_, h=self.step * self.focus_distance)
        self.stiffness_ = self.characterization_.stiffness
        self.friction_ = self.characterization_.friction
        self.mu_xi_ = self.characterization_.mu_xi
        self.mu_z_ = self.characterization_.mu_z
        self.f0_ = self.characterization_.f0
        self.n_features_in_ = 3
        return self

    def predict(self, X, velocities=None):
        """Radiation-pressure force (N) at positions ``X`` (m), shape (n, 3)."""
        check_is_fitted(self, "model_")
        X = check_points(X)
        V = None if velocities is None else check_points(velocities, "velocities")
        return self.model_.evaluate(X, V).force

    def transform(self, X, velocities=None):
        """Steady-state ground populations, shape (n, 2J_g+1), in each point's spin-axis basis."""
        check_is_fitted(self, "model_")
        X = check_points(X)
        V = None if velocities is None else check_points(velocities, "velocities")
        return self.model_.evaluate(X, V).populations


class CloudSimulator(BaseEstimator):
    """Langevin ensemble in a :class:`TroopTrap`.

    ``fit(X)`` runs the ensemble; ``X`` optionally gives initial positions
    (n_atoms, 3). Results land in ``stats_``, ``result_`` and
    ``escape_fraction_`` (atoms beyond ``boundary`` at the end).
    """

    def __init__(self, trap=None, n_atoms=500, dt=2e-5, n_steps=15000, seed=0, diffusion_factor=2.0,
                 gravity=False, burn_in_fraction=0.5, init_radius=100e-6, record_stride=0, boundary=1e-3,
                 workers=None):
        self.trap = trap
        self.n_atoms = n_atoms
        self.dt = dt
        self.n_steps = n_steps
        self.seed = seed
        self.diffusion_factor = diffusion_factor
        self.gravity = gravity
        self.burn_in_fraction = burn_in_fraction
        self.init_radius = init_radius
        self.record_stride = record_stride
        self.boundary = boundary
        self.workers = workers

    def _params(self, mass) -> SimParams:
        return SimParams(n_atoms=self.n_atoms, dt=self.dt, n_steps=self.n_steps, seed=self.seed, mass=mass,
                         diffusion_factor=self.diffusion_factor, gravity=self.gravity,
                         burn_in_fraction=self.burn_in_fraction, init_radius=self.init_radius,
                         record_stride=self.record_stride)

    def fit(self, X=None, y=None):
        trap = TroopTrap() if self.trap is None else self.trap
        if not hasattr(trap, "model_"):
            trap = trap.fit()
        self.trap_ = trap
        params = self._params(trap.mass)
        damping = float(np.max(np.abs(np.linalg.eigvals(trap.friction_)))) / trap.mass
        X0 = None if X is None else check_points(X)
        self.result_ = run_ensemble(params, trap.model_, workers=self.workers, initial_positions=X0,
                                    damping_rate=damping)
        self.stats_ = self.result_.stats
        out = (np.linalg.norm(self.result_.r, axis=1) > self.boundary) | self.result_.lost
        self.escape_fraction_ = float(out.mean())
        return self


__all__ = ["TroopTrap", "CloudSimulator", "check_points", "escape_fraction"]
