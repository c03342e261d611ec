"""
Optical-pumping rate equations in the ground manifold.

Low-saturation limit: the excited state is adiabatically eliminated, so a
ground sublevel ``m`` absorbs a photon of polarization ``q`` at rate
``I_q * s_abs(m, q)`` and the atom immediately returns to the ground
manifold with the decay branching of ``m + q``. Zeeman coherences are not
tracked.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .angular import LineStrengthTable
from .errors import DegenerateSteadyStateError, NumericalError, ValidationError
from .optics import LocalField

_NULL_TOL = 1e-10
_NEG_TOL = 1e-14


@dataclass(frozen=True)
class GroundPopulations:
    """Occupation of ground sublevels m = -J_g ... +J_g."""

    pi_m: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pi_m, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValidationError("pi_m must be a 1-D vector of at least two sublevels")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
            raise ValidationError("populations must be non-negative and sum to 1")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "pi_m", p)

    @classmethod
    def uniform(cls, n: int) -> "GroundPopulations":
        return cls(np.full(n, 1.0 / n))

    @property
    def orientation(self) -> float:
        """Population in m > 0 minus population in m < 0."""
        n = self.pi_m.size
        return float(self.pi_m[(n + 1) // 2:].sum() - self.pi_m[: n // 2].sum())


@dataclass(frozen=True)
class PumpContext:
    """Detuning, atomic velocity and per-beam scattering rates R_b (1/s)."""

    detuning: float
    velocity: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        if rates.shape != (6,) or np.any(rates < 0) or not np.all(np.isfinite(rates)):
            raise ValidationError("rates must be six finite non-negative numbers")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))

    @classmethod
    def build(cls, beamset, spec, field: LocalField, velocity=(0.0, 0.0, 0.0)) -> "PumpContext":
        v = np.asarray(velocity, dtype=float)
        rabi = np.array([b.rabi_center for b in beamset.beams])
        det_b = beamset.detuning - spec.k * (field.directions @ v)
        rates = spec.gamma * rabi ** 2 * field.weights / (spec.gamma ** 2 + 4 * det_b ** 2)
        return cls(detuning=beamset.detuning, velocity=v, rates=rates)


def pumping_intensities(field: LocalField, ctx: PumpContext) -> np.ndarray:
    """Absorption rate per unit strength for each polarization, ``Q_ORDER`` columns."""
    return ctx.rates @ field.fractions_q()


def transfer_matrix(field: LocalField, ctx: PumpContext, lines: LineStrengthTable) -> np.ndarray:
    """Generator ``M`` with d(pi)/dt = M pi."""
    intens = pumping_intensities(field, ctx)
    if np.any(intens < 0):
        raise ValidationError("negative light intensity")
    return generator_from_intensities(intens, lines)


def generator_from_intensities(intens, lines: LineStrengthTable) -> np.ndarray:
    intens = np.asarray(intens, dtype=float)
    if np.any(intens < 0):
        raise ValidationError("negative light intensity")
    return np.einsum("...q,qij->...ij", intens, lines.generators())


def null_space_dimension(M: np.ndarray, tol: float = _NULL_TOL) -> int:
    sv = np.linalg.svd(M, compute_uv=False)
    scale = sv[0] if sv.size and sv[0] > 0 else 1.0
    return int(np.sum(sv <= tol * scale)) if sv[0] > 0 else M.shape[0]


def _check_generator(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("generator must be a square matrix")
    off = M - np.diag(np.diag(M))
    scale = max(np.abs(M).max(), 1e-300)
    if np.any(off < -1e-12 * scale) or np.any(np.abs(M.sum(axis=0)) > 1e-10 * scale):
        raise ValidationError("not a rate generator (columns must sum to 0, off-diagonal >= 0)")
    return M


def _bordered_solve(M):
    A = np.array(M, dtype=float, copy=True)
    A[..., -1, :] = 1.0
    b = np.zeros(A.shape[:-1])
    b[..., -1] = 1.0
    return np.linalg.solve(A, b[..., None])[..., 0]


def _clean(p, where="steady state"):
    if np.any(p < -_NEG_TOL * 1e4):
        raise NumericalError(f"{where} has negative populations (min {p.min():.3g})")
    if np.any(p < 0):
        if np.any(p < -_NEG_TOL):
            warnings.warn(f"clamping small negative populations in {where}", RuntimeWarning, stacklevel=3)
        p = np.clip(p, 0.0, None)
        p = p / p.sum(axis=-1, keepdims=True)
    return p


def steady_state(M) -> GroundPopulations:
    """Normalized null vector of the generator ``M``."""
    M = _check_generator(M)
    dim = null_space_dimension(M)
    if dim != 1:
        raise DegenerateSteadyStateError(dim)
    return GroundPopulations(_clean(_bordered_solve(M)))


def steady_state_power(M, tol: float = 1e-15, max_iter: int = 200000) -> GroundPopulations:
    """Cross-check by power iteration on the uniformized chain ``I + M / lam``."""
    M = _check_generator(M)
    lam = 1.05 * np.max(-np.diag(M))
    if lam <= 0:
        raise DegenerateSteadyStateError(M.shape[0])
    P = np.eye(M.shape[0]) + M / lam
    p = np.full(M.shape[0], 1.0 / M.shape[0])
    for _ in range(max_iter):
        nxt = P @ p
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - p)) < tol:
            return GroundPopulations(_clean(nxt, "power iteration"))
        p = nxt
    raise NumericalError("power iteration did not converge")


def batch_steady_state(intens: np.ndarray, lines: LineStrengthTable) -> np.ndarray:
    """Steady states for many intensity triples, shape (N, 3) -> (N, 2J_g+1).

    Rows whose bordered system is singular or unphysical are re-checked one
    by one so the failure carries the null-space dimension.
    """
    M = generator_from_intensities(intens, lines)
    try:
        p = _bordered_solve(M)
        ok = np.all(np.isfinite(p), axis=-1) & np.all(p > -1e-10, axis=-1)
    except np.linalg.LinAlgError:
        p = np.full(intens.shape[:-1] + (lines.n_ground,), np.nan)
        ok = np.zeros(intens.shape[:-1], dtype=bool)
    for i in np.flatnonzero(~ok):
        p[i] = steady_state(M[i]).pi_m
    return _clean(p)
