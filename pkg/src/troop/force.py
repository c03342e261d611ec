"""
Radiation-pressure force from six independently scattering beams.

The pipeline at a point (r, v) is: beam geometry -> Doppler-shifted
per-beam rates -> quantization axis along the net light spin -> pumping
steady state -> sum of per-beam forces. :class:`TrapModel` runs it
vectorized over many atoms; the functions below are single-point wrappers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angular import LineStrengthTable, TransitionSpec, line_strengths
from .constants import HBAR
from .errors import OutsideIlluminatedRegionError, ValidationError
from .optics import BeamSet, _vec3, beam_geometry, fractions_q, spin_axes
from .pumping import GroundPopulations, batch_steady_state


def single_wave_force(spec: TransitionSpec, rabi: float, detuning: float) -> float:
    """Force of one wave on an atom at rest for a unit-strength line, in N."""
    if rabi < 0:
        raise ValidationError("Rabi frequency must be >= 0")
    return HBAR * spec.k * spec.gamma * rabi ** 2 / (spec.gamma ** 2 + 4 * detuning ** 2)


@dataclass(frozen=True)
class ForceSample:
    total: np.ndarray
    per_beam: np.ndarray
    scatter_rate_total: float


@dataclass
class FieldEvaluation:
    """Batched pipeline output for N atoms."""

    force: np.ndarray  # (N, 3)
    per_beam: np.ndarray  # (N, 6, 3)
    scatter_rates: np.ndarray  # (N, 6)
    populations: np.ndarray  # (N, 2J+1)
    axes: np.ndarray  # (N, 3)

    @property
    def scatter_total(self) -> np.ndarray:
        return self.scatter_rates.sum(axis=-1)


class TrapModel:
    """Vectorized force pipeline for one beam set and transition.

    Parameters
    ----------
    beamset : BeamSet
    spec : TransitionSpec
    lines : LineStrengthTable, optional
        Built from ``spec`` when omitted.
    pumping : bool
        When False populations are frozen uniform (scalar-atom reference).
    """

    def __init__(self, beamset: BeamSet, spec: TransitionSpec, lines: LineStrengthTable = None,
                 pumping: bool = True):
        self.beamset = beamset
        self.spec = spec
        self.lines = lines if lines is not None else line_strengths(spec)
        if self.lines.jg != spec.jg:
            raise ValidationError("line table does not match the transition")
        self.pumping = pumping
        self._arr = beamset.arrays()
        self._s = self.lines.absorption_array()
        self._n = self.lines.n_ground

    @property
    def f0(self) -> float:
        return single_wave_force(self.spec, self.beamset.reference_rabi, self.beamset.detuning)

    def evaluate(self, r, v=None, strict: bool = True) -> FieldEvaluation:
        """Run the pipeline on positions ``r`` and velocities ``v`` of shape (N, 3).

        With ``strict`` an unilluminated point raises; otherwise it yields
        zero force and NaN populations.
        """
        r = np.atleast_2d(np.asarray(r, dtype=float))
        v = np.zeros_like(r) if v is None else np.atleast_2d(np.asarray(v, dtype=float))
        arr, spec = self._arr, self.spec
        dirs, _, w = beam_geometry(arr, r)
        lit = np.any(w > 0, axis=-1)
        if strict and not np.all(lit):
            bad = r[~lit][0]
            raise OutsideIlluminatedRegionError(f"point {bad} is outside the illuminated region")
        det_b = self.beamset.detuning - spec.k * np.einsum("nbk,nk->nb", dirs, v)
        rates = spec.gamma * arr["rabi"] ** 2 * w / (spec.gamma ** 2 + 4 * det_b ** 2)
        axes = spin_axes(arr, dirs, rates)
        cos_q = np.clip(np.einsum("nbk,nk->nb", dirs, axes), -1.0, 1.0)
        frac = fractions_q(arr["helicity"], cos_q)  # (N, 6, 3)
        pops = np.full((r.shape[0], self._n), 1.0 / self._n)
        if self.pumping:
            intens = np.einsum("nb,nbq->nq", rates, frac)
            # zero light (e.g. Omega = 0): no pumping, the atom stays unpolarized
            pumped = lit & (intens.sum(axis=-1) > 0)
            pops[~lit] = np.nan
            if np.any(pumped):
                pops[pumped] = batch_steady_state(intens[pumped], self.lines)
        absorb_q = pops @ self._s  # (N, 3)
        absorb = np.einsum("nbq,nq->nb", frac, absorb_q)
        scat = np.nan_to_num(rates * absorb)
        per_beam = HBAR * spec.k * scat[..., None] * dirs
        return FieldEvaluation(force=per_beam.sum(axis=1), per_beam=per_beam, scatter_rates=scat,
                               populations=pops, axes=axes)

    def force(self, r, v=None) -> np.ndarray:
        return self.evaluate(r, v).force

    def langevin_terms(self, r, v, diffusion_factor: float = 2.0):
        """Force (N, 3) and per-axis momentum diffusion D (N,), plus an illuminated mask."""
        ev = self.evaluate(r, v, strict=False)
        hk = HBAR * self.spec.k
        D = diffusion_factor * hk ** 2 * ev.scatter_total / 3.0
        lit = np.all(np.isfinite(ev.populations), axis=-1)
        return ev.force, D, lit


def radiation_force(beamset: BeamSet, spec: TransitionSpec, lines: LineStrengthTable, r, v,
                    pops: GroundPopulations, quant_axis) -> ForceSample:
    """Sum of six beam forces for given populations in the ``quant_axis`` basis."""
    r = _vec3(r, "r")
    v = _vec3(v, "v")
    pi_m = np.asarray(pops.pi_m if isinstance(pops, GroundPopulations) else pops, dtype=float)
    if pi_m.shape != (lines.n_ground,) or abs(pi_m.sum() - 1) > 1e-9 or np.any(pi_m < 0):
        raise ValidationError("populations must be normalized over the ground manifold")
    axis = _vec3(quant_axis, "quant_axis")
    axis = axis / np.linalg.norm(axis)
    arr = beamset.arrays()
    dirs, _, w = beam_geometry(arr, r[None, :])
    dirs, w = dirs[0], w[0]
    det_b = beamset.detuning - spec.k * (dirs @ v)
    rates = spec.gamma * arr["rabi"] ** 2 * w / (spec.gamma ** 2 + 4 * det_b ** 2)
    frac = fractions_q(arr["helicity"], np.clip(dirs @ axis, -1.0, 1.0))
    absorb = frac @ (pi_m @ lines.absorption_array())
    scat = rates * absorb
    per_beam = HBAR * spec.k * scat[:, None] * dirs
    return ForceSample(total=per_beam.sum(axis=0), per_beam=per_beam, scatter_rate_total=float(scat.sum()))


def force_at(beamset: BeamSet, spec: TransitionSpec, lines: LineStrengthTable, r, v=(0.0, 0.0, 0.0),
             pumping: bool = True) -> ForceSample:
    """Self-consistent force at one point."""
    model = TrapModel(beamset, spec, lines, pumping=pumping)
    ev = model.evaluate(_vec3(r, "r")[None, :], _vec3(v, "v")[None, :])
    return ForceSample(total=ev.force[0], per_beam=ev.per_beam[0], scatter_rate_total=float(ev.scatter_total[0]))
