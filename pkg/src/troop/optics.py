"""
Six-beam divergent geometry and sigma+/sigma-/pi decomposition of the light.

Each beam is a spherical wave emitted from its focus and clipped to a cone
of half-angle ``half_angle`` around its propagation axis. Intensity falls
as ``(a / d)**2`` with ``d`` the distance from the focus, so a beam has unit
relative weight at the trap center. Beams add incoherently.

Beam order in a :class:`BeamSet` is ``x+, x-, y+, y-, z+, z-``; beam ``i+``
has its focus at ``+a e_i`` and propagates towards ``-e_i``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FocusSingularityError, OutsideIlluminatedRegionError, ValidationError

BEAM_LABELS = ("x+", "x-", "y+", "y-", "z+", "z-")
NOMINAL_HELICITIES = (-1, -1, 1)
_AXIS_EPS = 1e-12
_FOCUS_EPS = 1e-12


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0:
        raise ValidationError(f"cannot normalize vector {v}")
    return v / n


def _vec3(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be a finite 3-vector, got {v!r}")
    return arr


@dataclass(frozen=True)
class Beam:
    """One divergent circularly polarized beam."""

    focus: tuple
    propagation: tuple
    helicity: int
    rabi_center: float
    half_angle: float

    def __post_init__(self):
        focus = _vec3(self.focus, "focus")
        prop = _vec3(self.propagation, "propagation")
        if abs(np.linalg.norm(prop) - 1) > 1e-12:
            raise ValidationError("propagation must be a unit vector")
        if self.helicity not in (1, -1):
            raise ValidationError(f"helicity must be +1 or -1, got {self.helicity!r}")
        if not self.rabi_center >= 0:
            raise ValidationError("rabi_center must be >= 0")
        if not 0 < self.half_angle < np.pi / 2:
            raise ValidationError("half_angle must lie in (0, pi/2)")
        object.__setattr__(self, "focus", tuple(focus))
        object.__setattr__(self, "propagation", tuple(prop))

    @property
    def focus_distance(self) -> float:
        return float(np.linalg.norm(self.focus))


@dataclass(frozen=True)
class BeamSet:
    """Three counterpropagating pairs along X, Y, Z sharing one laser detuning.

    Parameters
    ----------
    beams : tuple of Beam
        Six beams in ``BEAM_LABELS`` order.
    detuning : float
        Laser detuning from resonance, rad/s (red = negative).
    """

    beams: tuple
    detuning: float = 0.0

    def __post_init__(self):
        beams = tuple(self.beams)
        if len(beams) != 6:
            raise ValidationError("a BeamSet needs exactly six beams")
        a = beams[0].focus_distance
        for axis in range(3):
            plus, minus = beams[2 * axis], beams[2 * axis + 1]
            e = np.eye(3)[axis]
            if not (np.allclose(plus.focus, a * e) and np.allclose(minus.focus, -a * e)):
                raise ValidationError(f"beams {BEAM_LABELS[2 * axis]}/{BEAM_LABELS[2 * axis + 1]} "
                                      f"must have foci at +/-a on axis {'xyz'[axis]}")
            if not (np.allclose(plus.propagation, -e) and np.allclose(minus.propagation, e)):
                raise ValidationError("beams must propagate from their focus through the origin")
            if plus.helicity != minus.helicity:
                raise ValidationError("counterpropagating beams must share helicity")
        if not np.isfinite(self.detuning):
            raise ValidationError("detuning must be finite")
        object.__setattr__(self, "beams", beams)
        object.__setattr__(self, "detuning", float(self.detuning))

    @classmethod
    def symmetric(cls, focus_distance, rabi, detuning=0.0, helicities=NOMINAL_HELICITIES,
                  half_angle=np.deg2rad(22.0), rabi_multipliers=None) -> "BeamSet":
        """Standard six-beam layout with helicities ``(h_x, h_y, h_z)``."""
        if len(helicities) != 3:
            raise ValidationError("helicities must be (h_x, h_y, h_z)")
        if not focus_distance > 0:
            raise ValidationError("focus distance must be positive")
        mult = np.ones(6) if rabi_multipliers is None else np.asarray(rabi_multipliers, dtype=float)
        if mult.shape != (6,) or np.any(mult < 0):
            raise ValidationError("rabi_multipliers must be six non-negative numbers")
        beams = []
        for i in range(6):
            axis, sign = divmod(i, 2)
            e = np.eye(3)[axis] * (1.0 if sign == 0 else -1.0)
            beams.append(Beam(focus=tuple(focus_distance * e), propagation=tuple(-e),
                              helicity=int(helicities[axis]), rabi_center=float(rabi * mult[i]),
                              half_angle=float(half_angle)))
        return cls(tuple(beams), detuning)

    @property
    def focus_distance(self) -> float:
        return self.beams[0].focus_distance

    @property
    def helicity_pattern(self) -> tuple:
        return tuple(self.beams[2 * i].helicity for i in range(3))

    @property
    def reference_rabi(self) -> float:
        """Largest per-beam center Rabi frequency; the unit for relative intensities."""
        return max(b.rabi_center for b in self.beams)

    def with_(self, **changes) -> "BeamSet":
        """Copy with new detuning, rabi, helicities or rabi_multipliers."""
        rabi = changes.pop("rabi", self.reference_rabi)
        ref = self.reference_rabi
        mult = changes.pop("rabi_multipliers", None)
        if mult is None:
            mult = [b.rabi_center / ref if ref > 0 else 1.0 for b in self.beams]
        kw = dict(focus_distance=self.focus_distance, rabi=rabi, detuning=self.detuning,
                  helicities=self.helicity_pattern, half_angle=self.beams[0].half_angle,
                  rabi_multipliers=mult)
        kw.update(changes)
        return BeamSet.symmetric(**kw)

    def arrays(self) -> dict:
        """Per-beam arrays used by the vectorized kernels."""
        return dict(
            foci=np.array([b.focus for b in self.beams]),
            props=np.array([b.propagation for b in self.beams]),
            helicity=np.array([b.helicity for b in self.beams], dtype=float),
            rabi=np.array([b.rabi_center for b in self.beams]),
            cos_half=np.cos([b.half_angle for b in self.beams]),
            a=np.array([b.focus_distance for b in self.beams]),
        )


@dataclass(frozen=True)
class LocalField:
    """Light field at one point, decomposed along ``quant_axis``.

    ``weights`` are geometric intensity weights (1 at the center);
    ``intensities`` fold in each beam's Rabi frequency relative to the
    set's reference. Fractions are per beam; aggregates are sums of
    ``intensities * fraction`` in units of one reference beam at the center.
    """

    point: np.ndarray
    quant_axis: np.ndarray
    directions: np.ndarray
    weights: np.ndarray
    intensities: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    p_pi: np.ndarray

    @property
    def I_sigma_plus(self) -> float:
        return float(self.intensities @ self.p_plus)

    @property
    def I_sigma_minus(self) -> float:
        return float(self.intensities @ self.p_minus)

    @property
    def I_pi(self) -> float:
        return float(self.intensities @ self.p_pi)

    def fractions_q(self) -> np.ndarray:
        """Per-beam fractions in ``Q_ORDER`` columns (sigma-, pi, sigma+), shape (6, 3)."""
        return np.stack([self.p_minus, self.p_pi, self.p_plus], axis=-1)


# -- vectorized kernels ------------------------------------------------------

def beam_geometry(arrays: dict, r: np.ndarray):
    """Directions (N, 6, 3), distances (N, 6) and cone-clipped weights (N, 6)."""
    sep = r[:, None, :] - arrays["foci"][None, :, :]
    dist = np.linalg.norm(sep, axis=-1)
    if np.any(dist <= _FOCUS_EPS * arrays["a"]):
        raise FocusSingularityError("point coincides with a beam focus")
    dirs = sep / dist[..., None]
    cosang = np.einsum("nbk,bk->nb", dirs, arrays["props"])
    inside = cosang >= arrays["cos_half"] - 1e-15
    weights = np.where(inside, (arrays["a"] / dist) ** 2, 0.0)
    return dirs, dist, weights


def fractions_q(helicity: np.ndarray, cos_q: np.ndarray) -> np.ndarray:
    """Fractions (sigma-, pi, sigma+) for helicities broadcast against ``cos_q``."""
    hc = helicity * cos_q
    out = np.empty(cos_q.shape + (3,))
    out[..., 0] = 0.25 * (1 - hc) ** 2
    out[..., 1] = 0.5 * (1 - cos_q ** 2)
    out[..., 2] = 0.25 * (1 + hc) ** 2
    return out


def spin_axes(arrays: dict, dirs: np.ndarray, strength: np.ndarray) -> np.ndarray:
    """Normalized sum_b h_b * strength_b * n_b; lab Z where it vanishes."""
    s = np.einsum("b,nb,nbk->nk", arrays["helicity"], strength, dirs)
    norm = np.linalg.norm(s, axis=-1)
    small = norm <= _AXIS_EPS * np.sum(strength, axis=-1)
    axes = np.where(small[:, None], np.array([0.0, 0.0, 1.0]), s / np.where(small, 1.0, norm)[:, None])
    return axes


# -- public single-point API -------------------------------------------------

def beam_local(beam: Beam, r):
    """Local propagation direction and relative intensity weight of ``beam`` at ``r``."""
    r = _vec3(r, "r")
    arrays = dict(foci=np.array([beam.focus]), props=np.array([beam.propagation]),
                  cos_half=np.cos([beam.half_angle]), a=np.array([beam.focus_distance]))
    dirs, _, w = beam_geometry(arrays, r[None, :])
    return dirs[0, 0], float(w[0, 0])


def polarization_fractions(helicity: int, direction, quant_axis):
    """Return ``(p_plus, p_minus, p_pi)`` for a circular beam along ``direction``."""
    c = float(np.dot(_unit(direction), _unit(quant_axis)))
    c = min(1.0, max(-1.0, c))
    p = fractions_q(np.asarray(float(helicity)), np.asarray(c))
    return float(p[2]), float(p[0]), float(p[1])


def aggregate_field(beamset: BeamSet, r, quant_axis) -> LocalField:
    r = _vec3(r, "r")
    axis = _unit(_vec3(quant_axis, "quant_axis"))
    arrays = beamset.arrays()
    dirs, _, w = beam_geometry(arrays, r[None, :])
    if not np.any(w > 0):
        raise OutsideIlluminatedRegionError(f"point {r} is outside the illuminated region")
    ref = beamset.reference_rabi
    rel = (arrays["rabi"] / ref) ** 2 if ref > 0 else np.zeros(6)
    cos_q = np.clip(dirs[0] @ axis, -1.0, 1.0)
    p = fractions_q(arrays["helicity"], cos_q)
    return LocalField(point=r, quant_axis=axis, directions=dirs[0], weights=w[0],
                      intensities=w[0] * rel, p_plus=p[:, 2], p_minus=p[:, 0], p_pi=p[:, 1])


def anisotropy_axis(beamset: BeamSet, r, rates=None) -> np.ndarray:
    """Unit vector along the net light spin sum_b h_b w_b n_b at ``r``.

    ``rates`` (six per-beam scattering-rate factors, e.g. Doppler-shifted
    Lorentzians) multiply the weights when given. Falls back to lab Z when
    the net spin vanishes.
    """
    r = _vec3(r, "r")
    arrays = beamset.arrays()
    dirs, _, w = beam_geometry(arrays, r[None, :])
    strength = w if rates is None else w * np.asarray(rates, dtype=float)[None, :]
    return spin_axes(arrays, dirs, strength)[0]
