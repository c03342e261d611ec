"""
Linearized trap characterization around the origin.

Stiffness ``K = -dF/dr`` and friction ``A = -dF/dv`` come from central
differences of the force pipeline (optionally Richardson-extrapolated).
The trapping efficiency follows from ``f_xi = -mu (xi/a) F_0`` on the
X/Y axes and ``f_z = -2 mu (z/a) F_0`` on Z.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .constants import KB
from .errors import TroopError, ValidationError
from .force import TrapModel


@dataclass(frozen=True)
class TrapCharacterization:
    stiffness: np.ndarray
    friction: np.ndarray
    mu_xi: float
    mu_z: float
    f0: float
    earnshaw_trace: float

    @property
    def mu_spread(self) -> float:
        """Relative difference between the two mu estimates."""
        mean = 0.5 * (self.mu_xi + self.mu_z)
        return abs(self.mu_z - self.mu_xi) / abs(mean) if mean else float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stiffness"] = self.stiffness.tolist()
        d["friction"] = self.friction.tolist()
        d["mu_spread"] = self.mu_spread
        d["stiffness_ratio_zz_xx"] = float(self.stiffness[2, 2] / self.stiffness[0, 0])
        return d


def _jacobian(func, n: int, step: float, richardson: bool) -> np.ndarray:
    """Central-difference Jacobian of ``func`` at 0 from one batched call.

    ``func`` maps an (M, 3) array of displacements to (M, 3) values.
    """
    steps = [step, step / 2] if richardson else [step]
    pts = []
    for h in steps:
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            pts.extend([e, -e])
    vals = func(np.array(pts))
    jacs = []
    for k, h in enumerate(steps):
        J = np.empty((vals.shape[1], n))
        base = 2 * n * k
        for j in range(n):
            J[:, j] = (vals[base + 2 * j] - vals[base + 2 * j + 1]) / (2 * h)
        jacs.append(J)
    if richardson:
        return (4 * jacs[1] - jacs[0]) / 3
    return jacs[0]


def stiffness(model: TrapModel, h: float = None, richardson: bool = True) -> np.ndarray:
    """``K = -dF/dr`` at the origin, v = 0. ``h`` defaults to 1e-4 a."""
    a = model.beamset.focus_distance
    h = 1e-4 * a if h is None else float(h)
    if not 1e-6 * a * (1 - 1e-9) <= h <= 1e-2 * a * (1 + 1e-9):
        raise ValidationError("finite-difference step must lie in [1e-6 a, 1e-2 a]")
    return -_jacobian(lambda d: model.force(d), 3, h, richardson)


def friction(model: TrapModel, dv: float = None, richardson: bool = True) -> np.ndarray:
    """``A = -dF/dv`` at r = 0, v = 0. ``dv`` defaults to 1e-3 Gamma/k."""
    scale = model.spec.gamma / model.spec.k
    dv = 1e-3 * scale if dv is None else float(dv)
    if not 0 < dv <= 0.05 * scale:
        raise ValidationError("velocity step must be positive and << Gamma/k")
    return -_jacobian(lambda d: model.force(np.zeros_like(d), d), 3, dv, richardson)


def mu_extract(K, f0: float, a: float):
    """Return ``(mu_xi, mu_z, spread)`` from the diagonal of ``K``."""
    K = np.asarray(K, dtype=float)
    if f0 == 0:
        raise ValidationError("F_0 is zero; mu is undefined")
    diag = np.abs(np.diag(K))
    off = np.abs(K - np.diag(np.diag(K))).max()
    if diag.max() > 0 and off > 0.1 * diag.max():
        raise ValidationError("stiffness tensor is not diagonal-dominant")
    mu_xi = a * K[0, 0] / f0
    mu_z = a * K[2, 2] / (2 * f0)
    mean = 0.5 * (mu_xi + mu_z)
    spread = abs(mu_z - mu_xi) / abs(mean) if mean else float("nan")
    return float(mu_xi), float(mu_z), float(spread)


def earnshaw_flux(model: TrapModel, radius: float, n_samples: int = 24) -> float:
    """Outward flux of F through a sphere (N m^2), by Gauss-Legendre x trapezoid quadrature.

    ``n_samples`` polar nodes and ``2 n_samples`` azimuthal nodes.
    """
    a = model.beamset.focus_distance
    if not 0 < radius < a / 2:
        raise ValidationError("radius must lie in (0, a/2)")
    x, wx = np.polynomial.legendre.leggauss(int(n_samples))
    nphi = 2 * int(n_samples)
    phi = 2 * np.pi * np.arange(nphi) / nphi
    ct, ph = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1 - ct ** 2)
    normals = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
    weights = (wx[:, None] * np.full(nphi, 2 * np.pi / nphi)[None, :]).reshape(-1)
    F = model.force(radius * normals)
    return float(radius ** 2 * np.sum(weights * np.einsum("nk,nk->n", F, normals)))


def characterize(model: TrapModel, h: float = None, richardson: bool = True) -> TrapCharacterization:
    K = stiffness(model, h, richardson)
    A = friction(model, richardson=richardson)
    f0 = model.f0
    if f0 > 0:
        mu_xi, mu_z, _ = mu_extract(K, f0, model.beamset.focus_distance)
    else:
        mu_xi = mu_z = float("nan")
    frozen = TrapModel(model.beamset, model.spec, model.lines, pumping=False)
    tr = float(np.trace(stiffness(frozen, h, richardson)))
    return TrapCharacterization(stiffness=K, friction=A, mu_xi=mu_xi, mu_z=mu_z, f0=f0, earnshaw_trace=tr)


def doppler_temperature(model: TrapModel, diffusion_factor: float = 2.0, A=None) -> np.ndarray:
    """Per-axis temperature (K) from k_B T_i = D / A_ii at the trap center."""
    if A is None:
        A = friction(model)
    _, D, _ = model.langevin_terms(np.zeros((1, 3)), np.zeros((1, 3)), diffusion_factor)
    return D[0] / np.diag(A) / KB


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("TROOP_THREADS", "1")))
    except ValueError:
        return 1


SCAN_COLUMNS = ("detuning_gamma", "rabi_gamma", "K_xx", "K_yy", "K_zz", "mu_xi", "mu_z",
                "temperature", "radius_xy", "radius_z", "status")


def scan(beamset, spec, detunings, rabis, temperature=None, diffusion_factor: float = 2.0,
         lines=None, h: float = None) -> list[dict]:
    """Stiffness and predicted cloud radii over a (detuning, Rabi) grid.

    ``detunings`` and ``rabis`` are in rad/s. ``temperature`` is a fixed
    value in K, or None for the Doppler-model temperature. Radii use
    r_i = sqrt(k_B T / K_ii). Failed points become NaN rows with the error
    in ``status``; rows come out ordered by (detuning, Rabi).
    """
    detunings, rabis = list(detunings), list(rabis)
    if not detunings or not rabis:
        raise ValidationError("scan ranges must be non-empty")
    gamma = spec.gamma
    grid = sorted((d, o) for d in detunings for o in rabis)

    def point(args):
        d, o = args
        row = dict(detuning_gamma=d / gamma, rabi_gamma=o / gamma)
        try:
            model = TrapModel(beamset.with_(detuning=d, rabi=o), spec, lines)
            K = stiffness(model, h)
            mu_xi, mu_z, _ = mu_extract(K, model.f0, model.beamset.focus_distance)
            if temperature is None:
                T = float(np.mean(doppler_temperature(model, diffusion_factor)))
            else:
                T = float(temperature)
            kxy = 0.5 * (K[0, 0] + K[1, 1])
            row.update(K_xx=K[0, 0], K_yy=K[1, 1], K_zz=K[2, 2], mu_xi=mu_xi, mu_z=mu_z, temperature=T,
                       radius_xy=math.sqrt(KB * T / kxy) if kxy > 0 else float("nan"),
                       radius_z=math.sqrt(KB * T / K[2, 2]) if K[2, 2] > 0 else float("nan"),
                       status="ok")
        except (TroopError, np.linalg.LinAlgError, ValueError) as exc:
            row.update({c: float("nan") for c in SCAN_COLUMNS[2:-1]})
            row["status"] = f"failed: {exc}"
        return row

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(point, grid))
