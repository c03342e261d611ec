"""
Langevin trajectories of trapped atoms and cloud statistics.

Atoms obey m dv = F(r, v) dt + sqrt(2 D(r, v)) dW per axis, integrated by
Euler-Maruyama with the position advanced using the updated velocity.
Every atom owns a Philox stream keyed by (seed, atom index), so results do
not depend on how atoms are split across workers.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import CS_MASS, G_ACCEL, KB
from .errors import NumericalError, ValidationError

_BLOCK = 256


@dataclass(frozen=True)
class AtomSample:
    r: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).reshape(3)
        v = np.asarray(self.v, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise NumericalError(f"non-finite atom state r={r}, v={v}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class SimParams:
    """Ensemble settings (SI units).

    ``init_radius`` bounds the uniform initial positions; atoms start at
    rest. ``record_stride`` sets trajectory downsampling (0 = no dump).
    """

    n_atoms: int = 500
    dt: float = 2e-5
    n_steps: int = 10000
    seed: int = 0
    mass: float = CS_MASS
    diffusion_factor: float = 2.0
    gravity: bool = False
    burn_in_fraction: float = 0.5
    init_radius: float = 100e-6
    record_stride: int = 0

    def __post_init__(self):
        if int(self.n_atoms) < 1:
            raise ValidationError("n_atoms must be >= 1")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if int(self.n_steps) < 1:
            raise ValidationError("n_steps must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if not self.mass > 0:
            raise ValidationError("mass must be positive")
        if not self.diffusion_factor >= 0:
            raise ValidationError("diffusion_factor must be >= 0")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValidationError("burn_in_fraction must lie in [0, 1)")
        if not self.init_radius >= 0:
            raise ValidationError("init_radius must be >= 0")
        if int(self.record_stride) < 0:
            raise ValidationError("record_stride must be >= 0")


@dataclass(frozen=True)
class CloudStats:
    radius_1_over_sqrt_e: np.ndarray
    temperature: np.ndarray
    aspect_ratio_xy_to_z: float
    kappa_consistency: np.ndarray
    n_samples: int
    lost_fraction: float
    stationary: bool
    drift: float

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, val in d.items():
            if isinstance(val, np.ndarray):
                d[k] = val.tolist()
        return d


@dataclass
class EnsembleResult:
    stats: CloudStats
    r: np.ndarray
    v: np.ndarray
    lost: np.ndarray
    trajectory: np.ndarray = field(default_factory=lambda: np.empty((0, 8)))

    TRAJECTORY_COLUMNS = ("t", "atom_id", "x", "y", "z", "vx", "vy", "vz")


class LinearForceModel:
    """F = -K r - A v with constant diffusion ``D`` (per axis); used as an oracle pipeline."""

    def __init__(self, stiffness, friction, diffusion):
        self.K = np.broadcast_to(np.asarray(stiffness, dtype=float), (3, 3)) if np.ndim(stiffness) == 2 \
            else np.diag(np.broadcast_to(np.asarray(stiffness, dtype=float), (3,)))
        self.A = np.broadcast_to(np.asarray(friction, dtype=float), (3, 3)) if np.ndim(friction) == 2 \
            else np.diag(np.broadcast_to(np.asarray(friction, dtype=float), (3,)))
        self.D = float(diffusion)

    def langevin_terms(self, r, v, diffusion_factor=None):
        F = -r @ self.K.T - v @ self.A.T
        return F, np.full(r.shape[0], self.D), np.ones(r.shape[0], dtype=bool)


class _NoiseStreams:
    """Block-buffered standard normals, one Philox stream per atom."""

    def __init__(self, seed: int, atom_ids):
        self.gens = [np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(i)])))
                     for i in atom_ids]
        self.buf = None
        self.pos = _BLOCK

    def initial_positions(self, radius: float) -> np.ndarray:
        out = np.empty((len(self.gens), 3))
        for i, g in enumerate(self.gens):
            d = g.standard_normal(3)
            d /= np.linalg.norm(d)
            out[i] = radius * g.random() ** (1 / 3) * d
        return out

    def next(self) -> np.ndarray:
        if self.pos == _BLOCK:
            self.buf = np.stack([g.standard_normal((_BLOCK, 3)) for g in self.gens], axis=1)
            self.pos = 0
        xi = self.buf[self.pos]
        self.pos += 1
        return xi


def em_update(r, v, F, D, dt, mass, xi, gravity=False):
    """One Euler-Maruyama step for arrays of atoms; returns new (r, v)."""
    acc = F / mass
    if gravity:
        acc = acc + np.array([0.0, 0.0, -G_ACCEL])
    v_new = v + acc * dt + (np.sqrt(2 * D * dt) / mass)[..., None] * xi
    return r + v_new * dt, v_new


def step(state: AtomSample, params: SimParams, pipeline, noise=None) -> AtomSample:
    """Advance one atom by ``params.dt``. ``noise`` is a 3-vector of N(0,1) draws (zeros if None)."""
    r, v = state.r[None, :], state.v[None, :]
    F, D, _ = pipeline.langevin_terms(r, v, params.diffusion_factor)
    xi = np.zeros((1, 3)) if noise is None else np.asarray(noise, dtype=float).reshape(1, 3)
    r_new, v_new = em_update(r, v, F, D, params.dt, params.mass, xi, params.gravity)
    return AtomSample(r_new[0], v_new[0])


def check_timestep(params: SimParams, damping_rate: float) -> None:
    """Require dt <= 0.1 m / A_max (``damping_rate`` = A_max / m, 1/s)."""
    if damping_rate > 0 and params.dt > 0.1 / damping_rate:
        raise ValidationError(f"dt = {params.dt:.3g} s exceeds the stability bound "
                              f"0.1 m/A = {0.1 / damping_rate:.3g} s")


def _run_chunk(pipeline, params: SimParams, atom_ids, r0=None):
    n = len(atom_ids)
    noise = _NoiseStreams(params.seed, atom_ids)
    r = noise.initial_positions(params.init_radius) if r0 is None else np.array(r0, dtype=float)
    v = np.zeros((n, 3))
    lost = np.zeros(n, dtype=bool)
    burn = int(params.burn_in_fraction * params.n_steps)
    n_acc = params.n_steps - burn
    half = burn + n_acc // 2
    # sums of r^2, v^2 per axis, split into two halves of the sampling window
    sums = np.zeros((2, 2, 3))
    counts = np.zeros(2)
    traj = []
    stride = int(params.record_stride)
    ids = np.asarray(atom_ids, dtype=float)
    for k in range(params.n_steps):
        xi = noise.next()
        F, D, lit = pipeline.langevin_terms(r, v, params.diffusion_factor)
        lost |= ~lit
        r_new, v_new = em_update(r, v, F, D, params.dt, params.mass, xi, params.gravity)
        active = ~lost
        r = np.where(active[:, None], r_new, r)
        v = np.where(active[:, None], v_new, v)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            bad = int(np.flatnonzero(~np.all(np.isfinite(np.hstack([r, v])), axis=1))[0])
            raise NumericalError(f"non-finite state for atom {atom_ids[bad]} at step {k + 1}")
        if k >= burn:
            h = 0 if k < half else 1
            sums[h, 0] += np.sum(r[active] ** 2, axis=0)
            sums[h, 1] += np.sum(v[active] ** 2, axis=0)
            counts[h] += np.count_nonzero(active)
        if stride and (k + 1) % stride == 0:
            t = np.full(n, (k + 1) * params.dt)
            traj.append(np.column_stack([t, ids, r, v]))
    traj = np.concatenate(traj) if traj else np.empty((0, 8))
    return r, v, lost, sums, counts, traj


def _n_workers() -> int:
    try:
        return max(1, int(os.environ.get("TROOP_THREADS", "1")))
    except ValueError:
        return 1


def run_ensemble(params: SimParams, pipeline, workers: int = None, initial_positions=None,
                 damping_rate: float = None) -> EnsembleResult:
    """Evolve ``params.n_atoms`` atoms and collect second moments after burn-in.

    ``pipeline`` is a :class:`~troop.force.TrapModel` or anything with a
    compatible ``langevin_terms(r, v, diffusion_factor)``.
    """
    if damping_rate is not None:
        check_timestep(params, damping_rate)
    n = int(params.n_atoms)
    workers = _n_workers() if workers is None else max(1, int(workers))
    bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
    chunks = [list(range(lo, hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]
    r0 = None if initial_positions is None else np.asarray(initial_positions, dtype=float).reshape(n, 3)

    def work(ids):
        return _run_chunk(pipeline, params, ids, None if r0 is None else r0[ids])

    if len(chunks) == 1:
        parts = [work(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(work, chunks))
    r = np.concatenate([p[0] for p in parts])
    v = np.concatenate([p[1] for p in parts])
    lost = np.concatenate([p[2] for p in parts])
    sums = sum(p[3] for p in parts)
    counts = sum(p[4] for p in parts)
    traj = np.concatenate([p[5] for p in parts]) if parts else np.empty((0, 8))
    if traj.size:
        traj = traj[np.lexsort((traj[:, 1], traj[:, 0]))]
    return EnsembleResult(stats=_stats(sums, counts, params.mass, lost), r=r, v=v, lost=lost, trajectory=traj)


def _stats(sums, counts, mass, lost) -> CloudStats:
    total = counts.sum()
    if total == 0:
        nan3 = np.full(3, np.nan)
        return CloudStats(nan3, nan3, float("nan"), nan3, 0, float(lost.mean()), False, float("nan"))
    r2 = sums[:, 0].sum(axis=0) / total
    v2 = sums[:, 1].sum(axis=0) / total
    radius = np.sqrt(r2)
    temp = mass * v2 / KB
    aspect = math.sqrt(0.5 * (r2[0] + r2[1]) / r2[2]) if r2[2] > 0 else float("nan")
    drift = float("nan")
    stationary = True
    if np.all(counts > 0):
        m1 = sums[0] / counts[0]
        m2 = sums[1] / counts[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            drift = float(np.nanmax(np.abs(m2 - m1) / (0.5 * (m1 + m2))))
        stationary = bool(drift <= 0.1)
        if not stationary:
            warnings.warn(f"ensemble moments drift by {drift:.1%} between halves", RuntimeWarning, stacklevel=3)
    return CloudStats(radius_1_over_sqrt_e=radius, temperature=temp, aspect_ratio_xy_to_z=aspect,
                      kappa_consistency=KB * temp / r2, n_samples=int(total),
                      lost_fraction=float(lost.mean()), stationary=stationary, drift=drift)


def escape_fraction(params: SimParams, pipeline, boundary: float, focus_distance: float = None,
                    workers: int = None) -> float:
    """Fraction of atoms outside ``boundary`` (or lost from the light) at the end of the run."""
    if focus_distance is not None and not 0 < boundary < focus_distance:
        raise ValidationError("boundary must lie in (0, a)")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = run_ensemble(params, pipeline, workers=workers)
    out = (np.linalg.norm(res.r, axis=1) > boundary) | res.lost
    return float(out.mean())
