"""
Line strengths for J -> J+1 electric-dipole transitions.

All table entries are exact rationals (``fractions.Fraction``). Absorption
strengths are squared Clebsch-Gordan coefficients <J m; 1 q | J+1 m+q>^2,
which already equal 1 on the cycling lines m = -J, q = -1 and m = +J, q = +1.
Polarization index ``q`` runs over (-1, 0, +1); arrays use column order
``Q_ORDER``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ValidationError

Q_ORDER = (-1, 0, 1)
MAX_TWICE_JG = 25


@dataclass(frozen=True, order=True)
class HalfInt:
    """Angular momentum stored as twice its value."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, (int, np.integer)) or self.twice_value < 0:
            raise ValidationError(f"twice_value must be a non-negative integer, got {self.twice_value!r}")

    @classmethod
    def from_value(cls, value) -> "HalfInt":
        """Parse ``4``, ``0.5``, ``"1/2"`` or a Fraction."""
        if isinstance(value, HalfInt):
            return value
        try:
            frac = Fraction(str(value).strip()) if isinstance(value, str) else Fraction(value)
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise ValidationError(f"not an angular momentum: {value!r}") from exc
        twice = 2 * frac
        if twice.denominator != 1:
            raise ValidationError(f"angular momentum must be a multiple of 1/2, got {value!r}")
        return cls(int(twice))

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice_value, 2)

    @property
    def multiplicity(self) -> int:
        return self.twice_value + 1

    def projections(self) -> list[Fraction]:
        """m = -J, ..., +J."""
        return [Fraction(k - self.twice_value, 2) for k in range(0, 2 * self.twice_value + 1, 2)]

    def __add__(self, other: int) -> "HalfInt":
        return HalfInt(self.twice_value + 2 * int(other))

    def __str__(self):
        v = self.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True)
class TransitionSpec:
    """Closed J_g -> J_g + 1 transition.

    Parameters
    ----------
    jg, je : HalfInt
        Ground and excited angular momenta.
    gamma : float
        Natural linewidth (rad/s).
    k : float
        Wavevector magnitude (1/m).
    """

    jg: HalfInt
    je: HalfInt
    gamma: float
    k: float

    def __post_init__(self):
        if self.je.twice_value != self.jg.twice_value + 2:
            raise ValidationError(f"only J_e = J_g + 1 transitions are supported (got {self.jg} -> {self.je})")
        if self.jg.twice_value < 1:
            raise ValidationError("trap requires J_g >= 1/2")
        if not self.gamma > 0:
            raise ValidationError("gamma must be positive")
        if not self.k > 0:
            raise ValidationError("k must be positive")

    @classmethod
    def from_jg(cls, jg, gamma: float, wavelength: float) -> "TransitionSpec":
        jg = HalfInt.from_value(jg)
        return cls(jg=jg, je=jg + 1, gamma=float(gamma), k=2 * np.pi / float(wavelength))


@dataclass(frozen=True)
class LineStrengthTable:
    """Exact absorption strengths and spontaneous-decay branching ratios.

    ``s_abs[i][j]`` is the strength for ground sublevel ``m = -J + i`` and
    polarization ``Q_ORDER[j]``. ``b_decay[i][j]`` is the branching ratio for
    excited sublevel ``m_e = -J_e + i`` decaying by emission of polarization
    ``Q_ORDER[j]`` to ground sublevel ``m_e - q``.
    """

    jg: HalfInt
    s_abs: tuple
    b_decay: tuple
    _float_cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def je(self) -> HalfInt:
        return self.jg + 1

    @property
    def n_ground(self) -> int:
        return self.jg.multiplicity

    def _ground_index(self, m) -> int:
        i = 2 * Fraction(m) + self.jg.twice_value
        if i.denominator != 1 or not 0 <= i <= 2 * self.jg.twice_value:
            raise ValidationError(f"m = {m} is not a sublevel of J = {self.jg}")
        return int(i) // 2

    def absorption(self, m, q: int) -> Fraction:
        return self.s_abs[self._ground_index(m)][Q_ORDER.index(q)]

    def decay(self, me, q: int) -> Fraction:
        i = 2 * Fraction(me) + self.je.twice_value
        if i.denominator != 1 or not 0 <= i <= 2 * self.je.twice_value:
            raise ValidationError(f"m_e = {me} is not a sublevel of J = {self.je}")
        return self.b_decay[int(i) // 2][Q_ORDER.index(q)]

    def absorption_array(self) -> np.ndarray:
        """Float copy of ``s_abs``, shape (2J_g+1, 3)."""
        if "s" not in self._float_cache:
            arr = np.array([[float(x) for x in row] for row in self.s_abs])
            arr.setflags(write=False)
            self._float_cache["s"] = arr
        return self._float_cache["s"]

    def generators(self) -> np.ndarray:
        """Rate-equation generators ``G[j]`` for unit intensity in polarization ``Q_ORDER[j]``.

        ``G[j][m', m]`` is the transfer rate from ground index ``m`` to ``m'``;
        the diagonal carries minus the departure rate so every column sums to 0.
        """
        if "G" not in self._float_cache:
            n = self.n_ground
            ne = self.je.multiplicity
            G = np.zeros((3, n, n))
            for j, q in enumerate(Q_ORDER):
                for i in range(n):
                    s = self.s_abs[i][j]
                    if s == 0:
                        continue
                    ie = i + q + 1  # excited index of m + q
                    G[j, i, i] -= float(s)
                    for jj, qq in enumerate(Q_ORDER):
                        dest = ie - 1 - qq
                        if 0 <= dest < n and 0 <= ie < ne:
                            G[j, dest, i] += float(s * self.b_decay[ie][jj])
            G.setflags(write=False)
            self._float_cache["G"] = G
        return self._float_cache["G"]

    def rows(self):
        """Yield ``(m, q, numerator, denominator)`` for every absorption entry."""
        for m, row in zip(self.jg.projections(), self.s_abs):
            for q, s in zip(Q_ORDER, row):
                yield m, q, s.numerator, s.denominator


def _absorption_strength(jg: HalfInt, m: Fraction, q: int) -> Fraction:
    J = jg.value
    if abs(m + q) > J + 1:
        return Fraction(0)
    den = (2 * J + 1) * (2 * J + 2)
    if q == 1:
        num = (J + m + 1) * (J + m + 2)
    elif q == -1:
        num = (J - m + 1) * (J - m + 2)
    else:
        num = 2 * (J - m + 1) * (J + m + 1)
    return Fraction(num) / den


@lru_cache(maxsize=None)
def _build_table(twice_jg: int, cap: int) -> LineStrengthTable:
    if twice_jg > cap:
        raise ValidationError(f"J_g = {Fraction(twice_jg, 2)} exceeds the supported maximum {Fraction(cap, 2)}")
    jg = HalfInt(twice_jg)
    je = jg + 1
    ms = jg.projections()
    s_abs = tuple(tuple(_absorption_strength(jg, m, q) for q in Q_ORDER) for m in ms)
    b_rows = []
    for me in je.projections():
        raw = []
        for q in Q_ORDER:
            mg = me - q
            raw.append(_absorption_strength(jg, mg, q) if abs(mg) <= jg.value else Fraction(0))
        total = sum(raw)
        b_rows.append(tuple(r / total for r in raw))
    return LineStrengthTable(jg=jg, s_abs=s_abs, b_decay=tuple(b_rows))


def line_strengths(spec, max_twice_jg: int = MAX_TWICE_JG) -> LineStrengthTable:
    """Absorption and decay table for ``spec`` (a TransitionSpec or a ground HalfInt)."""
    if isinstance(spec, TransitionSpec):
        if spec.je.twice_value != spec.jg.twice_value + 2:
            raise ValidationError("only J_e = J_g + 1 transitions are supported")
        jg = spec.jg
    else:
        jg = HalfInt.from_value(spec)
        if jg.twice_value < 1:
            raise ValidationError("trap requires J_g >= 1/2")
    return _build_table(jg.twice_value, max_twice_jg)


def sum_rule_check(table: LineStrengthTable) -> Fraction:
    """Common value of sum_q s_abs(m, q); raises if any sublevel disagrees."""
    sums = [sum(row) for row in table.s_abs]
    for m, s in zip(table.jg.projections(), sums):
        if s != sums[0]:
            raise ValidationError(f"sum rule violated at m = {m}: {s} != {sums[0]}")
    return sums[0]
