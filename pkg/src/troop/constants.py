"""
Physical constants and cesium D2 line data.

Fundamental constants come from ``scipy.constants`` (CODATA 2018).

Cesium values follow D. A. Steck, "Cesium D Line Data" (rev. 2.2.1, 2019):

- D2 vacuum wavelength 852.34727582 nm
- natural linewidth Gamma / 2pi = 5.234 MHz
- atomic mass 132.905451961 u
"""
from scipy import constants as _c

HBAR = _c.hbar
KB = _c.k
AMU = _c.atomic_mass
G_ACCEL = _c.g

CS_WAVELENGTH = 852.34727582e-9  # m
CS_LINEWIDTH_HZ = 5.234e6  # Gamma / 2pi
CS_GAMMA = 2 * _c.pi * CS_LINEWIDTH_HZ  # rad/s
CS_MASS = 132.905451961 * AMU  # kg
CS_JG_TWICE = 8  # F = 4 -> F' = 5

# trap geometry used in the experiment
FOCUS_DISTANCE = 3.5e-2  # m
HALF_ANGLE_DEG = 22.0
DETUNING_GAMMA = -2.0
RABI_GAMMA = 0.8
