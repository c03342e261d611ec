"""Semiclassical simulator of a magnetic-field-free optical-pumping radiation-pressure trap."""
from .angular import HalfInt, LineStrengthTable, TransitionSpec, line_strengths, sum_rule_check
from .config import RunConfig, parse_config
from .dynamics import CloudStats, SimParams, escape_fraction, run_ensemble
from .errors import (DegenerateSteadyStateError, FocusSingularityError, NumericalError,
                     OutsideIlluminatedRegionError, TroopError, ValidationError)
from .estimator import CloudSimulator, TroopTrap
from .force import ForceSample, TrapModel, force_at, radiation_force, single_wave_force
from .optics import Beam, BeamSet, LocalField, aggregate_field, anisotropy_axis, beam_local, polarization_fractions
from .pumping import GroundPopulations, PumpContext, steady_state, transfer_matrix
from .trapchar import TrapCharacterization, characterize, earnshaw_flux, friction, mu_extract, scan, stiffness

__version__ = "0.1.0"
