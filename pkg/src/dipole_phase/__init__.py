"""Geometric phase of an electric dipole passing a distant magnetic flux sheet."""

from .core import CONST, CONSTANTS_VERSION, PhysicalConstants, Trajectory, segment_sample
from .errors import (
    ConfigError,
    DipolePhaseError,
    NonConvergence,
    NonFiniteSample,
    OpenPathError,
    OverlapViolation,
    SingularPoint,
)
from .fieldmom import PointCharge, SlabFieldConfig, field_momentum, field_momentum_thin_sheet
from .phase import PhaseResult, geometric_phase_endpoint, geometric_phase_path, hmw_phase, phi_g_sheet
from .quadrature import IntegrationRegion, QuadratureResult, integrate_3d, integrate_line

__version__ = "0.1.0"
