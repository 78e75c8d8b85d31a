"""Behavioral simulator of phase-change photonic memory cells and an analog
in-memory computing engine built from them."""

from .calibration import DeviceProfile, builtin_profile, load_profile, save_profile
from .device_cell import FIG3A, FIG4, CellCalibration, CellGeometry, CellState, PhotonicCell
from .errors import DimensionError, NotSPDError, ProfileError, ProtocolError
from .noise import NoiseModel, derive_seed, make_rng
from .scalar_mult import OperandMapping, multiply
from .solver import LinearSystem, SolverConfig, cg, gmres, mixed_precision_solve, solve

__version__ = "0.1.0"

__all__ = [
    "CellCalibration", "CellGeometry", "CellState", "DeviceProfile", "DimensionError",
    "FIG3A", "FIG4", "LinearSystem", "NoiseModel", "NotSPDError", "OperandMapping",
    "PhotonicCell", "ProfileError", "ProtocolError", "SolverConfig", "builtin_profile",
    "cg", "derive_seed", "gmres", "load_profile", "make_rng", "mixed_precision_solve",
    "multiply", "save_profile", "solve",
]
