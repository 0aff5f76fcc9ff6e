"""Unique normal forms of area-preserving maps near resonant elliptic fixed points."""
from .family import family_normal_form
from .interpolation import interpolate
from .lie import MapJet, time_one_map
from .birkhoff import birkhoff_normalize
from .pipeline import normalize_family_map, normalize_map
from .scalars import EXACT, FloatField, QQi, field_for
from .series import FormalSeries, ResonanceContext, delta_order, grade_slice, resonant_projection
from .unique_nf import unique_normal_form

__version__ = "0.1.0"

__all__ = [
    "EXACT",
    "FloatField",
    "FormalSeries",
    "MapJet",
    "QQi",
    "ResonanceContext",
    "birkhoff_normalize",
    "delta_order",
    "family_normal_form",
    "field_for",
    "grade_slice",
    "interpolate",
    "normalize_family_map",
    "normalize_map",
    "resonant_projection",
    "time_one_map",
    "unique_normal_form",
]
