"""Coarse geometry toolkit: quotient towers, metric covers, Rips skeletons,
expander diagnostics and a finite engine for controlled module categories."""

from .covers import MetricCoverMap, max_cover_radius, verify_cover_radius
from .groups import FiniteGroup, FinGenGroup, QuotientTower
from .metric import FiniteMetricSpace, GroupAction
from .modules import ControlledMorphism, GeometricModule

__version__ = "0.1.0"

__all__ = [
    "ControlledMorphism",
    "FinGenGroup",
    "FiniteGroup",
    "FiniteMetricSpace",
    "GeometricModule",
    "GroupAction",
    "MetricCoverMap",
    "QuotientTower",
    "max_cover_radius",
    "verify_cover_radius",
]
