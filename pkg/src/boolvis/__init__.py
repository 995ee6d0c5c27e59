"""Visibility in the Poisson Boolean model: simulation, coverage tests and asymptotic formulas."""

from .geometry import ArcInterval, Cap, Disc, Obstacle, RotatedPolygon
from .model import ConstantDisc, DiscreteDisc, ModelConfig, ObstacleSet, RotatedPolygonLaw, extend, sample
from .visibility import Exact, Interval, UnboundedBeyond, total_visibility_2d, total_visibility_3d

__version__ = "0.1.0"

__all__ = [
    "ArcInterval",
    "Cap",
    "Disc",
    "Obstacle",
    "RotatedPolygon",
    "ConstantDisc",
    "DiscreteDisc",
    "ModelConfig",
    "ObstacleSet",
    "RotatedPolygonLaw",
    "extend",
    "sample",
    "Exact",
    "Interval",
    "UnboundedBeyond",
    "total_visibility_2d",
    "total_visibility_3d",
]
