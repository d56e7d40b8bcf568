"""Certified dual bounds for graph-partitioning problems whose objectives sum
an increasing probit curve over ratios of partition-aggregated weights."""

from .instance import (Assignment, Instance, Node, grid_instance,
                       load_instance, save_instance)
from .probit import ProbitCurve, objective_spec, true_objective

__all__ = [
    "Assignment",
    "Instance",
    "Node",
    "ProbitCurve",
    "grid_instance",
    "load_instance",
    "objective_spec",
    "save_instance",
    "true_objective",
]

__version__ = "0.1.0"
