"""
Service layer for srmkit.
Statistics, RSMs, the SRM solver, simulation and evaluation.
"""

from services.srm_service import fit_srm, transform, variance_explained, srm_objective
from services.simulation_service import SimulationService
from services.evaluation_service import EvaluationService

__all__ = [
    'fit_srm',
    'transform',
    'variance_explained',
    'srm_objective',
    'SimulationService',
    'EvaluationService',
]
