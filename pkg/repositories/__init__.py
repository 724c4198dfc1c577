"""
Repository layer for srmkit.
File formats for matrices, models, reports, activation manifests and specs.
"""

from repositories.base_repository import BaseRepository
from repositories.matrix_repository import MatrixRepository
from repositories.report_repository import ReportRepository
from repositories.model_repository import ModelRepository
from repositories.activation_repository import ActivationRepository
from repositories.spec_repository import SpecRepository

__all__ = [
    'BaseRepository',
    'MatrixRepository',
    'ReportRepository',
    'ModelRepository',
    'ActivationRepository',
    'SpecRepository',
]
