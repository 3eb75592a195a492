"""Piecewise-constant and piecewise-linear manifold reconstruction.

Fits k-means and k-flats models to manifold-supported point clouds,
estimates expected reconstruction error on hold-out data, evaluates the
closed-form parameter schedules and error bounds, and runs the desk-scale
tradeoff / rate experiments.
"""

from . import bounds, geometry, harness, kflats, kmeans, oracle, storage
from .errors import DataFormatError, EnumerationLimitError, ParameterError
from .geometry import Dataset, ManifoldSpec
from .kflats import Flat, FlatsModel
from .kmeans import FitConfig, MeansModel

__version__ = "0.1.0"

__all__ = [
    "Dataset", "ManifoldSpec", "FitConfig", "MeansModel", "Flat",
    "FlatsModel", "ParameterError", "DataFormatError",
    "EnumerationLimitError", "bounds", "geometry", "harness", "kflats",
    "kmeans", "oracle", "storage",
]
