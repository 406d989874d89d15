"""Functional information geometry for time series."""

__version__ = "0.1.0"

from .basis import BasisSpec, FourierBasis, fit_domain  # noqa: E402
from .config import PipelineConfig  # noqa: E402
from .dig import DIGDistance, dig_distance_matrix  # noqa: E402
from .distance import (DistanceMatrix, FIGDistance, euclidean_distance_matrix,  # noqa: E402
                       fig_distance_matrix)
from .embed import DiffusionEmbedding, Embedding, embed  # noqa: E402
from .evaluation import mantel, noise_sweep, window_sweep, benchmark_distance_stage  # noqa: E402
from .exceptions import (DisconnectedPoint, IdenticalPoints, InvalidConfig,  # noqa: E402
                         InvalidData, UndefinedCorrelation)
from .features import WindowedFeatures, compute_features  # noqa: E402
from .pipeline import FIG  # noqa: E402
from .simulation import simulate_sphere_walk, simulate_staged_surrogate  # noqa: E402

__all__ = [
    "BasisSpec", "DIGDistance", "DiffusionEmbedding", "DisconnectedPoint", "DistanceMatrix",
    "Embedding", "FIG", "FIGDistance", "FourierBasis", "IdenticalPoints", "InvalidConfig",
    "InvalidData", "PipelineConfig", "UndefinedCorrelation", "WindowedFeatures",
    "benchmark_distance_stage", "compute_features", "dig_distance_matrix", "embed",
    "euclidean_distance_matrix", "fig_distance_matrix", "fit_domain", "mantel", "noise_sweep",
    "simulate_sphere_walk", "simulate_staged_surrogate", "window_sweep",
]
