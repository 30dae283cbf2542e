"""
MP-Viz - Multi-objective Design Maps

Generate SRM design candidates with NSGA-II over an analytical surrogate, map
them to 2-D/3-D with t-SNE, PCA or Isomap, score the maps and pick one
representative design per cluster.
"""

try:
    from ._version import version as __version__
except ImportError:
    __version__ = "0.1.0"
__author__ = "MP-Viz Contributors"
__license__ = "MIT"

from .affinity import AffinityMatrix, joint_affinities
from .baselines import isomap, pca_project
from .dataset import CandidateSet, Embedding, load_candidates, save_candidates, standardize
from .errors import MpVizError
from .metrics import QualityReport, kmeans, trustworthiness
from .nsga2 import nsga2_generate
from .surrogate import ConstraintThresholds, SurrogateProblem
from .tsne import TsneConfig, run_tsne

__all__ = [
    "AffinityMatrix",
    "CandidateSet",
    "ConstraintThresholds",
    "Embedding",
    "MpVizError",
    "QualityReport",
    "SurrogateProblem",
    "TsneConfig",
    "isomap",
    "joint_affinities",
    "kmeans",
    "load_candidates",
    "nsga2_generate",
    "pca_project",
    "run_tsne",
    "save_candidates",
    "standardize",
    "trustworthiness",
]
