"""Vertex stability ranking for triangle meshes.

Implements the OSVETA weighted-criteria ranking, its neural successor, and
a quadric-error decimation channel for validating carrier selections.
"""

from .mesh import (Mesh, TopologyIndex, build_topology, classify_risky,
                   load_mesh, dump_mesh, read_mesh, write_mesh, validate)
from .curvature import VertexDescriptors, compute_descriptors
from .ranking import (DEFAULT_CRITERIA, StabilityRanking, evaluate_criteria,
                      rank_osveta, rank_vertices, select_top, stability_scores)
from .neuro import FnnModel, forward, gradients, initial_model, rank_neuro, train
from .decimate import DecimationTrace, decimate, gaussian_perturb, survival_depth
from .harness import SurvivalReport, emit_report, make_training_set, run_survival_experiment

__version__ = "0.1.0"

__all__ = [
    "Mesh", "TopologyIndex", "build_topology", "classify_risky", "load_mesh",
    "dump_mesh", "read_mesh", "write_mesh", "validate",
    "VertexDescriptors", "compute_descriptors",
    "DEFAULT_CRITERIA", "StabilityRanking", "evaluate_criteria", "rank_osveta",
    "rank_vertices", "select_top", "stability_scores",
    "FnnModel", "forward", "gradients", "initial_model", "rank_neuro", "train",
    "DecimationTrace", "decimate", "gaussian_perturb", "survival_depth",
    "SurvivalReport", "emit_report", "make_training_set", "run_survival_experiment",
    "__version__",
]
