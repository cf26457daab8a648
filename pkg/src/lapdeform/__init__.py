"""Handle-based 3D deformation with learned, FEM, and baseline Laplacians.

The pipeline: assemble (or predict) a shape Laplacian L and inverse mass
M^-1, form the deformation energy A = L M^-1 L, solve per-handle bounded
biharmonic weights, and pose the shape with linear blend skinning.

Submodules touching scikit-learn or the learning stack load lazily so the
lightweight geometry/FEM/solver path stays cheap to import.
"""

from .geometry import KnnIndex, PointCloud, SurfaceMesh, TetMesh, build_knn, surface_of
from .synth import synth_shape, two_bars
from .fem import (
    DiagMatrix,
    SparseSymMatrix,
    cotan_laplacian,
    deformation_energy,
    inverse_mass,
    lumped_mass,
)
from .bbw import HandleSet, QpReport, check_weights, normalize_rows, solve_bbw
from .deform import AffineTransform, handles_from_fps, lbs_deform
from . import errors, io

__version__ = "0.1.0"

_LAZY = {
    "knn_graph_laplacian": ("lapdeform.pcl", "knn_graph_laplacian"),
    "KnnGraphLaplacian": ("lapdeform.pcl", "KnnGraphLaplacian"),
    "LaplacianLearner": ("lapdeform.laplearn", "LaplacianLearner"),
    "LapNetParams": ("lapdeform.laplearn", "LapNetParams"),
    "Prediction": ("lapdeform.laplearn", "Prediction"),
    "kps": ("lapdeform.laplearn", "kps"),
    "save_model": ("lapdeform.laplearn", "save_model"),
    "load_model": ("lapdeform.laplearn", "load_model"),
    "weight_l1": ("lapdeform.metrics", "weight_l1"),
    "chamfer": ("lapdeform.metrics", "chamfer"),
    "hausdorff": ("lapdeform.metrics", "hausdorff"),
    "eval_pipeline": ("lapdeform.metrics", "eval_pipeline"),
}


def __getattr__(name):
    if name in _LAZY:
        import importlib

        module_name, attr = _LAZY[name]
        value = getattr(importlib.import_module(module_name), attr)
        globals()[name] = value
        return value
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "PointCloud",
    "TetMesh",
    "SurfaceMesh",
    "KnnIndex",
    "build_knn",
    "surface_of",
    "synth_shape",
    "two_bars",
    "SparseSymMatrix",
    "DiagMatrix",
    "cotan_laplacian",
    "lumped_mass",
    "inverse_mass",
    "deformation_energy",
    "HandleSet",
    "QpReport",
    "solve_bbw",
    "check_weights",
    "normalize_rows",
    "AffineTransform",
    "lbs_deform",
    "handles_from_fps",
    "knn_graph_laplacian",
    "KnnGraphLaplacian",
    "LaplacianLearner",
    "LapNetParams",
    "Prediction",
    "kps",
    "save_model",
    "load_model",
    "weight_l1",
    "chamfer",
    "hausdorff",
    "eval_pipeline",
    "errors",
    "io",
]
