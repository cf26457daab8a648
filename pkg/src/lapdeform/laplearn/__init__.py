from .params import LapNetParams
from .network import (
    Prediction,
    encode,
    forward,
    kps,
    loss_terms,
    loss_and_grad,
    pair_feature,
    predict,
    predict_pair,
)
from .train import TrainConfig, ShapeSample, kps_coverage, prepare_sample, train, dataset_from_meshes
from .model_io import save_model, load_model
from .estimator import LaplacianLearner

__all__ = [
    "LapNetParams",
    "Prediction",
    "encode",
    "forward",
    "kps",
    "loss_terms",
    "loss_and_grad",
    "pair_feature",
    "predict",
    "predict_pair",
    "TrainConfig",
    "ShapeSample",
    "prepare_sample",
    "train",
    "dataset_from_meshes",
    "kps_coverage",
    "save_model",
    "load_model",
    "LaplacianLearner",
]
