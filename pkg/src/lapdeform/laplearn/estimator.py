"""Estimator facade over the training loop and predictor."""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..geometry import PointCloud, TetMesh
from .model_io import load_model, save_model
from .network import predict
from .params import HEAD_HIDDEN
from .train import TrainConfig, dataset_from_meshes, train


class LaplacianLearner(BaseEstimator):
    """Learns Laplacian entries and inverse masses from point clouds.

    fit() consumes (PointCloud, L_gt, Minv_gt) triples (or TetMesh fixtures,
    from which ground truth is assembled); predict() returns a Prediction
    with the assembled Laplacian and inverse mass for a new cloud.
    """

    def __init__(
        self,
        d=64,
        head_hidden=HEAD_HIDDEN,
        k=32,
        lambda_w=100.0,
        lambda_minv=1.0,
        lr=0.1,
        poly_power=0.9,
        epochs=200,
        batch_size=8,
        momentum=0.9,
        dropout=0.1,
        seed=0,
        c_m=None,
        clip_norm=1.0,
        gate_threshold=None,
    ):
        self.d = d
        self.head_hidden = head_hidden
        self.k = k
        self.lambda_w = lambda_w
        self.lambda_minv = lambda_minv
        self.lr = lr
        self.poly_power = poly_power
        self.epochs = epochs
        self.batch_size = batch_size
        self.momentum = momentum
        self.dropout = dropout
        self.seed = seed
        self.c_m = c_m
        self.clip_norm = clip_norm
        self.gate_threshold = gate_threshold

    def _config(self):
        return TrainConfig(
            lambda_w=self.lambda_w,
            lambda_minv=self.lambda_minv,
            batch_size=self.batch_size,
            lr=self.lr,
            poly_power=self.poly_power,
            epochs=self.epochs,
            seed=self.seed,
            dropout=self.dropout,
            momentum=self.momentum,
            k=self.k,
            c_m=self.c_m,
            d=self.d,
            head_hidden=tuple(self.head_hidden),
            clip_norm=self.clip_norm,
        )

    def fit(self, X, y=None):
        """X: list of (PointCloud, L_gt, Minv_gt) triples or TetMesh list."""
        if X and isinstance(X[0], TetMesh):
            X = dataset_from_meshes(X)
        result = train(X, self._config())
        self.params_ = result.params
        self.c_m_ = result.c_m
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        self.best_loss_ = result.best_loss
        return self

    def predict(self, cloud: PointCloud):
        self._check_fitted()
        return predict(
            cloud,
            self.params_,
            k=self.k,
            c_m=self.c_m_,
            gate_threshold=self.gate_threshold,
        )

    def save(self, path):
        self._check_fitted()
        save_model(self.params_, path, k=self.k, c_m=self.c_m_)

    @classmethod
    def from_file(cls, path):
        params, k, c_m = load_model(path)
        est = cls(d=params.d, head_hidden=params.head_hidden, k=k)
        est.params_ = params
        est.c_m_ = c_m
        est.history_ = []
        return est

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("LaplacianLearner is not fitted; call fit() or from_file()")
