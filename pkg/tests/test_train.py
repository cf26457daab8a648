import numpy as np
import pytest

from lapdeform import synth_shape
from lapdeform.errors import DivergedLoss
from lapdeform.laplearn import TrainConfig, dataset_from_meshes, train
from lapdeform.laplearn.train import save_history_csv


@pytest.fixture(scope="module")
def bar_dataset():
    return dataset_from_meshes([synth_shape("bar", 3, 0)])


def _small_config(**kw):
    base = dict(epochs=40, lr=0.02, dropout=0.0, seed=0, k=32)
    base.update(kw)
    return TrainConfig(**base)


def test_best_so_far_nonincreasing(bar_dataset):
    result = train(bar_dataset, _small_config())
    totals = [row["total"] for row in result.history]
    best = np.minimum.accumulate(totals)
    assert np.all(np.diff(best) <= 0)
    assert result.best_loss == best[-1]
    assert result.best_epoch >= 0


def test_training_deterministic(bar_dataset):
    a = train(bar_dataset, _small_config(dropout=0.1))
    b = train(bar_dataset, _small_config(dropout=0.1))
    np.testing.assert_array_equal(a.params.flat, b.params.flat)
    assert a.history == b.history
    assert a.c_m == b.c_m


def test_training_reduces_loss(bar_dataset):
    result = train(bar_dataset, _small_config(epochs=150))
    assert result.best_loss < result.history[0]["total"] * 0.5


def test_c_m_from_dataset(bar_dataset):
    _, _, minv = bar_dataset[0]
    result = train(bar_dataset, _small_config(epochs=2))
    assert result.c_m == pytest.approx(1.5 * minv.values.max())
    forced = train(bar_dataset, _small_config(epochs=2, c_m=42.0))
    assert forced.c_m == 42.0


def test_diverged_loss_carries_checkpoint(bar_dataset):
    # an absurd learning rate without clipping overflows activations to
    # inf, and gate * value becomes 0 * inf = NaN
    cfg = _small_config(epochs=10, lr=1e155, clip_norm=0.0)
    with np.errstate(all="ignore"):
        with pytest.raises(DivergedLoss) as err:
            train(bar_dataset, cfg)
    assert hasattr(err.value, "result")
    assert np.isfinite(err.value.result.params.flat).all()


def test_history_csv(tmp_path, bar_dataset):
    result = train(bar_dataset, _small_config(epochs=3))
    path = tmp_path / "hist.csv"
    save_history_csv(result.history, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,total,L_term,W_term,M_term"
    assert len(lines) == 4


def test_multi_shape_batching():
    meshes = [synth_shape("bar", 2, s) for s in range(3)]
    dataset = dataset_from_meshes(meshes)
    result = train(dataset, _small_config(epochs=5, batch_size=2))
    assert len(result.history) == 5
    assert np.isfinite(result.params.flat).all()
