import numpy as np
import pytest

from lapdeform import KnnGraphLaplacian, PointCloud, knn_graph_laplacian
from lapdeform.errors import DegenerateCloud


def test_two_point_kernel_closed_form():
    d = 0.7
    cloud = PointCloud([[0, 0, 0], [d, 0, 0]])
    lap, mass = knn_graph_laplacian(cloud, k=1, bandwidth=d)
    dense = lap.to_dense()
    expect = np.exp(-0.5)
    assert dense[0, 1] == pytest.approx(expect, rel=1e-15)
    assert dense[0, 0] == pytest.approx(-expect, rel=1e-15)
    assert np.all(mass.values > 0)


def test_structural_invariants(rng):
    cloud = PointCloud(rng.uniform(-1, 1, (50, 3)))
    lap, mass = knn_graph_laplacian(cloud, k=6)
    dense = lap.to_dense()
    np.testing.assert_array_equal(dense, dense.T)
    assert np.abs(dense.sum(axis=1)).max() < 1e-12
    assert np.all(mass.values > 0)


def test_grid_energy_psd(rng):
    from lapdeform import deformation_energy, inverse_mass

    xs = np.linspace(-0.5, 0.5, 4)
    grid = np.array([[x, y, z] for x in xs for y in xs for z in xs])
    cloud = PointCloud(grid)
    lap, mass = knn_graph_laplacian(cloud, k=6)
    a = deformation_energy(lap, inverse_mass(mass)).to_dense()
    fro = np.linalg.norm(a)
    for _ in range(200):
        x = rng.normal(size=len(grid))
        assert x @ a @ x >= -1e-10 * fro * (x @ x)


def test_duplicate_points_degenerate():
    cloud = PointCloud([[0, 0, 0], [0, 0, 0], [0, 0, 0]])
    with pytest.raises(DegenerateCloud):
        knn_graph_laplacian(cloud, k=1)


def test_k_bounds():
    cloud = PointCloud([[0, 0, 0], [1, 0, 0]])
    with pytest.raises(DegenerateCloud):
        knn_graph_laplacian(cloud, k=2)


def test_estimator_wrapper(rng):
    cloud = PointCloud(rng.uniform(-1, 1, (20, 3)))
    est = KnnGraphLaplacian(k=4)
    assert est.get_params()["k"] == 4
    lap, mass = est.fit().transform(cloud)
    assert lap.n == 20 and mass.n == 20
