"""
插值模块测试
极点基最小二乘插值与倒数样条插值
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from core.interp import (
    chebyshev_pole_nodes,
    default_base_cutoff,
    default_n_interp,
    dense_segment,
    eval_pole_interpolant,
    fit_pole_weights,
    fit_reciprocal_spline,
    interpolation_error,
    pole_basis_matrix,
    reciprocal_base_nodes,
)
from core.model import add_noise, average_magnitude, eval_green, load_reference_model, synthesize
from utils import (
    DeltaModel,
    DomainError,
    InvalidArgumentError,
    MatsubaraDataset,
    PoleModel,
    ZeroSampleError,
    matsubara_points,
)


class TestChebyshevNodes:
    def test_four_nodes(self):
        assert_allclose(chebyshev_pole_nodes(0.1, 4), [0.1, 0.2, -0.2, -0.1], rtol=1e-14)

    def test_two_nodes(self):
        assert_allclose(chebyshev_pole_nodes(1.0, 2), [1.0, -1.0])

    def test_large_set(self):
        nodes = chebyshev_pole_nodes(0.05, 128)
        assert nodes.size == 128
        assert np.min(np.abs(nodes)) == pytest.approx(0.05)
        assert np.max(np.abs(nodes)) == pytest.approx(0.05 / np.cos(63 * np.pi / 127))

    def test_exact_antisymmetry(self):
        nodes = chebyshev_pole_nodes(0.3, 64)
        assert_array_equal(nodes, -nodes[::-1])
        assert np.all(np.abs(nodes) >= 0.3)

    @pytest.mark.parametrize("epsilon, n_interp", [(0.1, 5), (0.1, 0), (0.0, 4), (-0.1, 4)])
    def test_invalid(self, epsilon, n_interp):
        with pytest.raises(InvalidArgumentError):
            chebyshev_pole_nodes(epsilon, n_interp)


class TestPoleBasisFit:
    def test_recovers_weights_in_span(self):
        nodes = chebyshev_pole_nodes(0.5, 6)
        weights = np.array([1.0, 0.5, 2.0, 0.25, 1.5, 0.75])
        model = DeltaModel(atoms=[{"location": x, "weight": w} for x, w in zip(nodes, weights)])
        dataset = synthesize(model, 10.0, 32, 0.0, 0)

        interp = fit_pole_weights(dataset, nodes, svd_cutoff=1e-14)
        assert interp.retained_rank == 6
        assert_allclose(interp.weights, weights, rtol=1e-6)
        assert interp.residual <= 1e-10 * np.linalg.norm(dataset.samples)

    def test_literal_system_without_reflection(self, molecule_dataset):
        nodes = chebyshev_pole_nodes(1.0, 16)
        interp = fit_pole_weights(molecule_dataset, nodes, reflect=False)
        assert not interp.reflected
        assert interp.n_interp == 16

    def test_noise_free_accuracy_on_segment(self):
        model = load_reference_model("molecule_gap_0.1")
        dataset = synthesize(model, 100.0, 128, 0.0, 0)
        n_interp = default_n_interp(dataset.n_points, dataset.b / 0.1)
        interp = fit_pole_weights(dataset, chebyshev_pole_nodes(0.1, n_interp), svd_cutoff=1e-12)

        dense = dense_segment(-dataset.b, dataset.b)
        error = interpolation_error(interp, lambda z: eval_green(model, z), dense)
        assert error <= 1e-8
        assert interp(0.0) == pytest.approx(eval_green(model, 0.0), rel=1e-7)

    def test_refinement_error_decreases(self):
        model = load_reference_model("molecule_gap_0.1")
        dataset = synthesize(model, 100.0, 128, 0.0, 0)
        dense = dense_segment(-dataset.b, dataset.b, 2000)

        errors = []
        for n_interp in (32, 64, 128, 256):
            interp = fit_pole_weights(dataset, chebyshev_pole_nodes(0.1, n_interp))
            errors.append(interpolation_error(interp, lambda z: eval_green(model, z), dense))
        for coarse, fine in zip(errors, errors[1:]):
            assert fine <= 10 * coarse
        assert errors[-1] < errors[0]

    def test_residual_stays_above_noise(self):
        # σ 噪声下每点残差的中位数不应远低于 σ·M
        model = load_reference_model("molecule_gap_0.1")
        sigma = 1e-4
        clean = synthesize(model, 100.0, 128, 0.0, 0)
        nodes = chebyshev_pole_nodes(0.1, default_n_interp(clean.n_points, clean.b / 0.1))
        magnitude = average_magnitude(clean.samples)

        per_sample = []
        for seed in range(20):
            interp = fit_pole_weights(add_noise(clean, sigma, seed), nodes)
            per_sample.append(interp.residual / np.sqrt(clean.n_points))
        assert np.median(per_sample) >= sigma * magnitude / 10

    def test_chunked_evaluation_matches_dense_product(self, molecule_dataset):
        interp = fit_pole_weights(molecule_dataset, chebyshev_pole_nodes(1.0, 16))
        z = dense_segment(-molecule_dataset.b, molecule_dataset.b, 2500)
        assert_allclose(interp(z), pole_basis_matrix(z, interp.nodes) @ interp.weights, rtol=1e-10)

    def test_evaluation_domain(self, molecule_dataset):
        interp = fit_pole_weights(molecule_dataset, chebyshev_pole_nodes(1.0, 8))
        inside = eval_pole_interpolant(interp, 0.5j * molecule_dataset.b)
        assert np.isfinite(inside)
        # 略超出区间仍可求值，超出 2b 拒绝
        assert np.isfinite(interp(1.5j * molecule_dataset.b))
        with pytest.raises(DomainError):
            interp(3j * molecule_dataset.b)

    def test_invalid_nodes(self, molecule_dataset):
        with pytest.raises(InvalidArgumentError):
            fit_pole_weights(molecule_dataset, np.array([0.0, 1.0]))

    def test_basis_matrix(self):
        matrix = pole_basis_matrix(np.array([1j]), np.array([1.0, -1.0]))
        assert_allclose(matrix[0], [1 / (2 * np.pi * (1j - 1)), 1 / (2 * np.pi * (1j + 1))])


class TestReciprocalSpline:
    def test_interpolates_data(self, quasiparticles):
        dataset = synthesize(quasiparticles, 100.0, 256, 0.0, 0)
        interp = fit_reciprocal_spline(dataset)
        assert_allclose(interp(dataset.points), dataset.samples, rtol=1e-10)

    def test_exact_for_linear_reciprocal(self):
        # G = 1/(z + 2i)：H = z + 2i 为线性函数，样条精确
        model = PoleModel(poles=[{"location": (0.0, -2.0), "weight": (2 * np.pi, 0.0)}])
        dataset = synthesize(model, 10.0, 20, 0.0, 0)
        interp = fit_reciprocal_spline(dataset, order=5)
        dense = dense_segment(dataset.a, dataset.b, 1000)
        assert interpolation_error(interp, lambda z: eval_green(model, z), dense) <= 1e-10

    def test_matches_quasiparticles_between_knots(self, quasiparticles):
        dataset = synthesize(quasiparticles, 100.0, 256, 0.0, 0)
        interp = fit_reciprocal_spline(dataset)
        truth = lambda z: eval_green(quasiparticles, z)

        dense = dense_segment(dataset.a, dataset.b)
        assert interpolation_error(interp, truth, dense) <= 1e-8
        midpoint = 0.5 * (dataset.points[0] + dataset.points[1])
        assert interp(midpoint) == pytest.approx(truth(midpoint), rel=1e-8)

    def test_deflation_improves_plain_spline(self, quasiparticles):
        dataset = synthesize(quasiparticles, 100.0, 256, 0.0, 0)
        truth = lambda z: eval_green(quasiparticles, z)
        dense = dense_segment(dataset.a, dataset.b, 2000)

        plain = fit_reciprocal_spline(dataset, deflate=False)
        deflated = fit_reciprocal_spline(dataset)
        assert plain.base is None
        assert deflated.base.retained_rank >= 1
        assert interpolation_error(deflated, truth, dense) < interpolation_error(plain, truth, dense)

    def test_linear_reciprocal_skips_node_fit(self):
        model = PoleModel(poles=[{"location": (0.0, -2.0), "weight": (2 * np.pi, 0.0)}])
        dataset = synthesize(model, 10.0, 20, 0.0, 0)
        base = fit_reciprocal_spline(dataset).base
        assert base.retained_rank == 0
        assert_allclose(base.coeffs[:2], [2j, 1.0], atol=1e-12)

    def test_endpoints_inclusive(self, quasiparticles):
        dataset = synthesize(quasiparticles, 100.0, 64, 0.0, 0)
        interp = fit_reciprocal_spline(dataset)
        assert interp(1j * dataset.a) == pytest.approx(dataset.samples[0], rel=1e-10)
        assert interp(1j * dataset.b) == pytest.approx(dataset.samples[-1], rel=1e-10)

    def test_no_extrapolation(self, quasiparticles):
        dataset = synthesize(quasiparticles, 100.0, 64, 0.0, 0)
        interp = fit_reciprocal_spline(dataset)
        with pytest.raises(DomainError):
            interp(1j * dataset.b * 1.01)
        with pytest.raises(DomainError):
            interp(0.5j * dataset.a)

    def test_zero_sample(self, quasiparticles):
        dataset = synthesize(quasiparticles, 100.0, 16, 0.0, 0)
        samples = np.array(dataset.samples)
        samples[3] = 0.0
        broken = dataset.with_samples(samples, noise_sigma=None, seed=None)
        with pytest.raises(ZeroSampleError, match="reciprocal step: zero sample at n=4"):
            fit_reciprocal_spline(broken)

    @pytest.mark.parametrize("order", [2, 3, 4])
    def test_any_positive_order_interpolates(self, quasiparticles, order):
        dataset = synthesize(quasiparticles, 100.0, 16, 0.0, 0)
        interp = fit_reciprocal_spline(dataset, order=order)
        assert interp.order == order
        assert_allclose(interp(dataset.points), dataset.samples, rtol=1e-10)

    @pytest.mark.parametrize("order", [0, -1, 2.5])
    def test_invalid_order(self, quasiparticles, order):
        dataset = synthesize(quasiparticles, 100.0, 16, 0.0, 0)
        with pytest.raises(InvalidArgumentError):
            fit_reciprocal_spline(dataset, order=order)

    def test_too_few_points(self, quasiparticles):
        dataset = synthesize(quasiparticles, 100.0, 4, 0.0, 0)
        with pytest.raises(InvalidArgumentError):
            fit_reciprocal_spline(dataset, order=5)


def test_default_n_interp():
    assert default_n_interp(128) == 128
    assert default_n_interp(300) == 300
    assert default_n_interp(5) == 6
    b = 255 * np.pi / 100
    assert default_n_interp(128, b / 0.1) == 1924
    assert default_n_interp(128, b / 0.05) == 3846
    assert default_n_interp(128, 1e4) == 8192


def test_reciprocal_base_nodes():
    nodes = reciprocal_base_nodes(0.1, 10.0)
    assert_allclose(nodes, -nodes[::-1], atol=1e-15)
    assert 0.0 in nodes
    assert np.max(nodes) >= 1000.0
    assert np.max(nodes) <= 1.2e3
    assert_allclose(np.diff(np.arcsinh(nodes / 0.1)), 0.125)
    with pytest.raises(InvalidArgumentError):
        reciprocal_base_nodes(1.0, 0.5)


def test_base_cutoff_follows_noise():
    assert default_base_cutoff(None) == 1e-8
    assert default_base_cutoff(0.0) == 1e-12
    assert default_base_cutoff(1e-3) == 1e-3


def test_dataset_rejects_foreign_grid():
    with pytest.raises(ValueError):
        MatsubaraDataset(
            beta=10.0,
            n_points=2,
            points=matsubara_points(20.0, 2),
            samples=[1.0, 1.0],
        )
