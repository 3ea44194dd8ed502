"""
正问题模块测试
网格、格林函数求值、噪声模型与参考模型
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.integrate import trapezoid

from core.model import (
    add_noise,
    average_magnitude,
    complex_normal,
    eval_green,
    eval_green_gaussian,
    eval_green_rational,
    load_reference_model,
    load_reference_models,
    matsubara_grid,
    parse_model,
    spectral_density,
    synthesize,
    total_mass,
)
from utils import DeltaModel, GaussianMixture, InvalidArgumentError, PoleEvaluationError


class TestMatsubaraGrid:
    def test_last_point(self):
        grid = matsubara_grid(100.0, 128)
        assert grid.shape == (128,)
        assert grid[-1].imag == pytest.approx(255 * np.pi / 100)
        assert grid[-1].imag == pytest.approx(8.01106, abs=1e-5)

    def test_grid_is_exact(self):
        for beta, n in [(1.0, 1), (10.0, 7), (100.0, 256)]:
            grid = matsubara_grid(beta, n)
            expected = np.array([(2 * k - 1) * np.pi / beta for k in range(1, n + 1)])
            assert_array_equal(grid.real, 0.0)
            assert_allclose(grid.imag, expected, rtol=0, atol=4 * np.finfo(float).eps * expected[-1])

    @pytest.mark.parametrize("beta, n", [(0.0, 4), (-1.0, 4), (10.0, 0), (10.0, 2.5)])
    def test_invalid_arguments(self, beta, n):
        with pytest.raises(InvalidArgumentError):
            matsubara_grid(beta, n)


class TestRationalGreen:
    def test_single_atom(self):
        model = DeltaModel(atoms=[{"location": 1.0, "weight": 2 * np.pi}])
        assert eval_green_rational(model, 1j) == pytest.approx(1.0 / (1j - 1.0))

    def test_vectorized_shape(self, two_atom_model):
        z = matsubara_grid(10.0, 5).reshape(5, 1)
        values = eval_green_rational(two_atom_model, z)
        assert values.shape == (5, 1)

    def test_coincident_pole(self, two_atom_model):
        with pytest.raises(PoleEvaluationError):
            eval_green_rational(two_atom_model, np.array([1j, 1.0 + 0j]))

    def test_quasiparticle_symmetry(self, quasiparticles):
        # 实谱：G(-z̄) = -conj(G(z)) 对称分布的极点
        z = matsubara_grid(100.0, 16)
        values = eval_green(quasiparticles, z)
        assert_allclose(eval_green(quasiparticles, -np.conj(z)), -np.conj(values), rtol=1e-12)


class TestGaussianGreen:
    def test_quadrature_matches_faddeeva(self):
        model = load_reference_model("gaussians")
        z = matsubara_grid(100.0, 64)
        quad = eval_green_gaussian(model, z, method="quadrature")
        closed = eval_green_gaussian(model, z, method="faddeeva")
        assert np.max(np.abs(quad - closed)) <= 1e-10 * np.max(np.abs(closed))

    def test_lower_half_plane_conjugate(self):
        model = GaussianMixture(components=[{"center": 0.3, "variance": 0.01, "mass": 1.0}])
        z = np.array([0.2 + 0.5j, -1.0 + 0.1j])
        upper = eval_green_gaussian(model, z, method="faddeeva")
        lower = eval_green_gaussian(model, np.conj(z), method="faddeeva")
        assert_allclose(lower, np.conj(upper), rtol=1e-14)

    def test_far_field(self):
        model = GaussianMixture(components=[{"center": 0.0, "variance": 0.005, "mass": 2 * np.pi}])
        assert eval_green_gaussian(model, 100j, method="faddeeva") == pytest.approx(1 / 100j, rel=1e-5)

    def test_real_axis_rejected(self):
        model = load_reference_model("gaussians")
        with pytest.raises(InvalidArgumentError):
            eval_green_gaussian(model, np.array([0.5 + 0j]))

    def test_unknown_method(self):
        model = load_reference_model("gaussians")
        with pytest.raises(InvalidArgumentError):
            eval_green_gaussian(model, 1j, method="simpson")


class TestNoise:
    def test_average_magnitude(self):
        assert average_magnitude([3 + 4j, 3 - 4j]) == pytest.approx(5.0)
        with pytest.raises(InvalidArgumentError):
            average_magnitude([])

    def test_complex_normal_unit_variance(self):
        draws = complex_normal(7, 200_000)
        assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, rel=0.02)
        assert np.var(draws.real) == pytest.approx(0.5, rel=0.02)

    def test_seed_determinism(self, molecule_dataset):
        first = add_noise(molecule_dataset, 1e-3, seed=11)
        again = add_noise(molecule_dataset, 1e-3, seed=11)
        other = add_noise(molecule_dataset, 1e-3, seed=12)
        assert_array_equal(first.samples, again.samples)
        assert not np.array_equal(first.samples, other.samples)
        assert first.noise_sigma == 1e-3
        assert first.seed == 11

    def test_zero_sigma_is_identity(self, molecule_dataset):
        noisy = add_noise(molecule_dataset, 0.0, seed=99)
        assert_array_equal(noisy.samples, molecule_dataset.samples)
        assert noisy.seed is None

    def test_negative_sigma(self, molecule_dataset):
        with pytest.raises(InvalidArgumentError):
            add_noise(molecule_dataset, -1e-3, seed=0)


class TestSynthesize:
    def test_noise_free_matches_forward_model(self):
        model = DeltaModel(atoms=[{"location": 1.0, "weight": 2 * np.pi}])
        dataset = synthesize(model, 100.0, 4, 0.0, 0)
        assert dataset.n_points == 4
        assert_array_equal(dataset.samples, eval_green_rational(model, matsubara_grid(100.0, 4)))
        assert dataset.model == model

    def test_noise_level(self, quasiparticles):
        clean = synthesize(quasiparticles, 100.0, 256, 0.0, 0)
        noisy = synthesize(quasiparticles, 100.0, 256, 1e-3, 5)
        magnitude = average_magnitude(clean.samples)
        rms = np.sqrt(np.mean(np.abs(noisy.samples - clean.samples) ** 2))
        assert rms == pytest.approx(1e-3 * magnitude, rel=0.25)


class TestReferenceModels:
    def test_all_models_load(self):
        models = load_reference_models()
        assert {"molecule_gap_0.1", "molecule_gap_0.05", "quasiparticles", "gaussians"} <= set(models)

    def test_quasiparticles(self, quasiparticles):
        assert_allclose(quasiparticles.locations, np.arange(-2, 3) - 0.03j)
        assert total_mass(quasiparticles) == pytest.approx(2 * np.pi)

    def test_molecule_gap(self):
        assert load_reference_model("molecule_gap_0.1").gap == pytest.approx(0.1)
        assert load_reference_model("molecule_gap_0.05").gap == pytest.approx(0.05)

    def test_unknown_name(self):
        with pytest.raises(InvalidArgumentError):
            load_reference_model("no-such-model")

    def test_parse_inline(self):
        model = parse_model({"kind": "poles", "poles": [{"location": [0.5, -0.1], "weight": [1.0, 0.0]}]})
        assert model.kind == "poles"
        assert model.locations[0] == 0.5 - 0.1j

    def test_parse_rejects_upper_half_pole(self):
        with pytest.raises(ValueError):
            parse_model({"kind": "poles", "poles": [{"location": [0.5, 0.1], "weight": [1.0, 0.0]}]})


class TestSpectralDensity:
    def test_gaussian_mass(self):
        model = load_reference_model("gaussians")
        x = np.linspace(-4.0, 4.0, 80_001)
        assert trapezoid(spectral_density(model, x), x) == pytest.approx(2 * np.pi, rel=1e-6)

    def test_lorentzian_peak(self, single_quasiparticle):
        # γ = 0.03, η = 0.01：峰值 2/(γ+η)
        assert spectral_density(single_quasiparticle, 0.0, eta=0.01) == pytest.approx(50.0)

    def test_eta_must_be_positive(self, single_quasiparticle):
        with pytest.raises(InvalidArgumentError):
            spectral_density(single_quasiparticle, 0.0, eta=0.0)
