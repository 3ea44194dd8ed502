"""
系统测试
在参考谱模型上端到端运行两条流水线，检查极点、权重与谱曲线
"""

import time

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.signal import find_peaks

from core.interp import chebyshev_pole_nodes, default_n_interp, fit_pole_weights
from core.model import load_reference_model, synthesize
from core.prony import default_n_samples, trapezoid_refinement_error
from core.recover import eval_spectral
from core.unzip import MoleculeMap, z_of_t
from main_pipeline import run_cdm_pipeline, run_molecule_pipeline
from scripts.reproduce_experiments import broadened_truth, nearest_pole_error
from utils import PipelineConfig

pytestmark = pytest.mark.slow

BETA = 100.0
SEEDS = list(range(10))
TARGETS = np.arange(-2.0, 3.0)
CURVE_X = np.linspace(-3.0, 3.0, 2001)


def matched_weights(recon, model):
    """按最近极点把恢复的权重与真实原子对应起来"""
    poles = recon.poles.real
    return np.array([recon.weights.real[np.argmin(np.abs(poles - x))] for x in model.locations])


class TestMoleculeAcceptance:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_gap_01_low_noise(self, seed):
        model = load_reference_model("molecule_gap_0.1")
        dataset = synthesize(model, BETA, 128, 1e-4, seed)
        start = time.perf_counter()
        recon = run_molecule_pipeline(dataset)
        elapsed = time.perf_counter() - start

        assert recon.n_poles == 3
        assert recon.diagnostics.prony.rank == 3
        assert nearest_pole_error(recon.poles.real, model.locations) <= 1e-2
        assert_allclose(matched_weights(recon, model), model.weights, rtol=1e-2)
        assert elapsed < 5.0

    @pytest.mark.parametrize("seed", SEEDS)
    def test_gap_01_moderate_noise(self, seed):
        model = load_reference_model("molecule_gap_0.1")
        recon = run_molecule_pipeline(synthesize(model, BETA, 128, 1e-3, seed))
        assert recon.n_poles == 3
        assert nearest_pole_error(recon.poles.real, model.locations) <= 5e-2
        assert_allclose(matched_weights(recon, model), model.weights, rtol=5e-2)

    def test_gap_005_moderate_noise_counts(self):
        model = load_reference_model("molecule_gap_0.05")
        correct = sum(
            run_molecule_pipeline(synthesize(model, BETA, 128, 1e-3, seed)).n_poles == 3 for seed in SEEDS
        )
        assert correct >= 7

    def test_noise_free_two_atoms(self, molecule_dataset):
        recon = run_molecule_pipeline(molecule_dataset, PipelineConfig(epsilon=1.0, noise_floor=1e-6))
        assert_allclose(recon.poles.real, [-1.0, 1.0], atol=1e-6)
        assert_allclose(recon.weights.real, [5.0, 3.0], rtol=1e-6)

    @pytest.mark.parametrize("name", ["molecule_gap_0.1", "molecule_gap_0.05"])
    def test_high_noise_completes(self, name):
        dataset = synthesize(load_reference_model(name), BETA, 128, 1e-2, 0)
        recon = run_molecule_pipeline(dataset)
        diagnostics = recon.diagnostics
        assert diagnostics.prony is not None
        assert diagnostics.n_samples is not None
        assert set(diagnostics.stage_times) >= {"PoleBasisInterp", "Unzip", "Prony", "Pullback"}
        assert np.all(recon.weights.real >= 0)

    def test_trapezoid_converged_at_default_samples(self):
        model = load_reference_model("molecule_gap_0.1")
        dataset = synthesize(model, BETA, 128, 0.0, 0)
        interp = fit_pole_weights(dataset, chebyshev_pole_nodes(0.1, default_n_interp(128, dataset.b / 0.1)))
        unzip_map = MoleculeMap(b=dataset.b)
        n_samples = default_n_samples(10, 10, dataset.b / 0.1)

        def sampler(theta):
            return interp(z_of_t(unzip_map, np.exp(1j * theta)))

        assert trapezoid_refinement_error(sampler, n_samples, 20) <= 1e-10


class TestCondensedAcceptance:
    def test_quasiparticles_low_noise(self):
        model = load_reference_model("quasiparticles")
        dataset = synthesize(model, BETA, 256, 5e-7, 0)
        start = time.perf_counter()
        recon = run_cdm_pipeline(dataset, PipelineConfig(eta=0.01))
        elapsed = time.perf_counter() - start

        assert recon.n_poles >= 5
        assert nearest_pole_error(recon.poles, model.locations) <= 1e-2
        assert recon.diagnostics.max_violation <= 1e-8
        assert elapsed < 10.0

        truth = broadened_truth(model, CURVE_X, 0.01)
        curve = eval_spectral(recon, CURVE_X)
        assert np.linalg.norm(curve - truth) <= 0.05 * np.linalg.norm(truth)

    def test_gaussian_peak_locations(self):
        model = load_reference_model("gaussians")
        recon = run_cdm_pipeline(synthesize(model, BETA, 256, 5e-7, 0))
        curve = eval_spectral(recon, CURVE_X, 0.01)

        peaks, _ = find_peaks(curve, prominence=0.05 * np.max(curve))
        located = CURVE_X[peaks]
        for target in TARGETS:
            assert np.min(np.abs(located - target)) <= 0.05

    def test_gaussian_moderate_noise_shifts_stay_bounded(self):
        model = load_reference_model("gaussians")
        recon = run_cdm_pipeline(synthesize(model, BETA, 256, 5e-6, 0))
        curve = eval_spectral(recon, CURVE_X, 0.01)

        peaks, _ = find_peaks(curve, prominence=0.05 * np.max(curve))
        assert peaks.size > 0
        located = CURVE_X[peaks]
        for target in TARGETS:
            assert np.min(np.abs(located - target)) <= 0.25

    @pytest.mark.parametrize("name", ["quasiparticles", "gaussians"])
    def test_high_noise_completes(self, name):
        dataset = synthesize(load_reference_model(name), BETA, 256, 5e-5, 0)
        recon = run_cdm_pipeline(dataset)
        assert recon.diagnostics.prony is not None
        assert np.all(recon.poles.imag < 0)
        if recon.n_poles:
            assert recon.diagnostics.max_violation <= 1e-8
