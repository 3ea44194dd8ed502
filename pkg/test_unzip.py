"""
共形展开模块测试
逆映射、单位圆采样与外部极点拉回
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from conftest import exterior_preimage
from core.unzip import (
    CdmMap,
    MoleculeMap,
    cdm_z_of_t,
    circle_angles,
    circle_samples,
    mol_z_of_t,
    pullback_pole,
    z_of_t,
)
from utils import DomainError, InvalidArgumentError


def random_exterior_points(rng, count=1000, r_max=50.0):
    radius = np.exp(rng.uniform(np.log(1.0 + 1e-3), np.log(r_max), count))
    return radius * np.exp(1j * rng.uniform(-np.pi, np.pi, count))


class TestMoleculeMap:
    def test_circle_maps_onto_segment(self, molecule_map):
        theta = circle_angles(64)
        z = mol_z_of_t(molecule_map, np.exp(1j * theta))
        assert np.max(np.abs(z.real)) <= 1e-12 * molecule_map.b
        assert_allclose(z.imag, molecule_map.b * np.cos(theta), atol=1e-12 * molecule_map.b)

    def test_endpoints(self, molecule_map):
        assert mol_z_of_t(molecule_map, 1.0) == pytest.approx(1j * molecule_map.b)
        assert mol_z_of_t(molecule_map, -1.0) == pytest.approx(-1j * molecule_map.b)

    def test_real_poles_pull_back_to_real_axis(self, molecule_map):
        for xi in [-1.0, 0.1, 1.6]:
            t = exterior_preimage(molecule_map, xi)
            assert abs(t) > 1
            assert pullback_pole(molecule_map, t) == pytest.approx(xi, abs=1e-12)

    def test_round_trip(self, molecule_map, rng):
        t = random_exterior_points(rng)
        z = pullback_pole(molecule_map, t)
        assert_allclose(exterior_preimage(molecule_map, z), t, rtol=1e-10)


class TestCdmMap:
    def test_parameters(self, cdm_map):
        q = np.sqrt(cdm_map.a * cdm_map.b)
        assert cdm_map.q == pytest.approx(q)
        assert cdm_map.r == pytest.approx((cdm_map.b - q) / (cdm_map.b + q))
        assert 0 < cdm_map.r < 1

    def test_circle_maps_onto_segment(self, cdm_map):
        z = cdm_z_of_t(cdm_map, np.exp(1j * circle_angles(256)))
        assert np.max(np.abs(z.real)) <= 1e-12 * cdm_map.b
        assert np.min(z.imag) >= cdm_map.a * (1 - 1e-12)
        assert np.max(z.imag) <= cdm_map.b * (1 + 1e-12)

    def test_endpoints(self, cdm_map):
        assert cdm_z_of_t(cdm_map, 1.0) == pytest.approx(1j * cdm_map.b, rel=1e-12)
        assert cdm_z_of_t(cdm_map, -1.0) == pytest.approx(1j * cdm_map.a, rel=1e-12)

    def test_round_trip(self, cdm_map, rng):
        t = random_exterior_points(rng)
        z = pullback_pole(cdm_map, t)
        assert_allclose(exterior_preimage(cdm_map, z), t, rtol=1e-9)

    def test_quasiparticle_round_trip(self, cdm_map):
        xi = np.arange(-2, 3) - 0.03j
        t = exterior_preimage(cdm_map, xi)
        assert np.all(np.abs(t) > 1)
        assert_allclose(pullback_pole(cdm_map, t), xi, atol=1e-10)

    def test_ordering_validated(self):
        with pytest.raises(ValidationError):
            CdmMap(a=2.0, b=1.0)


class TestCircleSampling:
    def test_samples_follow_map(self, molecule_map):
        samples = circle_samples(lambda z: z, molecule_map, 8)
        assert_allclose(samples, z_of_t(molecule_map, np.exp(1j * circle_angles(8))))

    def test_odd_count_rejected(self, molecule_map):
        with pytest.raises(InvalidArgumentError):
            circle_samples(lambda z: z, molecule_map, 7)


class TestPullbackErrors:
    def test_interior_point(self, cdm_map):
        with pytest.raises(DomainError):
            pullback_pole(cdm_map, 0.5)

    def test_point_on_circle(self, molecule_map):
        with pytest.raises(DomainError):
            pullback_pole(molecule_map, np.array([2.0, 1j]))

    def test_origin(self):
        with pytest.raises(InvalidArgumentError):
            mol_z_of_t(MoleculeMap(b=1.0), 0.0)
