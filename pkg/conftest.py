"""
测试公共夹具
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from core.model import load_reference_model, synthesize
from core.unzip import CdmMap, MoleculeMap
from utils import DeltaModel, PoleModel


def exterior_preimage(unzip_map, z):
    """
    正映射 z → t 的对照解：解二次方程 t² - 2ut + 1 = 0，取 |t| > 1 的根

    分子情形 u = z/(ib)；凝聚态情形 u = w/r，w = (z - qi)/(z + qi)。
    """
    z = np.asarray(z, dtype=complex)
    if isinstance(unzip_map, MoleculeMap):
        u = z / (1j * unzip_map.b)
    else:
        q = unzip_map.q
        u = (z - 1j * q) / (z + 1j * q) / unzip_map.r
    root = np.sqrt(u * u - 1.0)
    plus, minus = u + root, u - root
    return np.where(np.abs(plus) >= np.abs(minus), plus, minus)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240101))


@pytest.fixture
def two_atom_model():
    return DeltaModel(atoms=[{"location": 1.0, "weight": 3.0}, {"location": -1.0, "weight": 5.0}])


@pytest.fixture
def single_quasiparticle():
    return PoleModel(poles=[{"location": (0.0, -0.03), "weight": (2 * np.pi, 0.0)}])


@pytest.fixture
def quasiparticles():
    return load_reference_model("quasiparticles")


@pytest.fixture
def molecule_dataset(two_atom_model):
    """β=10, N=32 的无噪声两原子数据"""
    return synthesize(two_atom_model, 10.0, 32, 0.0, 0)


@pytest.fixture
def cdm_map():
    return CdmMap(a=np.pi / 100, b=511 * np.pi / 100)


@pytest.fixture
def molecule_map():
    return MoleculeMap(b=255 * np.pi / 100)
