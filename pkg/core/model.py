# -*- coding: utf-8 -*-
"""
正问题模块
核心功能：真实谱模型、Matsubara 网格、格林函数求值、噪声模型与数据合成
"""
from pathlib import Path
from typing import Callable, Dict, Union

import numpy as np
import yaml
from loguru import logger
from pydantic import TypeAdapter
from scipy.special import wofz

from utils.errors import InvalidArgumentError, PoleEvaluationError
from utils.models import (
    DeltaModel,
    GaussianComponent,
    GaussianMixture,
    MatsubaraDataset,
    PoleModel,
    SpectralModel,
    matsubara_points,
)

TWO_PI = 2.0 * np.pi
REFERENCE_MODELS_PATH = Path(__file__).parent.parent / "conf" / "reference_models.yaml"

_spectral_model_adapter = TypeAdapter(SpectralModel)


def matsubara_grid(beta: float, n_points: int) -> np.ndarray:
    """
    构造 Matsubara 网格

    Args:
        beta: 逆温度 β > 0
        n_points: 点数 N ≥ 1

    Returns:
        z_n = (2n-1)πi/β，n = 1..N
    """
    if not beta > 0:
        raise InvalidArgumentError(f"beta={beta} 必须为正数")
    if int(n_points) != n_points or n_points < 1:
        raise InvalidArgumentError(f"N={n_points} 必须为正整数")
    return matsubara_points(float(beta), int(n_points))


def eval_green_rational(model: Union[DeltaModel, PoleModel], z) -> Union[complex, np.ndarray]:
    """
    有理型格林函数 G(z) = (1/2π) Σ_j A_j / (z - ξ_j)

    Args:
        model: δ 原子模型或准粒子极点模型
        z: 标量或数组

    Returns:
        与 z 同形状的复数值
    """
    locations = model.locations.astype(complex)
    weights = model.weights.astype(complex)
    z_array = np.asarray(z, dtype=complex)

    diff = z_array[..., np.newaxis] - locations
    if np.any(diff == 0):
        raise PoleEvaluationError("求值点与极点重合")
    values = (weights / diff).sum(axis=-1) / TWO_PI
    return complex(values) if values.ndim == 0 else values


def _gaussian_integrand(component: GaussianComponent, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """被积函数 mass·N(x; μ, v) / (z - x)，形状 (len(x), len(z))"""
    density = component.mass * np.exp(-((x - component.center) ** 2) / (2.0 * component.variance))
    density /= np.sqrt(TWO_PI * component.variance)
    return density[:, np.newaxis] / (z[np.newaxis, :] - x[:, np.newaxis])


def _adaptive_gauss_legendre(
    integrand: Callable[[np.ndarray], np.ndarray],
    lower: float,
    upper: float,
    tol: float,
    order: int = 20,
    initial_panels: int = 32,
    max_panels: int = 200_000,
) -> np.ndarray:
    """
    自适应 Gauss-Legendre 分段积分（对一组被积函数同时进行）

    每段比较整段与两半段之和，误差超过按段长分配的容差时二分。
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def panel(a: float, b: float) -> np.ndarray:
        half = 0.5 * (b - a)
        x = 0.5 * (a + b) + half * nodes
        return half * (weights[:, np.newaxis] * integrand(x)).sum(axis=0)

    edges = np.linspace(lower, upper, initial_panels + 1)
    coarse = sum(panel(a, b) for a, b in zip(edges[:-1], edges[1:]))
    scale = np.maximum(np.abs(coarse), np.finfo(float).tiny)
    length = upper - lower

    total = np.zeros_like(coarse)
    stack = list(zip(edges[:-1], edges[1:]))
    visited = 0
    while stack:
        a, b = stack.pop()
        visited += 1
        mid = 0.5 * (a + b)
        whole = panel(a, b)
        halves = panel(a, mid) + panel(mid, b)
        budget = tol * scale * (b - a) / length
        if np.all(np.abs(whole - halves) <= budget) or visited > max_panels:
            total += halves
        else:
            stack.append((a, mid))
            stack.append((mid, b))
    if visited > max_panels:
        logger.warning(f"Gauss-Legendre panel budget exhausted ({max_panels})")
    return total


def _gaussian_green_quadrature(model: GaussianMixture, z: np.ndarray, tol: float) -> np.ndarray:
    values = np.zeros(z.shape, dtype=complex)
    for component in model.components:
        width = 10.0 * np.sqrt(component.variance)
        values += _adaptive_gauss_legendre(
            lambda x: _gaussian_integrand(component, x, z),
            component.center - width,
            component.center + width,
            tol,
        )
    return values / TWO_PI


def _gaussian_green_faddeeva(model: GaussianMixture, z: np.ndarray) -> np.ndarray:
    """闭式：∫ N(x;μ,v)/(z-x) dx = -i √π/√(2v) · w((z-μ)/√(2v))，Im z > 0；下半平面取共轭"""
    upper = z.imag > 0
    z_upper = np.where(upper, z, np.conj(z))
    values = np.zeros(z.shape, dtype=complex)
    for component in model.components:
        scale = np.sqrt(2.0 * component.variance)
        zeta = (z_upper - component.center) / scale
        values += component.mass * (-1j * np.sqrt(np.pi) / scale) * wofz(zeta)
    values = np.where(upper, values, np.conj(values))
    return values / TWO_PI


def eval_green_gaussian(model: GaussianMixture, z, method: str = "quadrature", tol: float = 1e-12):
    """
    高斯混合谱的 Cauchy 变换 G(z) = (1/2π) ∫ A(x)/(z-x) dx

    Args:
        model: 高斯混合模型
        z: 标量或数组，Im z ≠ 0
        method: "quadrature"（自适应 Gauss-Legendre）或 "faddeeva"（复误差函数闭式）
        tol: 求积相对容差

    Returns:
        与 z 同形状的复数值
    """
    z_array = np.asarray(z, dtype=complex)
    if np.any(z_array.imag == 0):
        raise InvalidArgumentError("高斯混合模型不支持实轴上求值")

    flat = z_array.reshape(-1)
    if method == "quadrature":
        values = _gaussian_green_quadrature(model, flat, tol)
    elif method == "faddeeva":
        values = _gaussian_green_faddeeva(model, flat)
    else:
        raise InvalidArgumentError(f"未知的求值方法: {method}")
    values = values.reshape(z_array.shape)
    return complex(values) if values.ndim == 0 else values


def eval_green(model, z):
    """按模型类型分派的格林函数求值"""
    if isinstance(model, GaussianMixture):
        return eval_green_gaussian(model, z)
    return eval_green_rational(model, z)


def total_mass(model) -> complex:
    """谱的总质量 Σ A_j 或 Σ mass"""
    if isinstance(model, GaussianMixture):
        return complex(sum(c.mass for c in model.components))
    return complex(np.sum(model.weights))


def spectral_density(model, x, eta: float = 0.01) -> np.ndarray:
    """
    真实谱函数 A(x)，用于作图与对照

    高斯混合直接给出密度；准粒子模型给出 -2 Im G(x + iη)；
    δ 原子模型同样按 η 展宽为 Lorentz 线形。
    """
    x = np.asarray(x, dtype=float)
    if isinstance(model, GaussianMixture):
        density = np.zeros_like(x)
        for c in model.components:
            density += c.mass * np.exp(-((x - c.center) ** 2) / (2 * c.variance)) / np.sqrt(TWO_PI * c.variance)
        return density
    if not eta > 0:
        raise InvalidArgumentError(f"eta={eta} 必须为正数")
    return -2.0 * np.imag(eval_green_rational(model, x + 1j * eta))


def average_magnitude(samples) -> float:
    """平均幅值 M = (Σ_n |G(z_n)|² / N)^{1/2}"""
    values = np.asarray(samples, dtype=complex).reshape(-1)
    if values.size == 0:
        raise InvalidArgumentError("样本列表不能为空")
    return float(np.sqrt(np.mean(np.abs(values) ** 2)))


def complex_normal(seed: int, size: int) -> np.ndarray:
    """
    标准复正态样本（总方差为 1，实部虚部各 1/2）

    使用 PCG64 生成器，跨平台可复现。
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    parts = rng.standard_normal((2, size))
    return (parts[0] + 1j * parts[1]) / np.sqrt(2.0)


def add_noise(dataset: MatsubaraDataset, sigma: float, seed: int) -> MatsubaraDataset:
    """
    加性噪声 G(z_n) ← G(z_n) + σ·M·η_n

    Args:
        dataset: 原始数据集
        sigma: 相对噪声水平 σ ≥ 0
        seed: 随机种子

    Returns:
        记录 σ 与 seed 的新数据集（σ = 0 时不记录 seed）
    """
    if not sigma >= 0:
        raise InvalidArgumentError(f"sigma={sigma} 不能为负")
    if sigma == 0:
        return dataset.with_samples(dataset.samples.copy(), noise_sigma=0.0, seed=None)

    magnitude = average_magnitude(dataset.samples)
    perturbation = sigma * magnitude * complex_normal(seed, dataset.n_points)
    logger.debug(f"Noise added: sigma={sigma:g}, M={magnitude:.6g}, seed={seed}")
    return dataset.with_samples(dataset.samples + perturbation, noise_sigma=float(sigma), seed=seed)


def synthesize(model, beta: float, n_points: int, sigma: float, seed: int) -> MatsubaraDataset:
    """
    合成 Matsubara 数据集：网格 → 正问题求值 → 噪声

    Args:
        model: 谱模型（δ 原子 / 准粒子 / 高斯混合）
        beta: 逆温度
        n_points: Matsubara 点数
        sigma: 相对噪声水平
        seed: 随机种子

    Returns:
        MatsubaraDataset
    """
    points = matsubara_grid(beta, n_points)
    exact = np.asarray(eval_green(model, points), dtype=complex).reshape(-1)
    clean = MatsubaraDataset(
        beta=float(beta),
        n_points=int(n_points),
        points=points,
        samples=exact,
        noise_sigma=0.0,
        seed=seed,
        model=model,
    )
    logger.info(f"Synthesized {model.kind} dataset: beta={beta}, N={n_points}, sigma={sigma:g}")
    return add_noise(clean, sigma, seed)


def parse_model(spec: Dict) -> SpectralModel:
    """由字典解析谱模型（按 kind 字段分派）"""
    return _spectral_model_adapter.validate_python(spec)


def load_reference_models(path: Path = REFERENCE_MODELS_PATH) -> Dict[str, SpectralModel]:
    """加载 conf/reference_models.yaml 中的参考谱模型"""
    with open(path, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    return {name: parse_model(_expand_two_pi(spec)) for name, spec in raw.get("models", {}).items()}


def load_reference_model(name: str) -> SpectralModel:
    """按名称取参考模型"""
    models = load_reference_models()
    if name not in models:
        raise InvalidArgumentError(f"未知的参考模型: {name}（可选: {', '.join(sorted(models))}）")
    return models[name]


def _expand_two_pi(value):
    """YAML 中允许写 "2pi*0.2" 形式的权重"""
    if isinstance(value, dict):
        return {k: _expand_two_pi(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_expand_two_pi(v) for v in value]
    if isinstance(value, str) and value.startswith("2pi*"):
        return TWO_PI * float(value[4:])
    return value
