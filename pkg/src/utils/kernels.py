"""
Kernels - 半整数阶 Matérn 协方差函数（含 ARD）
"""

from typing import Iterator

import numpy as np
from scipy.spatial.distance import cdist

from models.gp_model import Hyperparameters
from utils.errors import InvalidHyperparameterError, InvalidInputError

SQRT3 = np.sqrt(3.0)
SQRT5 = np.sqrt(5.0)

SUPPORTED_NU = (0.5, 1.5, 2.5)


def matern_halfint(tau, nu: float, l: float, sigma_f2: float):
    """
    半整数阶 Matérn 协方差的闭式解

    Args:
        tau: 非负距离（标量或数组）
        nu: 1/2、3/2 或 5/2
        l: 长度尺度
        sigma_f2: 输出方差

    Returns:
        协方差，形状与 tau 相同
    """
    if not (l > 0 and sigma_f2 > 0):
        raise InvalidHyperparameterError(f"l 与 σ_f² 必须为正: l={l}, σ_f²={sigma_f2}")
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise InvalidInputError("距离 tau 必须非负")

    r = tau_arr / l
    if nu == 0.5:
        value = sigma_f2 * np.exp(-r)
    elif nu == 1.5:
        value = sigma_f2 * (1.0 + SQRT3 * r) * np.exp(-SQRT3 * r)
    elif nu == 2.5:
        value = sigma_f2 * (1.0 + SQRT5 * r + 5.0 * r**2 / 3.0) * np.exp(-SQRT5 * r)
    else:
        raise InvalidHyperparameterError(f"只支持 ν ∈ {SUPPORTED_NU}: {nu}")
    return float(value) if np.ndim(value) == 0 else value


def _scaled(X: np.ndarray, hyper: Hyperparameters) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    hyper.check_dimension(X.shape[1])
    return X / hyper.length_scales


def _matern32_from_r(r: np.ndarray, sigma_f2: float) -> np.ndarray:
    return sigma_f2 * (1.0 + SQRT3 * r) * np.exp(-SQRT3 * r)


def matern32_ard(x: np.ndarray, x2: np.ndarray, hyper: Hyperparameters) -> float:
    """
    两点间的 ARD Matérn-3/2 协方差

    r = sqrt(Σ_d ((x_d − x2_d)/l_d)²)
    """
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.size != x2.size:
        raise InvalidInputError(f"维度不匹配: {x.size} vs {x2.size}")
    hyper.check_dimension(x.size)
    r = np.sqrt(np.sum(((x - x2) / hyper.length_scales) ** 2))
    return float(_matern32_from_r(r, hyper.signal_variance))


def gram(X: np.ndarray, X2: np.ndarray, hyper: Hyperparameters) -> np.ndarray:
    """
    协方差矩阵，(i, j) 元素为 matern32_ard(X_i, X2_j)

    Args:
        X: (n, d)
        X2: (m, d)
        hyper: 超参数

    Returns:
        (n, m) 矩阵
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    if X.shape[1] != X2.shape[1]:
        raise InvalidInputError(f"列数不匹配: {X.shape[1]} vs {X2.shape[1]}")
    r = cdist(_scaled(X, hyper), _scaled(X2, hyper), metric="euclidean")
    return _matern32_from_r(r, hyper.signal_variance)


def gram_log_gradients(X: np.ndarray, hyper: Hyperparameters) -> Iterator[np.ndarray]:
    """
    依次产出 ∂K(X, X)/∂log θ_j，顺序为 σ_f²，再是每个长度尺度

    逐个产出以避免同时持有 d 个 n×n 矩阵
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xs = _scaled(X, hyper)
    r = cdist(Xs, Xs, metric="euclidean")
    decay = 3.0 * hyper.signal_variance * np.exp(-SQRT3 * r)

    yield _matern32_from_r(r, hyper.signal_variance)

    # dk/dlog l_d = 3σ_f² exp(−√3 r) (Δ_d / l_d)²
    if hyper.is_ard:
        for d in range(Xs.shape[1]):
            delta = Xs[:, d, None] - Xs[None, :, d]
            yield decay * delta**2
    else:
        yield decay * r**2
