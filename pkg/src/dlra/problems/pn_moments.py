"""
P_N 角向矩方法的通量矩阵

实正交球谐基 m_k, k = l^2 + l + m (0 <= l <= N, -l <= m <= l):
  m > 0: sqrt(2) N_lm P_l^m(mu) cos(m phi)
  m = 0: N_l0 P_l(mu)
  m < 0: sqrt(2) N_l|m| P_l^|m|(mu) sin(|m| phi)
方向 Omega = (sqrt(1-mu^2) cos phi, sqrt(1-mu^2) sin phi, mu)。

A_x[k, l] = ∫ Omega_x m_k m_l dOmega 用 Gauss-Legendre(mu) x 均匀(phi) 乘积求积计算，
该规则对次数 <= 2N+1 的球面多项式精确；再用一套更细且旋转过的求积复核。
"""

import logging
from typing import NamedTuple, Tuple

import numpy as np
from scipy.special import gammaln, lpmv

from dlra.exceptions import ConstructionError, InputError

logger = logging.getLogger(__name__)

# 求积复核阈值与对称化后的零元阈值
QUADRATURE_CHECK_TOL = 1e-8
ZERO_ENTRY_TOL = 1e-13


class PnFluxMatrices(NamedTuple):
    A_x: np.ndarray
    A_y: np.ndarray
    abs_A_x: np.ndarray
    abs_A_y: np.ndarray
    G: np.ndarray


def n_moments(N: int) -> int:
    return (N + 1) ** 2


def moment_index(l: int, m: int) -> int:
    return l * l + l + m


def _normalization(l: int, m: int) -> float:
    """N_lm = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!)"""
    log_n2 = np.log(2 * l + 1) - np.log(4 * np.pi) + gammaln(l - m + 1) - gammaln(l + m + 1)
    return float(np.exp(0.5 * log_n2))


def real_harmonics(N: int, mu: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """
    在方向点 (mu, phi) 上计算全部 (N+1)^2 个实正交球谐函数

    Args:
        N: 最高次数
        mu: 极角余弦, 形状 (p,)
        phi: 方位角, 形状 (p,)

    Returns:
        np.ndarray: (p, (N+1)^2) 矩阵
    """
    mu = np.asarray(mu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    out = np.empty((mu.size, n_moments(N)))
    for l in range(N + 1):
        for m in range(0, l + 1):
            P = lpmv(m, l, mu) * _normalization(l, m)
            if m == 0:
                out[:, moment_index(l, 0)] = P
            else:
                out[:, moment_index(l, m)] = np.sqrt(2.0) * P * np.cos(m * phi)
                out[:, moment_index(l, -m)] = np.sqrt(2.0) * P * np.sin(m * phi)
    return out


def sphere_quadrature(n_mu: int, n_phi: int, phi_offset: float = 0.0) -> Tuple[np.ndarray, ...]:
    """Gauss-Legendre(mu) x 均匀(phi) 乘积求积，返回 (mu, phi, weights)，权重和为 4 pi"""
    x, w = np.polynomial.legendre.leggauss(n_mu)
    phi = phi_offset + 2.0 * np.pi * np.arange(n_phi) / n_phi
    mu_grid, phi_grid = np.meshgrid(x, phi, indexing="ij")
    weights = np.outer(w, np.full(n_phi, 2.0 * np.pi / n_phi))
    return mu_grid.ravel(), phi_grid.ravel(), weights.ravel()


def _moment_matrices(N: int, n_mu: int, n_phi: int, phi_offset: float = 0.0):
    mu, phi, w = sphere_quadrature(n_mu, n_phi, phi_offset)
    basis = real_harmonics(N, mu, phi)
    sin_theta = np.sqrt(np.clip(1.0 - mu**2, 0.0, None))
    weighted = basis * w[:, None]
    mass = weighted.T @ basis
    A_x = (weighted * (sin_theta * np.cos(phi))[:, None]).T @ basis
    A_y = (weighted * (sin_theta * np.sin(phi))[:, None]).T @ basis
    return mass, A_x, A_y


def _clean(A: np.ndarray) -> np.ndarray:
    A = 0.5 * (A + A.T)
    A[np.abs(A) < ZERO_ENTRY_TOL] = 0.0
    return A


def _abs_matrix(A: np.ndarray) -> np.ndarray:
    """|A| = Q |Lambda| Q^T"""
    lam, Q = np.linalg.eigh(A)
    return _clean((Q * np.abs(lam)) @ Q.T)


def pn_flux_matrices(N: int) -> PnFluxMatrices:
    """
    构造 P_N 通量矩阵 A_x, A_y, |A_x|, |A_y| 与散射矩阵 G

    Args:
        N: 球谐最高次数, N >= 1

    Returns:
        PnFluxMatrices: 各矩阵均为 (N+1)^2 x (N+1)^2
    """
    if N < 1:
        raise InputError(f"P_N 阶数 N 必须 >= 1，当前: {N}")
    mass, A_x, A_y = _moment_matrices(N, N + 1, 2 * N + 2)
    # 复核: 更多节点且整体旋转的求积应给出相同结果
    mass_c, A_x_c, A_y_c = _moment_matrices(N, N + 3, 2 * N + 6, phi_offset=np.pi / (2 * N + 6))

    defects = {
        "mass": float(np.max(np.abs(mass - np.eye(n_moments(N))))),
        "A_x": float(np.max(np.abs(A_x - A_x_c))),
        "A_y": float(np.max(np.abs(A_y - A_y_c))),
        "mass_check": float(np.max(np.abs(mass_c - np.eye(n_moments(N))))),
    }
    if max(defects.values()) > QUADRATURE_CHECK_TOL:
        raise ConstructionError("P_N 矩阵求积校验失败", detail={"N": N, **defects})
    logger.debug("P_N 矩阵 N=%d 求积校验通过: %s", N, defects)

    A_x = _clean(A_x)
    A_y = _clean(A_y)
    G = -np.eye(n_moments(N))
    G[0, 0] = 0.0
    return PnFluxMatrices(
        A_x=A_x, A_y=A_y, abs_A_x=_abs_matrix(A_x), abs_A_y=_abs_matrix(A_y), G=G
    )
