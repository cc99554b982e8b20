"""Two-body mixed volumes from the polynomial t -> V_n(K + t M)."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from lpbm.functionals.volumes import volume_estimate
from lpbm.geometry.bodies import ConvexBody, lp_combine, memo, scale_decompose
from lpbm.geometry.directions import DirectionSet


class IllConditionedFit(ArithmeticError):
    pass


def solve_full_pivot(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with complete pivoting (small dense systems)."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m = len(b)
    cols = np.arange(m)
    for k in range(m):
        sub = np.abs(A[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        i += k
        j += k
        if A[i, j] == 0:
            raise IllConditionedFit("singular Vandermonde system")
        A[[k, i]] = A[[i, k]]
        b[[k, i]] = b[[i, k]]
        A[:, [k, j]] = A[:, [j, k]]
        cols[[k, j]] = cols[[j, k]]
        f = A[k + 1:, k] / A[k, k]
        A[k + 1:] -= np.outer(f, A[k])
        b[k + 1:] -= f * b[k]
    x = np.empty(m)
    for k in range(m - 1, -1, -1):
        x[k] = (b[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    out = np.empty(m)
    out[cols] = x
    return out


@dataclass(frozen=True)
class MixedVolumeResult:
    value: float
    coefficients: np.ndarray  # c_i of V_n(K + tM) = sum_i c_i t^i
    residual: float  # |c_0 - V_n(K)| / V_n(K)
    exact: bool


def mixed_volume_pair(K: ConvexBody, M: ConvexBody, j: int,
                      grid: DirectionSet | None = None) -> MixedVolumeResult:
    """V(K, j; M, ..., M): coefficient of t^(n-j) in V_n(K + tM) over binomial(n, n-j)."""
    n = K.dim
    if n not in (2, 3):
        raise ValueError("mixed volumes need n in {2, 3}")
    if not 1 <= j <= n:
        raise ValueError("j must be in 1..n")
    # V(lam B + t M) = sum_k c_k(B) lam^(n-k) t^k, so dilates reuse the fit of B
    lam, base = scale_decompose(K)
    r = memo(base, ("mixed_volume", M, j, grid), lambda: _mixed_volume_pair(base, M, j, grid))
    if lam == 1.0:
        return r
    powers = lam ** (n - np.arange(len(r.coefficients)))
    return MixedVolumeResult(lam ** j * r.value, r.coefficients * powers, r.residual, r.exact)


def _mixed_volume_pair(K, M, j, grid) -> MixedVolumeResult:
    n = K.dim
    v0, exact0 = volume_estimate(K, grid)
    if j == n:
        return MixedVolumeResult(v0, np.array([v0]), 0.0, exact0)
    spread = K.scale / M.scale
    for attempt in range(2):
        t = spread * np.arange(1, n + 2)
        vals, exact = [], exact0
        for ti in t:
            v, e = volume_estimate(lp_combine(1, 1.0, K, float(ti), M), grid)
            vals.append(v)
            exact &= e
        V = np.vander(t, n + 1, increasing=True)
        if np.linalg.cond(V) < 1e12:
            break
        spread *= 2.0
    else:
        raise IllConditionedFit("Vandermonde system stays ill-conditioned")
    c = solve_full_pivot(V, np.array(vals))
    residual = abs(c[0] - v0) / v0
    return MixedVolumeResult(float(c[n - j] / comb(n, n - j)), c, float(residual), exact)
