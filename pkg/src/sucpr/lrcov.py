"""Long-run covariance estimation and derived fully modified weights.

Two routes are provided. The kernel route uses a Bartlett window with an
AR(1) plug-in automatic bandwidth. The autoregressive route inverts the
banded Cholesky factorisation of the stacked residual covariance: the
two-sided long-run covariance follows from the fitted VAR evaluated at
frequency zero and the one-sided matrix from a finite sum of implied
autocovariances, computed by back and forward substitution against the
unit triangular factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sucpr.biam import BiamDecomposition, VarLadder, fit_var_ladder


@dataclass(frozen=True)
class LongRunCov:
    """Two-sided (omega) and one-sided (delta) long-run covariance of a 2n series.

    The series stacks the regression errors on top of the regressor
    increments, so the leading n x n block is the "u" partition and the
    trailing one the "v" partition. ``sigma`` holds the innovation
    covariance on the autoregressive route and is None on the kernel
    route. ``source`` is "kernel" or "biam".
    """

    omega: np.ndarray
    delta: np.ndarray
    sigma: np.ndarray | None
    source: str

    @property
    def n(self) -> int:
        return self.omega.shape[0] // 2

    def _block(self, M: np.ndarray, a: int, b: int) -> np.ndarray:
        n = self.n
        return M[a * n : (a + 1) * n, b * n : (b + 1) * n]

    @property
    def omega_uu(self) -> np.ndarray:
        return self._block(self.omega, 0, 0)

    @property
    def omega_uv(self) -> np.ndarray:
        return self._block(self.omega, 0, 1)

    @property
    def omega_vu(self) -> np.ndarray:
        return self._block(self.omega, 1, 0)

    @property
    def omega_vv(self) -> np.ndarray:
        return self._block(self.omega, 1, 1)

    @property
    def delta_uu(self) -> np.ndarray:
        return self._block(self.delta, 0, 0)

    @property
    def delta_vu(self) -> np.ndarray:
        return self._block(self.delta, 1, 0)

    @property
    def delta_vv(self) -> np.ndarray:
        return self._block(self.delta, 1, 1)

    def _sigma_block(self, a: int, b: int) -> np.ndarray:
        if self.sigma is None:
            raise ValueError("innovation covariance is only available on the biam route")
        return self._block(self.sigma, a, b)

    @property
    def sigma_etaeta(self) -> np.ndarray:
        """Innovation covariance of the error partition (top-left block)."""
        return self._sigma_block(0, 0)

    @property
    def sigma_etaeps(self) -> np.ndarray:
        """Innovation cross covariance, error rows by increment columns."""
        return self._sigma_block(0, 1)

    @property
    def sigma_epseta(self) -> np.ndarray:
        """Innovation cross covariance, increment rows by error columns."""
        return self._sigma_block(1, 0)

    @property
    def sigma_epseps(self) -> np.ndarray:
        """Innovation covariance of the increment partition (bottom-right block)."""
        return self._sigma_block(1, 1)


@dataclass(frozen=True)
class FmWeights:
    """Derived weights entering the fully modified corrections.

    omega_udotv is the conditional long-run covariance of the errors
    given the increments, delta_vu_plus the endogeneity-corrected
    one-sided cross block, and endogeneity_map the regression matrix of
    the errors on the increments in the long run.
    """

    omega_udotv: np.ndarray
    delta_vu_plus: np.ndarray
    endogeneity_map: np.ndarray


def bartlett_lrcov(xi: np.ndarray, bandwidth: float) -> LongRunCov:
    """Bartlett-kernel long-run covariance of a (2n, T) series.

    Gamma(h) = T^{-1} sum_t xi_t xi_{t+h}'; the one-sided matrix sums
    lags 0..floor(bandwidth) with weights 1 - h/(bandwidth + 1) and the
    two-sided matrix is delta + delta' - Gamma(0).
    """
    xi = np.asarray(xi, dtype=float)
    m, T = xi.shape
    if bandwidth < 0 or bandwidth >= T:
        raise ValueError(f"bandwidth must lie in [0, T), got {bandwidth}")
    gamma0 = xi @ xi.T / T
    gamma0 = 0.5 * (gamma0 + gamma0.T)
    delta = gamma0.copy()
    for h in range(1, int(bandwidth) + 1):
        w = 1.0 - h / (bandwidth + 1.0)
        delta += w * (xi[:, : T - h] @ xi[:, h:].T) / T
    omega = delta + delta.T - gamma0
    return LongRunCov(omega=omega, delta=delta, sigma=None, source="kernel")


def andrews_bandwidth(xi: np.ndarray, max_rho: float | None = None) -> float:
    """AR(1) plug-in automatic bandwidth for the Bartlett kernel.

    Each series gets a univariate AR(1) fit; the plug-in curvature
    alpha(1) combines the fits with equal weights and the bandwidth is
    1.1447 (alpha(1) T)^{1/3}. Series with zero innovation variance are
    skipped. An AR root at or beyond one raises, unless ``max_rho`` is
    given, in which case fitted roots are clipped to that magnitude
    (used by pipelines that must stay defined on nonstationary
    residuals, such as the cointegration tests under the alternative).
    """
    xi = np.asarray(xi, dtype=float)
    m, T = xi.shape
    if T < 10:
        raise ValueError("need at least 10 observations for the plug-in bandwidth")
    num = 0.0
    den = 0.0
    for a in range(m):
        y, x = xi[a, 1:], xi[a, :-1]
        sxx = x @ x
        if sxx <= 0.0:
            continue
        rho = (x @ y) / sxx
        if abs(rho) >= 1.0:
            if max_rho is None:
                raise ValueError(f"series {a} has an explosive AR(1) fit (rho = {rho:.4f})")
            rho = np.sign(rho) * min(abs(rho), max_rho)
        resid = y - rho * x
        s2 = resid @ resid / (T - 1)
        if s2 <= 0.0:
            continue
        num += 4.0 * rho**2 * s2**2 / ((1.0 - rho) ** 6 * (1.0 + rho) ** 2)
        den += s2**2 / (1.0 - rho) ** 4
    if den == 0.0:
        return 0.0
    alpha1 = num / den
    bw = 1.1447 * (alpha1 * T) ** (1.0 / 3.0)
    # Near-unit-root fits can push the plug-in beyond the sample length;
    # the kernel sum only admits lags up to T - 1.
    return min(bw, float(T - 1))


def biam_lrcov(
    xi_hat: np.ndarray,
    qT: int,
    rT: int | None = None,
    ladder: VarLadder | None = None,
) -> LongRunCov:
    """Long-run covariances from the banded autoregressive factorisation.

    The two-sided matrix is the frequency-zero spectrum of the order-qT
    fit, (I - sum F_j)^{-1} S(qT) (I - sum F_j')^{-1}. The one-sided
    matrix sums the last rT block rows of the final block column of the
    implied stacked covariance, obtained by solving against the unit
    triangular factor in both directions; no T-sized matrix is formed.
    A prefitted ladder of order >= qT can be supplied to skip the fit.
    """
    xi_hat = np.asarray(xi_hat, dtype=float)
    m, T = xi_hat.shape
    if rT is None:
        rT = qT
    if not (1 <= rT <= T):
        raise ValueError(f"need 1 <= rT <= T, got rT={rT}")
    if ladder is None:
        ladder = fit_var_ladder(xi_hat, qT)
    elif ladder.q < qT:
        raise ValueError("supplied ladder is shorter than the requested order")
    biam = BiamDecomposition(ladder=ladder, q=qT, T=T)
    F = ladder.coeffs[qT - 1]  # (qT, m, m)
    SqT = ladder.sigmas[qT]
    A_sum = np.eye(m) - F.sum(axis=0)
    try:
        left = np.linalg.solve(A_sum, SqT)
        omega = np.linalg.solve(A_sum, left.T).T
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "fitted autoregression has a (near) unit root; long-run covariance undefined"
        ) from exc
    omega = 0.5 * (omega + omega.T)

    # Backward pass: R_t solves M' R = Q_1 (identity in the final block).
    R = np.zeros((T, m, m))
    R[T - 1] = np.eye(m)
    for t in range(T - 1, 0, -1):  # 1-based time t
        acc = np.zeros((m, m))
        for j in range(1, min(qT, T - t) + 1):
            ell = biam.row_order(t + j)
            if j <= ell:
                acc += ladder.coeffs[ell - 1][j - 1].T @ R[t + j - 1]
        R[t - 1] = acc
    # Scale by the block-diagonal prediction error covariances.
    Z = np.empty_like(R)
    for t in range(1, T + 1):
        Z[t - 1] = ladder.sigmas[biam.row_order(t)] @ R[t - 1]
    # Forward pass: C solves M C = Z; C is the final block column of the
    # implied stacked covariance.
    C = np.empty_like(Z)
    for t in range(1, T + 1):
        ell = biam.row_order(t)
        acc = Z[t - 1].copy()
        for j in range(1, ell + 1):
            acc += ladder.coeffs[ell - 1][j - 1] @ C[t - j - 1]
        C[t - 1] = acc
    delta = C[T - rT :].sum(axis=0)
    return LongRunCov(omega=omega, delta=delta, sigma=SqT, source="biam")


def fm_weights(lr: LongRunCov) -> FmWeights:
    """Conditional long-run covariance and endogeneity corrections."""
    ovv = lr.omega_vv
    try:
        endo = np.linalg.solve(ovv.T, lr.omega_uv.T).T  # omega_uv @ inv(omega_vv)
        dvv_ovv = np.linalg.solve(ovv.T, lr.delta_vv.T).T
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("omega_vv is singular") from exc
    udotv = lr.omega_uu - endo @ lr.omega_vu
    udotv = 0.5 * (udotv + udotv.T)
    dplus = lr.delta_vu - dvv_ovv @ lr.omega_vu
    return FmWeights(omega_udotv=udotv, delta_vu_plus=dplus, endogeneity_map=endo)
