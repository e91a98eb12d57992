"""OLS and fully modified estimators for cointegrating polynomial systems.

All normal equations are assembled and solved in scaled coordinates: the
stacked regressors are post-multiplied by a diagonal matrix whose
entries shrink with the sample size at the rate of the corresponding
limit theory, which keeps the normal matrix well conditioned even with
high polynomial powers, and the solution is mapped back afterwards.
Three fully modified variants are provided. SOLS and SUR correct a
least-squares fit with kernel long-run covariances; the GLS variant
weights by the banded inverse error covariance and takes its long-run
quantities from the fitted autoregression itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sucpr.biam import BiamDecomposition, fit_var_ladder, quadratic_form, select_banding
from sucpr.lrcov import FmWeights, LongRunCov, andrews_bandwidth, bartlett_lrcov, biam_lrcov, fm_weights
from sucpr.model import (
    CprSpec,
    PanelData,
    bhat_vectors,
    build_regressors,
    residuals as compute_residuals,
    scaling_matrix,
)


@dataclass(frozen=True)
class EstimationResult:
    """A fitted coefficient vector plus everything inference needs.

    ``wald_factors`` holds the two distinct d x d factors (outer inverse,
    middle) of the sandwich covariance in unscaled coordinates; the full
    sandwich is outer_inv @ middle @ outer_inv. It is None for plain OLS.
    ``residuals`` are always y - Z'beta on the original dependent
    variable.
    """

    spec: CprSpec
    beta: np.ndarray
    method: str
    residuals: np.ndarray
    lr: LongRunCov | None = None
    weights: FmWeights | None = None
    biam: BiamDecomposition | None = None
    wald_factors: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def sandwich(self) -> np.ndarray:
        """Unscaled d x d sandwich covariance factor product."""
        if self.wald_factors is None:
            raise ValueError(f"no inference factors stored for method {self.method}")
        outer_inv, middle = self.wald_factors
        return outer_inv @ middle @ outer_inv

    def split_beta(self) -> list[np.ndarray]:
        return self.spec.split(self.beta)


def _scaled_rows(spec: CprSpec, data: PanelData):
    regs = build_regressors(spec, data)
    g = scaling_matrix(spec, data.T).diag
    rows = regs.row_blocks() * g[None, None, :]
    return regs, g, rows


def _weighted_gram(rows: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.einsum("tnd,nm,tme->de", rows, W, rows, optimize=True)


def _weighted_cross(rows: np.ndarray, W: np.ndarray, y: np.ndarray) -> np.ndarray:
    # rows: (T, n, d); y: (n, T); result: length d
    return np.einsum("tnd,nm,mt->d", rows, W, y, optimize=True)


def _solve_pd(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        c = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("normal matrix is not positive definite") from exc
    z = np.linalg.solve(c, rhs)
    return np.linalg.solve(c.T, z)


def _wald_factors(rows, g, outer_W, middle_W):
    """Unscaled (outer inverse, middle) sandwich factors for selection Wald tests."""
    Gs = _weighted_gram(rows, outer_W)
    Ms = _weighted_gram(rows, middle_W)
    Gs_inv = _solve_pd(Gs, np.eye(len(g)))
    outer_inv = Gs_inv * np.outer(g, g)
    middle = Ms / np.outer(g, g)
    return outer_inv, middle


def ols(spec: CprSpec, data: PanelData) -> EstimationResult:
    """Equation-by-equation least squares on the block-diagonal system."""
    regs, g, _ = _scaled_rows(spec, data)
    gparts = scaling_matrix(spec, data.T).split()
    beta = np.empty(spec.d)
    for i, (off, size) in enumerate(zip(spec.offsets, spec.block_sizes)):
        B = regs.blocks[i] * gparts[i][None, :]
        sol = _solve_pd(B.T @ B, B.T @ data.y[i])
        beta[off : off + size] = gparts[i] * sol
    return EstimationResult(
        spec=spec, beta=beta, method="OLS", residuals=compute_residuals(spec, data, beta)
    )


def _y_plus(data: PanelData, weights: FmWeights) -> np.ndarray:
    return data.y - weights.endogeneity_map @ data.increments()


def fm_sols(
    spec: CprSpec, data: PanelData, lr: LongRunCov, weights: FmWeights | None = None
) -> EstimationResult:
    """Fully modified SOLS: endogeneity-corrected y, diagonal bias correction."""
    if weights is None:
        weights = fm_weights(lr)
    regs, g, rows = _scaled_rows(spec, data)
    gparts = scaling_matrix(spec, data.T).split()
    yplus = _y_plus(data, weights)
    bvecs = bhat_vectors(spec, data)
    beta = np.empty(spec.d)
    for i, (off, size) in enumerate(zip(spec.offsets, spec.block_sizes)):
        B = regs.blocks[i] * gparts[i][None, :]
        correction = weights.delta_vu_plus[i, i] * bvecs[i]
        rhs = B.T @ yplus[i] - gparts[i] * correction
        beta[off : off + size] = gparts[i] * _solve_pd(B.T @ B, rhs)
    udotv = weights.omega_udotv
    wf = _wald_factors(rows, g, np.eye(spec.n), udotv)
    return EstimationResult(
        spec=spec,
        beta=beta,
        method="SOLS_FM",
        residuals=compute_residuals(spec, data, beta),
        lr=lr,
        weights=weights,
        wald_factors=wf,
    )


def fm_sur(
    spec: CprSpec, data: PanelData, lr: LongRunCov, weights: FmWeights | None = None
) -> EstimationResult:
    """Fully modified SUR: conditional long-run covariance weighting."""
    if weights is None:
        weights = fm_weights(lr)
    _, g, rows = _scaled_rows(spec, data)
    W = np.linalg.inv(weights.omega_udotv)
    W = 0.5 * (W + W.T)
    yplus = _y_plus(data, weights)
    bvecs = bhat_vectors(spec, data)
    diag_coef = np.diag(weights.delta_vu_plus @ W)
    correction = np.concatenate([diag_coef[i] * bvecs[i] for i in range(spec.n)])
    Gs = _weighted_gram(rows, W)
    rhs = _weighted_cross(rows, W, yplus) - g * correction
    beta = g * _solve_pd(Gs, rhs)
    Gs_inv = _solve_pd(Gs, np.eye(spec.d))
    wf = (Gs_inv * np.outer(g, g), Gs / np.outer(g, g))
    return EstimationResult(
        spec=spec,
        beta=beta,
        method="SUR_FM",
        residuals=compute_residuals(spec, data, beta),
        lr=lr,
        weights=weights,
        wald_factors=wf,
    )


def _gls_core(
    spec: CprSpec,
    data: PanelData,
    biam: BiamDecomposition,
    lr: LongRunCov,
    method: str,
) -> EstimationResult:
    _, g, rows = _scaled_rows(spec, data)
    v = data.increments()
    bvecs = bhat_vectors(spec, data)

    ouu_inv = np.linalg.inv(lr.omega_uu)
    ovv_inv = np.linalg.inv(lr.omega_vv)
    endo = ouu_inv @ lr.omega_uv @ ovv_inv

    Gs = quadratic_form(biam, rows, rows)
    Gs = 0.5 * (Gs + Gs.T)
    y_rows = data.y.T[:, :, None]
    zy = quadratic_form(biam, rows, y_rows)[:, 0]
    term2 = np.einsum("tnd,nt->d", rows, endo @ v, optimize=True)
    c1 = np.diag(lr.sigma_epseta @ np.linalg.inv(lr.sigma_etaeta))
    c2 = np.diag(lr.delta_vv @ ovv_inv @ lr.omega_vu @ ouu_inv)
    bias = np.concatenate([(c1[i] - c2[i]) * bvecs[i] for i in range(spec.n)])
    beta = g * _solve_pd(Gs, zy - term2 - g * bias)

    udotv = lr.omega_uu - lr.omega_uv @ ovv_inv @ lr.omega_vu
    wf = _wald_factors(rows, g, ouu_inv, ouu_inv @ udotv @ ouu_inv)
    return EstimationResult(
        spec=spec,
        beta=beta,
        method=method,
        residuals=compute_residuals(spec, data, beta),
        lr=lr,
        weights=fm_weights(lr),
        biam=biam,
        wald_factors=wf,
    )


def fm_gls(
    spec: CprSpec,
    data: PanelData,
    q: int | None = None,
    lr_biam: LongRunCov | None = None,
    filter_biam: BiamDecomposition | None = None,
    rT: int | None = None,
) -> EstimationResult:
    """Fully modified GLS weighted by the banded inverse error covariance.

    Default pipeline: first-stage OLS residuals select the banding
    parameter, an error-dimension ladder supplies the GLS filter, and a
    stacked ladder on the residuals and regressor increments supplies
    the long-run quantities. Every stage can be overridden: pass ``q``
    to skip banding selection, ``filter_biam`` to inject the filter, or
    ``lr_biam`` to inject the long-run covariances.
    """
    first = ols(spec, data)
    u_hat = first.residuals
    if q is None:
        if filter_biam is not None:
            q = filter_biam.q
        else:
            q = select_banding(u_hat)
    if filter_biam is None:
        ladder_u = fit_var_ladder(u_hat, q)
        filter_biam = BiamDecomposition(ladder=ladder_u, q=q, T=data.T)
    if lr_biam is None:
        xi = np.vstack([u_hat, data.increments()])
        lr_biam = biam_lrcov(xi, qT=q, rT=rT)
    return _gls_core(spec, data, filter_biam, lr_biam, "FGLS_FM")


def fm_sols_auto(spec: CprSpec, data: PanelData) -> EstimationResult:
    """FM-SOLS with kernel long-run covariances and automatic bandwidth."""
    lr = _kernel_lr_from_ols(spec, data)
    return fm_sols(spec, data, lr)


def fm_sur_auto(spec: CprSpec, data: PanelData) -> EstimationResult:
    """FM-SUR with kernel long-run covariances and automatic bandwidth."""
    lr = _kernel_lr_from_ols(spec, data)
    return fm_sur(spec, data, lr)


def _kernel_lr_from_ols(spec: CprSpec, data: PanelData) -> LongRunCov:
    u_hat = ols(spec, data).residuals
    xi = np.vstack([u_hat, data.increments()])
    bw = andrews_bandwidth(xi, max_rho=0.97)
    return bartlett_lrcov(xi, bw)


def estimate_with_given_covariances(
    spec: CprSpec,
    data: PanelData,
    method: str,
    lr: LongRunCov,
    weights: FmWeights | None = None,
    filter_biam: BiamDecomposition | None = None,
) -> EstimationResult:
    """Estimators with externally supplied covariance and filter quantities.

    Feeding population quantities yields the infeasible variants; feeding
    the feasible estimates reproduces the feasible results exactly.
    """
    method = method.lower()
    if method in ("sols", "sols_inf"):
        res = fm_sols(spec, data, lr, weights)
        return _retag(res, "SOLS_inf")
    if method in ("sur", "sur_inf"):
        res = fm_sur(spec, data, lr, weights)
        return _retag(res, "SUR_inf")
    if method in ("gls", "gls_inf"):
        if filter_biam is None:
            raise ValueError("the GLS variant needs a filter decomposition")
        res = _gls_core(spec, data, filter_biam, lr, "GLS_inf")
        return res
    raise ValueError(f"unknown method {method!r}")


def _retag(res: EstimationResult, method: str) -> EstimationResult:
    return EstimationResult(
        spec=res.spec,
        beta=res.beta,
        method=method,
        residuals=res.residuals,
        lr=res.lr,
        weights=res.weights,
        biam=res.biam,
        wald_factors=res.wald_factors,
    )


def turning_point(beta3: float, beta4: float) -> float:
    """Argument at which a quadratic-in-logs relation peaks, exp(-b3 / (2 b4))."""
    if beta4 == 0.0:
        raise ValueError("quadratic coefficient is zero; no turning point")
    return math.exp(-beta3 / (2.0 * beta4))
