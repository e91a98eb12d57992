"""Wald tests and subsampling KPSS-type cointegration tests.

The Wald statistic uses the sandwich factors stored on an estimation
result and a selection restriction matrix. The cointegration tests
stack cumulative residual sums over subsample blocks, compare the
largest block statistic against a Bonferroni-adjusted critical value of
the squared-Brownian-motion integral, and pick the block length by a
minimum volatility rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, gammaln
from scipy.stats import chi2

from sucpr.biam import BiamDecomposition, biam_submatrix_form
from sucpr.estimators import EstimationResult, fm_gls, fm_sols_auto, fm_sur_auto
from sucpr.model import CprSpec, PanelData, build_regressors


@dataclass(frozen=True)
class WaldResult:
    statistic: float
    dof: int
    p_value: float


@dataclass(frozen=True)
class KpssResult:
    """Bonferroni subsampling stationarity test outcome."""

    variant: str
    block_size: int
    num_blocks: int
    statistics: tuple[float, ...]
    k_max: float
    critical_value: float
    reject: bool
    alpha: float

    @property
    def adjusted_tail_prob(self) -> float:
        """Bonferroni-adjusted tail probability of the largest block statistic."""
        n = self._dim
        p = self.num_blocks * (1.0 - limit_cdf(n, self.k_max))
        return min(p, 1.0)

    _dim: int = 1


def _check_selection(R: np.ndarray, d: int) -> None:
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[1] != d:
        raise ValueError(f"restriction matrix must be k x {d}")
    for row in R:
        ones = np.flatnonzero(row == 1.0)
        if len(ones) != 1 or np.count_nonzero(row) != 1:
            raise ValueError("each restriction row must select exactly one coefficient")
    cols = np.argmax(R, axis=1)
    if len(set(cols.tolist())) != len(cols):
        raise ValueError("restriction rows are linearly dependent")


def wald(est: EstimationResult, R: np.ndarray, r: np.ndarray) -> WaldResult:
    """Chi-squared Wald test of the selection restrictions R beta = r."""
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    _check_selection(R, est.spec.d)
    k = R.shape[0]
    if r.shape != (k,):
        raise ValueError(f"restriction value must have length {k}")
    phi = R @ est.sandwich @ R.T
    diff = R @ est.beta - r
    try:
        stat = float(diff @ np.linalg.solve(phi, diff))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular restriction covariance") from exc
    stat = max(stat, 0.0)
    return WaldResult(statistic=stat, dof=k, p_value=float(chi2.sf(stat, k)))


def _cumsums(u_block: np.ndarray) -> np.ndarray:
    # u_block: (n, b) -> (b, n) running sums
    return np.cumsum(u_block, axis=1).T


def kpss_stat(u_block: np.ndarray, weight: np.ndarray) -> float:
    """K = b^{-2} sum_t phi_t' W phi_t with phi the running residual sums."""
    u_block = np.asarray(u_block, dtype=float)
    n, b = u_block.shape
    if b < 2:
        raise ValueError("block length must be at least 2")
    phi = _cumsums(u_block)
    return float(np.einsum("tn,nm,tm->", phi, weight, phi, optimize=True)) / b**2


def kpss_stat_biam(u_block: np.ndarray, biam: BiamDecomposition) -> float:
    """K with the trailing-block submatrix of the banded inverse as weight."""
    u_block = np.asarray(u_block, dtype=float)
    n, b = u_block.shape
    if b < 2:
        raise ValueError("block length must be at least 2")
    phi = _cumsums(u_block)[:, :, None]  # (b, n, 1)
    return float(biam_submatrix_form(biam, b, phi)[0, 0]) / b**2


def subsample_blocks(T: int, b: int) -> list[tuple[int, int]]:
    """Non-overlapping blocks taken alternately from the start and the end.

    Returns floor(T/b) half-open 0-based (start, stop) ranges in the
    order first block, last block, second block, second-to-last, ...
    """
    if not (1 <= b <= T):
        raise ValueError("need 1 <= b <= T")
    M = T // b
    out = []
    for idx in range(M):
        j = idx // 2
        if idx % 2 == 0:
            out.append((j * b, (j + 1) * b))
        else:
            out.append((T - (j + 1) * b, T - j * b))
    return out


def min_volatility_block(stat_fn, candidates) -> int:
    """Block length minimising the rolling standard deviation of K_max.

    ``stat_fn(b)`` returns the largest block statistic at block length b.
    The rolling window spans the five neighbouring candidates; ties go
    to the smaller block length.
    """
    candidates = list(candidates)
    if len(candidates) < 5:
        raise ValueError("need at least 5 candidate block lengths")
    vals = np.array([stat_fn(b) for b in candidates])
    best_b, best_vol = None, np.inf
    for i in range(2, len(candidates) - 2):
        vol = float(np.std(vals[i - 2 : i + 3], ddof=1))
        if vol < best_vol - 1e-15 or (abs(vol - best_vol) <= 1e-15 and candidates[i] < best_b):
            best_b, best_vol = candidates[i], vol
    return best_b


_MAX_TERMS = 500
_TERM_TOL = 1e-13


class SeriesConvergenceWarning(UserWarning):
    pass


def limit_cdf(n: int, x: float) -> float:
    """CDF of the integral of the squared norm of n-dim standard Brownian motion.

    Series expansion F_n(x) = 2^{n/2} sum_j k_jn Erfc(l_jn / (2 sqrt x))
    with k_jn = (-1)^j Gamma(j + n/2) / (j! Gamma(n/2)) and
    l_jn = 2 sqrt(2) j + n / sqrt(2); coefficients are formed in log
    space and the sum stops once a term drops below 1e-13 in magnitude.
    """
    if n < 1:
        raise ValueError("dimension must be at least 1")
    if x <= 0.0:
        return 0.0
    total = 0.0
    lg_half_n = gammaln(n / 2.0)
    for j in range(_MAX_TERMS):
        log_k = gammaln(j + n / 2.0) - gammaln(j + 1.0) - lg_half_n
        l_jn = 2.0 * np.sqrt(2.0) * j + n / np.sqrt(2.0)
        e = erfc(l_jn / (2.0 * np.sqrt(x)))
        if e == 0.0:
            break
        term = np.exp(log_k + np.log(e))
        if j % 2 == 1:
            term = -term
        total += term
        if abs(term) < _TERM_TOL:
            break
    else:
        if abs(term) > 1e-8:
            warnings.warn(
                f"limit CDF series did not converge for n={n}, x={x}",
                SeriesConvergenceWarning,
            )
    return float(min(max(2.0 ** (n / 2.0) * total, 0.0), 1.0))


def critical_value(n: int, tail_prob: float) -> float:
    """Root c of P(integral >= c) = tail_prob, found by bisection."""
    if not 0.0 < tail_prob < 1.0:
        raise ValueError("tail probability must be in (0, 1)")
    target = 1.0 - tail_prob
    lo, hi = 1e-8, 1.0
    while limit_cdf(n, hi) < target:
        hi *= 2.0
        if hi > 1e8:
            raise RuntimeError("failed to bracket the critical value")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if limit_cdf(n, mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 and abs(limit_cdf(n, mid) - target) < 1e-10:
            break
    return 0.5 * (lo + hi)


def _variant_residuals(spec, data, variant, est):
    """Residual series and weight machinery per test variant."""
    if variant == "SOLS":
        if est is None:
            est = fm_sols_auto(spec, data)
    elif variant == "SUR":
        if est is None:
            est = fm_sur_auto(spec, data)
    elif variant == "BIAM":
        if est is None:
            est = fm_gls(spec, data)
    else:
        raise ValueError(f"unknown test variant {variant!r}")
    if variant in ("SOLS", "SUR"):
        yplus = data.y - est.weights.endogeneity_map @ data.increments()
        regs = build_regressors(spec, data)
        parts = est.split_beta()
        resid = np.stack([yplus[i] - regs.dot_equation(i, parts[i]) for i in range(spec.n)])
    else:
        resid = est.residuals
    return est, resid


def cointegration_test(
    spec: CprSpec,
    data: PanelData,
    variant: str,
    alpha: float = 0.05,
    block_size: int | None = None,
    est: EstimationResult | None = None,
) -> KpssResult:
    """Bonferroni subsampling KPSS-type test of the null of cointegration.

    SOLS and SUR variants use endogeneity-corrected residuals weighted by
    the inverse conditional long-run covariance; the BIAM variant uses
    plain FGLS residuals weighted by the trailing submatrix of the banded
    inverse error covariance from the estimation stage.
    """
    variant = variant.upper()
    est, resid = _variant_residuals(spec, data, variant, est)
    T, n = data.T, spec.n

    if variant in ("SOLS", "SUR"):
        W = np.linalg.inv(est.weights.omega_udotv)
        W = 0.5 * (W + W.T)

        def kmax(b: int) -> float:
            return max(kpss_stat(resid[:, s:e], W) for s, e in subsample_blocks(T, b))

    else:
        biam = est.biam

        def kmax(b: int) -> float:
            if biam.q > b / 2:
                warnings.warn(
                    f"banding parameter {biam.q} is large relative to block length {b}",
                    UserWarning,
                )
            return max(kpss_stat_biam(resid[:, s:e], biam) for s, e in subsample_blocks(T, b))

    if block_size is None:
        lo = int(np.sqrt(T))
        hi = int(2.5 * np.sqrt(T))
        candidates = [b for b in range(lo, hi + 1) if b <= T]
        block_size = min_volatility_block(kmax, candidates)
    blocks = subsample_blocks(T, block_size)
    if variant in ("SOLS", "SUR"):
        stats = tuple(kpss_stat(resid[:, s:e], W) for s, e in blocks)
    else:
        stats = tuple(kpss_stat_biam(resid[:, s:e], est.biam) for s, e in blocks)
    M = len(blocks)
    k_max = max(stats)
    cv = critical_value(n, alpha / M)
    return KpssResult(
        variant=variant,
        block_size=block_size,
        num_blocks=M,
        statistics=stats,
        k_max=k_max,
        critical_value=cv,
        reject=bool(k_max > cv),
        alpha=alpha,
        _dim=n,
    )
