"""Banded inverse autocovariance estimation via the modified Cholesky block decomposition.

The inverse covariance matrix of a stacked stationary vector series is
factorised as M' S^{-1} M, where M is unit lower block triangular and
holds negated best-linear-predictor coefficients, and S is block
diagonal with the prediction error covariances. Banding caps the
predictor order at q. The inverse is never materialised in production
code paths: every product routes through the row-wise filter and
per-row solves against the prediction-error covariances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

PD_RTOL = 1e-10


class RankDeficientError(np.linalg.LinAlgError):
    """Regressor Gram matrix of a predictor regression is rank deficient."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """A prediction-error covariance failed the positive-definiteness tolerance."""


@dataclass(frozen=True)
class VarLadder:
    """Least-squares VAR fits of orders 1..q plus prediction-error covariances.

    ``coeffs[l - 1]`` has shape (l, n, n) and holds the lag-1..lag-l
    coefficient blocks of the order-l fit. ``sigmas[l]`` is the n x n
    prediction-error covariance of the order-l fit; ``sigmas[0]`` is the
    sample covariance of the inputs.
    """

    coeffs: tuple[np.ndarray, ...]
    sigmas: tuple[np.ndarray, ...]

    @property
    def q(self) -> int:
        return len(self.coeffs)

    @property
    def n(self) -> int:
        return self.sigmas[0].shape[0]


def _check_pd(S: np.ndarray, order: int) -> None:
    eig = np.linalg.eigvalsh(S)
    if eig[0] < PD_RTOL * max(eig[-1], np.finfo(float).tiny):
        raise NotPositiveDefiniteError(
            f"prediction error covariance at order {order} is not positive definite "
            f"(min/max eigenvalue ratio {eig[0] / max(eig[-1], np.finfo(float).tiny):.3e})"
        )


def fit_var_ladder(u: np.ndarray, q: int) -> VarLadder:
    """Fit least-squares VARs of orders 1..q to an n x T series.

    The order-l coefficients minimise the in-sample squared prediction
    error over t = l+1..T; the order-l error covariance divides by T - l
    (the order-0 covariance divides by T).
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ValueError("u must be an n x T matrix")
    n, T = u.shape
    if q < 1:
        raise ValueError("banding parameter must be at least 1")
    if T <= n * q + 1:
        raise ValueError(f"series length {T} too short for an order-{q} fit with n={n}")

    S0 = (u @ u.T) / T
    S0 = 0.5 * (S0 + S0.T)
    _check_pd(S0, 0)
    coeffs: list[np.ndarray] = []
    sigmas: list[np.ndarray] = [S0]
    ut = u.T  # (T, n)
    for ell in range(1, q + 1):
        Y = ut[ell:]  # rows t = ell+1..T
        X = np.concatenate([ut[ell - j : T - j] for j in range(1, ell + 1)], axis=1)
        theta, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
        if rank < n * ell:
            raise RankDeficientError(f"rank-deficient Gram matrix in the order-{ell} fit")
        resid = Y - X @ theta
        S = resid.T @ resid / (T - ell)
        S = 0.5 * (S + S.T)
        _check_pd(S, ell)
        A = np.stack([theta[(j - 1) * n : j * n].T for j in range(1, ell + 1)])
        coeffs.append(A)
        sigmas.append(S)
    return VarLadder(coeffs=tuple(coeffs), sigmas=tuple(sigmas))


def white_noise_ladder(sigma: np.ndarray, q: int) -> VarLadder:
    """Ladder with zero coefficients at all orders (identity filter)."""
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    coeffs = tuple(np.zeros((ell, n, n)) for ell in range(1, q + 1))
    return VarLadder(coeffs=coeffs, sigmas=tuple(sigma.copy() for _ in range(q + 1)))


@dataclass(frozen=True)
class BiamDecomposition:
    """Implicit representation of the banded inverse autocovariance matrix.

    Holds the ladder, the banding parameter q and the series length T.
    Row t of the implied filter uses the order min(t-1, q) fit.
    """

    ladder: VarLadder
    q: int
    T: int

    def __post_init__(self):
        if self.q < 1 or self.q > self.ladder.q:
            raise ValueError("banding parameter must be within the fitted ladder")
        if self.q >= self.T:
            raise ValueError("banding parameter must be smaller than T")
        chol = tuple(cho_factor(self.ladder.sigmas[ell], lower=True) for ell in range(self.q + 1))
        object.__setattr__(self, "_chol", chol)

    @property
    def n(self) -> int:
        return self.ladder.n

    def row_order(self, t: int) -> int:
        """Predictor order used in row t (1-based time index)."""
        return min(t - 1, self.q)

    def solve_sigma(self, ell: int, rhs: np.ndarray) -> np.ndarray:
        """Solve S(ell) Z = rhs."""
        return cho_solve(self._chol[ell], rhs)


def _as_row_blocks(X: np.ndarray, n: int) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != n:
            raise ValueError(f"rows must have leading dimension {n}")
        return X[:, :, None], True
    if X.ndim == 3:
        if X.shape[1] != n:
            raise ValueError(f"rows must have leading dimension {n}")
        return X, False
    raise ValueError("expected a (T, n) or (T, n, w) array")


def apply_filter(biam: BiamDecomposition, X: np.ndarray) -> np.ndarray:
    """Row-wise filter: out_t = X_t - sum_j A_j(min(t-1, q)) X_{t-j}.

    Equals the block product of the unit-lower-triangular factor with X.
    Input is (T, n) or (T, n, w); the output has the same shape.
    """
    Xb, squeeze = _as_row_blocks(X, biam.n)
    T = Xb.shape[0]
    if T != biam.T:
        raise ValueError(f"expected {biam.T} rows, got {T}")
    q = biam.q
    out = Xb.copy()
    # Rows 1..q use their own (shorter) predictor order.
    for t in range(2, min(q, T) + 1):
        A = biam.ladder.coeffs[t - 2]  # order t-1
        for j in range(1, t):
            out[t - 1] -= A[j - 1] @ Xb[t - 1 - j]
    if T > q:
        A = biam.ladder.coeffs[q - 1]
        for j in range(1, q + 1):
            out[q:] -= np.einsum("ab,tbw->taw", A[j - 1], Xb[q - j : T - j])
    return out[:, :, 0] if squeeze else out


def quadratic_form(biam: BiamDecomposition, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """X' Sigma_inv(q) Y computed without materialising any nT x nT matrix.

    X and Y are (T, n, p) and (T, n, r) row-block sequences; the result is
    p x r. A (T, n) input is treated as a single column.
    """
    Xb, sx = _as_row_blocks(X, biam.n)
    Yb, sy = _as_row_blocks(Y, biam.n)
    fX = apply_filter(biam, Xb)
    fY = apply_filter(biam, Yb)
    T, n, r = fY.shape
    q = biam.q
    acc = np.zeros((fX.shape[2], r))
    for t in range(1, min(q, T) + 1):
        ell = min(t - 1, q)
        acc += fX[t - 1].T @ biam.solve_sigma(ell, fY[t - 1])
    if T > q:
        tail = fY[q:]  # (T-q, n, r)
        solved = biam.solve_sigma(q, tail.transpose(1, 0, 2).reshape(n, -1))
        solved = solved.reshape(n, T - q, r).transpose(1, 0, 2)
        acc += np.einsum("tnp,tnr->pr", fX[q:], solved)
    if sx and sy:
        return acc  # still 1x1 matrix; callers index if scalar wanted
    return acc


def materialize_small(biam: BiamDecomposition, max_size: int = 2000) -> np.ndarray:
    """Dense nT x nT banded inverse; test oracle only, guarded by size."""
    n, T, q = biam.n, biam.T, biam.q
    if n * T > max_size:
        raise ValueError(f"refusing to materialise a {n * T} x {n * T} matrix")
    M = np.zeros((n * T, n * T))
    Sinv = np.zeros((n * T, n * T))
    for t in range(1, T + 1):
        ell = min(t - 1, q)
        r = slice((t - 1) * n, t * n)
        M[r, r] = np.eye(n)
        if ell > 0:
            A = biam.ladder.coeffs[ell - 1]
            for j in range(1, ell + 1):
                if t - j >= 1:
                    c = slice((t - 1 - j) * n, (t - j) * n)
                    M[r, c] = -A[j - 1]
        Sinv[r, r] = np.linalg.inv(biam.ladder.sigmas[ell])
    return M.T @ Sinv @ M


def biam_submatrix_form(biam: BiamDecomposition, b: int, V: np.ndarray) -> np.ndarray:
    """V' Sigma_inv(q, b) V for the trailing b x b block of time indices.

    The submatrix keeps rows and columns for t = T-b+1..T; the product is
    computed by filtering V as if it occupied those final rows, with lags
    outside the window dropped.
    """
    if b < 1:
        raise ValueError("block length must be positive")
    if b > biam.T:
        raise ValueError("block length exceeds series length")
    Vb, _ = _as_row_blocks(V, biam.n)
    if Vb.shape[0] != b:
        raise ValueError(f"expected {b} rows, got {Vb.shape[0]}")
    T, q = biam.T, biam.q
    w = Vb.shape[2]
    acc = np.zeros((w, w))
    start = T - b  # global (1-based) time of local row k is start + k + 1
    for k in range(b):
        t = start + k + 1
        ell = min(t - 1, q)
        fv = Vb[k].copy()
        if ell > 0:
            A = biam.ladder.coeffs[ell - 1]
            for j in range(1, ell + 1):
                if k - j >= 0:
                    fv -= A[j - 1] @ Vb[k - j]
        acc += fv.T @ biam.solve_sigma(ell, fv)
    return acc


def select_banding(
    u: np.ndarray,
    H: int | None = None,
    l0: int | None = None,
    norm: int = 1,
) -> int:
    """Risk-minimising banding parameter via non-overlapping subsequences.

    The residual series is split into floor(T / l0) subsequences of
    length l0. For every candidate q in [1, H) the banded inverse of the
    leading nH x nH autocovariance block is estimated on each
    subsequence and compared (in the induced p-norm, p in {1, 2}) to the
    inverse of the full-sample autocovariance estimate; the candidate
    with the smallest average deviation wins, ties going to the smallest
    candidate. Defaults: H = floor(2 T^{1/4}), l0 = floor(T / 5).
    """
    u = np.asarray(u, dtype=float)
    n, T = u.shape
    if H is None:
        H = int(2 * T**0.25)
    if l0 is None:
        l0 = T // 5
    if not (1 <= H < l0 <= T):
        raise ValueError(f"need 1 <= H < l0 <= T, got H={H}, l0={l0}, T={T}")
    if norm not in (1, 2):
        raise ValueError("norm must be 1 or 2")

    # Full-sample autocovariance of H stacked lags (newest first).
    count = T - H
    windows = np.concatenate([u[:, H - 1 - j : T - 1 - j].T for j in range(H)], axis=1)
    Pi = windows.T @ windows / count
    try:
        Pi_inv = np.linalg.inv(Pi)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError("full-sample autocovariance block is singular") from exc

    J0 = T // l0
    candidates = list(range(1, H))
    if not candidates:
        raise ValueError("H must be at least 2 to leave a candidate")
    risks = {qbar: [] for qbar in candidates}
    dead = set()
    for j in range(J0):
        sub = u[:, j * l0 : (j + 1) * l0]
        for qbar in candidates:
            if qbar in dead:
                continue
            try:
                ladder = fit_var_ladder(sub, qbar)
                biam = BiamDecomposition(ladder=ladder, q=qbar, T=H)
                est = materialize_small(biam)
            except (np.linalg.LinAlgError, ValueError):
                # A subsequence too short or too collinear for this order
                # removes the candidate from the race.
                dead.add(qbar)
                continue
            risks[qbar].append(np.linalg.norm(est - Pi_inv, ord=norm))
    viable = [qbar for qbar in candidates if qbar not in dead and risks[qbar]]
    if not viable:
        raise RankDeficientError("no banding candidate admitted a valid subsequence fit")
    avg = [float(np.mean(risks[qbar])) for qbar in viable]
    return viable[int(np.argmin(avg))]
