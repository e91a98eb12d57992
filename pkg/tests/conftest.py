"""Shared helpers: random stationary VARs and population-autocovariance ladders."""

from __future__ import annotations

import numpy as np
import pytest

from sucpr.biam import VarLadder


@pytest.fixture
def rng():
    return np.random.default_rng(20240815)


def random_stationary_var(n: int, p: int, rng: np.random.Generator, radius: float = 0.7):
    """Draw VAR(p) coefficient blocks with companion spectral radius <= radius.

    Returns (list of n x n lag matrices, innovation covariance).
    """
    A = [rng.normal(scale=0.4, size=(n, n)) for _ in range(p)]
    comp = companion(A)
    rho = max(abs(np.linalg.eigvals(comp)))
    if rho >= radius:
        scale = radius / (rho + 1e-12)
        A = [a * scale ** (j + 1) for j, a in enumerate(A)]
    L = rng.normal(scale=0.5, size=(n, n))
    sigma = L @ L.T + 0.5 * np.eye(n)
    return A, sigma


def companion(A: list[np.ndarray]) -> np.ndarray:
    n, p = A[0].shape[0], len(A)
    C = np.zeros((n * p, n * p))
    C[:n] = np.hstack(A)
    if p > 1:
        C[n:, : n * (p - 1)] = np.eye(n * (p - 1))
    return C


def var_autocovariances(A: list[np.ndarray], sigma: np.ndarray, max_lag: int) -> list[np.ndarray]:
    """Population autocovariances Gamma(0..max_lag) of a stationary VAR(p).

    Gamma(h) = E[u_t u_{t-h}'], solved from the companion-form discrete
    Lyapunov equation and extended by the Yule-Walker recursion.
    """
    n, p = A[0].shape[0], len(A)
    C = companion(A)
    Q = np.zeros((n * p, n * p))
    Q[:n, :n] = sigma
    m = n * p
    vecG = np.linalg.solve(np.eye(m * m) - np.kron(C, C), Q.reshape(-1))
    G = vecG.reshape(m, m)
    gammas = [G[:n, j * n : (j + 1) * n] for j in range(p)]  # Gamma(0..p-1)
    for h in range(p, max_lag + 1):
        acc = np.zeros((n, n))
        for j in range(1, p + 1):
            g = gammas[h - j] if h - j >= 0 else gammas[j - h].T
            acc += A[j - 1] @ g
        gammas.append(acc)
    return gammas[: max_lag + 1]


def population_ladder(A: list[np.ndarray], sigma: np.ndarray, q: int) -> VarLadder:
    """Exact best-linear-predictor ladder of orders 1..q from the autocovariances.

    Order-l coefficients solve the block Toeplitz normal equations
    Gamma(k) = sum_j B_j Gamma(k - j), k = 1..l, and the prediction error
    covariance is Gamma(0) - sum_j B_j Gamma(j)'.
    """
    n = A[0].shape[0]
    gammas = var_autocovariances(A, sigma, q)

    def gam(h: int) -> np.ndarray:
        return gammas[h] if h >= 0 else gammas[-h].T

    coeffs, sigmas = [], [0.5 * (gammas[0] + gammas[0].T)]
    for ell in range(1, q + 1):
        big = np.block([[gam(j - k) for j in range(1, ell + 1)] for k in range(1, ell + 1)])
        rhs = np.vstack([gam(k).T for k in range(1, ell + 1)])
        sol = np.linalg.solve(big, rhs)  # stacked B_j' blocks
        B = np.stack([sol[(j - 1) * n : j * n].T for j in range(1, ell + 1)])
        S = gammas[0] - sum(B[j - 1] @ gam(j).T for j in range(1, ell + 1))
        S = 0.5 * (S + S.T)
        coeffs.append(B)
        sigmas.append(S)
    return VarLadder(coeffs=tuple(coeffs), sigmas=tuple(sigmas))


def toeplitz_cov(gammas: list[np.ndarray], T: int) -> np.ndarray:
    """Dense nT x nT block Toeplitz covariance from Gamma(0..T-1)."""
    n = gammas[0].shape[0]
    S = np.empty((n * T, n * T))
    for t in range(T):
        for s in range(T):
            h = t - s
            block = gammas[h] if h >= 0 else gammas[-h].T
            S[t * n : (t + 1) * n, s * n : (s + 1) * n] = block
    return S


def simulate_var(
    A: list[np.ndarray], sigma: np.ndarray, T: int, rng: np.random.Generator, presample: int = 300
) -> np.ndarray:
    n, p = A[0].shape[0], len(A)
    L = np.linalg.cholesky(sigma)
    e = L @ rng.standard_normal((n, T + presample))
    u = np.zeros((n, T + presample))
    for t in range(T + presample):
        acc = e[:, t].copy()
        for j in range(1, p + 1):
            if t - j >= 0:
                acc += A[j - 1] @ u[:, t - j]
        u[:, t] = acc
    return u[:, presample:]
