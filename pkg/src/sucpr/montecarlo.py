"""Data generating processes and the Monte Carlo experiment runner.

Setting A draws ARMA-type errors with equicorrelated Gaussian
innovations, Setting B draws VARMA errors with randomly rotated
coefficient matrices, and Setting C reuses Setting B innovations to
study size and power of the cointegration tests. Replications are
seeded through a splittable sequence so reports are reproducible and
independent of the degree of parallelism.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from sucpr.estimators import fm_gls, fm_sols, fm_sur, ols
from sucpr.inference import cointegration_test, wald
from sucpr.lrcov import andrews_bandwidth, bartlett_lrcov
from sucpr.model import CprSpec, PanelData, build_regressors

BETA_EQ = np.array([1.0, 1.0, 5.0, -0.3])
QUADRATIC = lambda n: CprSpec(tuple((1, 2) for _ in range(n)))  # noqa: E731


class CellAbortedError(RuntimeError):
    """Raised when too many replications of a cell fail."""


@dataclass(frozen=True)
class DgpConfig:
    """One simulation cell.

    ``setting`` is A, B, C_size, C_power1, C_power2 or C_power3. Setting
    A uses the single correlation parameter ``rho``; Settings B/C use
    the eigenvalue range (lam_low, lam_high) and innovation correlation
    theta. ``J`` counts the equations violating the null in Setting C.
    """

    setting: str
    n: int
    T: int
    rho: float = 0.0
    lam_low: float = 0.1
    lam_high: float = 0.5
    theta: float = 0.3
    J: int = 0
    presample: int = 200

    def __post_init__(self):
        if self.setting not in ("A", "B", "C_size", "C_power1", "C_power2", "C_power3"):
            raise ValueError(f"unknown setting {self.setting!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if self.setting != "A" and not (0.0 <= self.lam_low <= self.lam_high < 1.0):
            if not self.setting.startswith("C_power"):
                raise ValueError("eigenvalue range must satisfy 0 <= low <= high < 1")
        if self.J > self.n:
            raise ValueError("J cannot exceed n")


@dataclass(frozen=True)
class ExperimentReport:
    task: str
    config: DgpConfig
    reps: int
    failures: int
    stats: dict[str, float]
    std_errors: dict[str, float]
    elapsed: float


def toeplitz_sigma(m: int, rho: float) -> np.ndarray:
    """Equicorrelation matrix: unit diagonal, rho off-diagonal."""
    S = np.full((m, m), rho)
    np.fill_diagonal(S, 1.0)
    eig_min = 1.0 - rho if m > 1 else 1.0
    if min(eig_min, 1.0 + (m - 1) * rho) <= 0.0:
        raise ValueError(f"equicorrelation matrix with rho={rho} is not positive definite")
    return S


def _sigma_factor(m: int, rho: float) -> np.ndarray:
    return np.linalg.cholesky(toeplitz_sigma(m, rho))


def _assemble(config: DgpConfig, u: np.ndarray, v: np.ndarray, cubic_J: int = 0,
              spurious_J: int = 0) -> PanelData:
    n, T = config.n, config.T
    x = np.cumsum(v, axis=1)
    t = np.arange(1, T + 1, dtype=float)
    y = np.empty((n, T))
    for i in range(n):
        y[i] = BETA_EQ[0] + BETA_EQ[1] * t + BETA_EQ[2] * x[i] + BETA_EQ[3] * x[i] ** 2 + u[i]
        if i < cubic_J:
            y[i] += 0.01 * x[i] ** 3
    for i in range(spurious_J):
        y[i] = np.cumsum(u[i])
    return PanelData(y=y, x=x, x0=np.zeros(n))


def generate_setting_a(config: DgpConfig, rng: np.random.Generator) -> PanelData:
    """ARMA errors: u_t = rho u_{t-1} + eps_t + rho e_t, v_t = e_t + 0.5 e_{t-1}."""
    n, T, rho = config.n, config.T, config.rho
    total = T + config.presample
    Le = _sigma_factor(n, rho)
    eps = _sigma_factor(n, rho) @ rng.standard_normal((n, total))
    e = Le @ rng.standard_normal((n, total + 1))
    v_all = e[:, 1:] + 0.5 * e[:, :-1]
    u_all = np.empty((n, total))
    prev = np.zeros(n)
    for t in range(total):
        prev = rho * prev + eps[:, t] + rho * e[:, t + 1]
        u_all[:, t] = prev
    return _assemble(config, u_all[:, config.presample :], v_all[:, config.presample :])


def random_rotation_coeff(
    n: int, eigenvalues: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Symmetric matrix H L H' with H orthogonalised from a uniform draw."""
    for _ in range(100):
        U = rng.uniform(size=(n, n))
        G = U.T @ U
        if np.linalg.cond(G) < 1e8:
            break
    else:
        raise RuntimeError("failed to draw a well conditioned rotation seed")
    w, V = np.linalg.eigh(G)
    G_inv_sqrt = V @ np.diag(1.0 / np.sqrt(w)) @ V.T
    H = U @ G_inv_sqrt
    return H @ np.diag(eigenvalues) @ H.T


def _varma_errors(
    config: DgpConfig,
    rng: np.random.Generator,
    lam1: np.ndarray,
    lam_range_23: tuple[float, float],
    unit_roots: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Setting B/C error recursion; returns (u, v) of length T.

    When ``unit_roots`` > 0 the u recursion is nonstationary and is run
    from a zero start over the sample period only; the stationary pieces
    still discard the presample.
    """
    n, T = config.n, config.T
    pres = 0 if unit_roots > 0 else config.presample
    total = T + config.presample  # v always uses the full presample
    L1 = random_rotation_coeff(n, lam1, rng)
    L2 = random_rotation_coeff(n, rng.uniform(*lam_range_23, size=n), rng)
    L3 = random_rotation_coeff(n, rng.uniform(*lam_range_23, size=n), rng)
    Lz = _sigma_factor(2 * n, config.theta)
    zeta = Lz @ rng.standard_normal((2 * n, total + 1))
    eta, eps = zeta[:n], zeta[n:]
    v_all = np.empty((n, total))
    prev = np.zeros(n)
    for t in range(total):
        prev = L3 @ prev + eps[:, t + 1]
        v_all[:, t] = prev
    u_start = config.presample - pres
    u_len = T + pres
    u_all = np.empty((n, u_len))
    prev = np.zeros(n)
    for t in range(u_len):
        k = u_start + t
        prev = L1 @ prev + eta[:, k + 1] + L2 @ eta[:, k]
        u_all[:, t] = prev
    return u_all[:, pres:], v_all[:, config.presample :]


def generate_setting_b(config: DgpConfig, rng: np.random.Generator) -> PanelData:
    """VARMA errors with randomly rotated coefficient matrices."""
    lam1 = rng.uniform(config.lam_low, config.lam_high, size=config.n)
    u, v = _varma_errors(config, rng, lam1, (config.lam_low, config.lam_high))
    return _assemble(config, u, v)


def generate_setting_c(config: DgpConfig, rng: np.random.Generator) -> PanelData:
    """Size and power designs for the cointegration tests."""
    n = config.n
    base_range = (0.1, 0.5)
    if config.setting == "C_size":
        lam1 = rng.uniform(config.lam_low, config.lam_high, size=n)
        u, v = _varma_errors(config, rng, lam1, base_range)
        return _assemble(config, u, v)
    if config.setting == "C_power1":
        lam1 = np.concatenate([np.ones(config.J), rng.uniform(0.1, 0.5, size=n - config.J)])
        u, v = _varma_errors(config, rng, lam1, base_range, unit_roots=config.J)
        return _assemble(config, u, v)
    lam1 = rng.uniform(0.1, 0.5, size=n)
    u, v = _varma_errors(config, rng, lam1, base_range)
    if config.setting == "C_power2":
        return _assemble(config, u, v, cubic_J=config.J)
    return _assemble(config, u, v, spurious_J=config.J)


def generate(config: DgpConfig, rng: np.random.Generator) -> PanelData:
    if config.setting == "A":
        return generate_setting_a(config, rng)
    if config.setting == "B":
        return generate_setting_b(config, rng)
    return generate_setting_c(config, rng)


def _kernel_lr(spec, data):
    u_hat = ols(spec, data).residuals
    xi = np.vstack([u_hat, data.increments()])
    return bartlett_lrcov(xi, andrews_bandwidth(xi, max_rho=0.97))


_B14 = 3  # stacked index of the quadratic coefficient in equation 1


def _rep_mse(spec, data):
    lr = _kernel_lr(spec, data)
    out = {}
    out["err2_OLS"] = (ols(spec, data).beta[_B14] - BETA_EQ[3]) ** 2
    out["err2_SOLS"] = (fm_sols(spec, data, lr).beta[_B14] - BETA_EQ[3]) ** 2
    out["err2_SUR"] = (fm_sur(spec, data, lr).beta[_B14] - BETA_EQ[3]) ** 2
    out["err2_FGLS"] = (fm_gls(spec, data).beta[_B14] - BETA_EQ[3]) ** 2
    return out


def _rep_wald(spec, data, alpha=0.05, null_value=BETA_EQ[3]):
    lr = _kernel_lr(spec, data)
    R = np.zeros((1, spec.d))
    R[0, _B14] = 1.0
    r = np.array([null_value])
    out = {}
    for name, est in (
        ("SOLS", fm_sols(spec, data, lr)),
        ("SUR", fm_sur(spec, data, lr)),
        ("FGLS", fm_gls(spec, data)),
    ):
        out[f"rej_{name}"] = float(wald(est, R, r).p_value < alpha)
    return out


def _rep_coint(spec, data, alpha=0.05):
    out = {}
    for variant, key in (("SOLS", "rej_SOLS"), ("SUR", "rej_SUR"), ("BIAM", "rej_BIAM")):
        out[key] = float(cointegration_test(spec, data, variant, alpha).reject)
    return out


_TASKS = {
    "mse": _rep_mse,
    "wald_size": _rep_wald,
    "wald_power": _rep_wald,
    "coint_size": _rep_coint,
    "coint_power": _rep_coint,
}


def run_experiment(
    dgp: DgpConfig,
    task: str,
    reps: int,
    seed: int,
    parallelism: int = 1,
    wald_null: float | None = None,
) -> ExperimentReport:
    """Run one Monte Carlo cell and aggregate deterministically.

    Per-replication random streams come from spawning a single seed
    sequence, and aggregation iterates in replication order, so the
    report does not depend on ``parallelism``. Failed replications are
    counted; the cell aborts if they exceed 1 percent.
    """
    if task not in _TASKS:
        raise ValueError(f"unknown task {task!r}")
    if reps < 1:
        raise ValueError("need at least one replication")
    rep_fn = _TASKS[task]
    spec = QUADRATIC(dgp.n)
    children = np.random.SeedSequence(seed).spawn(reps)

    def one(idx: int):
        rng = np.random.default_rng(children[idx])
        data = generate(dgp, rng)
        try:
            if task in ("wald_size", "wald_power") and wald_null is not None:
                return rep_fn(spec, data, null_value=wald_null)
            return rep_fn(spec, data)
        except (np.linalg.LinAlgError, ValueError, RuntimeError):
            return None

    start = time.perf_counter()
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(one, range(reps)))
    else:
        results = [one(i) for i in range(reps)]
    elapsed = time.perf_counter() - start

    failures = sum(1 for r in results if r is None)
    if failures > 0.01 * reps:
        raise CellAbortedError(
            f"{failures} of {reps} replications failed in cell {dgp} task {task}"
        )
    good = [r for r in results if r is not None]
    keys = list(good[0].keys())
    stats, ses = {}, {}
    m = len(good)
    for k in keys:
        vals = np.array([g[k] for g in good])
        stats[k] = float(vals.mean())
        if k.startswith("rej_"):
            p = stats[k]
            ses[k] = float(np.sqrt(p * (1.0 - p) / m))
        else:
            ses[k] = float(vals.std(ddof=1) / np.sqrt(m)) if m > 1 else float("inf")
    if task == "mse":
        base = stats["err2_FGLS"]
        for name in ("OLS", "SOLS", "SUR"):
            stats[f"rel_{name}"] = stats[f"err2_{name}"] / base if base > 0 else np.inf
    return ExperimentReport(
        task=task,
        config=dgp,
        reps=reps,
        failures=failures,
        stats=stats,
        std_errors=ses,
        elapsed=elapsed,
    )
