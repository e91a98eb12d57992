"""Data model for systems of cointegrating polynomial regressions.

Each equation i regresses y_it on a deterministic polynomial trend of
order d_i and on integer powers 1..s_i of an integrated regressor x_it.
The stacked regressor matrix is block diagonal across equations, and the
block structure is preserved throughout: regressors are stored per
equation, never as dense d x n blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Raised when input dimensions are inconsistent."""


@dataclass(frozen=True)
class CprSpec:
    """Per-equation polynomial orders (trend order d_i, power order s_i)."""

    equations: tuple[tuple[int, int], ...]

    def __post_init__(self):
        eqs = tuple((int(d), int(s)) for d, s in self.equations)
        object.__setattr__(self, "equations", eqs)
        if len(eqs) < 1:
            raise ValueError("at least one equation is required")
        for d_i, s_i in eqs:
            if d_i < 0:
                raise ValueError(f"trend order must be nonnegative, got {d_i}")
            if s_i < 1:
                raise ValueError(f"power order must be at least 1, got {s_i}")

    @property
    def n(self) -> int:
        return len(self.equations)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(d + s + 1 for d, s in self.equations)

    @property
    def d(self) -> int:
        """Total number of parameters across all equations."""
        return sum(self.block_sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Start index of each equation's block in the stacked parameter vector."""
        out = [0]
        for size in self.block_sizes[:-1]:
            out.append(out[-1] + size)
        return tuple(out)

    def split(self, beta: np.ndarray) -> list[np.ndarray]:
        """Split a stacked length-d vector into per-equation pieces."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.d,):
            raise DimensionError(f"expected parameter vector of length {self.d}, got {beta.shape}")
        return [beta[o : o + s] for o, s in zip(self.offsets, self.block_sizes)]


@dataclass(frozen=True)
class PanelData:
    """n dependent series and n integrated regressors of common length T.

    ``x0`` holds the pre-sample level of the integrated regressors; it is
    zero for simulated data and unknown (None) for observed data, in
    which case the first increment is set to zero.
    """

    y: np.ndarray
    x: np.ndarray
    x0: np.ndarray | None = None

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        x = np.ascontiguousarray(self.x, dtype=float)
        if y.ndim != 2 or x.ndim != 2:
            raise DimensionError("y and x must be n x T matrices")
        if y.shape != x.shape:
            raise DimensionError(f"y shape {y.shape} and x shape {x.shape} differ")
        if not (np.isfinite(y).all() and np.isfinite(x).all()):
            raise ValueError("y and x must not contain missing or non-finite values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float)
            if x0.shape != (y.shape[0],):
                raise DimensionError(f"x0 must have shape ({y.shape[0]},)")
            object.__setattr__(self, "x0", x0)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]

    def increments(self) -> np.ndarray:
        """First differences of the integrated regressors, shape n x T.

        The t=1 increment uses x0 when available and is zero otherwise.
        """
        v = np.empty_like(self.x)
        v[:, 1:] = np.diff(self.x, axis=1)
        v[:, 0] = self.x[:, 0] - self.x0 if self.x0 is not None else 0.0
        return v


@dataclass(frozen=True)
class RegressorSystem:
    """Per-equation regressor blocks z_it = [1, t, ..., t^{d_i}, x_it, ..., x_it^{s_i}].

    ``blocks[i]`` has shape (T, d_i + s_i + 1). Off-diagonal blocks of the
    stacked block-diagonal regressor matrix are structurally zero and are
    never stored.
    """

    spec: CprSpec
    blocks: tuple[np.ndarray, ...]

    @property
    def T(self) -> int:
        return self.blocks[0].shape[0]

    def row_blocks(self) -> np.ndarray:
        """Dense n x d row blocks for every t, shape (T, n, d).

        Row t is the transpose of the block-diagonal Z_t; used by the
        filtering code paths which mix equations.
        """
        spec = self.spec
        out = np.zeros((self.T, spec.n, spec.d))
        for i, (off, size) in enumerate(zip(spec.offsets, spec.block_sizes)):
            out[:, i, off : off + size] = self.blocks[i]
        return out

    def dot_equation(self, i: int, beta_i: np.ndarray) -> np.ndarray:
        """Fitted values of equation i, length T."""
        return self.blocks[i] @ beta_i


def build_regressors(spec: CprSpec, data: PanelData) -> RegressorSystem:
    """Construct the per-equation regressor blocks from levels data."""
    if data.n != spec.n:
        raise DimensionError(f"spec has {spec.n} equations but data has {data.n} series")
    T = data.T
    if T <= max(spec.block_sizes):
        raise DimensionError(f"series length {T} too short for the largest block")
    t = np.arange(1, T + 1, dtype=float)
    blocks = []
    for i, (d_i, s_i) in enumerate(spec.equations):
        cols = [t**k for k in range(d_i + 1)]
        cols += [data.x[i] ** k for k in range(1, s_i + 1)]
        blocks.append(np.column_stack(cols))
    return RegressorSystem(spec=spec, blocks=tuple(blocks))


@dataclass(frozen=True)
class ScalingMatrix:
    """Diagonal scaling applied to the stacked regressors before solving.

    Trend entries scale as T^{-1/2} * T^{-k} for power k of t; stochastic
    entries as T^{-1/2} * T^{-k/2} for power k of x. Solving on scaled
    regressors keeps the normal matrix well conditioned for long samples
    and high powers.
    """

    spec: CprSpec
    diag: np.ndarray

    @property
    def inverse_diag(self) -> np.ndarray:
        return 1.0 / self.diag

    def split(self) -> list[np.ndarray]:
        return [self.diag[o : o + s] for o, s in zip(self.spec.offsets, self.spec.block_sizes)]


def scaling_matrix(spec: CprSpec, T: int) -> ScalingMatrix:
    """Diagonal of the scaling matrix for sample size T."""
    if T < 1:
        raise ValueError("T must be positive")
    entries = []
    for d_i, s_i in spec.equations:
        for k in range(d_i + 1):
            entries.append(float(T) ** (-0.5 - k))
        for k in range(1, s_i + 1):
            entries.append(float(T) ** (-0.5 - 0.5 * k))
    return ScalingMatrix(spec=spec, diag=np.array(entries))


def bhat_vectors(spec: CprSpec, data: PanelData) -> list[np.ndarray]:
    """Per-equation design vectors entering the second-order bias corrections.

    For equation i the vector has d_i + 1 leading zeros followed by
    k * sum_t x_it^{k-1} for k = 1..s_i (the k = 1 entry is T).
    """
    if data.n != spec.n:
        raise DimensionError("spec/data dimension mismatch")
    T = data.T
    out = []
    for i, (d_i, s_i) in enumerate(spec.equations):
        b = np.zeros(d_i + s_i + 1)
        for k in range(1, s_i + 1):
            b[d_i + k] = k * np.sum(data.x[i] ** (k - 1))
        out.append(b)
    return out


def residuals(spec: CprSpec, data: PanelData, beta: np.ndarray) -> np.ndarray:
    """Residual matrix u_hat = y - Z' beta, shape n x T."""
    regs = build_regressors(spec, data)
    parts = spec.split(beta)
    u = np.empty_like(data.y)
    for i in range(spec.n):
        u[i] = data.y[i] - regs.dot_equation(i, parts[i])
    return u
