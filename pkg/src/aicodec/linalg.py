"""Random ensembles, difference operators and singular-value estimators.

The difference matrix ``D`` is the m x m lower bidiagonal matrix with ones on
the diagonal and -1 on the subdiagonal. Every operator here applies ``D**r``
or ``D**-r`` with O(r*m) recurrences; a dense ``D**r`` is only built by
:func:`difference_matrix`, which exists for test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "GENERATOR_ID",
    "M_MAX_LIMIT",
    "NumericFailure",
    "RngSpec",
    "EnsembleSpec",
    "Ensemble",
    "gen_matrix",
    "apply_D_r",
    "apply_Dinv_r",
    "apply_Dinv_r_adjoint",
    "difference_matrix",
    "smallest_singular_value",
    "operator_norm",
]

# PCG64 stream; Gaussians by the cosine branch of Box-Muller on interleaved
# uniform pairs so that row-major prefixes of a matrix are reproducible.
GENERATOR_ID = "pcg64-boxmuller-v1"

M_MAX_LIMIT = 1 << 16

MATRIX_KINDS = ("gaussian", "bernoulli")


class NumericFailure(RuntimeError):
    """An iterative numerical routine did not reach its tolerance."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


@dataclass(frozen=True)
class RngSpec:
    seed: int
    generator_id: str = GENERATOR_ID

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.generator_id != GENERATOR_ID:
            raise ValueError(
                f"unsupported generator {self.generator_id!r}, expected {GENERATOR_ID!r}"
            )

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(int(self.seed)))


def _uniforms(rng: RngSpec, n: int) -> np.ndarray:
    return rng.generator().random(n)


def gen_matrix(kind: str, rows: int, cols: int, rng: RngSpec) -> np.ndarray:
    """Draw a ``rows x cols`` random matrix, deterministically from ``rng``.

    Gaussian entries are i.i.d. N(0, 1); Bernoulli entries are i.i.d. +-1 with
    equal probability. Entries are generated in row-major order, so the first
    ``k`` rows of a larger draw equal a ``k``-row draw with the same spec.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    n = rows * cols
    if kind == "gaussian":
        u = _uniforms(rng, 2 * n)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        entries = radius * np.cos(2.0 * np.pi * u[1::2])
    elif kind == "bernoulli":
        entries = np.where(_uniforms(rng, n) < 0.5, 1.0, -1.0)
    else:
        raise ValueError(f"unknown matrix kind {kind!r}; expected one of {MATRIX_KINDS}")
    return entries.reshape(rows, cols)


def _check_order(r):
    if int(r) != r or r < 1:
        raise ValueError(f"difference order must be an integer >= 1, got {r}")


def apply_D_r(v, r: int) -> np.ndarray:
    """Apply ``D**r`` along axis 0 (first differences with zero history)."""
    _check_order(r)
    out = np.array(v, dtype=float, copy=True)
    for _ in range(int(r)):
        out[1:] = out[1:] - out[:-1]
    return out


def apply_Dinv_r(v, r: int) -> np.ndarray:
    """Apply ``D**-r`` along axis 0 as ``r`` nested prefix sums.

    Integer input stays integer, which the encoder relies on for exact
    lattice arithmetic.
    """
    _check_order(r)
    out = np.asarray(v)
    if out.dtype.kind not in "iuO":
        out = out.astype(float)
    for _ in range(int(r)):
        out = np.cumsum(out, axis=0)
    return out


def apply_Dinv_r_adjoint(v, r: int) -> np.ndarray:
    """Apply ``(D**-r).T`` along axis 0 (nested suffix sums)."""
    _check_order(r)
    out = np.asarray(v)
    if out.dtype.kind not in "iuO":
        out = out.astype(float)
    for _ in range(int(r)):
        out = np.cumsum(out[::-1], axis=0)[::-1]
    return np.ascontiguousarray(out)


def difference_matrix(m: int, r: int = 1, inverse: bool = False) -> np.ndarray:
    """Dense ``D**r`` (or its inverse). Test-oracle use only.

    The inverse is obtained by forward substitution against the identity,
    independently of :func:`apply_Dinv_r`.
    """
    _check_order(r)
    D = np.eye(m) - np.eye(m, k=-1)
    Dr = np.linalg.matrix_power(D, int(r))
    if inverse:
        return solve_triangular(Dr, np.eye(m), lower=True)
    return Dr


@dataclass(frozen=True)
class EnsembleSpec:
    """Dimensions and seeds of the sensing and encoding matrices.

    ``L`` is the largest encoding dimension that will be requested; the
    encoder for ``(m, l)`` is the upper-left ``l x m`` block of the
    ``L x m_max`` Bernoulli draw and the sensing matrix for ``m`` is the
    first ``m`` rows of the ``m_max x N`` draw.
    """

    N: int
    m_max: int
    L: int
    phi_kind: str = "gaussian"
    phi_seed: RngSpec = RngSpec(1)
    b_seed: RngSpec = RngSpec(2)

    def __post_init__(self):
        if self.N < 1 or self.m_max < 1 or self.L < 1:
            raise ValueError("N, m_max and L must be positive")
        if not self.L <= self.m_max <= M_MAX_LIMIT:
            raise ValueError(
                f"need L <= m_max <= {M_MAX_LIMIT}, got L={self.L}, m_max={self.m_max}"
            )
        if self.phi_kind not in MATRIX_KINDS:
            raise ValueError(f"unknown phi_kind {self.phi_kind!r}")


class Ensemble:
    """Materialized, read-only matrices of an :class:`EnsembleSpec`."""

    def __init__(self, spec: EnsembleSpec):
        self.spec = spec
        self._phi = gen_matrix(spec.phi_kind, spec.m_max, spec.N, spec.phi_seed)
        self._B = gen_matrix("bernoulli", spec.L, spec.m_max, spec.b_seed)
        self._phi.flags.writeable = False
        self._B.flags.writeable = False

    def phi(self, m: int) -> np.ndarray:
        if not 1 <= m <= self.spec.m_max:
            raise ValueError(f"m={m} outside [1, {self.spec.m_max}]")
        return self._phi[:m]

    def encoder(self, m: int, L: int | None = None) -> np.ndarray:
        L = self.spec.L if L is None else L
        if not 1 <= m <= self.spec.m_max:
            raise ValueError(f"m={m} outside [1, {self.spec.m_max}]")
        if not 1 <= L <= min(self.spec.L, m):
            raise ValueError(f"L={L} must lie in [1, min({self.spec.L}, m={m})]")
        return self._B[:L, :m]


def _tall_triangle(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("expected a non-empty 2-D matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if M.shape[0] < M.shape[1]:
        M = M.T
    return np.linalg.qr(M, mode="r")


def _start_block(n, p):
    # fixed start keeps the estimators pure functions of their input
    return np.linalg.qr(np.random.default_rng(0x5EED).standard_normal((n, p)))[0]


def _ritz(R, Q):
    # Rayleigh-Ritz on the block: columns of the result ordered by decreasing
    # singular value of R restricted to span(Q).
    _, _, Vt = np.linalg.svd(R @ Q, full_matrices=False)
    return Q @ Vt.T


def smallest_singular_value(M, tol: float = 1e-10, max_iters: int = 10000) -> float:
    """``min(rows, cols)``-th singular value of ``M``.

    Block inverse iteration on ``R.T @ R``, where ``R`` is the triangular
    factor of the tall orientation of ``M``. Convergence is judged on the
    inverse operator: with ``u = R v / sigma``, ``R^-1`` has a singular value
    within ``eta = ||R^-T v - u / sigma||`` of ``1 / sigma``, so
    ``sigma * eta <= tol`` bounds the relative error of the result.
    """
    R = _tall_triangle(M)
    n = R.shape[0]
    if np.abs(R).max() == 0.0 or np.min(np.abs(np.diag(R))) == 0.0:
        return 0.0
    if n == 1:
        return float(abs(R[0, 0]))
    Q = _start_block(n, min(4, n))
    for _ in range(max_iters):
        Y = solve_triangular(R, solve_triangular(R, Q, trans="T"))
        Q = _ritz(R, np.linalg.qr(Y)[0])
        v = Q[:, -1]
        Rv = R @ v
        sigma = np.linalg.norm(Rv)
        if sigma == 0.0:
            return 0.0
        eta = np.linalg.norm(solve_triangular(R, v, trans="T") - Rv / sigma**2)
        if sigma * eta <= tol:
            return float(sigma)
    raise NumericFailure(
        f"smallest singular value did not converge in {max_iters} iterations",
        iterations=max_iters,
    )


def operator_norm(M, tol: float = 1e-10, max_iters: int = 10000) -> float:
    """Largest singular value of ``M`` by block power iteration on the Gram operator.

    Stops when ``||R.T u - sigma v|| <= tol * sigma`` for ``u = R v / sigma``;
    some singular value then lies within that residual of ``sigma``.
    """
    R = _tall_triangle(M)
    n = R.shape[0]
    if np.abs(R).max() == 0.0:
        return 0.0
    if n == 1:
        return float(abs(R[0, 0]))
    Q = _start_block(n, min(4, n))
    for _ in range(max_iters):
        Q = _ritz(R, np.linalg.qr(R.T @ (R @ Q))[0])
        v = Q[:, 0]
        Rv = R @ v
        sigma = np.linalg.norm(Rv)
        if np.linalg.norm(R.T @ (Rv / sigma) - sigma * v) <= tol * sigma:
            return float(sigma)
    raise NumericFailure(
        f"operator norm did not converge in {max_iters} iterations", iterations=max_iters
    )
