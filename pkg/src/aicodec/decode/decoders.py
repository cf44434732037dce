"""Decoders that turn a quantized (or encoded) measurement back into a signal.

Every decoder is an l1 minimization over a residual ball; they differ in the
operator, the target and the radius ``tau``:

============  ==========================  ================================
variant       operator / target           radius
============  ==========================  ================================
noiseless     ``B D^-r Phi`` / ``B D^-r q``  ``3 C m``
noisy         adds noise ``e``, ``||e|| <= sqrt(m) eps``  ``3 C m``
nonuniform    as ``noisy``                ``2 C sqrt(L m)``
first_order   ``B D^-r Phi`` / ``B D^-r q``  ``(2 + eta) C sqrt(m L)``
msq_bpdn      ``Phi`` / ``q``             ``delta sqrt(m) / 2``
two_stage     ``msq_bpdn`` support, then Sobolev-dual least squares
============  ==========================  ================================

``C`` is the stability constant of the quantizer (``delta / 2`` for the
greedy schemes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, solve_triangular

from ..linalg import NumericFailure, apply_Dinv_r, apply_Dinv_r_adjoint
from .solver import DecodeResult, SolverOptions, solve_ball_l1, solve_two_ball_l1

__all__ = [
    "VARIANTS",
    "DecodeProblem",
    "noise_shaped_encoder",
    "decode_noiseless",
    "decode_noisy",
    "decode_first_order",
    "decode_msq_bpdn",
    "decode_two_stage_sobolev",
]

VARIANTS = ("noiseless", "noisy", "nonuniform", "first_order", "msq_bpdn", "two_stage")


def noise_shaped_encoder(B, r: int) -> np.ndarray:
    """``B @ D**-r`` computed as suffix sums along the rows of ``B``."""
    return apply_Dinv_r_adjoint(np.asarray(B, dtype=float).T, r).T


def _shapes(Phi, B, q, target):
    Phi = np.asarray(Phi, dtype=float)
    B = np.asarray(B, dtype=float)
    m = Phi.shape[0]
    if B.shape[1] != m:
        raise ValueError(f"B has {B.shape[1]} columns but Phi has {m} rows")
    if target is None:
        if q is None:
            raise ValueError("need either q or an encoded target")
        q = np.asarray(q, dtype=float)
        if q.shape != (m,):
            raise ValueError(f"q has shape {q.shape}, expected ({m},)")
    elif np.shape(target) != (B.shape[0],):
        raise ValueError(f"target has shape {np.shape(target)}, expected ({B.shape[0]},)")
    return Phi, B, q


def _encoded_problem(Phi, B, q, r, target):
    G = noise_shaped_encoder(B, r)
    A = G @ Phi
    b = G @ q if target is None else np.asarray(target, dtype=float)
    return A, G, b


def decode_noiseless(Phi, B, q, r: int, C: float, opts: SolverOptions | None = None,
                     tau: float | None = None, target=None) -> DecodeResult:
    """``min ||z||_1`` s.t. ``||B D^-r (Phi z - q)|| <= 3 C m``.

    ``tau`` overrides the radius; ``target`` replaces ``B D^-r q`` (e.g. the
    values of a received codeword), in which case ``q`` may be ``None``.
    """
    Phi, B, q = _shapes(Phi, B, q, target)
    A, _, b = _encoded_problem(Phi, B, q, r, target)
    radius = 3.0 * C * Phi.shape[0] if tau is None else tau
    return solve_ball_l1(A, b, radius, opts)


def decode_first_order(Phi, B, q, r: int, gamma: float, eta: float = 1.0,
                       opts: SolverOptions | None = None, target=None) -> DecodeResult:
    """Same program as :func:`decode_noiseless` with radius ``(2 + eta) gamma sqrt(m L)``."""
    if eta < 0:
        raise ValueError(f"eta must be non-negative, got {eta}")
    Phi, B, q = _shapes(Phi, B, q, target)
    A, _, b = _encoded_problem(Phi, B, q, r, target)
    radius = (2.0 + eta) * gamma * math.sqrt(Phi.shape[0] * B.shape[0])
    return solve_ball_l1(A, b, radius, opts)


def decode_noisy(Phi, B, q, r: int, C: float, eps: float, tau_policy: str = "noisy",
                 opts: SolverOptions | None = None, target=None) -> DecodeResult:
    """Decode with explicit noise and state variables.

    Solves ``min ||x||_1`` over ``(x, u, e)`` subject to
    ``B D^-r (Phi x + e) - B u = B D^-r q``, ``||B u|| <= tau_u`` and
    ``||e|| <= sqrt(m) eps``, where ``tau_u = 3 C m`` (``tau_policy="noisy"``)
    or ``2 C sqrt(L m)`` (``"nonuniform"``). Only ``B u`` enters the
    constraints, so the solver works with ``w = B u`` eliminated and the
    returned ``u_hat`` is the minimum-norm ``u`` that reproduces ``w``.
    """
    if not eps >= 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    Phi, B, q = _shapes(Phi, B, q, target)
    L, m = B.shape
    if tau_policy == "noisy":
        tau_u = 3.0 * C * m
    elif tau_policy == "nonuniform":
        tau_u = 2.0 * C * math.sqrt(L * m)
    else:
        raise ValueError(f"unknown tau_policy {tau_policy!r}")
    A, G, b = _encoded_problem(Phi, B, q, r, target)
    res = solve_two_ball_l1(A, G, b, tau_u, math.sqrt(m) * eps, opts)
    w = A @ res.x_hat + G @ res.e_hat - b
    res.u_hat = np.linalg.lstsq(B, w, rcond=None)[0]
    coupling = float(np.linalg.norm(B @ res.u_hat - w))
    res.feas_residual = max(res.feas_residual, coupling)
    res.converged = res.converged and res.feas_residual <= (opts or SolverOptions()).feas_tol(tau_u)
    return res


def decode_msq_bpdn(Phi, q, delta: float, opts: SolverOptions | None = None) -> DecodeResult:
    """``min ||z||_1`` s.t. ``||Phi z - q|| <= delta sqrt(m) / 2``."""
    Phi = np.asarray(Phi, dtype=float)
    return solve_ball_l1(Phi, q, delta * math.sqrt(Phi.shape[0]) / 2.0, opts)


def decode_two_stage_sobolev(Phi, q, r: int, k: int, delta: float,
                             opts: SolverOptions | None = None,
                             rank_rtol: float = 1e-10) -> DecodeResult:
    """Support from a BPDN pass, then least squares through the Sobolev dual.

    The ``k`` largest entries of the BPDN estimate define ``T``; the
    estimate on ``T`` solves ``min ||D^-r (Phi_T z - q)||_2`` by pivoted QR.
    A numerically rank-deficient ``D^-r Phi_T`` raises ``NumericFailure``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    Phi = np.asarray(Phi, dtype=float)
    q = np.asarray(q, dtype=float)
    m, N = Phi.shape
    if k > min(m, N):
        raise ValueError(f"k={k} exceeds min(m, N)={min(m, N)}")
    stage1 = decode_msq_bpdn(Phi, q, delta, opts)
    T = np.sort(np.argsort(-np.abs(stage1.x_hat), kind="stable")[:k])
    F = apply_Dinv_r(Phi[:, T], r)
    rhs = apply_Dinv_r(q, r)
    Qf, R, piv = qr(F, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag[-1] <= rank_rtol * diag[0]:
        raise NumericFailure(f"restricted sensing matrix has numerical rank below k={k}")
    z = np.empty(k)
    z[piv] = solve_triangular(R, Qf.T @ rhs)
    x = np.zeros(N)
    x[T] = z
    return DecodeResult(
        x_hat=x,
        objective=float(np.abs(x).sum()),
        feas_residual=0.0,
        iterations=stage1.iterations,
        converged=stage1.converged,
        tau=stage1.tau,
        info={"support": T, "stage1_objective": stage1.objective},
    )


@dataclass
class DecodeProblem:
    """A decoding task: variant, operators, data and the constants its radius needs.

    ``tau_override`` replaces the variant's radius for the single-ball
    variants (``noiseless``, ``first_order``, ``msq_bpdn``). ``target``
    stands in for ``B D^-r q`` when decoding a received codeword.
    """

    variant: str
    Phi: np.ndarray
    q: np.ndarray | None
    r: int = 1
    B: np.ndarray | None = None
    C: float | None = None
    delta: float | None = None
    eps: float = 0.0
    eta: float = 1.0
    k: int | None = None
    tau_override: float | None = None
    target: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant in ("msq_bpdn", "two_stage"):
            if self.delta is None:
                raise ValueError(f"{self.variant} needs delta")
        elif self.B is None or self.C is None:
            raise ValueError(f"{self.variant} needs B and C")
        if self.variant == "two_stage" and self.k is None:
            raise ValueError("two_stage needs k")
        if self.tau_override is not None and self.variant in ("noisy", "nonuniform", "two_stage"):
            raise ValueError(f"{self.variant} does not accept a radius override")

    def solve(self, opts: SolverOptions | None = None) -> DecodeResult:
        v = self.variant
        if v == "noiseless":
            return decode_noiseless(self.Phi, self.B, self.q, self.r, self.C, opts,
                                    tau=self.tau_override, target=self.target)
        if v in ("noisy", "nonuniform"):
            return decode_noisy(self.Phi, self.B, self.q, self.r, self.C, self.eps,
                                tau_policy=v, opts=opts, target=self.target)
        if v == "first_order":
            if self.tau_override is not None:
                return decode_noiseless(self.Phi, self.B, self.q, self.r, self.C, opts,
                                        tau=self.tau_override, target=self.target)
            return decode_first_order(self.Phi, self.B, self.q, self.r, self.C, self.eta,
                                      opts, target=self.target)
        if v == "msq_bpdn":
            if self.tau_override is not None:
                return solve_ball_l1(self.Phi, self.q, self.tau_override, opts)
            return decode_msq_bpdn(self.Phi, self.q, self.delta, opts)
        return decode_two_stage_sobolev(self.Phi, self.q, self.r, self.k, self.delta, opts)
