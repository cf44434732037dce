"""First-order solvers for l1 minimization over an l2 residual ball.

``solve_ball_l1`` handles ``min ||x||_1  s.t.  ||A x - b||_2 <= tau`` by ADMM
on the splitting ``x = v``: the x-step is an exact Euclidean projection onto
the (possibly degenerate) ellipsoid ``{x : ||A x - b|| <= tau}``, computed
from a thin SVD of ``A`` and a scalar secular equation, and the v-step is
soft thresholding. ``solve_two_ball_l1`` adds a second block ``e`` that lives
in a centred l2 ball and enters the residual through ``G``.

Operators are only ever touched through matrix-vector products, but since
every instance here is at most a few thousand columns wide the solver first
materializes ``A`` (an operator is applied to the identity) and factors it
once; each ADMM iteration then costs two thin matrix-vector products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator

__all__ = [
    "SolverOptions",
    "DecodeResult",
    "InfeasibleError",
    "BallProjector",
    "as_dense",
    "solve_ball_l1",
    "solve_two_ball_l1",
]

# singular values below this fraction of the largest are treated as zero
_RANK_RTOL = 1e-12


class InfeasibleError(ValueError):
    """The residual ball misses the range of the operator entirely."""

    def __init__(self, message, distance=None, tau=None):
        super().__init__(message)
        self.distance = distance
        self.tau = tau


@dataclass(frozen=True)
class SolverOptions:
    """Stopping and step parameters shared by all decoders.

    ``tol_feas=None`` means ``1e-6 * (1 + tau)`` for the problem at hand.
    A solve is declared converged once the iterate is feasible within
    ``tol_feas``, the relative change of the objective over the last
    ``window`` iterations is at most ``tol_gap``, and the two ADMM blocks
    agree to ``consensus_tol`` (relative). A support polish that passes its
    optimality check also ends the solve.
    """

    max_iters: int = 20000
    tol_feas: float | None = None
    tol_gap: float = 1e-8
    window: int = 50
    consensus_tol: float = 1e-7
    rho: float = 1.0
    rho_update_every: int = 10
    rho_balance: float = 10.0
    polish: bool = True

    def __post_init__(self):
        if self.max_iters < 1 or self.window < 1:
            raise ValueError("max_iters and window must be positive")
        if self.tol_feas is not None and not self.tol_feas > 0:
            raise ValueError("tol_feas must be positive")
        if not (self.tol_gap > 0 and self.consensus_tol > 0 and self.rho > 0):
            raise ValueError("tolerances and rho must be positive")

    def feas_tol(self, tau: float) -> float:
        return 1e-6 * (1.0 + tau) if self.tol_feas is None else self.tol_feas


@dataclass
class DecodeResult:
    x_hat: np.ndarray
    objective: float
    feas_residual: float
    iterations: int
    converged: bool
    tau: float = 0.0
    u_hat: np.ndarray | None = None
    e_hat: np.ndarray | None = None
    polished: bool = False
    info: dict = field(default_factory=dict)


def as_dense(A) -> np.ndarray:
    """Dense copy of a matrix or ``LinearOperator`` (applied to the identity)."""
    if isinstance(A, LinearOperator):
        return np.asarray(A.matmat(np.eye(A.shape[1])), dtype=float)
    return np.asarray(A, dtype=float)


def _soft(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


class BallProjector:
    """Euclidean projection onto ``{x : ||A x - b|| <= tau}``.

    With ``A = U diag(s) V^T`` (thin, numerically nonzero ``s`` only) and
    ``pi = V^T p``, ``g = s * pi - U^T b``, the projection is
    ``p - V pi + V (pi + lam s U^T b) / (1 + lam s^2)`` where ``lam >= 0``
    solves ``sum g^2 / (1 + lam s^2)^2 + ||b_perp||^2 = tau^2``. The
    equation is solved by Newton's method on ``1/||r(lam)|| - 1/tau``,
    safeguarded by bisection.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, tau: float):
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        keep = s > _RANK_RTOL * (s[0] if s.size else 0.0)
        self.U, self.s, self.Vt = U[:, keep], s[keep], Vt[keep]
        self.b = b
        self.tau = float(tau)
        self.beta = self.U.T @ b
        b_perp = b - self.U @ self.beta
        b_perp -= self.U @ (self.U.T @ b_perp)  # one refinement pass
        self.b_perp_sq = float(b_perp @ b_perp)
        self.distance = math.sqrt(self.b_perp_sq)

    def residual_norm(self, x):
        return float(np.linalg.norm(self._A_apply(x) - self.b))

    def _A_apply(self, x):
        return self.U @ (self.s * (self.Vt @ x))

    def _multiplier(self, g):
        s2 = self.s**2
        tau = self.tau

        def f_and_grad(lam):
            w = 1.0 + lam * s2
            f2 = float(np.sum(g**2 / w**2)) + self.b_perp_sq
            df2 = float(np.sum(-2.0 * g**2 * s2 / w**3))
            f = math.sqrt(f2)
            return 1.0 / f - 1.0 / tau, -0.5 * df2 / (f2 * f)

        lo, hi = 0.0, None
        lam = 0.0
        for _ in range(200):
            phi, dphi = f_and_grad(lam)
            if phi < 0:
                lo = lam
            else:
                hi = lam
            if abs(phi) <= 1e-15 / tau:
                return lam
            step = -phi / dphi if dphi > 0 else math.inf
            cand = lam + step
            if hi is None:
                if not math.isfinite(cand):
                    cand = 2.0 * lam + 1.0
            elif not (lo < cand < hi):
                cand = 0.5 * (lo + hi)
            if cand == lam:
                return lam
            lam = cand
        return lam

    def project(self, p):
        pi = self.Vt @ p
        g = self.s * pi - self.beta
        if float(g @ g) + self.b_perp_sq <= self.tau**2:
            return p
        if self.tau == 0.0:
            return p - self.Vt.T @ (pi - self.beta / self.s)
        lam = self._multiplier(g)
        c = (pi + lam * self.s * self.beta) / (1.0 + lam * self.s**2)
        return p - self.Vt.T @ (pi - c)


def _check_feasible(proj: BallProjector, tau: float, tol: float):
    if proj.distance > tau + tol:
        raise InfeasibleError(
            f"residual ball of radius {tau:.6g} does not reach the range of the "
            f"operator (distance {proj.distance:.6g})",
            distance=proj.distance,
            tau=tau,
        )


def _polish(A, b, tau, support, signs):
    """Exact minimizer on a fixed support and sign pattern, if it is optimal.

    Stationarity on the support gives ``x_S = G^-1 (A_S^T b - s / mu)`` with
    ``G = A_S^T A_S``; the active constraint fixes ``1 / mu``. The candidate
    is returned only if it keeps the signs and the off-support dual
    certificate ``||mu A^T r||_inf <= 1`` holds.
    """
    if support.size == 0 or tau <= 0.0:
        return None
    AS = A[:, support]
    if support.size > min(AS.shape):
        return None
    try:
        cf = np.linalg.cholesky(AS.T @ AS)
    except np.linalg.LinAlgError:
        return None

    def solve(rhs):
        return np.linalg.solve(cf.T, np.linalg.solve(cf, rhs))

    x_b = solve(AS.T @ b)
    h = solve(signs)
    perp_sq = float(np.sum((b - AS @ x_b) ** 2))
    Ah = AS @ h
    denom = float(Ah @ Ah)
    if denom <= 0.0 or tau**2 <= perp_sq:
        return None
    inv_mu = math.sqrt((tau**2 - perp_sq) / denom)
    xS = x_b - inv_mu * h
    if np.any(np.sign(xS) != signs):
        return None
    r = AS @ xS - b
    cert = np.abs(A.T @ r) / inv_mu
    if cert.max() > 1.0 + 1e-9:
        return None
    x = np.zeros(A.shape[1])
    x[support] = xS
    return x


def _normalize(A, b, tau):
    scale = float(np.linalg.norm(A, 2)) if A.size else 0.0
    if scale == 0.0:
        return A, b, tau, 1.0
    return A / scale, b / scale, tau / scale, scale


def solve_ball_l1(A, b, tau: float, opts: SolverOptions | None = None) -> DecodeResult:
    """Minimize ``||x||_1`` subject to ``||A x - b||_2 <= tau``.

    Raises :class:`InfeasibleError` when ``tau`` is smaller than the distance
    from ``b`` to the range of ``A``. Hitting ``max_iters`` is not an error:
    the result comes back with ``converged=False`` and its residuals.
    """
    opts = opts or SolverOptions()
    A0 = as_dense(A)
    b0 = np.asarray(b, dtype=float).ravel()
    if A0.ndim != 2 or A0.shape[0] != b0.shape[0]:
        raise ValueError(f"operator shape {A0.shape} does not match target length {b0.shape[0]}")
    tau = float(tau)
    if not tau >= 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    n = A0.shape[1]
    feas_tol = opts.feas_tol(tau)

    def result(x, iters, converged, polished=False):
        feas = max(float(np.linalg.norm(A0 @ x - b0)) - tau, 0.0)
        return DecodeResult(
            x_hat=x,
            objective=float(np.abs(x).sum()),
            feas_residual=feas,
            iterations=iters,
            converged=converged and feas <= feas_tol,
            tau=tau,
            polished=polished,
        )

    if float(np.linalg.norm(b0)) <= tau:
        return result(np.zeros(n), 0, True)

    A1, b1, tau1, scale = _normalize(A0, b0, tau)
    proj = BallProjector(A1, b1, tau1)
    _check_feasible(proj, tau1, 1e-12 * (1 + tau1))

    rho = opts.rho
    v = np.zeros(n)
    w = np.zeros(n)
    history = []
    last_support = None
    x = v
    for k in range(1, opts.max_iters + 1):
        x = proj.project(v - w)
        v_old = v
        v = _soft(x + w, 1.0 / rho)
        w += x - v
        r_pri = float(np.linalg.norm(x - v))
        r_dual = rho * float(np.linalg.norm(v - v_old))
        if k % opts.rho_update_every == 0:
            if r_pri > opts.rho_balance * r_dual:
                rho *= 2.0
                w /= 2.0
            elif r_dual > opts.rho_balance * r_pri:
                rho /= 2.0
                w *= 2.0
        history.append(float(np.abs(x).sum()))
        if k % opts.window:
            continue
        support = np.flatnonzero(v)
        if opts.polish and last_support is not None and np.array_equal(support, last_support):
            xp = _polish(A1, b1, tau1, support, np.sign(v[support]))
            if xp is not None:
                return result(xp, k, True, polished=True)
        last_support = support
        f_now, f_then = history[-1], history[-1 - opts.window] if len(history) > opts.window else math.inf
        size = 1.0 + float(np.linalg.norm(x))
        if (
            abs(f_now - f_then) <= opts.tol_gap * max(f_now, 1e-300)
            and r_pri <= opts.consensus_tol * size
            and (proj.residual_norm(x) - tau1) * scale <= feas_tol
        ):
            return result(x, k, True)
    return result(x, opts.max_iters, False)


def solve_two_ball_l1(
    A, G, b, tau: float, tau_e: float, opts: SolverOptions | None = None
) -> DecodeResult:
    """Minimize ``||x||_1`` over ``(x, e)`` with ``||A x + G e - b|| <= tau``, ``||e|| <= tau_e``.

    The joint variable ``z = (x, e)`` is projected onto the residual
    ellipsoid of ``[A, G]``; the splitting block soft-thresholds the ``x``
    part and projects the ``e`` part onto its ball. The returned
    ``feas_residual`` covers both balls; ``e_hat`` holds the noise estimate.
    """
    opts = opts or SolverOptions()
    A0 = as_dense(A)
    G0 = as_dense(G)
    b0 = np.asarray(b, dtype=float).ravel()
    if A0.shape[0] != G0.shape[0] or A0.shape[0] != b0.shape[0]:
        raise ValueError("A, G and b must have the same number of rows")
    tau, tau_e = float(tau), float(tau_e)
    if not (tau >= 0 and tau_e >= 0):
        raise ValueError("radii must be non-negative")
    N, p = A0.shape[1], G0.shape[1]
    feas_tol = opts.feas_tol(tau)

    def result(z, iters, converged):
        x, e = z[:N], z[N:]
        e_norm = float(np.linalg.norm(e))
        if e_norm > tau_e:  # the splitting block keeps e in its ball; clip the last ulp
            e = e * (tau_e / e_norm)
        feas = max(
            float(np.linalg.norm(A0 @ x + G0 @ e - b0)) - tau,
            float(np.linalg.norm(e)) - tau_e,
            0.0,
        )
        return DecodeResult(
            x_hat=x,
            objective=float(np.abs(x).sum()),
            feas_residual=feas,
            iterations=iters,
            converged=converged and feas <= feas_tol,
            tau=tau,
            e_hat=e,
        )

    if tau_e == 0.0:
        res = solve_ball_l1(A0, b0, tau, opts)
        res.e_hat = np.zeros(p)
        return res

    M = np.hstack([A0, G0])
    M1, b1, tau1, scale = _normalize(M, b0, tau)
    proj = BallProjector(M1, b1, tau1)
    # the best e inside its ball might still close the gap to the ball
    if proj.distance > tau1 + 1e-12 * (1 + tau1):
        raise InfeasibleError(
            f"residual ball of radius {tau:.6g} does not reach the range of [A, G]",
            distance=proj.distance * scale,
            tau=tau,
        )
    if float(np.linalg.norm(b0)) <= tau:
        return result(np.zeros(N + p), 0, True)
    # x = 0 is optimal when some e inside its ball already meets the residual
    # ball; the smallest such e is the projection of the origin
    e_proj = BallProjector(M1[:, N:], b1, tau1)
    if e_proj.distance <= tau1:
        e0 = e_proj.project(np.zeros(p))
        if float(np.linalg.norm(e0)) <= tau_e:
            return result(np.concatenate([np.zeros(N), e0]), 0, True)

    rho = opts.rho
    v = np.zeros(N + p)
    w = np.zeros(N + p)
    history = []
    z = v
    for k in range(1, opts.max_iters + 1):
        z = proj.project(v - w)
        v_old = v
        t = z + w
        v = np.empty_like(t)
        v[:N] = _soft(t[:N], 1.0 / rho)
        te = t[N:]
        ne = float(np.linalg.norm(te))
        v[N:] = te * (tau_e / ne) if ne > tau_e else te
        w += z - v
        r_pri = float(np.linalg.norm(z - v))
        r_dual = rho * float(np.linalg.norm(v - v_old))
        if k % opts.rho_update_every == 0:
            if r_pri > opts.rho_balance * r_dual:
                rho *= 2.0
                w /= 2.0
            elif r_dual > opts.rho_balance * r_pri:
                rho /= 2.0
                w *= 2.0
        history.append(float(np.abs(z[:N]).sum()))
        if k % opts.window or len(history) <= opts.window:
            continue
        f_now, f_then = history[-1], history[-1 - opts.window]
        if (
            abs(f_now - f_then) <= opts.tol_gap * max(f_now, 1e-300)
            and r_pri <= opts.consensus_tol * (1.0 + float(np.linalg.norm(z)))
        ):
            # report the splitting iterate: its e is inside the e-ball exactly
            zz = np.concatenate([z[:N], v[N:]])
            res = result(zz, k, True)
            if res.converged:
                return res
    return result(np.concatenate([z[:N], v[N:]]), opts.max_iters, False)
