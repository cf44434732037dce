"""Test signals, measurement synthesis and approximation metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import RngSpec, gen_matrix

__all__ = [
    "SparseSpec",
    "WlpSpec",
    "MeasurementSpec",
    "gen_sparse",
    "gen_wlp",
    "best_kterm_error_l1",
    "scale_to_mu",
    "measure",
    "derive_seed",
    "noise_stream",
]

NONZERO_DISTS = ("standard_normal", "unit")
NOISE_DISTS = ("none", "uniform", "gaussian")


def derive_seed(master: int, *path: int) -> int:
    """A 64-bit seed for a named sub-stream (e.g. ``(signal_stream, trial)``) of ``master``."""
    ss = np.random.SeedSequence([int(master), *map(int, path)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SparseSpec:
    N: int
    k: int
    nonzero_dist: str = "standard_normal"
    seed: RngSpec = field(default_factory=lambda: RngSpec(0))

    def __post_init__(self):
        if self.N < 1 or not 0 <= self.k <= self.N:
            raise ValueError(f"need N >= 1 and 0 <= k <= N, got N={self.N}, k={self.k}")
        if self.nonzero_dist not in NONZERO_DISTS:
            raise ValueError(f"unknown nonzero_dist {self.nonzero_dist!r}")


@dataclass(frozen=True)
class WlpSpec:
    N: int
    p: float
    radius: float = 1.0
    seed: RngSpec = field(default_factory=lambda: RngSpec(0))

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if not 0 < self.p < 2:
            raise ValueError(f"p must lie in (0, 2), got {self.p}")
        if not self.radius > 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class MeasurementSpec:
    """Noise model for ``y = Phi x + e``.

    ``mu`` is the target bound on ``||Phi x||_inf`` that callers enforce
    with :func:`scale_to_mu`; ``epsilon`` bounds ``||e||_inf``. Gaussian
    noise has standard deviation ``epsilon / 3`` and is clipped to
    ``[-epsilon, epsilon]``.
    """

    mu: float = 0.6
    epsilon: float = 0.0
    noise_dist: str = "none"
    seed: RngSpec = field(default_factory=lambda: RngSpec(0))

    def __post_init__(self):
        if self.noise_dist not in NOISE_DISTS:
            raise ValueError(f"unknown noise_dist {self.noise_dist!r}")
        if not (self.mu > 0 and self.epsilon >= 0):
            raise ValueError("need mu > 0 and epsilon >= 0")
        if self.noise_dist != "none" and self.epsilon > 0 and not self.epsilon < 1 - self.mu:
            raise ValueError(f"need epsilon < 1 - mu, got epsilon={self.epsilon}, mu={self.mu}")


def gen_sparse(spec: SparseSpec) -> np.ndarray:
    """Exactly ``k`` nonzeros on a uniformly random support."""
    rng = spec.seed.generator()
    x = np.zeros(spec.N)
    if spec.k == 0:
        return x
    support = rng.choice(spec.N, size=spec.k, replace=False)
    if spec.nonzero_dist == "standard_normal":
        vals = gen_matrix("gaussian", 1, spec.k, RngSpec(int(rng.integers(2**63)))).ravel()
    else:
        vals = np.where(rng.random(spec.k) < 0.5, 1.0, -1.0)
    x[support] = vals
    return x


def gen_wlp(spec: WlpSpec) -> np.ndarray:
    """A point on the boundary of the weak-lp ball.

    Sorted magnitudes are exactly ``radius * j**(-1/p)``; signs are fair
    coin flips and positions a uniform permutation.
    """
    rng = spec.seed.generator()
    mags = spec.radius * np.arange(1, spec.N + 1, dtype=float) ** (-1.0 / spec.p)
    signs = np.where(rng.random(spec.N) < 0.5, 1.0, -1.0)
    x = np.empty(spec.N)
    x[rng.permutation(spec.N)] = mags * signs
    return x


def best_kterm_error_l1(x, k: int) -> float:
    """Sum of the ``N - k`` smallest magnitudes of ``x``."""
    a = np.sort(np.abs(np.asarray(x, dtype=float)))
    if not 0 <= k <= a.size:
        raise ValueError(f"k must lie in [0, {a.size}], got {k}")
    return float(a[: a.size - k].sum())


def scale_to_mu(Phi, x, mu: float) -> tuple[np.ndarray, float]:
    """Shrink ``x`` so that ``||Phi x||_inf <= mu``; returns ``(x_scaled, factor)``.

    ``x`` is returned unchanged (factor 1) when it already satisfies the
    bound or when ``Phi x = 0``.
    """
    x = np.asarray(x, dtype=float)
    peak = float(np.max(np.abs(np.asarray(Phi) @ x))) if x.size else 0.0
    if peak <= mu:
        return x.copy(), 1.0
    factor = mu / peak
    scaled = x * factor
    # the product can round a hair above mu; nudge down until it does not
    while float(np.max(np.abs(np.asarray(Phi) @ scaled))) > mu:
        factor = np.nextafter(factor, 0.0)
        scaled = x * factor
    return scaled, float(factor)


def noise_stream(spec: MeasurementSpec, m: int) -> np.ndarray:
    """The first ``m`` noise samples; longer streams extend shorter ones."""
    if spec.noise_dist == "none" or spec.epsilon == 0:
        return np.zeros(m)
    if m == 0:
        return np.zeros(0)
    eps = spec.epsilon
    if spec.noise_dist == "uniform":
        return eps * (2.0 * spec.seed.generator().random(m) - 1.0)
    g = gen_matrix("gaussian", 1, m, spec.seed).ravel()
    return np.clip(g * (eps / 3.0), -eps, eps)


def measure(Phi_m, x, spec: MeasurementSpec) -> tuple[np.ndarray, np.ndarray]:
    """``y = Phi_m x + e`` with ``||e||_inf <= epsilon``; returns ``(y, e)``."""
    Phi_m = np.asarray(Phi_m, dtype=float)
    x = np.asarray(x, dtype=float)
    if Phi_m.ndim != 2 or Phi_m.shape[1] != x.shape[0]:
        raise ValueError(f"Phi has shape {Phi_m.shape}, x has length {x.shape[0]}")
    e = noise_stream(spec, Phi_m.shape[0])
    return Phi_m @ x + e, e
