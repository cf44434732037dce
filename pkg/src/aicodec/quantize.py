"""Scalar, memoryless and greedy Sigma-Delta quantization on a midrise alphabet."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MidriseAlphabet",
    "QuantizationRun",
    "scalar_quantize",
    "msq",
    "sd_greedy",
    "min_levels_for_stability",
]

# slack for ||u||_inf <= delta/2 comparisons; u is formed as s - Q(s) in floats
_STABILITY_RTOL = 1e-12


@dataclass(frozen=True)
class MidriseAlphabet:
    """The ``2K`` levels ``+-(j - 1/2) * delta`` for ``j = 1..K``."""

    K: int
    delta: float

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive and finite, got {self.delta}")

    @property
    def max_level(self) -> float:
        return (self.K - 0.5) * self.delta

    @property
    def levels(self) -> np.ndarray:
        pos = (np.arange(1, self.K + 1) - 0.5) * self.delta
        return np.concatenate([-pos[::-1], pos])

    def quantize(self, z):
        """Nearest level, ties toward the larger level, saturating outside the range."""
        j = np.floor(np.asarray(z, dtype=float) / self.delta)
        return np.clip((j + 0.5) * self.delta, -self.max_level, self.max_level)

    def lattice_index(self, q, atol: float = 1e-6, levels_only: bool = True) -> np.ndarray:
        """Integers ``n`` with ``q = n * delta / 2``, raising ``ValueError`` when there are none.

        With ``levels_only`` the ``n`` must be odd (an actual level);
        otherwise any lattice point within the alphabet's range is accepted.
        """
        q = np.asarray(q, dtype=float)
        scaled = q / (0.5 * self.delta)
        n = np.rint(scaled)
        bad = (np.abs(scaled - n) > atol) | (np.abs(n) > 2 * self.K - 1)
        if levels_only:
            bad |= n % 2 == 0
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise ValueError(f"value {q.flat[i]!r} at index {i} is not a level of {self}")
        return n.astype(np.int64)


@dataclass
class QuantizationRun:
    """Output of a quantizer together with its state sequence.

    ``y - q == D**r u`` holds for Sigma-Delta runs; for MSQ (``r == 0``)
    ``u`` is simply ``y - q``. ``gamma`` is the stability constant a decoder
    should assume; runs produced by other (external) schemes may supply any
    value here.
    """

    q: np.ndarray
    u: np.ndarray
    r: int
    alphabet: MidriseAlphabet
    y_max: float
    stable: bool
    gamma: float


def scalar_quantize(z: float, alphabet: MidriseAlphabet) -> float:
    return float(alphabet.quantize(z))


def msq(y, alphabet: MidriseAlphabet) -> QuantizationRun:
    """Memoryless scalar quantization of every entry of ``y``."""
    y = np.asarray(y, dtype=float)
    q = alphabet.quantize(y)
    y_max = float(np.max(np.abs(y))) if y.size else 0.0
    return QuantizationRun(
        q=q,
        u=y - q,
        r=0,
        alphabet=alphabet,
        y_max=y_max,
        stable=y_max <= alphabet.K * alphabet.delta,
        gamma=alphabet.delta / 2,
    )


def sd_greedy(y, alphabet: MidriseAlphabet, r: int) -> QuantizationRun:
    """Greedy ``r``-th order Sigma-Delta quantization.

    Each sample quantizes ``y_i + sum_j (-1)**(j-1) C(r, j) u_{i-j}`` and the
    state absorbs what the quantizer left over, with zero history before the
    first sample. The run is flagged stable when ``||u||_inf <= delta / 2``;
    instability is reported, never raised.
    """
    if int(r) != r or r < 1:
        raise ValueError(f"order must be an integer >= 1, got {r}")
    r = int(r)
    y = np.asarray(y, dtype=float)
    m = y.shape[0]
    coef = [(-1) ** (j - 1) * math.comb(r, j) for j in range(1, r + 1)]
    delta, top = alphabet.delta, alphabet.max_level
    hist = [0.0] * r  # u_{i-1}, ..., u_{i-r}
    q = np.empty(m)
    u = np.empty(m)
    for i in range(m):
        s = y[i]
        for c, h in zip(coef, hist):
            s += c * h
        qi = (math.floor(s / delta) + 0.5) * delta
        qi = min(max(qi, -top), top)
        ui = s - qi
        q[i] = qi
        u[i] = ui
        hist.pop()
        hist.insert(0, ui)
    gamma = delta / 2
    u_max = float(np.max(np.abs(u))) if m else 0.0
    return QuantizationRun(
        q=q,
        u=u,
        r=r,
        alphabet=alphabet,
        y_max=float(np.max(np.abs(y))) if m else 0.0,
        stable=u_max <= gamma * (1 + _STABILITY_RTOL),
        gamma=gamma,
    )


def min_levels_for_stability(beta: float, delta: float, r: int) -> int:
    """Smallest ``K`` with ``K >= 2 * ceil(beta / delta) + 2**r + 1``.

    ``beta == 0`` is accepted and gives ``2**r + 1``.
    """
    if not (beta >= 0 and delta > 0):
        raise ValueError("need beta >= 0 and delta > 0")
    return 2 * math.ceil(beta / delta) + 2**r + 1
