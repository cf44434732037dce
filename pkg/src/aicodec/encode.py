"""Bit-stream encoder ``q -> B D**-r q`` and the codeword file format.

Quantized samples live on the lattice ``(delta/2) * Z`` (odd multiples, in
fact), and ``B`` has +-1 entries, so the codeword is computed exactly in
integer lattice units. Streaming and dense encoders therefore agree bit for
bit, and the float ``values`` are just ``lattice_ints * delta / 2``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .linalg import apply_Dinv_r
from .quantize import MidriseAlphabet

__all__ = [
    "Codeword",
    "CodewordFormatError",
    "EncoderState",
    "EncoderStateError",
    "bitrate",
    "storage_bits",
    "encode_dense",
    "encode_stream_step",
    "encode_stream",
    "serialize_codeword",
    "deserialize_codeword",
]

MAGIC = b"AICC"
FORMAT_VERSION = 1
_INT64_MAX = 2**63 - 1


class CodewordFormatError(ValueError):
    """Malformed codeword bytes, or a codeword that cannot be represented."""


class EncoderStateError(RuntimeError):
    pass


def bitrate(L: int, m: int, r: int, K: int) -> float:
    """Bits needed to index every codeword: ``L (r+1) log2 m + L log2 (2K)``."""
    if L < 1 or m < 1 or K < 1 or r < 0:
        raise ValueError(f"bitrate needs L, m, K >= 1 and r >= 0, got {(L, m, r, K)}")
    return L * (r + 1) * math.log2(m) + L * math.log2(2 * K)


def storage_bits(L: int, m: int, r: int, K: int) -> int:
    return math.ceil(bitrate(L, m, r, K))


@dataclass
class Codeword:
    lattice_ints: np.ndarray
    L: int
    m: int
    r: int
    K: int
    delta: float
    phi_seed: int = 0
    b_seed: int = 0
    values: np.ndarray = field(init=False, repr=False)
    rate_bits: float = field(init=False)

    def __post_init__(self):
        self.lattice_ints = np.asarray(self.lattice_ints)
        half = self.delta / 2
        if self.lattice_ints.dtype == object:
            self.values = np.array([float(n) * half for n in self.lattice_ints])
        else:
            self.values = self.lattice_ints.astype(float) * half
        self.rate_bits = bitrate(self.L, self.m, self.r, self.K) if self.m >= 1 else 0.0

    def magnitude_bound(self) -> float:
        return float(self.m) ** (self.r + 1) * (self.K - 0.5) * self.delta

    def __eq__(self, other):
        if not isinstance(other, Codeword):
            return NotImplemented
        return (
            (self.L, self.m, self.r, self.K, self.delta, self.phi_seed, self.b_seed)
            == (other.L, other.m, other.r, other.K, other.delta, other.phi_seed, other.b_seed)
            and len(self.lattice_ints) == len(other.lattice_ints)
            and all(int(a) == int(b) for a, b in zip(self.lattice_ints, other.lattice_ints))
        )


def _sign_matrix(B) -> np.ndarray:
    B = np.asarray(B)
    if B.ndim != 2 or not np.all(np.abs(B) == 1):
        raise ValueError("encoding matrix must be 2-D with +-1 entries")
    return B.astype(np.int64)


def _needs_bigint(m, r, K):
    # |(D^-r n)_i| <= C(m+r-1, r) (2K-1); one more factor m for the +-1 product
    return m * math.comb(m + r - 1, r) * (2 * K - 1) > _INT64_MAX


def encode_dense(B, q, r: int, alphabet: MidriseAlphabet, phi_seed: int = 0, b_seed: int = 0) -> Codeword:
    """Encode an alphabet-valued ``q`` as ``B @ D**-r @ q``.

    Raises ``ValueError`` if some entry of ``q`` is off the lattice
    ``(delta/2) Z`` or outside the alphabet's range, which indicates
    corrupted input.
    """
    Bi = _sign_matrix(B)
    L, m = Bi.shape
    n = alphabet.lattice_index(q, levels_only=False)
    if n.shape != (m,):
        raise ValueError(f"q has shape {n.shape}, expected ({m},)")
    if _needs_bigint(m, r, alphabet.K):
        ints = np.array(
            [sum(int(b) * int(v) for b, v in zip(row, apply_Dinv_r(n.astype(object), r))) for row in Bi],
            dtype=object,
        )
    else:
        ints = Bi @ apply_Dinv_r(n, r)
    return Codeword(ints, L, m, r, alphabet.K, alphabet.delta, phi_seed, b_seed)


@dataclass
class EncoderState:
    """Causal accumulator for one signal.

    ``running_sums[j]`` holds the ``(j+1)``-fold prefix sum of the lattice
    indices consumed so far, so ``running_sums[-1]`` is the current entry of
    ``D**-r q``. With ``literal=True`` the plain product ``B q`` is
    accumulated instead.
    """

    L: int
    m: int
    r: int
    alphabet: MidriseAlphabet
    literal: bool = False
    phi_seed: int = 0
    b_seed: int = 0
    running_sums: list = field(default=None)
    partial_c: list = field(default=None)
    i: int = 0

    def __post_init__(self):
        if self.running_sums is None:
            self.running_sums = [0] * self.r
        if self.partial_c is None:
            self.partial_c = [0] * self.L

    def finalize(self) -> Codeword:
        if self.i != self.m:
            raise EncoderStateError(f"consumed {self.i} of {self.m} samples")
        dtype = object if any(abs(c) > _INT64_MAX for c in self.partial_c) else np.int64
        return Codeword(
            np.array(self.partial_c, dtype=dtype),
            self.L, self.m, self.r, self.alphabet.K, self.alphabet.delta,
            self.phi_seed, self.b_seed,
        )


def encode_stream_step(state: EncoderState, b_col, q_i: float) -> EncoderState:
    if state.i >= state.m:
        raise EncoderStateError(f"all {state.m} samples already consumed")
    col = [int(b) for b in np.asarray(b_col).ravel()]
    if len(col) != state.L or any(abs(b) != 1 for b in col):
        raise ValueError(f"encoder column must have {state.L} entries in {{-1, +1}}")
    n = int(state.alphabet.lattice_index([q_i], levels_only=False)[0])
    if state.literal:
        term = n
    else:
        sums = state.running_sums
        sums[0] += n
        for j in range(1, state.r):
            sums[j] += sums[j - 1]
        term = sums[-1]
    state.partial_c = [c + b * term for c, b in zip(state.partial_c, col)]
    state.i += 1
    return state


def encode_stream(B, q, r: int, alphabet: MidriseAlphabet, literal: bool = False) -> Codeword:
    """Feed ``q`` one sample at a time through :func:`encode_stream_step`."""
    B = np.asarray(B)
    L, m = B.shape
    state = EncoderState(L, m, r, alphabet, literal=literal)
    for i in range(m):
        encode_stream_step(state, B[:, i], q[i])
    return state.finalize()


_HEADER = struct.Struct("<4sH4I")
_SEEDS = struct.Struct("<2Q")


def serialize_codeword(c: Codeword) -> bytes:
    """Pack a codeword; matrices are not stored, only the seeds that regenerate them."""
    ints = [int(v) for v in c.lattice_ints]
    if len(ints) != c.L:
        raise CodewordFormatError(f"codeword has {len(ints)} entries, header says L={c.L}")
    for v in ints:
        if not -(2**63) <= v <= _INT64_MAX:
            raise CodewordFormatError(f"lattice integer {v} does not fit in signed 64 bits")
    for name in ("L", "m", "r", "K"):
        if not 0 <= getattr(c, name) < 2**32:
            raise CodewordFormatError(f"{name}={getattr(c, name)} does not fit in u32")
    delta_text = repr(float(c.delta)).encode("ascii")
    return b"".join([
        _HEADER.pack(MAGIC, FORMAT_VERSION, c.L, c.m, c.r, c.K),
        struct.pack("<H", len(delta_text)),
        delta_text,
        _SEEDS.pack(c.phi_seed, c.b_seed),
        struct.pack(f"<{c.L}q", *ints),
    ])


def deserialize_codeword(data: bytes) -> Codeword:
    try:
        magic, version, L, m, r, K = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise CodewordFormatError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise CodewordFormatError(f"unsupported format version {version}")
        off = _HEADER.size
        (n,) = struct.unpack_from("<H", data, off)
        off += 2
        delta = float(data[off:off + n].decode("ascii"))
        off += n
        phi_seed, b_seed = _SEEDS.unpack_from(data, off)
        off += _SEEDS.size
        ints = struct.unpack_from(f"<{L}q", data, off)
        off += 8 * L
    except (struct.error, UnicodeDecodeError, ValueError) as exc:
        if isinstance(exc, CodewordFormatError):
            raise
        raise CodewordFormatError(f"truncated or malformed codeword: {exc}") from exc
    if off != len(data):
        raise CodewordFormatError(f"{len(data) - off} trailing bytes after codeword")
    return Codeword(np.array(ints, dtype=np.int64), L, m, r, K, delta, phi_seed, b_seed)
