"""Compressive sampling, Sigma-Delta quantization, bit-stream encoding and l1 decoding."""

__version__ = "0.1.0"

from .decode import DecodeProblem, DecodeResult, SolverOptions, solve_ball_l1
from .encode import Codeword, bitrate, encode_dense, encode_stream
from .linalg import Ensemble, EnsembleSpec, RngSpec, gen_matrix
from .quantize import MidriseAlphabet, QuantizationRun, msq, sd_greedy

__all__ = [
    "__version__",
    "Codeword",
    "DecodeProblem",
    "DecodeResult",
    "Ensemble",
    "EnsembleSpec",
    "MidriseAlphabet",
    "QuantizationRun",
    "RngSpec",
    "SolverOptions",
    "bitrate",
    "encode_dense",
    "encode_stream",
    "gen_matrix",
    "msq",
    "sd_greedy",
    "solve_ball_l1",
]
