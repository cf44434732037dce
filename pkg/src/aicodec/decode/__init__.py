"""l1-minimization decoders and the solvers behind them."""

from .decoders import (
    VARIANTS,
    DecodeProblem,
    decode_first_order,
    decode_msq_bpdn,
    decode_noiseless,
    decode_noisy,
    decode_two_stage_sobolev,
    noise_shaped_encoder,
)
from .solver import (
    BallProjector,
    DecodeResult,
    InfeasibleError,
    SolverOptions,
    solve_ball_l1,
    solve_two_ball_l1,
)

__all__ = [
    "VARIANTS",
    "BallProjector",
    "DecodeProblem",
    "DecodeResult",
    "InfeasibleError",
    "SolverOptions",
    "decode_first_order",
    "decode_msq_bpdn",
    "decode_noiseless",
    "decode_noisy",
    "decode_two_stage_sobolev",
    "noise_shaped_encoder",
    "solve_ball_l1",
    "solve_two_ball_l1",
]
