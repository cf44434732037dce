"""Rate-distortion sweeps, slope fits and the singular-value floor check.

A sweep fixes one ensemble (``Phi`` with ``m_max`` rows, ``B`` with ``L``
rows) and ``T`` signals, then walks the list of ``m`` values: each signal is
measured with the first ``m`` rows of ``Phi``, quantized, encoded with the
first ``m`` columns of ``B`` and decoded from the codeword values. Signals
are scaled once against the full ``Phi`` so every sweep point sees the same
signals; noise is one stream per trial whose prefix is used at each ``m``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .decode import VARIANTS, DecodeProblem, InfeasibleError, SolverOptions, noise_shaped_encoder
from .encode import bitrate, encode_dense
from .linalg import (
    GENERATOR_ID,
    Ensemble,
    EnsembleSpec,
    NumericFailure,
    RngSpec,
    gen_matrix,
    smallest_singular_value,
)
from .quantize import MidriseAlphabet, msq, sd_greedy
from .signals import (
    MeasurementSpec,
    SparseSpec,
    WlpSpec,
    derive_seed,
    gen_sparse,
    gen_wlp,
    noise_stream,
    scale_to_mu,
)

__all__ = [
    "ConfigError",
    "UndefinedFit",
    "SweepSpec",
    "QuantizerSpec",
    "DecoderSpec",
    "SignalConfig",
    "NoiseConfig",
    "ExperimentConfig",
    "SigmaConfig",
    "RDPoint",
    "SlopeFit",
    "ExperimentResult",
    "SigmaReport",
    "fit_slope",
    "m_from_L",
    "L_from_m",
    "detect_plateau",
    "run_sweep",
    "trial_signal",
    "trial_noise_spec",
    "run_exp1",
    "run_exp2",
    "run_exp3",
    "verify_sigma_floor",
    "write_csv",
    "write_manifest",
    "load_config",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "m", "L", "rate_bits", "distortion_mean", "distortion_sq_mean",
    "distortion_max", "trials", "fail_count",
)

# sub-stream ids for derive_seed
_SIGNAL_STREAM = 1
_NOISE_STREAM = 2


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class UndefinedFit(ValueError):
    """A slope was requested from fewer than two points."""


def _from_dict(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class SweepSpec:
    """Either explicit ``values`` or ``count`` log-spaced integers in ``[m_min, m_max]``."""

    m_min: int | None = None
    m_max: int | None = None
    count: int | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.values is not None:
            object.__setattr__(self, "values", tuple(int(v) for v in self.values))
            if not self.values or min(self.values) < 1:
                raise ConfigError("sweep values must be positive integers")
        elif None in (self.m_min, self.m_max, self.count):
            raise ConfigError("sweep needs values, or m_min, m_max and count")
        elif not (1 <= self.m_min <= self.m_max and self.count >= 1):
            raise ConfigError("sweep needs 1 <= m_min <= m_max and count >= 1")

    def resolve(self) -> list[int]:
        if self.values is not None:
            return sorted(set(self.values))
        if self.count == 1:
            return [int(self.m_min)]
        grid = np.logspace(math.log10(self.m_min), math.log10(self.m_max), self.count)
        return sorted(set(int(round(v)) for v in grid))


@dataclass(frozen=True)
class QuantizerSpec:
    """``scheme`` is ``sigma_delta`` (greedy, order ``r``) or ``msq``; ``one_bit`` forces ``K=1``."""

    scheme: str = "sigma_delta"
    r: int = 2
    delta: float = 0.1
    K: int | None = 20
    one_bit: bool = False

    def __post_init__(self):
        if self.scheme not in ("sigma_delta", "msq"):
            raise ConfigError(f"unknown quantizer scheme {self.scheme!r}")
        if self.scheme == "sigma_delta" and self.r < 1:
            raise ConfigError("sigma_delta needs r >= 1")
        if not self.one_bit and (self.K is None or self.K < 1):
            raise ConfigError("K must be a positive integer unless one_bit is set")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")

    @property
    def order(self) -> int:
        return self.r if self.scheme == "sigma_delta" else 0

    def alphabet(self) -> MidriseAlphabet:
        return MidriseAlphabet(1 if self.one_bit else int(self.K), float(self.delta))


@dataclass(frozen=True)
class DecoderSpec:
    """``variant=None`` picks ``nonuniform`` for ``r = 1``, ``noisy`` otherwise, ``msq_bpdn`` for MSQ."""

    variant: str | None = None
    eta: float = 1.0
    k: int | None = None


@dataclass(frozen=True)
class SignalConfig:
    kind: str = "sparse"
    k: int = 5
    nonzero_dist: str = "standard_normal"
    p: float | None = None
    radius: float = 1.0
    mu: float = 0.6

    def __post_init__(self):
        if self.kind not in ("sparse", "wlp"):
            raise ConfigError(f"unknown signal kind {self.kind!r}")
        if self.kind == "wlp" and self.p is None:
            raise ConfigError("wlp signals need p")


@dataclass(frozen=True)
class NoiseConfig:
    dist: str = "none"
    epsilon: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs; mirrors the JSON config file field by field.

    ``L`` is the encoding dimension for ``L_policy="fixed"``. With
    ``L_policy="wlp_formula"`` the dimension at each ``m`` follows from the
    balance rule :func:`L_from_m` with constant ``c_rip``.
    """

    name: str = "experiment"
    N: int = 400
    L: int | None = 120
    phi_kind: str = "gaussian"
    phi_seed: int = 1
    b_seed: int = 2
    seed: int = 0
    sweep: SweepSpec = field(default_factory=lambda: SweepSpec(150, 1000, 8))
    quantizer: QuantizerSpec = field(default_factory=QuantizerSpec)
    decoder: DecoderSpec = field(default_factory=DecoderSpec)
    signal: SignalConfig = field(default_factory=SignalConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    trials: int = 10
    aggregation: str = "mean"
    L_policy: str = "fixed"
    c_rip: float | None = None
    solver: dict = field(default_factory=dict)
    fail_threshold: float = 0.1
    reference_noiseless: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.aggregation not in ("mean", "max"):
            raise ConfigError(f"unknown aggregation {self.aggregation!r}")
        if self.L_policy not in ("fixed", "wlp_formula"):
            raise ConfigError(f"unknown L_policy {self.L_policy!r}")
        if self.L_policy == "fixed" and self.uses_encoder and (self.L is None or self.L < 1):
            raise ConfigError("fixed L_policy needs L >= 1")
        if self.L_policy == "wlp_formula":
            if self.c_rip is None or not self.c_rip > 0:
                raise ConfigError("wlp_formula needs a positive c_rip")
            if self.signal.p is None:
                raise ConfigError("wlp_formula needs signal.p")
            if self.quantizer.scheme != "sigma_delta":
                raise ConfigError("wlp_formula needs a sigma_delta quantizer")
        if self.variant not in ("msq_bpdn", "two_stage") and self.quantizer.scheme == "msq":
            raise ConfigError(f"decoder {self.variant!r} needs a sigma_delta quantizer")
        if self.variant == "two_stage" and self.decoder.k is None and self.signal.kind != "sparse":
            raise ConfigError("two_stage needs decoder.k")
        ms = self.sweep.resolve()
        if self.uses_encoder and self.L_policy == "fixed" and self.L > ms[0]:
            raise ConfigError(f"L={self.L} exceeds the smallest sweep value m={ms[0]}")
        if ms[-1] > (1 << 16):
            raise ConfigError("sweep exceeds the supported m_max")
        try:
            SolverOptions(**self.solver)
            MeasurementSpec(self.signal.mu, self.noise.epsilon, self.noise.dist)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def variant(self) -> str:
        if self.decoder.variant is not None:
            if self.decoder.variant not in VARIANTS:
                raise ConfigError(f"unknown decoder variant {self.decoder.variant!r}")
            return self.decoder.variant
        if self.quantizer.scheme == "msq":
            return "msq_bpdn"
        return "nonuniform" if self.quantizer.r == 1 else "noisy"

    @property
    def uses_encoder(self) -> bool:
        return self.variant not in ("msq_bpdn", "two_stage")

    def L_for(self, m: int) -> int:
        if not self.uses_encoder:
            return m
        if self.L_policy == "fixed":
            return int(self.L)
        L = L_from_m(m, self.signal.p, self.quantizer.r, self.N, self.c_rip)
        return int(min(max(round(L), 1), m))

    def with_overrides(self, **changes) -> "ExperimentConfig":
        data = asdict(self)
        data.update(changes)
        return config_from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return config_from_dict(data)


_NESTED = {
    "sweep": SweepSpec,
    "quantizer": QuantizerSpec,
    "decoder": DecoderSpec,
    "signal": SignalConfig,
    "noise": NoiseConfig,
}


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    data.pop("sigma", None)
    for key, cls in _NESTED.items():
        if key in data and not isinstance(data[key], cls):
            data[key] = _from_dict(cls, data[key], key)
    try:
        return _from_dict(ExperimentConfig, data, "config")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class SigmaConfig:
    m: int = 512
    L: int = 64
    r: tuple = (1, 2)
    seeds: int = 20
    seed: int = 0
    required: int = 19

    def __post_init__(self):
        r = (self.r,) if isinstance(self.r, int) else tuple(self.r)
        object.__setattr__(self, "r", r)
        if not (1 <= self.L <= self.m and self.seeds >= 1 and all(v >= 1 for v in r)):
            raise ConfigError("sigma check needs 1 <= L <= m, seeds >= 1, r >= 1")


def load_config(path) -> dict:
    """Raw JSON object from ``path``; raises :class:`ConfigError` on any read or parse problem."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


@dataclass
class RDPoint:
    m: int
    L: int
    rate_bits: float
    distortion_mean: float
    distortion_sq_mean: float
    distortion_max: float
    trials: int
    fail_count: int
    seconds: float = 0.0

    def distortion(self, aggregation: str = "mean") -> float:
        return self.distortion_max if aggregation == "max" else self.distortion_mean


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    residual: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    points: list
    fit: SlopeFit | None = None
    fit_target: float | None = None
    plateau_rate: float | None = None
    reference: list | None = None
    scale_factors: list = field(default_factory=list)
    seconds: float = 0.0

    def flagged_points(self) -> list:
        """Points where more than ``fail_threshold`` of the trials failed to decode."""
        thr = self.config.fail_threshold
        return [p for p in self.points + (self.reference or []) if p.fail_count > thr * p.trials]


@dataclass
class SigmaReport:
    m: int
    L: int
    r: int
    floor: float
    sigmas: list
    successes: int
    seeds: int

    @property
    def fraction(self) -> float:
        return self.successes / self.seeds


def fit_slope(xs, ys, x_scale: str = "linear", y_scale: str = "log") -> SlopeFit:
    """Least-squares line through ``(x, log10 y)`` or ``(log10 x, log10 y)``.

    ``residual`` is the root-mean-square deviation from the fitted line.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("xs and ys differ in length")
    if xs.size < 2:
        raise UndefinedFit(f"need at least 2 points for a slope, got {xs.size}")
    if x_scale not in ("linear", "log") or y_scale != "log":
        raise ValueError("x_scale must be linear or log and y_scale must be log")
    X = np.log10(xs) if x_scale == "log" else xs
    Y = np.log10(ys)
    design = np.column_stack([X, np.ones_like(X)])
    (slope, intercept), *_ = np.linalg.lstsq(design, Y, rcond=None)
    resid = Y - (slope * X + intercept)
    return SlopeFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


def L_from_m(m: float, p: float, r: int, N: int, c_rip: float) -> float:
    """Encoding dimension that balances the two error terms for weak-lp signals.

    ``L = (m**(r/2 - 3/4) * (2 c_rip ln N)**(1/p - 1/2)) ** (1 / (r/2 - 5/4 + 1/p))``.
    """
    a = r / 2 - 3 / 4
    g = 1 / p - 1 / 2
    return (m**a * (2 * c_rip * math.log(N)) ** g) ** (1 / (r / 2 - 5 / 4 + 1 / p))


def m_from_L(L: float, p: float, r: int, N: int, c_rip: float) -> float:
    """Inverse of :func:`L_from_m`:
    ``m = (L**(r/2 - 5/4 + 1/p) / (2 c_rip ln N)**(1/p - 1/2)) ** (1 / (r/2 - 3/4))``.
    """
    return (L ** (r / 2 - 5 / 4 + 1 / p) / (2 * c_rip * math.log(N)) ** (1 / p - 1 / 2)) ** (
        1 / (r / 2 - 3 / 4)
    )


def detect_plateau(rates, values, rel_change: float = 0.1) -> float | None:
    """Smallest rate from which every later step changes the value by less than ``rel_change``."""
    rates = list(rates)
    values = list(values)
    if len(values) < 2:
        return None
    start = None
    for i in range(len(values) - 1, 0, -1):
        prev, cur = values[i - 1], values[i]
        if prev > 0 and abs(cur - prev) / prev < rel_change:
            start = i - 1
        else:
            break
    return None if start is None else float(rates[start])


def _rate(cfg: ExperimentConfig, m: int, L: int) -> float:
    alph = cfg.quantizer.alphabet()
    if cfg.uses_encoder:
        return bitrate(L, m, cfg.quantizer.r, alph.K)
    # no encoder: every quantized sample is stored with log2(2K) bits
    return m * math.log2(2 * alph.K)


def trial_signal(cfg: ExperimentConfig, t: int) -> np.ndarray:
    """Unscaled signal of trial ``t``."""
    seed = RngSpec(derive_seed(cfg.seed, _SIGNAL_STREAM, t))
    s = cfg.signal
    if s.kind == "sparse":
        return gen_sparse(SparseSpec(cfg.N, s.k, s.nonzero_dist, seed))
    return gen_wlp(WlpSpec(cfg.N, s.p, s.radius, seed))


def trial_noise_spec(cfg: ExperimentConfig, t: int) -> MeasurementSpec:
    return MeasurementSpec(
        cfg.signal.mu, cfg.noise.epsilon, cfg.noise.dist,
        RngSpec(derive_seed(cfg.seed, _NOISE_STREAM, t)),
    )


@dataclass
class _Trial:
    error: float | None
    iterations: int = 0


def _run_trial(cfg, ens, x, noise, m, L, opts) -> _Trial:
    Phi = ens.phi(m)
    y = Phi @ x + noise[:m]
    alph = cfg.quantizer.alphabet()
    q = cfg.quantizer
    run = msq(y, alph) if q.scheme == "msq" else sd_greedy(y, alph, q.r)
    variant = cfg.variant
    try:
        if cfg.uses_encoder:
            B = ens.encoder(m, L)
            code = encode_dense(B, run.q, q.r, alph, cfg.phi_seed, cfg.b_seed)
            prob = DecodeProblem(
                variant, Phi, None, r=q.r, B=B, C=run.gamma, eps=cfg.noise.epsilon,
                eta=cfg.decoder.eta, target=code.values,
            )
        else:
            k = cfg.decoder.k if cfg.decoder.k is not None else cfg.signal.k
            prob = DecodeProblem(variant, Phi, run.q, r=max(q.r, 1), delta=q.delta, k=k)
        res = prob.solve(opts)
    except (InfeasibleError, NumericFailure):
        return _Trial(None)
    if not res.converged:
        return _Trial(None, res.iterations)
    return _Trial(float(np.linalg.norm(res.x_hat - x)), res.iterations)


def _aggregate(m, L, rate, trials, seconds) -> RDPoint:
    errs = np.array([t.error for t in trials if t.error is not None])
    fails = sum(t.error is None for t in trials)
    nan = float("nan")
    return RDPoint(
        m=m,
        L=L,
        rate_bits=rate,
        distortion_mean=float(errs.mean()) if errs.size else nan,
        distortion_sq_mean=float(np.mean(errs**2)) if errs.size else nan,
        distortion_max=float(errs.max()) if errs.size else nan,
        trials=len(trials),
        fail_count=int(fails),
        seconds=seconds,
    )


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> tuple[list, list]:
    """All sweep points of ``cfg``; returns ``(points, scale_factors)``.

    Trials run on ``threads`` workers; results are reduced in trial order,
    so the output does not depend on scheduling.
    """
    ms = cfg.sweep.resolve()
    Ls = [cfg.L_for(m) for m in ms]
    L_max = max(Ls) if cfg.uses_encoder else 1
    ens = Ensemble(EnsembleSpec(
        cfg.N, ms[-1], min(L_max, ms[-1]), cfg.phi_kind, RngSpec(cfg.phi_seed), RngSpec(cfg.b_seed),
    ))
    Phi_full = ens.phi(ms[-1])
    signals, factors, noises = [], [], []
    for t in range(cfg.trials):
        x, factor = scale_to_mu(Phi_full, trial_signal(cfg, t), cfg.signal.mu)
        signals.append(x)
        factors.append(factor)
        noises.append(noise_stream(trial_noise_spec(cfg, t), ms[-1]))
    opts = SolverOptions(**cfg.solver)
    points = []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for m, L in zip(ms, Ls):
            t0 = time.perf_counter()
            trials = list(pool.map(
                lambda t: _run_trial(cfg, ens, signals[t], noises[t], m, L, opts),
                range(cfg.trials),
            ))
            points.append(_aggregate(m, L, _rate(cfg, m, L), trials, time.perf_counter() - t0))
    return points, factors


def _fit_or_none(xs, ys, x_scale):
    ok = [(a, b) for a, b in zip(xs, ys) if np.isfinite(b) and b > 0]
    if len(ok) < 2:
        return None
    return fit_slope([a for a, _ in ok], [b for _, b in ok], x_scale, "log")


def run_exp1(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Semilog sweep: fits ``log10`` of the mean squared error against the rate.

    ``fit_target`` is the slope ``-(r/2 - 3/4) log10(2) / L`` predicted for
    that fit at fixed ``L``.
    """
    t0 = time.perf_counter()
    points, factors = run_sweep(cfg, threads)
    fit = _fit_or_none([p.rate_bits for p in points], [p.distortion_sq_mean for p in points], "linear")
    target = None
    if cfg.uses_encoder and cfg.L_policy == "fixed":
        target = -(cfg.quantizer.r / 2 - 3 / 4) * math.log10(2) / cfg.L
    return ExperimentResult(cfg, points, fit, target, scale_factors=factors,
                            seconds=time.perf_counter() - t0)


def run_exp2(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Log-log sweep for weak-lp signals with ``L`` set by the balance rule.

    Fits ``log10`` of the mean error against ``log10`` of the rate; the
    predicted slope is ``-(1/p - 1/2)``.
    """
    if cfg.L_policy != "wlp_formula" or cfg.signal.kind != "wlp":
        raise ConfigError("exp2 needs wlp signals and L_policy='wlp_formula'")
    t0 = time.perf_counter()
    points, factors = run_sweep(cfg, threads)
    fit = _fit_or_none([p.rate_bits for p in points], [p.distortion_mean for p in points], "log")
    return ExperimentResult(cfg, points, fit, -(1 / cfg.signal.p - 1 / 2), scale_factors=factors,
                            seconds=time.perf_counter() - t0)


def run_exp3(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Noisy sweep aggregated by ``cfg.aggregation``, with a plateau report.

    With ``reference_noiseless`` the same sweep is repeated at ``epsilon = 0``
    (same signals, same matrices) and returned as ``reference``.
    """
    t0 = time.perf_counter()
    points, factors = run_sweep(cfg, threads)
    agg = cfg.aggregation
    plateau = detect_plateau([p.rate_bits for p in points], [p.distortion(agg) for p in points])
    reference = None
    if cfg.reference_noiseless and cfg.noise.epsilon > 0:
        clean = cfg.with_overrides(noise={"dist": "none", "epsilon": 0.0})
        reference, _ = run_sweep(clean, threads)
    return ExperimentResult(cfg, points, None, None, plateau, reference, factors,
                            time.perf_counter() - t0)


def sigma_floor(m: int, L: int, r: int) -> float:
    """``sqrt(m) * (m / L)**(r/2 - 1/4)``."""
    return math.sqrt(m) * (m / L) ** (r / 2 - 1 / 4)


def verify_sigma_floor(cfg: SigmaConfig) -> list:
    """For each order, how often ``sigma_L(B D^-r)`` clears :func:`sigma_floor` over fresh ``B`` draws."""
    reports = []
    for r in cfg.r:
        floor = sigma_floor(cfg.m, cfg.L, r)
        sigmas = []
        for s in range(cfg.seeds):
            B = gen_matrix("bernoulli", cfg.L, cfg.m, RngSpec(derive_seed(cfg.seed, r, s)))
            sigmas.append(smallest_singular_value(noise_shaped_encoder(B, r)))
        ok = sum(sig >= floor for sig in sigmas)
        reports.append(SigmaReport(cfg.m, cfg.L, r, floor, sigmas, int(ok), cfg.seeds))
    return reports


def csv_text(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in points:
        w.writerow([
            p.m, p.L, repr(p.rate_bits), repr(p.distortion_mean), repr(p.distortion_sq_mean),
            repr(p.distortion_max), p.trials, p.fail_count,
        ])
    return buf.getvalue()


def write_csv(points, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(points))
    return path


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def manifest_dict(result: ExperimentResult, kind: str) -> dict:
    cfg = result.config
    return _jsonable({
        "experiment": kind,
        "version": __version__,
        "generator_id": GENERATOR_ID,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": asdict(cfg),
        "seeds": {"master": cfg.seed, "phi": cfg.phi_seed, "b": cfg.b_seed},
        "sweep": [p.m for p in result.points],
        "decoder_variant": cfg.variant,
        "wall_clock_seconds": result.seconds,
        "point_seconds": [p.seconds for p in result.points],
        "scale_factors": result.scale_factors,
        "fit": asdict(result.fit) if result.fit else None,
        "fit_target": result.fit_target,
        "plateau_rate": result.plateau_rate,
        "flagged_points": [p.m for p in result.flagged_points()],
    })


def write_manifest(data: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
