"""Command-line entry point: ``aicodec <subcommand> [--config ...] [--out ...]``.

Exit codes: 0 success, 2 configuration error, 3 too many numeric failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .decode import DecodeProblem, InfeasibleError, SolverOptions
from .encode import CodewordFormatError, deserialize_codeword, encode_dense, serialize_codeword
from .experiments import (
    ConfigError,
    ExperimentConfig,
    SigmaConfig,
    config_from_dict,
    csv_text,
    load_config,
    manifest_dict,
    run_exp1,
    run_exp2,
    run_exp3,
    verify_sigma_floor,
    write_csv,
    write_manifest,
    trial_noise_spec,
    trial_signal,
)
from .linalg import Ensemble, EnsembleSpec, NumericFailure, RngSpec
from .quantize import MidriseAlphabet, msq, sd_greedy
from .signals import measure, scale_to_mu

log = logging.getLogger("aicodec")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _experiment_config(args) -> ExperimentConfig:
    data = load_config(args.config) if args.config else {}
    if args.seed is not None:
        data["seed"] = args.seed
    return config_from_dict(data)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _write_json(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n")
    log.info("wrote %s", path)


def _m_for(args, cfg):
    return int(args.m) if args.m is not None else cfg.sweep.resolve()[-1]


def cmd_gen(args) -> int:
    """Draw trial-0 signal of the config, scale it, and measure it with ``m`` rows."""
    cfg = _experiment_config(args)
    m = _m_for(args, cfg)
    ens = Ensemble(EnsembleSpec(cfg.N, m, 1, cfg.phi_kind, RngSpec(cfg.phi_seed), RngSpec(cfg.b_seed)))
    x, factor = scale_to_mu(ens.phi(m), trial_signal(cfg, 0), cfg.signal.mu)
    y, e = measure(ens.phi(m), x, trial_noise_spec(cfg, 0))
    _write_json(args.out / "signal.json", {
        "N": cfg.N, "m": m, "scale_factor": factor,
        "x": x.tolist(), "y": y.tolist(), "e": e.tolist(),
    })
    return EXIT_OK


def cmd_quantize(args) -> int:
    cfg = _experiment_config(args)
    sig = _read_json(args.input or args.out / "signal.json")
    q = cfg.quantizer
    alph = q.alphabet()
    y = np.asarray(sig["y"], dtype=float)
    run = msq(y, alph) if q.scheme == "msq" else sd_greedy(y, alph, q.r)
    _write_json(args.out / "quantized.json", {
        "r": run.r, "K": alph.K, "delta": alph.delta, "stable": run.stable,
        "gamma": run.gamma, "q": run.q.tolist(), "u": run.u.tolist(),
    })
    if not run.stable:
        log.warning("quantizer reported an unstable run")
    return EXIT_OK


def cmd_encode(args) -> int:
    cfg = _experiment_config(args)
    qd = _read_json(args.input or args.out / "quantized.json")
    alph = MidriseAlphabet(int(qd["K"]), float(qd["delta"]))
    q = np.asarray(qd["q"], dtype=float)
    m = q.shape[0]
    L = cfg.L_for(m)
    ens = Ensemble(EnsembleSpec(cfg.N, m, L, cfg.phi_kind, RngSpec(cfg.phi_seed), RngSpec(cfg.b_seed)))
    code = encode_dense(ens.encoder(m, L), q, int(qd["r"]), alph, cfg.phi_seed, cfg.b_seed)
    path = args.out / "codeword.aicc"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_codeword(code))
    log.info("wrote %s (%d entries, %.1f bits)", path, code.L, code.rate_bits)
    return EXIT_OK


def cmd_decode(args) -> int:
    cfg = _experiment_config(args)
    path = args.input or args.out / "codeword.aicc"
    try:
        code = deserialize_codeword(Path(path).read_bytes())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    ens = Ensemble(EnsembleSpec(cfg.N, code.m, code.L, cfg.phi_kind,
                                RngSpec(code.phi_seed), RngSpec(code.b_seed)))
    variant = cfg.variant if cfg.uses_encoder else "noisy"
    prob = DecodeProblem(
        variant, ens.phi(code.m), None, r=code.r, B=ens.encoder(code.m, code.L),
        C=code.delta / 2, eps=cfg.noise.epsilon, eta=cfg.decoder.eta, target=code.values,
    )
    res = prob.solve(SolverOptions(**cfg.solver))
    _write_json(args.out / "decoded.json", {
        "variant": variant, "converged": res.converged, "iterations": res.iterations,
        "objective": res.objective, "feas_residual": res.feas_residual, "tau": res.tau,
        "x_hat": res.x_hat.tolist(),
    })
    return EXIT_OK if res.converged else EXIT_NUMERIC


def _report_experiment(args, result, kind) -> int:
    out = args.out
    write_csv(result.points, out / f"{kind}.csv")
    if result.reference is not None:
        write_csv(result.reference, out / f"{kind}_noiseless.csv")
    write_manifest(manifest_dict(result, kind), out / "manifest.json")
    sys.stdout.write(csv_text(result.points))
    if result.fit is not None:
        log.info("fitted slope %.6g (target %s)", result.fit.slope, result.fit_target)
    if result.plateau_rate is not None:
        log.info("plateau from rate %.1f bits", result.plateau_rate)
    flagged = result.flagged_points()
    if flagged:
        log.error("numeric failures above threshold at m=%s", [p.m for p in flagged])
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_exp(runner, kind):
    def run(args) -> int:
        cfg = _experiment_config(args)
        return _report_experiment(args, runner(cfg, threads=args.threads), kind)
    return run


def cmd_verify_sigma(args) -> int:
    data = load_config(args.config) if args.config else {}
    sigma = data.get("sigma", {})
    if args.seed is not None:
        sigma = {**sigma, "seed": args.seed}
    try:
        cfg = SigmaConfig(**sigma)
    except TypeError as exc:
        raise ConfigError(f"sigma: {exc}") from exc
    reports = verify_sigma_floor(cfg)
    _write_json(args.out / "verify_sigma.json", {
        "config": asdict(cfg),
        "reports": [{**asdict(r), "fraction": r.fraction} for r in reports],
    })
    for r in reports:
        verdict = "PASS" if r.successes >= cfg.required else "FAIL"
        print(f"r={r.r} floor={r.floor:.4g} min_sigma={min(r.sigmas):.4g} "
              f"successes={r.successes}/{r.seeds} {verdict}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for trials")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="aicodec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in [
        ("gen", cmd_gen, "draw and measure one test signal"),
        ("quantize", cmd_quantize, "quantize a measured signal"),
        ("encode", cmd_encode, "encode quantized samples into a codeword file"),
        ("decode", cmd_decode, "decode a codeword file"),
        ("exp1", cmd_exp(run_exp1, "exp1"), "semilog rate-distortion sweep (sparse signals)"),
        ("exp2", cmd_exp(run_exp2, "exp2"), "log-log sweep (weak-lp signals)"),
        ("exp3", cmd_exp(run_exp3, "exp3"), "noisy sweep with plateau detection"),
        ("verify-sigma", cmd_verify_sigma, "singular-value floor check"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        if name in ("gen",):
            p.add_argument("--m", type=int, help="measurement count (default: largest sweep value)")
        if name in ("quantize", "encode", "decode"):
            p.add_argument("--input", type=Path, help="input file (default: previous step's output)")
            p.set_defaults(m=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    if args.seed is not None and not 0 <= args.seed < 2**64:
        log.error("--seed must fit in 64 unsigned bits")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (NumericFailure, InfeasibleError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (ConfigError, CodewordFormatError, ValueError, KeyError) as exc:
        # ValueError/KeyError here come from malformed inputs (bad levels, missing fields)
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
