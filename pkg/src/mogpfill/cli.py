"""Command-line entry point: ``mogpfill {train,predict,assess,diagnose,simulate,corr}``.

Exit codes: 0 success, 1 computation failure, 2 usage or file error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .assess import METHODS, assess
from .errors import (
    ConstantReference,
    ConstantSeries,
    ModelFormatError,
    NotPositiveDefinite,
    OptimizerDiverged,
    TooFewPairs,
    TooFewSamples,
)
from .gp import GpModel, TrainConfig, gp_predict, gp_train
from .mogp import SYNERGY_THRESHOLD, SlfmModel, diagnose, mogp_predict, mogp_train
from .phenosynth import ScenarioConfig, generate_scenario, parse_gaps, parse_scenario_text, select_descriptor

logger = logging.getLogger("mogpfill")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2
COMPUTE_ERRORS = (OptimizerDiverged, NotPositiveDefinite, ConstantSeries, TooFewSamples,
                  TooFewPairs, ConstantReference)


class UsageError(Exception):
    pass


def _train_config(args) -> TrainConfig:
    return TrainConfig(restarts=args.restarts, seed=args.seed, max_iter=args.max_iter,
                       kernel=args.kernel)


def _emit(text: str, out) -> None:
    if out:
        io.atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_train(args) -> int:
    if len(args.series) not in (1, 2):
        raise UsageError("train takes one --series (GP) or two (SLFM)")
    series = [io.read_series_csv(p, epoch=args.epoch) for p in args.series]
    config = _train_config(args)
    if len(series) == 1:
        model = gp_train(series[0], config)
        summary = (f"kind = GP\nlengthscale = {model.kernel.lengthscale:.6g}\n"
                   f"noise_variance = {model.noise_variance:.6g}\n")
    else:
        model = mogp_train(series[0], series[1], config)
        summary = "kind = SLFM\n" + _diagnostics_text(diagnose(model))
    io.save_model(model, args.out)
    print(f"log_likelihood = {model.info.log_likelihood:.10g}")
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = io.load_model(args.model)
    if (args.times is None) == (args.grid is None):
        raise UsageError("give exactly one of --times or --grid")
    times = io.read_times(args.times, args.epoch) if args.times else io.parse_grid(args.grid) + args.epoch
    if isinstance(model, GpModel):
        bands = (gp_predict(model, times),)
    else:
        bands = mogp_predict(model, times)
    _emit(io.predictions_to_csv(times, bands, args.epoch), args.out)
    return EXIT_OK


def _holdout(args) -> np.ndarray:
    values = []
    if args.holdout:
        values += [float(x) for x in args.holdout.split(",") if x.strip()]
    if args.holdout_file:
        values += list(io.read_times(args.holdout_file))
    return np.asarray(values) + args.epoch


def cmd_assess(args) -> int:
    if not args.series or len(args.series) > 2:
        raise UsageError("assess takes one or two --series (optical first)")
    series = [io.read_series_csv(p, epoch=args.epoch) for p in args.series]
    s2 = series[1] if len(series) == 2 else None
    report = assess(series[0], s2, _holdout(args), args.method, _train_config(args), args.r2)
    text = report.to_text(args.epoch)
    if args.out:
        io.atomic_write_text(args.out, text)
        print(f"method = {report.method}\nr2 = {report.r2:.6g}\nrmse = {report.rmse:.6g}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _diagnostics_text(d) -> str:
    lines = [
        f"ell_lf = {d.ell_lf:.6g}",
        f"ell_hf = {d.ell_hf:.6g}",
        f"a_lf = [{d.a_lf[0]:.4f}, {d.a_lf[1]:.4f}]",
        f"a_hf = [{d.a_hf[0]:.4f}, {d.a_hf[1]:.4f}]",
        "B_lf = [[{:.3f}, {:.3f}], [{:.3f}, {:.3f}]]".format(*d.b_lf.ravel()),
        "B_hf = [[{:.3f}, {:.3f}], [{:.3f}, {:.3f}]]".format(*d.b_hf.ravel()),
        f"ratio_out1 = {d.ratio_out1:.4g}",
        f"ratio_out2 = {d.ratio_out2:.4g}",
        f"synergy_class = {d.synergy_class.value}",
    ]
    return "\n".join(lines) + "\n"


def _diagnostics_kv(d) -> str:
    items = [
        ("ell_lf", io.fmt(d.ell_lf)),
        ("ell_hf", io.fmt(d.ell_hf)),
        ("a_lf", io.fmt_vec(d.a_lf)),
        ("a_hf", io.fmt_vec(d.a_hf)),
        ("B_lf", io.fmt_vec(d.b_lf)),
        ("B_hf", io.fmt_vec(d.b_hf)),
        ("b12_lf", io.fmt(d.b12_lf)),
        ("b12_hf", io.fmt(d.b12_hf)),
        ("ratio_out1", io.fmt(d.ratio_out1)),
        ("ratio_out2", io.fmt(d.ratio_out2)),
        ("synergy_class", d.synergy_class.value),
    ]
    return "".join(f"{k}={v}\n" for k, v in items)


def cmd_diagnose(args) -> int:
    model = io.load_model(args.model)
    if not isinstance(model, SlfmModel):
        raise UsageError(f"{args.model}: diagnose requires an SLFM (two-output) model, got a GP model")
    d = diagnose(model, threshold=args.threshold)
    sys.stdout.write(_diagnostics_kv(d) if args.format == "kv" else _diagnostics_text(d))
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = ScenarioConfig()
    if args.config:
        config = parse_scenario_text(Path(args.config).read_text(encoding="utf-8"))
    overrides = {
        "generator": args.generator,
        "span_days": args.span,
        "interval_1": args.interval_1,
        "interval_2": args.interval_2,
        "noise_std_1": args.noise_1,
        "noise_std_2": args.noise_2,
        "seed": args.seed,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.gap:
        overrides["gaps"] = tuple(g for spec in args.gap for g in parse_gaps(spec))
    if args.zero_noise:
        overrides.update(noise_std_1=0.0, noise_std_2=0.0)
    config = config.with_overrides(**overrides)
    if config.seed is None:
        raise UsageError("a seed is required (--seed or 'seed' in the config file)")
    truth, obs1, obs2 = generate_scenario(config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_series_csv(out / "observed_1.csv", obs1, args.epoch)
    io.write_series_csv(out / "observed_2.csv", obs2, args.epoch)
    io.write_series_csv(out / "truth_1.csv", truth, args.epoch)
    print(f"observed_1 = {len(obs1)} samples\nobserved_2 = {len(obs2)} samples\n"
          f"truth_1 = {len(truth)} samples\nout_dir = {out}")
    return EXIT_OK


def _candidate(spec: str, epoch: float):
    label, sep, path = spec.partition("=")
    if not sep:
        path, label = spec, Path(spec).stem
    return label, io.read_series_csv(path, epoch=epoch, label=label)


def cmd_corr(args) -> int:
    optical = io.read_series_csv(args.optical, epoch=args.epoch)
    candidates = [_candidate(c, args.epoch) for c in args.candidate]
    ranked = select_descriptor(optical, candidates, args.tolerance)
    if not ranked:
        print("error: no candidate could be correlated with the optical series", file=sys.stderr)
        return EXIT_COMPUTE
    for rank, (label, rho) in enumerate(ranked, start=1):
        print(f"{rank}\t{label}\t{rho:.5f}")
    if args.csv:
        text = "label,rho\n" + "".join(f"{label},{io.fmt(rho)}\n" for label, rho in ranked)
        io.atomic_write_text(args.csv, text)
    return EXIT_OK


def _add_train_flags(p) -> None:
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--kernel", default="matern32", choices=["matern32", "se"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mogpfill", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--epoch", type=float, default=0.0,
                       help="day offset added to file times on read and removed on write")
        p.set_defaults(func=func)
        return p

    p = add("train", cmd_train, "fit a GP (one series) or SLFM (two series)")
    p.add_argument("--series", action="append", required=True, help="optical series first")
    p.add_argument("--out", required=True)
    _add_train_flags(p)

    p = add("predict", cmd_predict, "predict mean/std at query times")
    p.add_argument("--model", required=True)
    p.add_argument("--times")
    p.add_argument("--grid", help="start:stop:step, stop inclusive")
    p.add_argument("--out")

    p = add("assess", cmd_assess, "leave-out assessment of a gap-filling method")
    p.add_argument("--series", action="append", required=True, help="optical series first")
    p.add_argument("--holdout", help="comma-separated output-1 times")
    p.add_argument("--holdout-file")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--r2", choices=["pearson", "determination"], default="pearson")
    p.add_argument("--out")
    _add_train_flags(p)

    p = add("diagnose", cmd_diagnose, "LF/HF interpretation of an SLFM model")
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=["text", "kv"], default="text")
    p.add_argument("--threshold", type=float, default=SYNERGY_THRESHOLD)

    p = add("simulate", cmd_simulate, "write a synthetic optical/radar scenario")
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--generator", choices=["slfm", "double_logistic"])
    p.add_argument("--span", type=float)
    p.add_argument("--interval-1", type=float)
    p.add_argument("--interval-2", type=float)
    p.add_argument("--gap", action="append", help="start:length (repeatable)")
    p.add_argument("--noise-1", type=float)
    p.add_argument("--noise-2", type=float)
    p.add_argument("--zero-noise", action="store_true")

    p = add("corr", cmd_corr, "rank candidate descriptors by temporal correlation")
    p.add_argument("--optical", required=True)
    p.add_argument("--candidate", action="append", required=True, help="PATH or LABEL=PATH")
    p.add_argument("--tolerance", type=float, default=1.5, help="pairing tolerance in days")
    p.add_argument("--csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except COMPUTE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (UsageError, ModelFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
