"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Command-line entry point. Subcommands train, scan, test,
             simulate and binarize; every run that writes files leaves a
             manifest.json next to them.
------------------------------------------------------------------------------
"""
import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from atypicality import __version__
from atypicality.binarize import (
    INPUT_FORMATS, consecutive_comparison, fasta_to_bits, format_bit_text, load_bits, parse_bit_text,
    parse_values, randu_bits, read_input_text, word_lengths,
)
from atypicality.config import logger, settings
from atypicality.ctw import atypical_codelength
from atypicality.errors import (
    EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, AtypicalityError, ConfigurationError, DataFormatError,
    InvalidParameterError,
)
from atypicality.frozen import FrozenModel, train, typical_codelength_frozen
from atypicality.iid import iid_atypicality_test
from atypicality.models import AtypicalityVerdict, BoundSpec, IIDTypicalModel, RunManifest, ScanConfig
from atypicality.montecarlo import (
    freezing_demo, phase_transition, simulate_ctw_pa, simulate_miss, simulate_pa, write_grid_csv,
)
from atypicality.scanner import flag_segments, scan, write_flags_csv, write_profile_csv, write_ranking_csv
from atypicality.utils import sha256_file

SIMULATIONS = ("pa", "miss", "phase", "freezing", "ctw-pa")
BINARIZE_MODES = ("compare", "dna", "randu", "bits", "words")

# per-simulation defaults when --trials / --tau are not given
_DEFAULT_TRIALS = {"pa": 100_000, "miss": 100_000, "phase": 20, "ctw-pa": 1_000, "freezing": 1}
_DEFAULT_TAU = {"pa": 1.0, "miss": 2.0, "phase": 12.0, "ctw-pa": 1.0, "freezing": 20.0}


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def parse_grid(text: str) -> List[float]:
    """'start:stop:step' (stop included) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 10) for k in range(max(count, 0))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step or a comma list, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed for every random choice")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: DEFAULT_WORKERS or all cores)")
    common.add_argument("--output-dir", default=settings.OUTPUT_DIR, help="directory for output files")

    parser = argparse.ArgumentParser(prog="atypicality", description="Atypical subsequence detection")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train and freeze a typical CTW model")
    p.add_argument("inputs", nargs="+", help="training files")
    p.add_argument("--depth", type=int, default=settings.DEFAULT_MAX_DEPTH, help="context depth D")
    p.add_argument("--model-out", default=None, help="model path (default: <output-dir>/model.bin)")
    p.add_argument("--input-format", choices=INPUT_FORMATS, default="bits")
    p.add_argument("--skip-invalid", action="store_true", help="drop non-ACGT bases instead of failing")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("scan", parents=[common], help="score every start position of a stream")
    p.add_argument("input")
    p.add_argument("--input-format", choices=INPUT_FORMATS, default="bits")
    p.add_argument("--skip-invalid", action="store_true")
    p.add_argument("--model", default=None, help="frozen typical model file")
    p.add_argument("--iid-p", type=float, default=None, help="iid typical model P(X=1)")
    p.add_argument("--l-min", type=int, default=settings.DEFAULT_L_MIN)
    p.add_argument("--l-max", type=int, default=settings.DEFAULT_L_MAX)
    p.add_argument("--max-depth", type=int, default=settings.DEFAULT_MAX_DEPTH)
    p.add_argument("--tau", type=float, default=None, help="flag threshold; unset = ranking only")
    p.add_argument("--atypical-coder", choices=("ctw", "iid"), default="ctw")
    p.add_argument("--svg", action="store_true", help="also write scan.svg")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("test", parents=[common], help="atypicality verdict for a whole sequence")
    p.add_argument("input")
    p.add_argument("--input-format", choices=INPUT_FORMATS, default="bits")
    p.add_argument("--model", default=None)
    p.add_argument("--iid-p", type=float, default=None)
    p.add_argument("--max-depth", type=int, default=settings.DEFAULT_MAX_DEPTH)
    p.add_argument("--tau", type=float, default=1.0)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo experiments")
    p.add_argument("which", choices=SIMULATIONS)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--p-a", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--lengths", type=parse_int_list, default=None, help="comma-separated l grid")
    p.add_argument("--alphas", type=parse_grid, default=None, help="alpha grid, e.g. 0.5:3:0.5")
    p.add_argument("--trials", type=int, default=None, help="trials per point (streams for phase)")
    p.add_argument("--exact", action="store_true", help="pa: use the exact relative-entropy criterion")
    p.add_argument("--stream-length", type=int, default=1 << 16)
    p.add_argument("--l-min", type=int, default=16)
    p.add_argument("--l-max", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None, help="ctw-pa / freezing scan depth")
    p.add_argument("--depth", type=int, default=6, help="freezing: typical model depth")
    p.add_argument("--training-length", type=int, default=100_000)
    p.add_argument("--test-length", type=int, default=10_000)
    p.add_argument("--segment-length", type=int, default=2_000)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("binarize", parents=[common], help="convert a source file to bit text")
    p.add_argument("input", nargs="?", default=None, help="input file (not used by randu)")
    p.add_argument("--mode", choices=BINARIZE_MODES, required=True)
    p.add_argument("--count", type=int, default=None, help="randu: number of bits")
    p.add_argument("--skip-invalid", action="store_true")
    p.add_argument("--output", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_binarize)
    return parser


def _output_dir(args: argparse.Namespace) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _workers(args: argparse.Namespace) -> int:
    workers = args.workers if args.workers is not None else settings.resolved_workers
    if workers < 1:
        raise InvalidParameterError(f"--workers must be at least 1, got {workers}")
    return workers


def _write_manifest(args: argparse.Namespace, out: Path, inputs: Sequence[str], outputs: Sequence[Path],
                    extra: Optional[Dict[str, Any]] = None) -> Path:
    parameters = {k: v for k, v in vars(args).items() if k != "func"}
    parameters.update(extra or {})
    manifest = RunManifest(
        subcommand=args.command,
        parameters=parameters,
        inputs={str(path): sha256_file(path) for path in inputs},
        outputs=[str(p) for p in outputs],
    )
    path = out / "manifest.json"
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return path


def _typical_from_args(args: argparse.Namespace):
    if args.model is not None and args.iid_p is not None:
        raise ConfigurationError("give either --model or --iid-p, not both")
    if args.model is not None:
        path = Path(args.model)
        if not path.exists():
            raise ConfigurationError(f"model file not found: {path}")
        model = FrozenModel.load(path)
        return model, f"frozen:{path.name}:{model.state_digest()[:12]}"
    if args.iid_p is not None:
        return IIDTypicalModel(p=args.iid_p), f"iid:p={args.iid_p}"
    raise ConfigurationError("a typical model is required: pass --model or --iid-p")


def cmd_train(args: argparse.Namespace) -> int:
    out = _output_dir(args)
    sequences = [load_bits(path, args.input_format, args.seed, args.skip_invalid) for path in args.inputs]
    model = train(sequences, args.depth)
    model_path = Path(args.model_out) if args.model_out else out / "model.bin"
    model_path.parent.mkdir(parents=True, exist_ok=True)
    model.save(model_path)
    _write_manifest(args, out, args.inputs, [model_path], {"state_digest": model.state_digest()})
    print(f"nodes={model.node_count} training_bits={model.training_codelength:.3f} model={model_path}")
    return EXIT_OK


def cmd_scan(args: argparse.Namespace) -> int:
    typical, label = _typical_from_args(args)
    cfg = ScanConfig(l_min=args.l_min, l_max=args.l_max, max_depth=args.max_depth, tau=args.tau,
                     atypical_coder=args.atypical_coder)
    bits = load_bits(args.input, args.input_format, args.seed, args.skip_invalid)
    if bits.size == 0:
        raise DataFormatError("input holds no samples", source=args.input)
    out = _output_dir(args)
    profile = scan(bits, typical, cfg, workers=_workers(args))

    outputs = [out / "profile.csv", out / "ranking.csv"]
    write_profile_csv(profile, outputs[0], label)
    write_ranking_csv(profile, outputs[1], label)
    extra: Dict[str, Any] = {"typical": label}
    if cfg.tau is not None:
        segments = flag_segments(profile, cfg.tau)
        outputs.append(out / "flags.csv")
        write_flags_csv(profile, segments, outputs[-1], cfg.tau, label)
        extra["flagged_segments"] = len(segments)
        print(f"flagged {len(segments)} segment(s) at tau={cfg.tau:g}")
    best = int(np.argmin(profile.scores))
    print(f"min delta_l={profile.scores[best]:.3f} at n={best} (l={profile.best_lengths[best]}, "
          f"d={profile.best_depths[best]})")
    if args.svg:
        from atypicality.plotting import plot_scan

        outputs.append(out / "scan.svg")
        plot_scan(bits, profile, outputs[-1], cfg.tau)
    _write_manifest(args, out, [args.input] + ([args.model] if args.model else []), outputs, extra)
    return EXIT_OK


def cmd_test(args: argparse.Namespace) -> int:
    typical, _ = _typical_from_args(args)
    bits = load_bits(args.input, args.input_format, args.seed)
    if bits.size == 0:
        raise DataFormatError("input holds no samples", source=args.input)
    if isinstance(typical, IIDTypicalModel):
        verdict = iid_atypicality_test(bits, typical, args.tau)
    else:
        typical_bits = typical_codelength_frozen(typical, bits)
        atypical_bits = atypical_codelength(bits, args.max_depth).total_bits + args.tau
        delta = atypical_bits - typical_bits
        verdict = AtypicalityVerdict(typical_bits=typical_bits, atypical_bits=atypical_bits, delta=delta,
                                     is_atypical=delta < 0)
    print(verdict.model_dump_json())
    return EXIT_OK


def _bound_spec(args: argparse.Namespace) -> BoundSpec:
    fields: Dict[str, Any] = {
        "p": args.p,
        "p_a": args.p_a,
        "tau": args.tau if args.tau is not None else _DEFAULT_TAU[args.which],
        "trials": args.trials if args.trials is not None else _DEFAULT_TRIALS[args.which],
        "seed": args.seed,
    }
    if args.lengths is not None:
        fields["lengths"] = args.lengths
    if args.alphas is not None:
        fields["alphas"] = args.alphas
    elif args.which == "phase":
        fields["alphas"] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
    return BoundSpec(**fields)


def cmd_simulate(args: argparse.Namespace) -> int:
    out = _output_dir(args)
    workers = _workers(args)
    spec = _bound_spec(args)
    outputs: List[Path] = []

    if args.which == "freezing":
        cfg = ScanConfig(l_min=args.l_min, l_max=args.l_max or 128, max_depth=args.max_depth or args.depth,
                         tau=spec.tau)
        demo = freezing_demo(training_length=args.training_length, test_length=args.test_length,
                             segment_length=args.segment_length, seed=args.seed, depth=args.depth,
                             cfg=cfg, workers=workers)
        outputs = [out / "frozen_profile.csv", out / "adaptive_profile.csv", out / "test_bits.txt"]
        write_profile_csv(demo.frozen, outputs[0], "frozen")
        write_profile_csv(demo.adaptive, outputs[1], "adaptive")
        outputs[2].write_text(format_bit_text(demo.test_bits), encoding="utf-8")
        print(f"anomalous segment [{demo.segment_start}, {demo.segment_end}): "
              f"frozen min={min(demo.frozen.scores):.2f} adaptive min={min(demo.adaptive.scores):.2f}")
        if args.svg:
            from atypicality.plotting import plot_freezing

            outputs.append(out / "freezing.svg")
            plot_freezing(demo, outputs[-1], spec.tau)
        _write_manifest(args, out, [], outputs, {"resolved_spec": spec.model_dump()})
        return EXIT_OK

    if args.which == "pa":
        result = simulate_pa(spec, exact=args.exact, workers=workers)
    elif args.which == "miss":
        result = simulate_miss(spec, workers=workers)
    elif args.which == "phase":
        result = phase_transition(spec, stream_length=args.stream_length, l_max=args.l_max, workers=workers)
    else:
        result = simulate_ctw_pa(spec, max_depth=args.max_depth if args.max_depth is not None else 4,
                                 workers=workers)

    outputs.append(out / "grid.csv")
    write_grid_csv(result, outputs[0])
    for point in result.points:
        bound = "" if point.bound is None else f" bound={point.bound:.3e}"
        print(f"{result.x_label}={point.x:g} estimate={point.estimate:.3e} ±{point.half_width:.1e}{bound}")
    if args.svg:
        from atypicality.plotting import plot_grid

        outputs.append(out / "grid.svg")
        plot_grid(result, outputs[-1], log_scale=args.which != "phase")
    _write_manifest(args, out, [], outputs, {"resolved_spec": spec.model_dump()})
    return EXIT_OK


def cmd_binarize(args: argparse.Namespace) -> int:
    if args.mode == "randu":
        if args.count is None:
            raise InvalidParameterError("randu mode needs --count")
        bits = randu_bits(args.count, args.seed)
    else:
        if args.input is None:
            raise InvalidParameterError(f"{args.mode} mode needs an input file")
        path = Path(args.input)
        text = read_input_text(path)
        if args.mode == "dna":
            bits = fasta_to_bits(text, source=str(path), skip_invalid=args.skip_invalid)
        elif args.mode == "compare":
            bits = consecutive_comparison(parse_values(text, source=str(path)), args.seed)
        elif args.mode == "words":
            bits = consecutive_comparison(word_lengths(text), args.seed)
        else:
            bits = parse_bit_text(text, source=str(path))

    text_out = format_bit_text(bits)
    if args.output is None:
        sys.stdout.write(text_out)
        return EXIT_OK
    out = _output_dir(args)
    Path(args.output).write_text(text_out, encoding="utf-8")
    _write_manifest(args, out, [args.input] if args.input else [], [Path(args.output)])
    logger.info(f"Wrote {bits.size} bits to {args.output}")
    return EXIT_OK


def _validation_details(exc: ValidationError) -> List[str]:
    errors = []
    for error in exc.errors():
        field = ".".join(str(x) for x in error["loc"])
        errors.append(f"{field}: {error['msg']}")
    return errors


def _report(content: Dict[str, Any]) -> None:
    print(json.dumps(content, default=str), file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    start_time = time.time()
    try:
        code = args.func(args)
    except AtypicalityError as exc:
        logger.error(f"{exc.code}: {exc.message}")
        _report(exc.to_dict())
        return exc.exit_code
    except ValidationError as exc:
        details = _validation_details(exc)
        logger.error(f"Validation error: {details}")
        _report({"status": "error", "code": "VALIDATION_ERROR", "message": "Invalid parameters",
                 "details": details})
        return EXIT_USAGE
    except ValueError as exc:
        logger.error(f"Invalid parameter: {exc}")
        _report({"status": "error", "code": "INVALID_PARAMETER", "message": str(exc), "details": None})
        return EXIT_USAGE
    except Exception as exc:
        logger.exception(f"Unhandled error in {args.command}")
        _report({"status": "error", "code": "INTERNAL_ERROR", "message": str(exc), "details": None})
        return EXIT_INTERNAL

    duration_ms = round((time.time() - start_time) * 1000, 2)
    logger.info(f"Command {args.command} finished", duration_ms=duration_ms)
    return code
