"""Command-line interface: ``mixedadc {crb, arrange, scenario}``.

Exit codes: 0 success, 2 bad input, 3 unidentifiable (singular FIM),
4 enumeration budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .array_model import ArrayConfig, DiscreteRandomThreshold
from .arrangement import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    brute_force_multi,
    brute_force_two_level,
    dispersion_score,
    greedy_multi_precision,
    optimal_two_level,
    parse_arrangement,
)
from .fisher_crb import UnidentifiableError, crb_asymptotic, crb_optimal_hadamard
from .scenario import (
    ScenarioError,
    emit_table,
    general_trials,
    load_spec,
    reference_scene,
    sidecar_path,
    run_scenario,
    trial_rng,
)

EXIT_OK, EXIT_USAGE, EXIT_SINGULAR, EXIT_BUDGET = 0, 2, 3, 4


class UsageError(ValueError):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _fmt(x):
    return f"{x:.9e}"


def _emit(text: str, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def parse_formula(text: str):
    kind, _, arg = text.partition(":")
    if kind in ("exact", "asymptotic") and not arg:
        return kind, None
    if kind == "general":
        try:
            trials = int(arg) if arg else 50
        except ValueError:
            raise UsageError(f"general:<trials> needs an integer, got {arg!r}") from None
        if trials < 1:
            raise UsageError("trial count must be >= 1")
        return kind, trials
    raise UsageError(f"unknown formula {text!r}; use exact, asymptotic or general:<trials>")


def compute_crb(args) -> np.ndarray:
    """Per-target CRB diagonal for the ``crb`` subcommand."""
    formula, trials = parse_formula(args.formula)
    cfg = ArrayConfig(args.m)
    arrangement = parse_arrangement(args.arrange, args.m)
    angles_deg = np.array(args.angles)
    if angles_deg.size == 0:
        raise UsageError("need at least one angle")
    if np.any(np.abs(angles_deg) >= 90):
        raise UsageError("angles must lie strictly inside (-90, 90) degrees")
    angles = np.deg2rad(angles_deg)
    K = angles.size
    if K >= args.m:
        raise UsageError(f"need fewer sources than elements (K={K}, M={args.m})")
    powers = np.ones(K) if args.powers is None else np.array(args.powers)
    if powers.size != K or np.any(powers <= 0):
        raise UsageError("--powers needs one positive value per angle")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.sigma2 is not None:
        if args.sigma2 <= 0:
            raise UsageError("--sigma2 must be positive")
        sigma2 = args.sigma2
    else:
        sigma2 = 10.0 ** (-args.snr_db / 10.0)

    if formula == "exact":
        scene = reference_scene(cfg, args.n, angles, powers, sigma2, trial_rng(args.seed, 0, 0, 0))
        return crb_optimal_hadamard(scene, cfg, arrangement).diagonal
    if formula == "asymptotic":
        return crb_asymptotic(angles, powers / sigma2, arrangement, args.n).diagonal
    scheme = DiscreteRandomThreshold(args.h_max, args.levels)
    mean, used = general_trials(cfg, [("x", arrangement)], angles, powers, sigma2, args.n, scheme, trials,
                                lambda t: trial_rng(args.seed, 0, 0, t))["x"]
    if used < trials:
        raise UnidentifiableError(f"{trials - used} of {trials} trials had a singular FIM; "
                                  "parameters are unidentifiable for those draws")
    return mean


def cmd_crb(args) -> int:
    values = compute_crb(args)
    if args.format == "json":
        text = json.dumps({"formula": args.formula, "arrangement": args.arrange,
                           "angles_deg": args.angles,
                           "crb": [float(v) for v in values],
                           "crb_db": [10 * math.log10(v) for v in values]}) + "\n"
    else:
        sep = "," if args.format == "csv" else "  "
        lines = [sep.join(["target", "angle_deg", "crb_rad2", "crb_db"])]
        for k, (ang, v) in enumerate(zip(args.angles, values), start=1):
            lines.append(sep.join([str(k), f"{ang:g}", _fmt(v), _fmt(10 * math.log10(v))]))
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def cmd_arrange(args) -> int:
    if args.multi is not None:
        weights = args.multi
        if len(weights) != args.m:
            raise UsageError(f"--multi needs {args.m} weights, got {len(weights)}")
        if any(not 0 < w <= 1 for w in weights):
            raise UsageError("weights must lie in (0, 1]")
        arr = greedy_multi_precision(weights)
        score = dispersion_score(arr)
        lines = ["weights: " + " ".join(f"{w:g}" for w in arr.weights),
                 f"S = {_fmt(score)}",
                 "rule: highest precision at the outermost positions (heuristic)"]
        if args.brute_force:
            best, argmax = brute_force_multi(weights, budget=args.budget)
            ok = any(np.array_equal(np.array(p), arr.weights) for p in argmax)
            lines.append(f"exhaustive max S = {_fmt(best)}")
            lines.append("certified optimal" if ok else "NOT optimal")
        _emit("\n".join(lines) + "\n", args.output)
        return EXIT_OK

    if args.m0 is None:
        raise UsageError("arrange needs --m0 or --multi")
    if not 0 <= args.m0 <= args.m:
        raise UsageError(f"need 0 <= m0 <= m, got m0={args.m0}, m={args.m}")
    arr = optimal_two_level(args.m, args.m0)
    score = dispersion_score(arr)
    record = {"M": args.m, "M0": args.m0, "indicator": arr.bits(),
              "high_precision_positions": list(arr.high_positions()), "S": score}
    if args.brute_force:
        result = brute_force_two_level(args.m, args.m0, budget=args.budget)
        record["exhaustive_max_S"] = result.max_score
        record["placements"] = result.evaluated
        record["certified"] = arr.high_positions() in result.argmax
    if args.format == "json":
        text = json.dumps(record) + "\n"
    else:
        lines = [f"M={args.m} M0={args.m0}",
                 f"indicator: {arr.bits()}",
                 "high-precision positions: " + " ".join(map(str, arr.high_positions())),
                 f"S = {_fmt(score)}"]
        if args.brute_force:
            verdict = "certified optimal" if record["certified"] else "NOT optimal"
            lines.append(f"{verdict} (exhaustive search over {result.evaluated} placements, "
                         f"max S = {_fmt(result.max_score)})")
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def cmd_scenario(args) -> int:
    try:
        spec = load_spec(args.spec)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    output = args.output or spec.output or f"{spec.name}.csv"
    table = run_scenario(spec, workers=args.workers)
    path = emit_table(table, output)
    excluded = sum(table.exclusions.values())
    print(f"wrote {len(table.rows)} rows to {path} (metadata {sidecar_path(path)}; "
          f"{excluded} excluded trials)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0, help="master random seed")
    shared.add_argument("--output", "-o", default=None, help="write output to this path")
    shared.add_argument("--format", choices=["table", "csv", "json"], default="table")

    parser = argparse.ArgumentParser(prog="mixedadc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crb", parents=[shared], help="per-target DOA CRB for one configuration")
    p.add_argument("--m", type=int, required=True, help="number of array elements")
    p.add_argument("--arrange", required=True,
                   help="edges:K, left:K, center:K or bits:0101... (1 = high precision)")
    p.add_argument("--angles", type=_floats, required=True, help="source angles in degrees, comma-separated")
    p.add_argument("--powers", type=_floats, default=None, help="source powers (default 1 each)")
    noise = p.add_mutually_exclusive_group(required=True)
    noise.add_argument("--snr-db", type=float, help="SNR in dB relative to unit power")
    noise.add_argument("--sigma2", type=float, help="noise variance")
    p.add_argument("--n", type=int, required=True, help="number of snapshots")
    p.add_argument("--formula", default="exact", help="exact, asymptotic or general:<trials>")
    p.add_argument("--h-max", type=float, default=2.0, help="threshold range for general:<trials>")
    p.add_argument("--levels", type=int, default=8, help="threshold levels for general:<trials>")
    p.set_defaults(func=cmd_crb)

    p = sub.add_parser("arrange", parents=[shared], help="optimal ADC placement")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--m0", type=int, default=None, help="number of high-precision ADCs")
    p.add_argument("--multi", type=_floats, default=None, help="multi-precision weights in (0, 1]")
    p.add_argument("--brute-force", action="store_true", help="certify against exhaustive search")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="exhaustive search budget")
    p.set_defaults(func=cmd_arrange)

    p = sub.add_parser("scenario", parents=[shared], help="run a scenario file (or bundled name)")
    p.add_argument("spec", help="path to a YAML scenario, or paper_fig2a / paper_fig2b")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnidentifiableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
