"""Command-line entry point: the full pipeline (``fit``) and one subcommand per stage."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from . import ingest
from .calibrate import calibrate, label_patterns
from .cluster import CutPolicy
from .config import CalibrationConfig, load_config
from .errors import ConfigError, InputError, PhasePatError
from .importance import I80_DISTANCE_NOTE, BallotMatrix, UndefinedImportance, borda_score, tally_ballots
from .interpret import InterpretConfig
from .model import VARIABLE_KEYS, VariableId
from .rdm import standardize_library
from .similarity import DissimilarityRecord
from .synth import GeneratorSpec, generate

EXIT_CODES = """exit codes:
  0  success
  1  unexpected internal error
  2  input error (unreadable, malformed or invalid library / artifact; bad arguments)
  3  configuration error
  4  degenerate data (zero variance, pool too small, no usable features)
  5  non-convergence (a calibration round retained no phase)
"""

log = logging.getLogger("phasepat")


def _config(args: argparse.Namespace) -> CalibrationConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else CalibrationConfig()
    changes: dict = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "k", None) is not None:
        changes["cut"] = CutPolicy.fixed(args.k)
        changes["round_cuts"] = ()
    if getattr(args, "delta", None) is not None:
        changes["delta"] = args.delta
    if getattr(args, "epsilon_pct", None) is not None:
        changes["epsilon_percentile"] = args.epsilon_pct
    if getattr(args, "radius", None) is not None:
        changes["fastdtw_radius"] = args.radius
    if getattr(args, "window", None) is not None:
        i = cfg.interpret
        changes["interpret"] = InterpretConfig(window=args.window, tau=i.tau, outlier_frac=i.outlier_frac)
    return cfg.replace(**changes) if changes else cfg


def _threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise ConfigError("--threads must be >= 1")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _emit(payload, out: str | None) -> None:
    if out:
        ingest.write_json(payload, out)
    else:
        sys.stdout.write(ingest.dumps(payload))


def cmd_fit(args: argparse.Namespace) -> int:
    cfg = _config(args)
    lib = ingest.read_library(args.library, args.format, args.sample_period)
    report = calibrate(lib, cfg)
    written = ingest.write_report(report, args.out)
    problems = report.conservation_violations(lib.ids)
    if problems:
        raise PhasePatError("conservation check failed: " + "; ".join(problems[:5]))
    print(f"{len(report.patterns)} patterns in {len(report.rounds)} round(s) ({report.terminated_by}); "
          f"{len(report.unresolved)} unresolved; wrote {len(written)} files to {args.out}")
    return 0


def cmd_resample(args: argparse.Namespace) -> int:
    cfg = _config(args)
    lib = ingest.read_library(args.library, args.format, args.sample_period)
    fixed, length, stats = standardize_library(lib, cfg.rdm)
    periods = {p.id: p.sample_period for p in lib}
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        for f in fixed:
            obj = {"id": f.origin_id, "sample_period": periods[f.origin_id], "reference_length": length}
            for k, name in enumerate(VARIABLE_KEYS):
                obj[name] = f.series[k].tolist()
            obj["normalization"] = None if stats is None else {k: {"mean": m, "std": s} for k, (m, s) in zip(VARIABLE_KEYS, stats)}
            fh.write(json.dumps(ingest.to_jsonable(obj), sort_keys=True) + "\n")
    print(f"{len(fixed)} phases at reference length {length} -> {out}")
    return 0


def _ballots_from_json(raw) -> BallotMatrix:
    if isinstance(raw, dict) and "ballots" in raw:
        raw = raw["ballots"]
    if isinstance(raw, dict) and "counts" in raw:
        return BallotMatrix(np.asarray(raw["counts"]))
    if isinstance(raw, dict) and "by_size" in raw:
        return BallotMatrix.from_rows(raw["by_size"])
    raise InputError("ballot JSON needs a 'counts' matrix [variable][size] or 'by_size' rows")


def _ballots_from_dsi(path: str) -> BallotMatrix:
    rows = ingest.read_dsi(path)
    sets: dict[str, set[VariableId]] = {}
    for pid, var, _, _, triggered in rows:
        sets.setdefault(pid, set())
        if triggered:
            sets[pid].add(VariableId.from_key(var))
    return tally_ballots(DissimilarityRecord(pid, (0.0,) * 4, frozenset(s)) for pid, s in sets.items())


def cmd_importance(args: argparse.Namespace) -> int:
    path = Path(args.input)
    if path.suffix.lower() == ".json":
        ballots = _ballots_from_json(ingest.load_json(path))
    else:
        ballots = _ballots_from_dsi(str(path))
    try:
        score = borda_score(ballots)
    except UndefinedImportance as exc:
        raise InputError(f"{path}: {exc}") from exc
    _emit({"ballots": ballots.to_dict(), "importance": score.to_dict(), "note": I80_DISTANCE_NOTE}, args.out)
    return 0


def cmd_interpret(args: argparse.Namespace) -> int:
    cfg = _config(args)
    lib = ingest.read_library(args.library, args.format, args.sample_period)
    assignment = ingest.read_assignments(args.assignments)
    unknown = sorted(set(assignment) - set(lib.ids))
    if unknown:
        raise InputError(f"{args.assignments}: phases not in the library: {', '.join(unknown[:5])}")
    groups: dict[str, list[str]] = {}
    for pid in lib.ids:
        if pid in assignment:
            groups.setdefault(assignment[pid], []).append(pid)
    _, ref_len, _ = standardize_library(lib, cfg.rdm)
    patterns = label_patterns(lib, [(pid, 0, 0, m) for pid, m in groups.items()], cfg, ref_len)
    _emit({"window": cfg.interpret.window_for(ref_len), "labels": [p.label.to_dict() for p in patterns]}, args.out)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    raw = ingest.load_json(args.spec)
    if isinstance(raw, dict):
        raw = raw.get("specs", raw.get("generators"))
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{args.spec}: expected a non-empty list of generator specs")
    specs = [GeneratorSpec.from_dict(r) for r in raw]
    if args.seed is not None:
        specs = [GeneratorSpec(**{**s.__dict__, "seed": args.seed + i}) for i, s in enumerate(specs)]
    lib, truth = generate(specs, source_tag=Path(args.out).name)
    ingest.write_library(lib, args.out)
    truth_path = Path(args.truth) if args.truth else Path(args.out).with_name("truth.csv")
    ingest.write_truth(truth, truth_path)
    print(f"{len(lib)} phases -> {args.out}; ground truth -> {truth_path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    data = ingest.load_json(Path(args.run) / "report.json" if Path(args.run).is_dir() else args.run)
    lines = [f"source: {data['source_tag']}  reference length: {data['reference_length']}  "
             f"rounds: {data['n_rounds']}  terminated by: {data['terminated_by']}"]
    for r in data["rounds"]:
        kept = sum(len(v) for v in r["accepted"].values())
        lines.append(f"round {r['round']}: k={r['k']} df={r['inter_cluster_df']} "
                     f"{'dSI audited' if r['dsi_evaluated'] else 'accepted wholesale'}; "
                     f"retained {kept}, re-extracted {len(r['re_extracted'])}")
    lines.append("patterns:")
    for p in data["patterns"]:
        flag = " (nearest rule)" if p["mixed"] else ""
        lines.append(f"  {p['pattern_id']}: {p['motion']}/{p['state']}{flag} size {p['size']}")
    lines.append(f"unresolved: {len(data['unresolved'])}")
    lines.append("overview (state x motion sizes):")
    for state, row in data["overview"].items():
        lines.append(f"  {state}: " + ", ".join(f"{m}={n}" for m, n in row.items()))
    print("\n".join(lines))
    return 0


def _library_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("library", help="phase library (.csv long format or .jsonl)")
    p.add_argument("--format", choices=("csv-long", "jsonl"), help="override format inferred from the suffix")
    p.add_argument("--sample-period", type=float, default=0.1, help="seconds per sample for CSV input (default 0.1)")


def _tuning_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config with [calibration], [cut], [rdm], [interpret] sections")
    p.add_argument("--seed", type=int, help="RNG seed override")
    p.add_argument("--k", type=int, help="fixed number of clusters in every round (replaces the largest-gap cut)")
    p.add_argument("--delta", type=float, help="inter-cluster difference threshold")
    p.add_argument("--epsilon-pct", type=float, help="dSI percentile used as the re-extraction threshold")
    p.add_argument("--radius", type=int, help="FastDTW refinement radius")
    p.add_argument("--window", type=int, help="trend-index window in samples")
    p.add_argument("--threads", type=int, help="cap on worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasepat",
        description="Discover and label driving patterns in a library of car-following Action phases.",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="run the full calibration loop and write the artifact set", epilog=EXIT_CODES,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    _library_args(p)
    _tuning_args(p)
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("resample", help="standardize every phase to the reference length (JSONL out)")
    _library_args(p)
    _tuning_args(p)
    p.add_argument("--out", required=True, help="output .jsonl")
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("importance", help="importance scores from a dsi_round<k>.csv or a ballot JSON")
    p.add_argument("input", help="dSI table (.csv) or ballot matrix (.json)")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("interpret", help="label patterns from a library and an assignments.csv")
    _library_args(p)
    p.add_argument("assignments", help="assignments.csv with phase_id and pattern_id columns")
    _tuning_args(p)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_interpret)

    p = sub.add_parser("synth", help="generate a synthetic library with planted patterns")
    p.add_argument("--spec", required=True, help="JSON list of generator specs")
    p.add_argument("--out", required=True, help="library path (.csv or .jsonl)")
    p.add_argument("--truth", help="ground-truth CSV path (default: truth.csv next to --out)")
    p.add_argument("--seed", type=int, help="base seed; generator i uses seed + i")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="summarize a run directory or report.json")
    p.add_argument("run", help="run directory or report.json")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _threads(getattr(args, "threads", None))
        return args.func(args)
    except PhasePatError as exc:
        print(f"phasepat {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
