"""Command-line entry point: ``frugal-judge <command> [options]``.

Exit codes: 0 on success, 1 when the input data fail validation or a model
cannot be fitted, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import report
from .cues import Goal, RocPoint, rank_cues, roc_points
from .evaluation import RefereeAgreement, compare, make_split, per_referee_agreement
from .fft import MAX_DEPTH, FFTree, build_fan, describe_tree
from .logistic import DesignMatrix, SingularDesignError, fit_logistic
from .metrics import Split
from .schema import CANONICAL_CUES, Dataset, ValidationError, dumps_csv, read_csv
from .synthetic import (
    DEFAULT_JITTER_SD,
    DEFAULT_NOISE_SD,
    CaseByCase,
    InfeasibleConfigError,
    SynthConfig,
    Uniform,
    generate,
    sidecar_json,
)


class UsageError(Exception):
    pass


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, files: dict[str, str]) -> None:
    """Write named outputs into --output, or a single one to stdout."""
    if args.output:
        out = Path(args.output)
        for name, text in files.items():
            write_atomic(out / name, text)
        return
    if len(files) != 1:
        raise UsageError(f"this command produces {len(files)} files; pass --output DIR")
    sys.stdout.write(next(iter(files.values())))


def _depth(text: str) -> int:
    try:
        d = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 1 <= d <= MAX_DEPTH:
        raise argparse.ArgumentTypeError(f"depth must be in 1..{MAX_DEPTH}")
    return d


def _nonneg(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frugal-judge",
        description="Model expert funding judgments with fast-and-frugal trees and logistic regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True, help="rating-form CSV")
        p.add_argument("--output", help="output directory (default: stdout)")
        p.add_argument("--format", choices=formats, default=formats[0])

    def modelling(p):
        p.add_argument("--split", choices=("role", "stratified"), default="role")
        p.add_argument("--seed", type=int)
        p.add_argument("--depth-max", type=_depth, default=MAX_DEPTH)
        p.add_argument("--goal", choices=[g.value for g in Goal], default=Goal.ACCURACY.value)
        p.add_argument("--thresholds", choices=("joint", "marginal"), default="joint",
                       help="per-level threshold search (default: joint)")

    p = sub.add_parser("analyze", help="full tree-versus-regression comparison")
    common(p, ("text", "json", "svg"))
    modelling(p)

    p = sub.add_parser("fft", help="fit fast-and-frugal trees on the training half")
    common(p, ("text", "json", "svg"))
    modelling(p)

    p = sub.add_parser("regress", help="fit the all-cues logistic regression on the training half")
    common(p, ("text", "json"))
    p.add_argument("--split", choices=("role", "stratified"), default="role")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("cues", help="per-cue validities and ROC coordinates")
    common(p, ("text", "json", "svg"))
    p.add_argument("--split", choices=("role", "stratified"), default="role")
    p.add_argument("--seed", type=int)
    p.add_argument("--goal", choices=[g.value for g in Goal], default=Goal.ACCURACY.value)

    p = sub.add_parser("simulate", help="generate a synthetic rating-form dataset")
    p.add_argument("--output", help="output directory for synthetic.csv and synthetic.json (default: CSV to stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--style", choices=("uniform", "case-by-case"), default="uniform")
    p.add_argument("--noise-sd", type=_nonneg, default=DEFAULT_NOISE_SD)
    p.add_argument("--jitter-sd", type=_nonneg, default=DEFAULT_JITTER_SD)
    p.add_argument("--n-proposals", type=_positive_int, default=237)

    p = sub.add_parser("report", help="re-render a JSON analysis document")
    common(p, ("text", "svg"))
    return parser


def _load(args) -> Dataset:
    return read_csv(args.input)


def _plan(args, ds: Dataset):
    return make_split(ds, args.split, args.seed)


def _figures(doc: dict) -> dict[str, str]:
    files = {}
    pts = [RocPoint(p["false_positive_rate"], p["sensitivity"], p["label"], p["validity"])
           for p in doc.get("roc", [])]
    if pts:
        files["roc.svg"] = report.roc_svg(pts)
    for t in doc.get("trees", []):
        files[f"tree_{t['depth']}.svg"] = report.tree_svg(FFTree.from_dict(t), CANONICAL_CUES)
    agreements = [RefereeAgreement.from_dict(a) for a in doc.get("referees", [])]
    for split in Split:
        if any(a.split is split for a in agreements):
            files[f"agreement_{split.value}.svg"] = report.agreement_svg(agreements, split)
    return files


def cmd_analyze(args) -> dict[str, str]:
    ds = _load(args)
    plan = _plan(args, ds)
    goal = Goal(args.goal)
    comp = compare(ds, plan, depth_max=args.depth_max, goal=goal, thresholds=args.thresholds)
    two = comp.trees[min(2, len(comp.trees)) - 1]
    agreements = per_referee_agreement(ds, two, comp.full_model, plan)
    doc = report.analysis_document(ds, comp, agreements, goal.value, args.depth_max, args.thresholds)
    doc["roc"] = report.roc_document(comp.cue_stats)["points"]
    if args.format == "json":
        return {"analysis.json": report.dumps(doc)}
    if args.format == "svg":
        return _figures(doc)
    return {"analysis.txt": report.analysis_text(doc)}


def cmd_fft(args) -> dict[str, str]:
    ds = _load(args)
    train = ds.subset(_plan(args, ds).train_indices)
    trees = build_fan(train, args.depth_max, Goal(args.goal), args.thresholds)
    if args.format == "json":
        doc = {"schema_version": report.SCHEMA_VERSION,
               "trees": [{**t.to_dict(), "description": describe_tree(t, ds.schema)} for t in trees]}
        return {"trees.json": report.dumps(doc)}
    if args.format == "svg":
        return {f"tree_{t.depth}.svg": report.tree_svg(t, ds.schema) for t in trees}
    text = "\n".join(f"[{t.depth} cue{'s' if t.depth > 1 else ''}]\n{describe_tree(t, ds.schema)}\n" for t in trees)
    return {"trees.txt": text}


def cmd_regress(args) -> dict[str, str]:
    ds = _load(args)
    train = ds.subset(_plan(args, ds).train_indices)
    model = fit_logistic(DesignMatrix.from_dataset(train))
    if args.format == "json":
        return {"regression.json": report.dumps({"schema_version": report.SCHEMA_VERSION, **model.to_dict()})}
    return {"regression.txt": report.regression_table(model, ds.schema)}


def cmd_cues(args) -> dict[str, str]:
    ds = _load(args)
    train = ds.subset(_plan(args, ds).train_indices)
    stats = rank_cues(train, Goal(args.goal))
    if args.format == "json":
        doc = {**report.roc_document(stats), "cues": report.cue_stats_json(stats)}
        return {"cues.json": report.dumps(doc)}
    if args.format == "svg":
        return {"roc.svg": report.roc_svg(roc_points(stats))}
    return {"cues.txt": report.cue_table(stats, ds.schema)}


def cmd_simulate(args) -> dict[str, str]:
    style = (Uniform(noise_sd=args.noise_sd) if args.style == "uniform"
             else CaseByCase(weight_jitter_sd=args.jitter_sd, noise_sd=args.noise_sd))
    config = SynthConfig(n_proposals=args.n_proposals, style=style, seed=args.seed)
    ds = generate(config)
    files = {"synthetic.csv": dumps_csv(ds)}
    if args.output:
        files["synthetic.json"] = sidecar_json(config, ds)
    return files


def cmd_report(args) -> dict[str, str]:
    with open(args.input, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != report.SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    if args.format == "svg":
        return _figures(doc)
    return {"analysis.txt": report.analysis_text(doc)}


COMMANDS = {
    "analyze": cmd_analyze,
    "fft": cmd_fft,
    "regress": cmd_regress,
    "cues": cmd_cues,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command == "simulate" and args.seed is None:
        parser.print_usage(sys.stderr)
        print("frugal-judge: error: simulate requires --seed", file=sys.stderr)
        return 2
    if getattr(args, "split", None) == "stratified" and args.seed is None:
        parser.print_usage(sys.stderr)
        print("frugal-judge: error: --split stratified requires --seed", file=sys.stderr)
        return 2
    try:
        _emit(args, COMMANDS[args.command](args))
    except UsageError as e:
        print(f"frugal-judge: error: {e}", file=sys.stderr)
        return 2
    except ValidationError as e:
        print(f"frugal-judge: invalid input: {len(e.issues)} problem(s)", file=sys.stderr)
        for issue in e.issues:
            print(f"  {issue}", file=sys.stderr)
        return 1
    except (InfeasibleConfigError, SingularDesignError, FileNotFoundError, ValueError) as e:
        print(f"frugal-judge: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
