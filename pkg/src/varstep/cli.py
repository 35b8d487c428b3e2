"""Command-line entry point: ``varstep {solve,diagnose,compare,replay}``.

Every command writes CSV files plus a JSON run manifest next to them; the
manifest can be fed back to ``varstep replay`` to reproduce the outputs.
Exit status is 0 on success, 1 on data errors and 2 on bad flags.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import data_io, diagnostics, sparse_cd
from .dense_gd import default_constants, make_policy, solve_gd
from .model import TRACE_FIELDS, InstanceError, LambdaPolicy, SolveResult, SolverConfig

logger = logging.getLogger("varstep")

ALGOS = ("greedy-cd", "fc-cd", "gd-variable", "gd-fixed", "gd-heuristic")
DATA_ERRORS = (OSError, InstanceError, data_io.LibsvmFormatError, data_io.InfeasibleSpec,
               data_io.NoSeparableSubset)


@dataclass
class RunManifest:
    command: str
    argv: List[str]
    dataset: dict
    config: Optional[dict]
    constants: Optional[dict]
    seed: int
    output_path: str

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, default=str) + "\n")


def _synthetic(text: str):
    parts = text.split(",")
    if len(parts) not in (3, 4):
        raise argparse.ArgumentTypeError("expected m,n,margin[,seed]")
    try:
        m, n, margin = int(parts[0]), int(parts[1]), float(parts[2])
        seed = int(parts[3]) if len(parts) == 4 else None
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return m, n, margin, seed


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return value
    return parse


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="LIBSVM file")
    src.add_argument("--synthetic", type=_synthetic, metavar="M,N,MARGIN[,SEED]",
                     help="generate a separable instance")
    p.add_argument("--planted-sparsity", type=int, default=None)
    p.add_argument("--box", type=_positive(float), default=1.0,
                   help="feature range of synthetic rows (default 1)")
    p.add_argument("--scale", action="store_true", help="scale each feature into [-1, 1]")
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic data (default 0)")
    p.add_argument("--no-timing", action="store_true", help="write wall_ns as 0 (bit-reproducible CSVs)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varstep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one solver and write its trace")
    _add_data_flags(solve)
    solve.add_argument("--algo", choices=ALGOS, required=True)
    solve.add_argument("--iters", type=_positive(int), required=True)
    solve.add_argument("--B", type=_positive(float), dest="B", help="box bound (greedy-cd)")
    solve.add_argument("--B1", type=_positive(float), dest="B1", help="l1 estimate (default B)")
    solve.add_argument("--lambda", type=_positive(float), dest="lam",
                       help="constant lambda in (0,1] instead of the adaptive schedule")
    solve.add_argument("--delta", type=float, default=0.1)
    solve.add_argument("--eps", type=_positive(float), default=None, help="stop once f <= eps")
    solve.add_argument("--mode", choices=("empirical", "conservative"), default="empirical")
    solve.add_argument("--tol-grad", type=_positive(float), default=None)
    solve.add_argument("--out", type=Path, default=None)

    diag = sub.add_parser("diagnose", help="max l2 smoothness ratio along gradient descent")
    _add_data_flags(diag)
    diag.add_argument("--iters", type=_positive(int), default=1000)
    diag.add_argument("--out", type=Path, default=None)

    comp = sub.add_parser("compare", help="fixed vs increasing vs variable step sizes")
    _add_data_flags(comp)
    comp.add_argument("--iters", type=_positive(int), required=True)
    comp.add_argument("--separabilize", type=_positive(int), default=None, metavar="WARMUP_ITERS")
    comp.add_argument("--out", type=Path, required=True, help="prefix for the output CSVs")

    replay = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    replay.add_argument("manifest", type=Path)
    replay.add_argument("--out", type=Path, default=None, help="write to this path instead")
    return parser


def _load(args):
    """Returns (instance, reference direction or None, dataset description)."""
    if args.data is not None:
        instance = data_io.load_libsvm(args.data)
        planted = None
        desc = {"path": str(args.data)}
    else:
        m, n, margin, seed = args.synthetic
        spec = data_io.SyntheticSpec(m=m, n=n, margin=margin, seed=args.seed if seed is None else seed,
                                     planted_sparsity=args.planted_sparsity, box=args.box)
        instance, planted = data_io.generate_separable(spec)
        desc = {"synthetic": dataclasses.asdict(spec)}
    if args.scale:
        instance = data_io.scale_features(instance)
    desc.update(m=instance.m, n=instance.n, scaled=bool(args.scale))
    return instance, planted, desc


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace(result: SolveResult, path: Path, timing: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for rec in result.trace:
            row = dataclasses.asdict(rec)
            if not timing:
                row["wall_ns"] = 0
            writer.writerow([_fmt(row[k]) for k in TRACE_FIELDS])


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _check_solve_flags(args) -> Optional[str]:
    if args.algo == "greedy-cd" and args.B is None:
        return "--algo greedy-cd requires --B"
    if args.lam is not None and args.lam > 1:
        return "--lambda must lie in (0, 1]"
    if not 0 < args.delta < 1:
        return "--delta must lie in (0, 1)"
    return None


def cmd_solve(args, argv) -> int:
    instance, _, desc = _load(args)
    constants = None
    if args.algo == "greedy-cd":
        config = SolverConfig(
            max_iters=args.iters, box_bound_B=args.B, l1_estimate_B1=args.B1, delta=args.delta,
            epsilon=args.eps, step_policy="coordinate",
            lambda_policy=LambdaPolicy.ADAPTIVE if args.lam is None else LambdaPolicy.CONSTANT,
            lambda_constant=1.0 if args.lam is None else args.lam,
        )
        result = sparse_cd.greedy_cd(instance, np.zeros(instance.n), config)
    elif args.algo == "fc-cd":
        config = SolverConfig(max_iters=args.iters, epsilon=args.eps, tol_grad=args.tol_grad,
                              delta=args.delta, step_policy="coordinate")
        result = sparse_cd.fully_corrective_cd(instance, np.zeros(instance.n), args.iters,
                                               args.tol_grad, loss_target=args.eps)
    else:
        kind = args.algo.split("-", 1)[1]
        constants = default_constants(instance, args.mode)
        config = SolverConfig(max_iters=args.iters, epsilon=args.eps, tol_grad=args.tol_grad,
                              delta=args.delta, step_policy=f"{kind}_gd")
        result = solve_gd(instance, np.zeros(instance.n), make_policy(kind, constants), config)

    if args.out is not None:
        write_trace(result, args.out, timing=not args.no_timing)
        RunManifest("solve", list(argv), desc, dataclasses.asdict(config),
                    None if constants is None else dataclasses.asdict(constants),
                    args.seed, str(args.out)).write(_manifest_path(args.out))
    print(f"final loss: {result.final_loss!r}")
    print(f"nnz: {int(np.count_nonzero(result.solution))}")
    print(f"iterations: {len(result.trace)}")
    print(f"termination: {result.termination.value}")
    return 0


def write_ratio_report(report: diagnostics.RatioReport, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "iter", "ratio"])
        for t, r in zip(report.sample_iters, report.ratio_trace):
            writer.writerow(["sample", t, repr(r)])
        writer.writerow(["max", "", repr(report.max_ratio)])


def cmd_diagnose(args, argv) -> int:
    instance, _, desc = _load(args)
    name = data_io.dataset_name(args.data) if args.data is not None else "synthetic"
    constants = default_constants(instance, "empirical")
    report = diagnostics.max_ratio_experiment(instance, args.iters, make_policy("variable", constants),
                                              dataset_name=name)
    if args.out is not None:
        write_ratio_report(report, args.out)
        RunManifest("diagnose", list(argv), desc, {"iters": args.iters}, dataclasses.asdict(constants),
                    args.seed, str(args.out)).write(_manifest_path(args.out))
    print(f"dataset: {name} (m={instance.m}, n={instance.n})")
    print(f"samples: {len(report.ratio_trace)} (skipped {report.skipped})")
    print(f"max ratio: {report.max_ratio!r}")
    return 0


POLICIES = ("fixed", "heuristic", "variable")


def cmd_compare(args, argv) -> int:
    instance, reference, desc = _load(args)
    if args.separabilize is not None:
        before = instance.m
        instance, reference = data_io.separabilize(instance, args.separabilize)
        desc.update(separabilized_m=instance.m, dropped=before - instance.m)
        print(f"separabilize: kept {instance.m} of {before} rows")
    constants = default_constants(instance, "empirical")
    config = SolverConfig(max_iters=args.iters)
    results, errors = {}, {}
    for kind in POLICIES:
        errs = []

        def track(t, x, state, grad, errs=errs):
            if t >= 1 and reference is not None:
                errs.append(diagnostics.estimator_error(x, reference) if np.any(x) else float("nan"))

        results[kind] = solve_gd(instance, np.zeros(instance.n), make_policy(kind, constants), config,
                                 callback=track)
        errors[kind] = errs

    prefix = args.out
    outputs = []
    for kind in POLICIES:
        path = prefix.with_name(f"{prefix.name}_{kind}.csv")
        write_trace(results[kind], path, timing=not args.no_timing)
        outputs.append(str(path))
    joined = prefix.with_name(f"{prefix.name}_compare.csv")
    header = ["iter"] + [f"loss_{k}" for k in POLICIES]
    if reference is not None:
        header += [f"estimator_error_{k}" for k in POLICIES]
    rows = max(len(results[k].trace) for k in POLICIES)
    with open(joined, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(rows):
            row = [i + 1]
            for k in POLICIES:
                tr = results[k].trace
                row.append(repr(tr[i].loss) if i < len(tr) else "")
            if reference is not None:
                for k in POLICIES:
                    row.append(repr(errors[k][i]) if i < len(errors[k]) else "")
            writer.writerow(row)
    outputs.append(str(joined))
    RunManifest("compare", list(argv), desc, dataclasses.asdict(config), dataclasses.asdict(constants),
                args.seed, str(prefix)).write(prefix.with_name(f"{prefix.name}_manifest.json"))
    for k in POLICIES:
        print(f"{k}: final loss {results[k].final_loss!r}")
    print("wrote " + ", ".join(outputs))
    return 0


def cmd_replay(args, argv) -> int:
    try:
        manifest = json.loads(args.manifest.read_text())
        recorded = manifest["argv"]
    except (OSError, ValueError, KeyError) as exc:
        print(f"varstep replay: cannot read manifest: {exc}", file=sys.stderr)
        return 1
    recorded = list(recorded)
    if args.out is not None:
        if "--out" not in recorded:
            print("varstep replay: recorded command has no --out", file=sys.stderr)
            return 1
        recorded[recorded.index("--out") + 1] = str(args.out)
    return main(recorded)


COMMANDS = {"solve": cmd_solve, "diagnose": cmd_diagnose, "compare": cmd_compare, "replay": cmd_replay}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        problem = _check_solve_flags(args) if args.command == "solve" else None
        if problem:
            parser.error(problem)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except DATA_ERRORS as exc:
        print(f"varstep {args.command}: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
