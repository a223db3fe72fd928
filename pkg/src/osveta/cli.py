"""Command-line interface.

Subcommands: descriptors, rank, train, decimate, perturb, eval. Every
randomized command takes a mandatory --seed, and any invocation with a fixed
seed writes byte-identical outputs on repeated runs.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import sys

from . import harness, neuro
from .curvature import compute_descriptors, dumps_descriptors
from .decimate import decimate, dumps_compaction, dumps_trace, gaussian_perturb
from .errors import OsvetaError
from .mesh import build_topology, dump_mesh, format_of, read_mesh, write_mesh
from .ranking import (criterion_by_id, dumps_ranking, dumps_selection_obj,
                      evaluate_criteria, rank_osveta, rank_vertices,
                      select_top, stability_scores)

import numpy as np


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _build_parser() -> _Parser:
    parser = _Parser(prog="osveta", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("descriptors", help="export the per-vertex descriptor table")
    p.add_argument("--in", dest="mesh", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("rank", help="rank vertices by stability")
    p.add_argument("--in", dest="mesh", required=True)
    p.add_argument("--method", choices=("osveta", "neuro"), default="osveta")
    p.add_argument("--model", help="model file (required for --method neuro)")
    p.add_argument("--criterion", help="rank by a single criterion id instead")
    p.add_argument("--top", type=int, help="truncate output to the best N vertices")
    p.add_argument("--out", required=True, help="ranking CSV")
    p.add_argument("--obj-out", help="also write selected positions as an OBJ point cloud")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("train", help="build a training set and train a model")
    p.add_argument("--in", dest="meshes", action="append", required=True,
                   help="training mesh (repeatable)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--samples-out", help="also export the training set CSV")

    p = sub.add_parser("decimate", help="simplify a mesh, recording the removal trace")
    p.add_argument("--in", dest="mesh", required=True)
    p.add_argument("--target", type=float, required=True,
                   help="fraction of vertices to remove, in [0, 1)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="simplified mesh (.obj/.off)")
    p.add_argument("--trace-out", help="removal trace CSV")
    p.add_argument("--map-out", help="index compaction map CSV")

    p = sub.add_parser("perturb", help="add seeded Gaussian coordinate noise")
    p.add_argument("--in", dest="mesh", required=True)
    p.add_argument("--sigma", type=float, required=True,
                   help="noise std as a fraction of the bbox diagonal")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="run the decimation survival experiment")
    p.add_argument("--in", dest="mesh", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--L", type=int, help="carriers per method (default: 10%% of rankable)")
    p.add_argument("--levels", default="0,20,40,60,80,90",
                   help="comma-separated removal percentages")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="markdown report")
    p.add_argument("--csv-out", help="long-form CSV report")
    p.add_argument("--threads", type=int, default=1)
    return parser


def _cmd_descriptors(args) -> int:
    mesh = read_mesh(args.mesh)
    desc = compute_descriptors(mesh, build_topology(mesh), threads=args.threads)
    _write(args.out, dumps_descriptors(desc))
    return 0


def _cmd_rank(args) -> int:
    mesh = read_mesh(args.mesh)
    desc = compute_descriptors(mesh, build_topology(mesh), threads=args.threads)
    if args.criterion:
        criteria = (criterion_by_id(args.criterion),)
        mask = evaluate_criteria(desc, criteria)
        scores = stability_scores(mask, criteria)
        ranking = rank_vertices(scores, excluded=np.flatnonzero(desc.flags != 0))
        full_mask = mask
    elif args.method == "neuro":
        if not args.model:
            raise _UsageError("--method neuro requires --model")
        with open(args.model) as fh:
            model = neuro.loads_model(fh.read())
        ranking = neuro.rank_neuro(model, desc)
        full_mask = evaluate_criteria(desc)
    else:
        ranking = rank_osveta(desc)
        full_mask = evaluate_criteria(desc)
    top = args.top if args.top is not None else len(ranking)
    selection = select_top(ranking, min(top, len(ranking)))
    text = dumps_ranking(ranking, full_mask)
    if args.top is not None:
        lines = text.splitlines()
        text = "\n".join(lines[:1 + len(selection)]) + "\n"
    _write(args.out, text)
    if args.obj_out:
        _write(args.obj_out, dumps_selection_obj(mesh, selection))
    return 0


def _cmd_train(args) -> int:
    meshes = [read_mesh(path) for path in args.meshes]
    samples = harness.make_training_set(meshes, decim_seed=args.seed)
    model = neuro.initial_model(args.seed, eta=args.eta)
    report = neuro.train(model, samples, epochs=args.epochs, seed=args.seed)
    _write(args.out, neuro.dumps_model(report.model))
    if args.samples_out:
        _write(args.samples_out, neuro.dumps_samples(samples))
    return 0


def _cmd_decimate(args) -> int:
    mesh = read_mesh(args.mesh)
    simplified, trace = decimate(mesh, args.target, seed=args.seed)
    _write(args.out, dump_mesh(simplified, format_of(args.out)))
    if args.trace_out:
        _write(args.trace_out, dumps_trace(trace))
    if args.map_out:
        _write(args.map_out, dumps_compaction(trace))
    return 0


def _cmd_perturb(args) -> int:
    mesh = read_mesh(args.mesh)
    noisy = gaussian_perturb(mesh, args.sigma, seed=args.seed)
    write_mesh(noisy, args.out)
    return 0


def _cmd_eval(args) -> int:
    mesh = read_mesh(args.mesh)
    with open(args.model) as fh:
        model = neuro.loads_model(fh.read())
    try:
        levels = [int(tok) for tok in args.levels.split(",") if tok.strip()]
    except ValueError:
        raise _UsageError(f"bad --levels value {args.levels!r}") from None
    report = harness.run_survival_experiment(
        mesh, model, L=args.L, levels=levels, seed=args.seed,
        mesh_id=args.mesh, threads=args.threads)
    _write(args.out, harness.emit_report(report, "markdown"))
    if args.csv_out:
        _write(args.csv_out, harness.emit_report(report, "csv"))
    return 0


_COMMANDS = {
    "descriptors": _cmd_descriptors,
    "rank": _cmd_rank,
    "train": _cmd_train,
    "decimate": _cmd_decimate,
    "perturb": _cmd_perturb,
    "eval": _cmd_eval,
}


def cli_dispatch(argv) -> int:
    """Parse argv and run the requested subcommand; never raises."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (OsvetaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
