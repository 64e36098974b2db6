"""Command-line front end with bit-exact, reproducible artifacts.

Every command is fully determined by its flags: stochastic commands require an
explicit seed, measures are printed as exact dyadic strings, and serialized
trees follow the tree-leaves v1 format (header line, then leaves in
length-then-lex order). Exit codes: 2 usage, 3 resource cap, 4 precondition.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from .core import (
    AffineGapWitness,
    FiniteTree,
    GapUpperBound,
    LevelSchedule,
    PreconditionError,
    ResourceCapError,
    compat_check,
    series_partial,
    sort_strings,
)
from .densify import build_family, decode_tree, derived_tree, family_image, mc_experiment, window_image
from .dyadic import Dyadic
from .hitting import EnvelopeFamily, check_envelope, hitting_cost, pull_back
from .kc import (
    KCAllocator,
    KCRequest,
    allocate_all,
    incompressible_truncation,
    length_stub,
    table_oracle,
)
from .treespace import (
    Extends,
    PathsInside,
    RngSeed,
    ScheduleBranching,
    Skeletal,
    TreeClass,
    density_profile,
    prune_to_branching,
    sample_tree,
    schedule_over_branching,
    schedule_single_extensions,
)

OUTPUT_DIR_ENV = "TREEDENSE_OUTPUT_DIR"


def parse_schedule(spec: str) -> LevelSchedule:
    if spec in ("n", "linear"):
        return LevelSchedule.linear()
    if spec in ("n2", "square"):
        return LevelSchedule.square()
    if spec in ("2n2", "doublesquare"):
        return LevelSchedule.double_square()
    kind, _, arg = spec.partition(":")
    if kind == "gap" and arg:
        return LevelSchedule.constant_gap(int(arg))
    if kind == "ramp" and arg:
        return LevelSchedule.ramp(int(arg))
    if kind == "gaps" and arg:
        return LevelSchedule.from_gaps(int(g) for g in arg.split(","))
    raise PreconditionError(f"unknown schedule spec {spec!r}")


def parse_leaves(text: str) -> frozenset[str]:
    return frozenset(s for s in text.split(",") if s)


def resolve_path(path: str) -> str:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(resolve_path(out), "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def tree_leaves_format(tree: FiniteTree) -> str:
    lines = [f"height={tree.height}"]
    lines.extend(sort_strings(tree.leaves))
    return "\n".join(lines) + "\n"


def json_format(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def csv_format(rows: list[str]) -> str:
    return "\n".join(rows) + "\n"


def _dy(value: Dyadic | None) -> str | None:
    return None if value is None else str(value)


# ---------------------------------------------------------------------------
# subcommand handlers

def cmd_sample(args) -> None:
    schedule = parse_schedule(args.schedule)
    tree = sample_tree(schedule, args.n, RngSeed(args.seed, args.stream)).tree
    if args.format == "tree-leaves":
        emit(tree_leaves_format(tree), args.out)
    else:
        payload = {
            "schedule": args.schedule,
            "n": args.n,
            "seed": args.seed,
            "stream": args.stream,
            "height": tree.height,
            "leaves": sort_strings(tree.leaves),
        }
        emit(json_format(payload), args.out)


def cmd_densify(args) -> None:
    l_schedule = parse_schedule(args.l)
    m_schedule = parse_schedule(args.m)
    tree = sample_tree(l_schedule, args.n, RngSeed(args.seed, args.stream))
    image = window_image(tree, l_schedule, m_schedule)
    if args.check_definition:
        family = build_family(l_schedule, m_schedule, args.n)
        if family_image(tree, family) != image:
            raise AssertionError("definition and window images disagree")
    if args.format == "tree-leaves":
        emit(tree_leaves_format(image), args.out)
        return
    payload = {
        "l": args.l,
        "m": args.m,
        "n": args.n,
        "seed": args.seed,
        "stream": args.stream,
        "tree_leaves": sort_strings(tree.tree.leaves),
        "image_leaves": sort_strings(image.leaves),
        "image_single_extension": [
            [k, node] for k, node in schedule_single_extensions(image, m_schedule, args.n)
        ],
        "image_over_branching": [
            [k, node, count]
            for k, node, count in schedule_over_branching(image, m_schedule, args.n)
        ],
    }
    emit(json_format(payload), args.out)


def cmd_mc(args) -> None:
    result = mc_experiment(
        parse_schedule(args.l),
        parse_schedule(args.m),
        args.n,
        args.samples,
        RngSeed(args.seed, args.stream),
    )
    if args.format == "json":
        payload = {
            "l": args.l,
            "m": args.m,
            "n": args.n,
            "samples": args.samples,
            "seed": args.seed,
            "stream": args.stream,
            "rows": [
                {
                    "level": r.level,
                    "source_bound": str(r.source_bound),
                    "source_observed": r.source_defect_freq,
                    "source_se": r.source_defect_se,
                    "per_leaf_p": str(r.per_leaf_p),
                    "per_leaf_observed": r.per_leaf_freq,
                    "per_leaf_se": r.per_leaf_se,
                    "per_leaf_events": r.per_leaf_events,
                    "image_bound": str(r.image_bound),
                    "image_observed": r.image_defect_freq,
                    "image_se": r.image_defect_se,
                    "image_over_branch": r.image_over_branch_freq,
                    "image_nodes": r.image_nodes,
                }
                for r in result.rows
            ],
        }
        emit(json_format(payload), args.out)
    else:
        emit(csv_format(result.csv_rows()), args.out)
    if args.plot:
        from .plots import save_mc_figure

        save_mc_figure(result, resolve_path(args.plot))


def cmd_series(args) -> None:
    schedule = parse_schedule(args.schedule)
    witness = None
    if args.witness is not None:
        witness = AffineGapWitness(args.witness_offset, args.witness)
    elif args.gap_bound is not None:
        witness = GapUpperBound(args.gap_bound)
    report = series_partial(schedule, args.N, witness)
    payload = {
        "schedule": args.schedule,
        "terms": report.terms,
        "partial": str(report.partial),
        "tail_bound": _dy(report.tail_bound),
        "verdict": report.verdict,
    }
    emit(json_format(payload), args.out)
    if args.plot:
        from .plots import save_series_figure

        partials = [
            (n, float(series_partial(schedule, n, witness).partial))
            for n in range(1, args.N + 1)
        ]
        save_series_figure(args.schedule, partials, resolve_path(args.plot))


def _tree_class(args) -> TreeClass:
    constraints = []
    if args.extends:
        constraints.append(Extends(FiniteTree.from_leaves(parse_leaves(args.extends))))
    if args.inside:
        constraints.append(PathsInside(FiniteTree.from_leaves(parse_leaves(args.inside))))
    if args.branching_schedule:
        constraints.append(ScheduleBranching(parse_schedule(args.branching_schedule)))
    if args.skeletal:
        constraints.append(Skeletal())
    return TreeClass(args.height, tuple(constraints))


def cmd_hitcost(args) -> None:
    tree_class = _tree_class(args)
    region = (
        FiniteTree.from_leaves(parse_leaves(args.q))
        if args.q
        else FiniteTree.full(args.height)
    )
    cost, chosen = hitting_cost(
        tree_class, region, args.level_len, mode=args.mode, cap=args.cap
    )
    payload = {
        "height": args.height,
        "level_len": args.level_len,
        "mode": args.mode,
        "cost": str(cost),
        "hitting_set": sort_strings(chosen),
    }
    emit(json_format(payload), args.out)


def cmd_pullback(args) -> None:
    schedule = parse_schedule(args.schedule)
    old = parse_leaves(args.hprime)
    region = (
        FiniteTree.from_leaves(parse_leaves(args.q))
        if args.q
        else FiniteTree.full(schedule.value(args.n + 1))
    )
    pulled = pull_back(old, region, schedule, args.n)
    from .core import overlap_minus_measure

    overshoot = overlap_minus_measure(pulled, region.leaves, old)
    payload = {
        "schedule": args.schedule,
        "n": args.n,
        "pulled_back": sort_strings(pulled),
        "overshoot": str(overshoot),
        "bound": str(Dyadic.pow2(schedule.value(args.n) - schedule.value(args.n + 1))),
    }
    emit(json_format(payload), args.out)


def _class_from_json(height: int, spec: dict) -> TreeClass:
    constraints = []
    if spec.get("extends"):
        constraints.append(Extends(FiniteTree.from_leaves(spec["extends"])))
    if spec.get("inside"):
        constraints.append(PathsInside(FiniteTree.from_leaves(spec["inside"])))
    if spec.get("branching_schedule"):
        constraints.append(ScheduleBranching(parse_schedule(spec["branching_schedule"])))
    if spec.get("skeletal"):
        constraints.append(Skeletal())
    return TreeClass(height, tuple(constraints))


def cmd_envelope_check(args) -> None:
    with open(resolve_path(args.input), "r", encoding="ascii") as fh:
        data = json.load(fh)
    schedule = parse_schedule(data["schedule"])
    base = FiniteTree.from_leaves(data["base"]) if data.get("base") else FiniteTree(0, frozenset({""}))
    depths = data.get("depth_requirement", [])

    def depth_requirement(k: int) -> int:
        return depths[k] if k < len(depths) else (depths[-1] if depths else 0)

    family = EnvelopeFamily.build(
        r=data["r"],
        base=base,
        schedule=schedule,
        depth_requirement=depth_requirement,
        sets={sigma: frozenset(v) for sigma, v in data["sets"].items()},
        length=data["length"],
    )
    region = FiniteTree.from_leaves(data["region"])
    classes = {
        sigma: _class_from_json(spec["height"], spec)
        for sigma, spec in data["classes"].items()
    }
    reports = check_envelope(family, region, classes, horizon=args.horizon)
    payload = {
        "r": family.r,
        "length": family.length,
        "levels": list(family.levels),
        "rows": [
            {
                "sigma": r.sigma,
                "measure_bounded": r.measure_bounded,
                "hits_class": r.hits_class,
                "at_level": r.at_level,
                "telescopes": r.telescopes,
                "bound_kind": r.bound_kind,
                "set_measure": str(r.set_measure),
                "leak_measure": _dy(r.leak_measure),
            }
            for r in reports
        ],
    }
    emit(json_format(payload), args.out)


def cmd_kc(args) -> None:
    if args.lengths:
        lengths = [int(x) for x in args.lengths.split(",")]
        requests = [KCRequest(format(i, "b"), ln) for i, ln in enumerate(lengths)]
    else:
        requests = []
        with open(resolve_path(args.requests), "r", encoding="ascii") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                target, length = line.split()
                requests.append(KCRequest(target, int(length)))
    allocator, codewords = allocate_all(KCAllocator.fresh(), requests)
    payload = {
        "codewords": codewords,
        "assigned_weight": str(allocator.assigned_weight()),
        "free_weight": str(allocator.free_weight()),
        "free": sort_strings(allocator.free),
    }
    emit(json_format(payload), args.out)


def cmd_pc_trunc(args) -> None:
    if args.oracle == "stub":
        oracle = length_stub()
    else:
        with open(resolve_path(args.table), "r", encoding="ascii") as fh:
            oracle = table_oracle({k: int(v) for k, v in json.load(fh).items()})
    tree = incompressible_truncation(oracle, args.c, args.depth)
    if args.format == "tree-leaves":
        if tree is None:
            raise PreconditionError("truncation is empty; no tree-leaves artifact")
        emit(tree_leaves_format(tree), args.out)
    else:
        payload = {
            "c": args.c,
            "depth": args.depth,
            "leaves": None if tree is None else sort_strings(tree.leaves),
        }
        emit(json_format(payload), args.out)


def cmd_density(args) -> None:
    region = FiniteTree.from_leaves(parse_leaves(args.leaves))
    entries = density_profile(region, args.z)
    payload = {"z": args.z, "entries": [str(e) for e in entries]}
    emit(json_format(payload), args.out)


def cmd_prune(args) -> None:
    schedule = parse_schedule(args.schedule)
    tree = FiniteTree.from_leaves(parse_leaves(args.leaves))
    pruned = prune_to_branching(tree, schedule, args.n)
    payload = {
        "schedule": args.schedule,
        "n": args.n,
        "leaves": None if pruned is None else sort_strings(pruned.leaves),
    }
    emit(json_format(payload), args.out)


def cmd_derive_tree(args) -> None:
    tree = derived_tree(args.z, args.depth)
    if args.format == "json":
        payload = {
            "z": args.z,
            "depth": args.depth,
            "leaves": sort_strings(tree.leaves),
            "decoded": decode_tree(tree),
        }
        emit(json_format(payload), args.out)
    else:
        emit(tree_leaves_format(tree), args.out)


def cmd_compat(args) -> None:
    report = compat_check(parse_schedule(args.l), parse_schedule(args.m), args.N)
    payload = {
        "l": args.l,
        "m": args.m,
        "terms": report.terms,
        "dominance_ok": report.dominance_ok,
        "dominance_violations": list(report.dominance_violations),
        "m_partial": str(report.m_partial),
        "m_tail_bound": _dy(report.m_tail_bound),
        "m_verdict": report.m_verdict,
        "hypothesis_ok": report.hypothesis_ok,
    }
    emit(json_format(payload), args.out)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treedense",
        description="exact tree-measure experiments with reproducible artifacts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", help="write the artifact to this file instead of stdout")

    p = sub.add_parser("sample", help="draw one schedule-aligned tree")
    p.add_argument("--schedule", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--format", choices=["tree-leaves", "json"], default="tree-leaves")
    add_out(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("densify", help="sample a tree and map it to the target schedule")
    p.add_argument("--l", required=True)
    p.add_argument("--m", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--check-definition", action="store_true")
    p.add_argument("--format", choices=["json", "tree-leaves"], default="json")
    add_out(p)
    p.set_defaults(func=cmd_densify)

    p = sub.add_parser("mc", help="Monte Carlo branching-failure rates vs exact bounds")
    p.add_argument("--l", required=True)
    p.add_argument("--m", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--plot", help="also render a PNG figure to this path")
    add_out(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("series", help="partial sums of the gap series with a verdict")
    p.add_argument("--schedule", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--witness", type=int, help="affine witness slope")
    p.add_argument("--witness-offset", type=int, default=0)
    p.add_argument("--gap-bound", type=int, help="uniform gap bound (divergence witness)")
    p.add_argument("--plot", help="also render a PNG figure to this path")
    add_out(p)
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("compat", help="gap dominance and the shifted target series")
    p.add_argument("--l", required=True)
    p.add_argument("--m", required=True)
    p.add_argument("--N", type=int, required=True)
    add_out(p)
    p.set_defaults(func=cmd_compat)

    p = sub.add_parser("hitcost", help="exact or greedy hitting cost at one level")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--level-len", type=int, required=True)
    p.add_argument("--mode", choices=["exact", "greedy"], default="exact")
    p.add_argument("--extends", help="comma-separated leaves of a base tree")
    p.add_argument("--inside", help="comma-separated leaves of a region tree")
    p.add_argument("--branching-schedule")
    p.add_argument("--skeletal", action="store_true")
    p.add_argument("--q", help="comma-separated region leaves (default: full tree)")
    p.add_argument("--cap", type=int, default=10**6)
    add_out(p)
    p.set_defaults(func=cmd_hitcost)

    p = sub.add_parser("pullback", help="move a hitting set one schedule level up")
    p.add_argument("--hprime", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", help="comma-separated region leaves (default: full tree)")
    add_out(p)
    p.set_defaults(func=cmd_pullback)

    p = sub.add_parser("envelope-check", help="evaluate envelope conditions from a JSON file")
    p.add_argument("--input", required=True)
    p.add_argument("--horizon", type=int, default=16)
    add_out(p)
    p.set_defaults(func=cmd_envelope_check)

    p = sub.add_parser("kc", help="allocate prefix-free codewords")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--lengths", help="comma-separated code lengths")
    group.add_argument("--requests", help="file of 'target length' lines")
    add_out(p)
    p.set_defaults(func=cmd_kc)

    p = sub.add_parser("pc-trunc", help="truncate the incompressibility tree of an oracle")
    p.add_argument("--oracle", choices=["stub", "table"], default="stub")
    p.add_argument("--table", help="JSON file of string -> bound (for --oracle table)")
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--format", choices=["tree-leaves", "json"], default="json")
    add_out(p)
    p.set_defaults(func=cmd_pc_trunc)

    p = sub.add_parser("density", help="conditional density of a region along a path")
    p.add_argument("--leaves", required=True)
    p.add_argument("--z", required=True)
    add_out(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("prune", help="largest everywhere-branching subtree")
    p.add_argument("--leaves", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--n", type=int, required=True)
    add_out(p)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("derive-tree", help="tree bending off a path at its zero bits")
    p.add_argument("--z", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--format", choices=["tree-leaves", "json"], default="tree-leaves")
    add_out(p)
    p.set_defaults(func=cmd_derive_tree)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ResourceCapError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return 3
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
