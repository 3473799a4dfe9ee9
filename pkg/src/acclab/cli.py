"""Command-line entry point.

Subcommands mirror the experiment kinds.  Configuration layers as
defaults <- --config JSON file <- flags (later wins); any leaf is reachable
through repeated ``--set dotted.key=value`` flags.  Success exits 0 and
prints a one-line JSON summary; failures exit nonzero with a JSON error
object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import KINDS, ExperimentError, build_spec, run_experiment

__all__ = ["main"]


def _parse_set(items: list[str]) -> dict:
    layer: dict = {}
    for item in items:
        if "=" not in item:
            raise ExperimentError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = layer
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return layer


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acclab",
        description="Car-following control experiments: DDPG training and DP benchmarks.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--case", type=int, choices=(1, 2, 3, 4))
        p.add_argument("--seed", type=int)
        p.add_argument("--config", help="JSON config file layered under the flags")
        p.add_argument("--out", help="output directory")
        p.add_argument("--steps", type=int, help="training step budget (agent.total_steps)")
        p.add_argument("--grid-scale", type=float, help="DP grid density multiplier")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config leaf by dotted path (repeatable)",
        )
        if kind in ("evaluate", "transfer"):
            p.add_argument("--actor", help="actor checkpoint path (inputs.actor)")
        if kind == "transfer":
            p.add_argument("--source-case", type=int, dest="source_case")
        if kind == "compare":
            p.add_argument("--drl", help="controller trajectory CSV")
            p.add_argument("--dp", dest="dp_traj", help="benchmark trajectory CSV")
        if kind == "report":
            p.add_argument("--dir", dest="report_dir", help="directory of run outputs")
    return parser


def _flag_layer(args: argparse.Namespace) -> dict:
    layer: dict = {}
    if args.case is not None:
        layer["case"] = args.case
    if args.seed is not None:
        layer["seed"] = args.seed
    if args.out is not None:
        layer["out"] = args.out
    if args.steps is not None:
        layer.setdefault("agent", {})["total_steps"] = args.steps
    if args.grid_scale is not None:
        layer.setdefault("dp", {})["grid_scale"] = args.grid_scale
    inputs = {}
    if getattr(args, "actor", None):
        inputs["actor"] = args.actor
    if getattr(args, "source_case", None) is not None:
        inputs["source_case"] = args.source_case
    if getattr(args, "drl", None):
        inputs["drl_trajectory"] = args.drl
    if getattr(args, "dp_traj", None):
        inputs["dp_trajectory"] = args.dp_traj
    if getattr(args, "report_dir", None):
        inputs["dir"] = args.report_dir
    if inputs:
        layer["inputs"] = inputs
    return layer


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        layers = [{"kind": args.kind}]
        if args.config:
            with open(args.config) as fh:
                layers.append(json.load(fh))
        layers.append(_flag_layer(args))
        layers.append(_parse_set(args.set))
        spec = build_spec(layers)
        manifest = run_experiment(spec)
    except Exception as err:
        sys.stderr.write(
            json.dumps({"error": type(err).__name__, "message": str(err)}) + "\n"
        )
        return 1
    print(json.dumps({"out": spec.out, "config_hash": manifest["config_hash"]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
