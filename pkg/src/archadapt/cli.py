"""Command-line interface. All numerics live in the library modules.

Config files are flat ``key=value`` lines with dotted section prefixes
(plan.*, space.*, surrogate.*, gate.*, trainer.*, run.*); blank lines and
``#`` comments are ignored. ``--set key=value`` overrides file values.
Exit codes: 0 success, 1 usage or config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import orchestrator
from .datagen import (
    CLASS_GROWTH,
    VOLUME_GROWTH,
    GrowthPlan,
    gen_snapshot,
    load_snapshot,
    save_snapshot,
)
from .errors import ArchAdaptError, InvalidConfig
from .evaluator import SurrogateConfig, make_evaluator, oracle_best
from .gaussian import fit_gaussian, js_divergence_mc, load_features_csv, wasserstein2_gaussian
from .gate import GateConfig, accuracy_drop, should_adapt
from .controller import TrainerConfig
from .search_space import SpaceConfig, decode, encode, madds

__all__ = ["main", "entry", "parse_config_file", "build_run_config", "CONFIG_KEYS"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # raise instead of exiting so main() controls the exit code
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _parse_scenario(text: str) -> str:
    aliases = {
        "volume_growth": VOLUME_GROWTH,
        "volume": VOLUME_GROWTH,
        "class_growth": CLASS_GROWTH,
        "class": CLASS_GROWTH,
    }
    key = text.strip().lower()
    if key not in aliases:
        raise ValueError(f"unknown scenario {text!r}")
    return aliases[key]


# key -> (section, field, parser)
CONFIG_KEYS = {
    "plan.scenario": ("plan", "scenario", _parse_scenario),
    "plan.steps": ("plan", "steps", _parse_floats),
    "plan.feature_dim": ("plan", "feature_dim", int),
    "plan.sigma": ("plan", "sigma", float),
    "plan.seed": ("plan", "seed", int),
    "plan.base_samples": ("plan", "base_samples", int),
    "plan.n_classes": ("plan", "n_classes", int),
    "plan.max_classes": ("plan", "max_classes", int),
    "plan.proto_radius": ("plan", "proto_radius", float),
    "space.n_units": ("space", "n_units", int),
    "space.depth_choices": ("space", "depth_choices", _parse_ints),
    "space.kernel_choices": ("space", "kernel_choices", _parse_ints),
    "space.expansion_choices": ("space", "expansion_choices", _parse_ints),
    "space.input_resolution": ("space", "input_resolution", int),
    "space.stem_channels": ("space", "stem_channels", int),
    "space.unit_out_channels": ("space", "unit_out_channels", _parse_ints),
    "space.unit_strides": ("space", "unit_strides", _parse_ints),
    "surrogate.peak_height": ("surrogate", "peak_height", float),
    "surrogate.floor": ("surrogate", "floor", float),
    "surrogate.bump_width": ("surrogate", "bump_width", float),
    "surrogate.opt_intercept": ("surrogate", "opt_intercept", float),
    "surrogate.opt_slope": ("surrogate", "opt_slope", float),
    "surrogate.depth_penalty": ("surrogate", "depth_penalty", float),
    "surrogate.reference_arch": ("surrogate", "reference_arch", str),
    "gate.epsilon": ("gate", "epsilon", float),
    "trainer.learning_rate": ("trainer", "learning_rate", float),
    "trainer.weight_decay": ("trainer", "weight_decay", float),
    "trainer.iterations": ("trainer", "iterations", int),
    "trainer.entropy_weight": ("trainer", "entropy_weight", float),
    "trainer.lam": ("trainer", "lam", float),
    "trainer.baseline_decay": ("trainer", "baseline_decay", float),
    "trainer.use_baseline": ("trainer", "use_baseline", _parse_bool),
    "trainer.use_adam": ("trainer", "use_adam", _parse_bool),
    "trainer.batch_size": ("trainer", "batch_size", int),
    "trainer.bucket_count": ("trainer", "bucket_count", int),
    "trainer.bucket_edges": ("trainer", "bucket_edges", _parse_floats),
    "trainer.hidden_size": ("trainer", "hidden_size", int),
    "trainer.encoder_hidden": ("trainer", "encoder_hidden", int),
    "trainer.arch_embed_dim": ("trainer", "arch_embed_dim", int),
    "trainer.shift_embed_dim": ("trainer", "shift_embed_dim", int),
    "trainer.token_embed_dim": ("trainer", "token_embed_dim", int),
    "trainer.seed": ("trainer", "seed", int),
    "run.initial_arch": ("run", "initial_arch", str),
    "run.master_seed": ("run", "master_seed", int),
}


def parse_config_file(path) -> dict[str, str]:
    """Flat key=value config; unknown keys and bad lines name their source."""
    values: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise InvalidConfig(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _apply_sets(values: dict[str, str], sets: list[str]) -> dict[str, str]:
    for item in sets or []:
        if "=" not in item:
            raise InvalidConfig(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise InvalidConfig(f"--set: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _collect(values: dict[str, str]) -> dict[str, dict]:
    sections: dict[str, dict] = {"plan": {}, "space": {}, "surrogate": {}, "gate": {}, "trainer": {}, "run": {}}
    for key, raw in values.items():
        section, fieldname, parser = CONFIG_KEYS[key]
        try:
            sections[section][fieldname] = parser(raw)
        except (ValueError, TypeError) as exc:
            raise InvalidConfig(f"config key {key}: {exc}") from exc
    return sections


def build_run_config(values: dict[str, str], seed: int | None = None) -> orchestrator.RunConfig:
    """Assemble a RunConfig from flat config values; --seed wins for the master seed."""
    sections = _collect(values)
    plan_kwargs = sections["plan"]
    if "scenario" not in plan_kwargs or "steps" not in plan_kwargs:
        raise InvalidConfig("config must set plan.scenario and plan.steps")
    space = SpaceConfig(**sections["space"])
    surrogate_kwargs = dict(sections["surrogate"])
    if "reference_arch" in surrogate_kwargs:
        surrogate_kwargs["reference_arch"] = decode(surrogate_kwargs["reference_arch"], space)
    run_kwargs = sections["run"]
    cfg = orchestrator.RunConfig(
        plan=GrowthPlan(**plan_kwargs),
        space=space,
        surrogate=SurrogateConfig(**surrogate_kwargs),
        gate=GateConfig(**sections["gate"]),
        trainer=TrainerConfig(**sections["trainer"]),
        initial_arch=run_kwargs.get("initial_arch", "oracle"),
        master_seed=run_kwargs.get("master_seed", 0),
    )
    if seed is not None:
        cfg = replace(cfg, master_seed=seed)
    return cfg


def _load_config(args) -> orchestrator.RunConfig:
    values = parse_config_file(args.config) if args.config else {}
    values = _apply_sets(values, getattr(args, "set", None))
    return build_run_config(values, seed=getattr(args, "seed", None))


def _fmt_bool(flag: bool) -> str:
    return "true" if flag else "false"


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    plan = cfg.plan
    if args.seed is not None:
        plan = replace(plan, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(plan.n_steps):
        snap = gen_snapshot(plan, i)
        csv_path = out / f"snapshot_{i:03d}.csv"
        save_snapshot(snap, csv_path)
        print(f"{csv_path} rows={snap.meta.n_samples} classes={snap.meta.n_classes}")
    return 0


def _cmd_distance(args) -> int:
    g1 = fit_gaussian(load_features_csv(args.first))
    g2 = fit_gaussian(load_features_csv(args.second))
    d = wasserstein2_gaussian(g1, g2)
    line = f"d={d:.6f}"
    if args.js:
        js = js_divergence_mc(g1, g2, n_samples=args.samples, seed=args.seed or 0)
        line += f" js={js:.6f}"
    print(line)
    return 0


def _cmd_gate(args) -> int:
    cfg = _load_config(args)
    prev_snap = load_snapshot(args.prev)
    cur_snap = load_snapshot(args.cur)
    evaluate = make_evaluator(cfg.surrogate, cfg.space)
    if args.arch:
        arch = decode(args.arch, cfg.space)
    else:
        arch, _, _ = oracle_best(cfg.space, prev_snap.meta, cfg.surrogate)
    drop = accuracy_drop(arch, prev_snap.meta, cur_snap.meta, evaluate)
    print(f"H_t={drop:.4f} adapt={_fmt_bool(should_adapt(drop, cfg.gate))}")
    return 0


def _cmd_adapt(args) -> int:
    cfg = _load_config(args)
    records = orchestrator.run_adaptation(cfg, out_dir=args.out)
    for rec in records:
        print(
            f"t={rec.t} d={rec.shift:.4f} H={rec.drop:.4f} "
            f"adapted={_fmt_bool(rec.adapted)} arch={rec.new_arch} "
            f"v={rec.v_new:.4f} madds={rec.madds_new:.3f}"
        )
    print(f"records written to {Path(args.out) / 'records.json'}")
    return 0


def _cmd_oracle(args) -> int:
    cfg = _load_config(args)
    snap = gen_snapshot(cfg.plan, args.step)
    arch, v, cost = oracle_best(
        cfg.space, snap.meta, cfg.surrogate, lam=args.lam, shift=args.shift
    )
    print(f"arch={encode(arch)} v={v:.4f} madds={cost:.3f}")
    return 0


def _cmd_sweep_lambda(args) -> int:
    cfg = _load_config(args)
    lambdas = _parse_floats(args.lambdas)
    rows = orchestrator.lambda_sweep(cfg, lambdas)
    for row in rows:
        print(f"lam={row['lam']:g} v={row['v']:.4f} madds={row['madds']:.3f} arch={row['arch']}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
        print(f"sweep written to {out / 'sweep.json'}")
    return 0


def _cmd_ablate_wd(args) -> int:
    cfg = _load_config(args)
    results = orchestrator.wd_ablation(cfg)
    out = Path(args.out)
    orchestrator.write_records(results["with"], out / "with")
    orchestrator.write_records(results["without"], out / "without")
    for rec_with, rec_without in zip(results["with"], results["without"]):
        print(
            f"t={rec_with.t} madds_with={rec_with.madds_new:.3f} "
            f"madds_without={rec_without.madds_new:.3f} "
            f"dv={rec_without.v_new - rec_with.v_new:+.4f}"
        )
    print(f"ablation written to {out}")
    return 0


def _cmd_report(args) -> int:
    records = orchestrator.load_records(args.records)
    header = f"{'t':>3} {'shift':>12} {'drop':>8} {'adapted':>8} {'v_new':>7} {'madds_new':>10}  arch"
    print(header)
    print("-" * len(header))
    for rec in records:
        print(
            f"{rec['t']:>3} {rec['shift']:>12.6f} {rec['drop']:>8.4f} "
            f"{_fmt_bool(rec['adapted']):>8} {rec['v_new']:>7.4f} "
            f"{rec['madds_new']:>10.3f}  {rec['new_arch']}"
        )
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="archadapt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p, with_out=False, out_required=False):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
        if with_out:
            p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("simulate", help="write the plan's snapshots as CSV plus meta sidecars")
    add_config_flags(p, with_out=True, out_required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("distance", help="squared Wasserstein distance between two feature CSVs")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--js", action="store_true", help="also estimate Jensen-Shannon divergence")
    p.add_argument("--samples", type=int, default=20000, help="Monte-Carlo sample count")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("gate", help="evaluate the adaptation gate between two snapshots")
    p.add_argument("prev", help="previous snapshot CSV (with .meta sidecar)")
    p.add_argument("cur", help="current snapshot CSV (with .meta sidecar)")
    p.add_argument("--arch", help="incumbent encoding; default: oracle on the previous snapshot")
    add_config_flags(p)
    p.set_defaults(func=_cmd_gate)

    p = sub.add_parser("adapt", help="run the full adaptation loop over the plan")
    add_config_flags(p, with_out=True, out_required=True)
    p.set_defaults(func=_cmd_adapt)

    p = sub.add_parser("oracle", help="brute-force best architecture for one snapshot")
    p.add_argument("--step", type=int, default=0, help="plan step index")
    p.add_argument("--lam", type=float, default=0.0, help="cost penalty weight")
    p.add_argument("--shift", type=float, default=1.0, help="shift scaling the penalty")
    add_config_flags(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("sweep-lambda", help="one adaptation step per lambda, shared seed")
    p.add_argument("--lambdas", default="0,5e-05,0.00025", help="comma-separated lambda values")
    add_config_flags(p, with_out=True)
    p.set_defaults(func=_cmd_sweep_lambda)

    p = sub.add_parser("ablate-wd", help="paired runs with and without the cost penalty")
    add_config_flags(p, with_out=True, out_required=True)
    p.set_defaults(func=_cmd_ablate_wd)

    p = sub.add_parser("report", help="render a records.json as a table")
    p.add_argument("records", help="path to records.json")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except InvalidConfig as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ArchAdaptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
