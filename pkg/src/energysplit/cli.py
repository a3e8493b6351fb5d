"""Command-line interface: ``energysplit {grow,eval,inspect}``.

Data goes to stdout, diagnostics to stderr. Exit codes: 0 success,
1 configuration/input error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import data as data_mod
from .energy import costed
from .grow import GrowthConfig, compute_indexes, run
from .net import TrainHyper, evaluate, flops, init_network, load_checkpoint, params
from .rayleigh import RayleighConfig


class ConfigError(Exception):
    pass


@dataclass
class SeedNetwork:
    hidden: list = field(default_factory=lambda: [2])
    activation: str = "tanh"
    loss_head: str = "softmax_ce"


@dataclass
class ExperimentConfig:
    dataset: dict = field(default_factory=lambda: {"kind": "two_moons", "n": 1000, "noise": 0.1, "seed": 0})
    network: SeedNetwork = field(default_factory=SeedNetwork)
    growth: GrowthConfig = field(default_factory=GrowthConfig)
    output_dir: str = "runs/default"


_GROWTH_SCALARS = {f.name for f in dataclasses.fields(GrowthConfig)} - {"rayleigh", "train"}


def _build(cls, obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(obj) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(obj: dict) -> ExperimentConfig:
    """Validate a config mapping; unknown keys anywhere are rejected."""
    top = {"dataset", "network", "growth", "rayleigh", "train", "output_dir"}
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - top
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    growth_obj = dict(obj.get("growth", {}))
    bad = set(growth_obj) - _GROWTH_SCALARS
    if bad:
        raise ConfigError(f"growth: unknown keys {sorted(bad)}")
    growth_obj["rayleigh"] = _build(RayleighConfig, obj.get("rayleigh", {}), "rayleigh")
    growth_obj["train"] = _build(TrainHyper, obj.get("train", {}), "train")
    cfg = ExperimentConfig(
        dataset=dict(obj.get("dataset", ExperimentConfig().dataset)),
        network=_build(SeedNetwork, obj.get("network", {}), "network"),
        growth=_build(GrowthConfig, growth_obj, "growth"),
        output_dir=str(obj.get("output_dir", ExperimentConfig().output_dir)),
    )
    if "kind" not in cfg.dataset:
        raise ConfigError("dataset: missing 'kind'")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(obj)


def parse_data_spec(spec: str) -> dict:
    """``kind:key=value,...`` -> dataset mapping, e.g. ``two_moons:n=500,noise=0.2``."""
    kind, _, rest = spec.partition(":")
    out = {"kind": kind.strip()}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"bad dataset option {item!r}; expected key=value")
        try:
            out[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            out[key.strip()] = value
    return out


def _dataset(spec: dict):
    try:
        return data_mod.from_spec(spec)
    except (ValueError, FileNotFoundError) as exc:
        raise ConfigError(f"dataset: {exc}") from None


def _dataset_from_args(args):
    if args.data:
        return _dataset(parse_data_spec(args.data))
    if args.config:
        return _dataset(load_config(args.config).dataset)
    raise ConfigError("give --data SPEC or --config PATH to choose a dataset")


def _checkpoint(path, ds):
    try:
        net = load_checkpoint(path)
    except FileNotFoundError:
        raise ConfigError(f"checkpoint not found: {path}") from None
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if net.n_inputs != ds.n_features or net.n_outputs != ds.n_outputs:
        raise ConfigError(f"checkpoint expects {net.n_inputs} inputs/{net.n_outputs} outputs, "
                          f"dataset has {ds.n_features}/{ds.n_outputs}")
    return net


def cmd_grow(args) -> int:
    cfg = load_config(args.config)
    growth = cfg.growth
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.index_method:
        overrides["index_method"] = args.index_method
    if args.vanilla:
        overrides["vanilla"] = True
    growth = dataclasses.replace(growth, **overrides)
    out_dir = Path(args.out or cfg.output_dir)
    ds = _dataset(cfg.dataset)
    sizes = [ds.n_features, *cfg.network.hidden, ds.n_outputs]
    try:
        net0 = init_network(sizes, cfg.network.activation, cfg.network.loss_head, seed=growth.seed)
    except ValueError as exc:
        raise ConfigError(f"network: {exc}") from None
    print(f"growing {sizes} on {cfg.dataset.get('kind')} -> {out_dir}", file=sys.stderr)
    result = run(net0, ds, growth, out_dir)
    last = result.points[-1]
    print(json.dumps({"stages": len(result.records), "reason": result.reason,
                      "hidden": result.net.hidden_sizes, **dataclasses.asdict(last)}))
    return 0


def cmd_eval(args) -> int:
    ds = _dataset_from_args(args)
    net = _checkpoint(args.checkpoint, ds)
    train_loss, train_acc = evaluate(net, ds.x_train, ds.y_train)
    test_loss, test_acc = evaluate(net, ds.x_test, ds.y_test)
    print(json.dumps({"loss": train_loss, "accuracy": train_acc, "test_loss": test_loss,
                      "test_accuracy": test_acc, "flops": flops(net), "params": params(net)}))
    return 0


def cmd_inspect(args) -> int:
    ds = _dataset_from_args(args)
    net = _checkpoint(args.checkpoint, ds)
    rayleigh = load_config(args.config).growth.rayleigh if args.config else RayleighConfig()
    if args.ray_epochs is not None or args.ray_lr is not None:
        rayleigh = dataclasses.replace(
            rayleigh,
            epochs=args.ray_epochs if args.ray_epochs is not None else rayleigh.epochs,
            learning_rate=args.ray_lr if args.ray_lr is not None else rayleigh.learning_rate)
    method = "rayleigh" if args.rayleigh else "exact"
    cfg = GrowthConfig(index_method=method, rayleigh=rayleigh)
    indexes = compute_indexes(net, ds, cfg)
    rows = sorted(costed(net, indexes.values()), key=lambda it: (it.lambda_min / it.cost, it.neuron))
    print("layer\tindex\tlambda_min\tcost\tratio")
    for it in rows:
        print(f"{it.neuron.layer}\t{it.neuron.index}\t{it.lambda_min:.10g}\t{it.cost}\t{it.lambda_min / it.cost:.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="energysplit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grow", help="run energy-aware growth from a config file")
    g.add_argument("--config", required=True)
    g.add_argument("--out", help="output directory (overrides output_dir)")
    g.add_argument("--seed", type=int, help="overrides the config seed")
    g.add_argument("--index-method", choices=("exact", "rayleigh"))
    g.add_argument("--vanilla", action="store_true", help="energy-unaware selection")
    g.set_defaults(func=cmd_grow)

    for name, func, help_ in (("eval", cmd_eval, "loss/accuracy/flops of a checkpoint"),
                              ("inspect", cmd_inspect, "per-neuron splitting index table")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--checkpoint", required=True)
        s.add_argument("--config", help="take the dataset from this experiment config")
        s.add_argument("--data", help="dataset spec, e.g. two_moons:n=1000,noise=0.1,seed=0")
        s.set_defaults(func=func)
        if name == "inspect":
            m = s.add_mutually_exclusive_group()
            m.add_argument("--exact", action="store_true", help="Jacobi eigensolver (default)")
            m.add_argument("--rayleigh", action="store_true", help="stochastic Rayleigh descent")
            s.add_argument("--ray-epochs", type=int)
            s.add_argument("--ray-lr", type=float)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any failure after validation is a runtime error
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
