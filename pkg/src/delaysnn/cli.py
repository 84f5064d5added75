"""Command-line interface: gen, train, prune, eval, cost.

Every run is seeded and every CSV written here carries the seed in a
comment, so outputs are reproducible byte for byte.  Exit codes: 0 ok,
2 config/contract error, 3 data error, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import os
import sys

import yaml

from . import checkpoint as ckpt
from . import hwcost, pruning, tasks, training
from .errors import ConfigError, ContractError, DelaySnnError
from .layers import DelaySpec
from .network import LAYER_KINDS, LayerSpec, NetworkSpec, init_params
from .neuron import NeuronConfig, SurrogateConfig

TASKS = ("adding", "events", "delay-xor")


# ---------------------------------------------------------------------------
# Config parsing


def load_config(path: str) -> dict:
    if not path:
        raise ConfigError("this command needs --config")
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as f:
        try:
            cfg = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: not valid YAML: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return cfg


def _parse_delays(value) -> DelaySpec | None:
    """Delay sets in configs: null, {depth, stride}, or {delays: [...], stride}."""
    if value is None:
        return None
    if not isinstance(value, dict):
        raise ConfigError(f"delays must be a mapping or null, got {value!r}")
    if "depth" in value:
        return DelaySpec.from_depth_stride(int(value["depth"]), int(value["stride"]))
    if "delays" in value:
        return DelaySpec(tuple(int(d) for d in value["delays"]), stride=value.get("stride"))
    raise ConfigError(f"delays mapping needs 'depth'+'stride' or 'delays', got {value!r}")


def build_network_spec(cfg: dict, input_size: int, readout_size: int) -> NetworkSpec:
    net = cfg.get("network")
    if not isinstance(net, dict):
        raise ConfigError("config needs a 'network' section")
    neuron_cfg = net.get("neuron", {})
    neuron = NeuronConfig(
        u_th=float(neuron_cfg.get("u_th", 1.0)),
        tau_init=float(neuron_cfg.get("tau_init", 20.0)),
    )
    hidden = []
    for i, h in enumerate(net.get("hidden", [])):
        if not isinstance(h, dict) or "size" not in h:
            raise ConfigError(f"network.hidden[{i}] needs at least a 'size'")
        kind = h.get("kind", "feedforward")
        if kind not in LAYER_KINDS:
            raise ConfigError(f"network.hidden[{i}].kind must be one of {LAYER_KINDS}")
        hidden.append(
            LayerSpec(
                size=int(h["size"]),
                kind=kind,
                delays=_parse_delays(h.get("delays")),
                neuron=neuron,
            )
        )
    if not hidden:
        raise ConfigError("network.hidden must list at least one layer")
    surr = net.get("surrogate", {})
    surrogate = SurrogateConfig(
        beta=float(surr.get("beta", 10.0)), mode=surr.get("mode", "hard")
    )
    try:
        return NetworkSpec(
            input_size=int(net.get("input_size", input_size)),
            hidden=tuple(hidden),
            readout_size=int(net.get("readout_size", readout_size)),
            readout_delays=_parse_delays(net.get("readout_delays")),
            readout_neuron=neuron,
            surrogate=surrogate,
        )
    except ContractError as e:
        raise ConfigError(f"bad network section: {e}") from e


def _default_time_bins(sets) -> int:
    durations = [es.duration for es in sets]
    if all(float(d).is_integer() for d in durations):
        return int(max(durations))
    return 250


def load_dataset(task: str, path: str, time_bins: int | None):
    """Returns ((X, y), input_size, readout_size, time_bins_used)."""
    if task == "adding":
        samples = tasks.load_adding_csv(path)
        x, y = tasks.adding_dataset(samples)
        return (x, y), 2, 1, x.shape[1]
    sets = tasks.load_event_dir(path)
    bins = time_bins if time_bins else _default_time_bins(sets)
    x, y = tasks.events_dataset(sets, bins)
    n_classes = int(y.max()) + 1
    return (x, y), x.shape[2], n_classes, bins


def _loss_for(task: str) -> str:
    return "mse" if task == "adding" else "classification"


def _seed_of(args, cfg: dict) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in cfg:
        return int(cfg["seed"])
    raise ConfigError("seed is mandatory: give --seed or a 'seed' key in the config")


def _outdir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write(path: str, text: str) -> None:
    with open(path, "w") as f:
        f.write(text)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen(args) -> int:
    if args.task == "adding":
        samples = tasks.gen_adding(args.timesteps, args.count, args.seed)
        out = args.out or "adding.csv"
        parent = os.path.dirname(out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        tasks.save_adding_csv(samples, out, seed=args.seed)
        print(f"wrote {args.count} adding samples (T={args.timesteps}) to {out}")
        return 0
    if args.task == "delay-xor":
        gaps = tuple(int(g) for g in args.gaps.split(","))
        sets = tasks.gen_delay_xor(
            args.timesteps, gaps, args.count, args.seed,
            jitter=args.jitter, num_channels=args.channels,
        )
        out = args.out or "delay_xor_data"
        tasks.save_event_dir(sets, out)
        manifest = [f"# seed={args.seed}", "file,label"]
        width = len(str(max(len(sets) - 1, 1)))
        for i, es in enumerate(sets):
            manifest.append(f"sample_{i:0{width}d}.csv,{es.label}")
        _write(os.path.join(out, "manifest.csv"), "\n".join(manifest) + "\n")
        print(f"wrote {args.count} delay-xor samples (T={args.timesteps}, gaps {gaps}) to {out}/")
        return 0
    raise ConfigError(f"gen supports tasks 'adding' and 'delay-xor', got {args.task!r}")


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    seed = _seed_of(args, cfg)
    task = cfg.get("task")
    if task not in TASKS:
        raise ConfigError(f"config task must be one of {TASKS}, got {task!r}")
    data_cfg = cfg.get("data", {})
    train_path = data_cfg.get("train")
    if not train_path:
        raise ConfigError("config needs data.train")
    dataset, in_size, out_size, bins = load_dataset(
        task, train_path, data_cfg.get("time_bins")
    )
    eval_set = None
    if data_cfg.get("eval"):
        eval_set, _, _, _ = load_dataset(task, data_cfg["eval"], bins)
    spec = build_network_spec(cfg, in_size, out_size)
    tr = cfg.get("train", {})
    hp = training.Hyperparams(
        learning_rate=float(tr.get("learning_rate", 0.01)),
        batch_size=int(tr.get("batch_size", 64)),
        epochs=int(tr.get("epochs", 20)),
        lr_decay=float(tr.get("lr_decay", 1.0)),
        seed=seed,
        loss=tr.get("loss", _loss_for(task)),
    )
    gain = float(cfg.get("network", {}).get("init_gain", 1.0))
    params = init_params(spec, seed, gain=gain)
    params, metrics = training.train(spec, dataset, hp, params=params, eval_set=eval_set)
    final = training.evaluate(spec, params, dataset, hp.loss)
    out = _outdir(args)
    meta = {
        "task": task,
        "seed": seed,
        "epochs": hp.epochs,
        "time_bins": bins,
        "final_loss": final["loss"],
        "final_accuracy": final["accuracy"],
    }
    ckpt.save_checkpoint(os.path.join(out, "checkpoint.json"), spec, params, meta)
    _write(
        os.path.join(out, "metrics.csv"),
        training.metrics_to_csv(metrics, len(spec.hidden), seed),
    )
    acc = "" if final["accuracy"] is None else f", accuracy {final['accuracy']:.4f}"
    print(f"trained {hp.epochs} epochs; final train loss {final['loss']:.6f}{acc}")
    print(f"checkpoint: {os.path.join(out, 'checkpoint.json')}")
    return 0


def cmd_prune(args) -> int:
    cfg = load_config(args.config)
    seed = _seed_of(args, cfg)
    spec, params, meta = ckpt.load_checkpoint(args.checkpoint)
    task = cfg.get("task", meta.get("task"))
    if task not in TASKS:
        raise ConfigError(f"config task must be one of {TASKS}, got {task!r}")
    data_cfg = cfg.get("data", {})
    if not data_cfg.get("train"):
        raise ConfigError("config needs data.train to fine-tune after pruning")
    dataset, _, _, _ = load_dataset(
        task, data_cfg["train"], data_cfg.get("time_bins", meta.get("time_bins"))
    )
    p = cfg.get("prune")
    if not isinstance(p, dict):
        raise ConfigError("config needs a 'prune' section")
    pconf = pruning.PruneConfig(
        cap_per_pair=p.get("cap_per_pair"),
        keep_fraction=p.get("keep_fraction"),
        refine_rounds=int(p.get("refine_rounds", 1)),
        finetune_epochs=int(p.get("finetune_epochs", 5)),
        refine_strides=tuple(p.get("refine_strides", ())),
    )
    tr = cfg.get("train", {})
    hp = training.Hyperparams(
        learning_rate=float(tr.get("learning_rate", 0.01)),
        batch_size=int(tr.get("batch_size", 64)),
        lr_decay=float(tr.get("lr_decay", 1.0)),
        seed=seed,
        loss=tr.get("loss", _loss_for(task)),
    )
    spec, params, reports = pruning.prune_finetune_loop(
        spec, params, dataset, pconf, hp
    )
    out = _outdir(args)
    meta = dict(meta)
    meta.update({"pruned": True, "seed": seed, "effective_params": reports[-1].effective_params})
    ckpt.save_checkpoint(os.path.join(out, "checkpoint.json"), spec, params, meta)
    _write(os.path.join(out, "prune_report.csv"), pruning.reports_to_csv(reports, seed))
    print(
        f"pruning done: {reports[0].effective_params} -> {reports[-1].effective_params} "
        f"effective params, final loss {reports[-1].loss:.6f}"
    )
    return 0


def cmd_eval(args) -> int:
    spec, params, meta = ckpt.load_checkpoint(args.checkpoint)
    task = args.task or meta.get("task")
    if task not in TASKS:
        raise ConfigError(f"need --task (one of {TASKS}) or a checkpoint that records it")
    dataset, _, _, _ = load_dataset(
        task, args.data, args.time_bins or meta.get("time_bins")
    )
    loss_kind = _loss_for(task)
    result = training.evaluate(spec, params, dataset, loss_kind)
    trace = hwcost.measure_activity(spec, params, dataset)
    out = _outdir(args)
    seed = meta.get("seed", 0)
    _write(
        os.path.join(out, "activity.csv"),
        f"# seed={seed}\n" + hwcost.trace_to_csv(trace),
    )
    lines = [f"# seed={seed}", "metric,value", f"loss,{result['loss']!r}"]
    if result["accuracy"] is not None:
        lines.append(f"accuracy,{result['accuracy']!r}")
    _write(os.path.join(out, "eval_metrics.csv"), "\n".join(lines) + "\n")
    acc = "" if result["accuracy"] is None else f", accuracy {result['accuracy']:.4f}"
    print(f"eval loss {result['loss']:.6f}{acc}")
    print(f"activity trace: {os.path.join(out, 'activity.csv')}")
    return 0


def _arch_from_yaml(path: str) -> hwcost.ArchSpec:
    if not os.path.exists(path):
        raise ConfigError(f"arch file not found: {path}")
    with open(path) as f:
        try:
            raw = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: not valid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping")
    try:
        layers = tuple(
            hwcost.LayerArch(
                size=int(l["size"]),
                neuron=l.get("neuron", "lif"),
                recurrent=bool(l.get("recurrent", False)),
                delays=_parse_delays(l.get("delays")),
            )
            for l in raw["layers"]
        )
        return hwcost.ArchSpec(
            input_size=int(raw["input_size"]),
            layers=layers,
            readout_size=int(raw["readout_size"]),
            readout_delays=_parse_delays(raw.get("readout_delays")),
            name=raw.get("name", os.path.basename(path)),
        )
    except (KeyError, TypeError) as e:
        raise ConfigError(f"{path}: malformed arch spec: {e}") from e
    except ContractError as e:
        raise ConfigError(f"{path}: {e}") from e


def _baseline_from_csv(path: str) -> hwcost.CostReport:
    """Minimal report (name, energy, memory words) parsed from a cost CSV."""
    if not os.path.exists(path):
        raise ConfigError(f"baseline cost file not found: {path}")
    vals = {}
    with open(path) as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("#") or line == "key,value":
                continue
            key, _, val = line.partition(",")
            vals[key] = val
    try:
        return hwcost.CostReport(
            name=vals.get("name", os.path.basename(path)),
            mechanism=vals.get("mechanism", "none"),
            params_weights=0,
            params_total=0,
            state_count=0,
            overhead_words=0,
            memory_words=int(vals["memory_words"]),
            op_counts={},
            base_energy=0.0,
            overhead_energy=0.0,
            energy=float(vals["energy"]),
        )
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{path}: not a cost report CSV: {e}") from e


def cmd_cost(args) -> int:
    if bool(args.checkpoint) == bool(args.arch):
        raise ConfigError("give exactly one of --checkpoint or --arch")
    seed = 0
    if args.checkpoint:
        spec, params, meta = ckpt.load_checkpoint(args.checkpoint)
        arch = hwcost.arch_from_network(
            spec, params, name=os.path.basename(args.checkpoint)
        )
        seed = meta.get("seed", 0)
    else:
        arch = _arch_from_yaml(args.arch)
    trace = hwcost.load_trace(args.activity)
    coeffs_path = args.coeffs or hwcost.default_coeffs_path()
    coeffs = hwcost.load_energy_coeffs(coeffs_path)
    report = hwcost.build_cost_report(arch, trace, coeffs, mechanism=args.mechanism)
    if args.baseline:
        report = hwcost.with_baseline(report, _baseline_from_csv(args.baseline))
    out = _outdir(args)
    _write(
        os.path.join(out, "cost.csv"),
        f"# seed={seed}\n" + hwcost.report_to_csv(report),
    )
    sys.stdout.write(hwcost.report_to_table(report))
    print(f"cost report: {os.path.join(out, 'cost.csv')}")
    return 0


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delaysnn",
        description="Train, prune, and cost spiking networks with axonal delays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run config")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", help="output directory (or file for gen adding)")

    g = sub.add_parser("gen", parents=[common], help="generate a benchmark dataset")
    g.add_argument("task", choices=("adding", "delay-xor"))
    g.add_argument("--timesteps", type=int, required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--gaps", default="8,16,24,32", help="comma-separated gap classes")
    g.add_argument("--jitter", type=int, default=1)
    g.add_argument("--channels", type=int, default=1)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", parents=[common], help="train a network from a config")
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("prune", parents=[common], help="prune + fine-tune a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_prune)

    e = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--task", choices=TASKS)
    e.add_argument("--time-bins", type=int, default=None)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("cost", parents=[common], help="estimate deployment cost")
    c.add_argument("--checkpoint")
    c.add_argument("--arch", help="arch YAML instead of a trained checkpoint")
    c.add_argument("--activity", required=True, help="activity trace CSV")
    c.add_argument("--coeffs", help="energy coefficient YAML (default: shipped file)")
    c.add_argument("--mechanism", choices=hwcost.MECHANISMS, default="ring")
    c.add_argument("--baseline", help="cost CSV of a baseline model for saving factors")
    c.set_defaults(func=cmd_cost)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # gen needs a seed but takes no config
    if args.command == "gen" and args.seed is None:
        parser.error("gen requires --seed")
    try:
        return args.func(args)
    except DelaySnnError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
