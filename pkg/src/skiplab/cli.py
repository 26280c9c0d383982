"""Command-line surface: train, refine, eval, analyze, sweep.

Every command takes --config/--seed/--out/--data, locks its output
directory, echoes the effective config there, and writes deterministic
artifacts (identical CSV bytes for identical config+seed, wall_seconds
aside).  SKIPLAB_THREADS caps worker parallelism (the implementation runs
workers sequentially, i.e. at the default cap of 1).
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .analysis import ANALYSES, run_analysis
from .checkpoint import checkpoint_load, checkpoint_save
from .costs import block_and_gate_costs, expected_cost
from .data import load_cifar10, load_idx, normalize, synthetic_make
from .errors import ConfigurationError, DataError, SkipLabError
from .network import SkipNet
from .runconfig import RunConfig
from .training import refine_hybrid, pretrain_supervised, sdv_train
from .training.loops import evaluate

METRIC_FIELDS = [
    "epoch", "train_loss", "train_acc", "test_acc",
    "mean_exec_blocks", "mean_mac_cost", "wall_seconds",
]


class OutputLock:
    """One command per output directory, enforced by an exclusive lock file."""

    def __init__(self, out_dir):
        self.path = os.path.join(out_dir, ".lock")

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigurationError(
                f"output directory is locked by another run: {self.path}"
            )
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            os.remove(self.path)
        except FileNotFoundError:
            pass
        return False


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def write_metrics(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=METRIC_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r[k]) for k in METRIC_FIELDS})


def load_datasets(cfg: RunConfig):
    """Materialize the configured train/test splits, normalized by train stats."""
    if cfg.dataset == "cifar10":
        train, test = load_cifar10(cfg.data_dir, cfg.subset_per_class or None)
    elif cfg.dataset == "idx":
        train = load_idx(os.path.join(cfg.data_dir, "train-images.idx"),
                         os.path.join(cfg.data_dir, "train-labels.idx"))
        test = load_idx(os.path.join(cfg.data_dir, "test-images.idx"),
                        os.path.join(cfg.data_dir, "test-labels.idx"))
        if cfg.subset_per_class:
            train = train.subset_per_class(cfg.subset_per_class)
    elif cfg.dataset in ("synthetic-separable", "synthetic-redundant"):
        kind = "separable" if cfg.dataset.endswith("separable") else "redundant-blocks"
        geom = tuple(cfg.input_geometry)
        train = synthetic_make(kind, cfg.synthetic_train, seed=1000 + cfg.seed,
                               num_classes=cfg.num_classes, geometry=geom,
                               sample_stream=1)
        test = synthetic_make(kind, cfg.synthetic_test, seed=1000 + cfg.seed,
                              num_classes=cfg.num_classes, geometry=geom,
                              sample_stream=2)
    else:
        raise ConfigurationError(f"unknown dataset {cfg.dataset!r}")
    if train.geometry != tuple(cfg.input_geometry):
        raise ConfigurationError(
            f"dataset geometry {train.geometry} != configured {tuple(cfg.input_geometry)}"
        )
    train, stats = normalize(train)
    test, _ = normalize(test, stats)
    return train, test


def _prepare(args, need_out=True):
    if args.config:
        cfg = RunConfig.load(args.config)
    else:
        cfg = RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.out_dir = args.out
    if args.data:
        cfg.data_dir = args.data
    cfg.threads = int(os.environ.get("SKIPLAB_THREADS", cfg.threads))
    cfg.validate()
    if need_out:
        os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg


def cmd_train(args):
    cfg = _prepare(args)
    with OutputLock(cfg.out_dir):
        cfg.dump(os.path.join(cfg.out_dir, "config.json"))
        train, test = load_datasets(cfg)
        net = SkipNet(cfg.network_config(), seed=cfg.seed)
        if args.sdv_ratio is not None:
            rows = sdv_train(net, train, test, args.sdv_ratio, cfg.schedule(), cfg.seed)
        else:
            rows = pretrain_supervised(
                net, train, test, cfg.schedule(), cfg.seed,
                gate_mode=cfg.gate_train_mode,
                log=lambda r: print(
                    f"epoch {r['epoch']}: loss {r['train_loss']:.4f} "
                    f"train {r['train_acc']:.3f} test {r['test_acc']:.3f} "
                    f"blocks {r['mean_exec_blocks']:.2f}"
                ),
            )
        write_metrics(os.path.join(cfg.out_dir, "metrics.csv"), rows)
        checkpoint_save(net, cfg, os.path.join(cfg.out_dir, "checkpoint.bin"),
                        extra={"stage": "pretrain"})
    return 0


def cmd_refine(args):
    cfg = _prepare(args)
    if args.alpha is not None:
        cfg.alpha = args.alpha
    iters = args.iterations if args.iterations is not None else cfg.stage2_iterations
    with OutputLock(cfg.out_dir):
        cfg.dump(os.path.join(cfg.out_dir, "config.json"))
        train, test = load_datasets(cfg)
        start = 0
        if args.source and args.source != "none":
            net, _, rng, extra = checkpoint_load(args.source, expect_config=cfg)
            start = int(extra.get("iterations_done", 0))
        else:
            net = SkipNet(cfg.network_config(), seed=cfg.seed)
            rng = None
        if rng is None:
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 777]))
        rows = refine_hybrid(
            net, train, test, cfg.schedule(), cfg.reward_config(), rng,
            pure_rl=args.pure_rl, iterations=iters, start_iteration=start,
            log=lambda r: print(
                f"iter {r['epoch']}: test {r['test_acc']:.3f} "
                f"blocks {r['mean_exec_blocks']:.2f}"
            ),
        )
        write_metrics(os.path.join(cfg.out_dir, "metrics.csv"), rows)
        checkpoint_save(net, cfg, os.path.join(cfg.out_dir, "checkpoint.bin"), rng=rng,
                        extra={"stage": "refine", "iterations_done": start + iters})
    return 0


def cmd_eval(args):
    cfg = _prepare(args)
    with OutputLock(cfg.out_dir):
        net, ck_cfg, _, _ = checkpoint_load(args.checkpoint)
        cfg_data = cfg if (args.config or args.data) else ck_cfg
        if args.data:
            cfg_data.data_dir = args.data
        _, test = load_datasets(cfg_data)
        table = block_and_gate_costs(net.config)
        override = "skip_all" if args.all_skip else None
        ev = evaluate(net, test, cost_table=table, mode=args.mode, gate_override=override)
        per = ev["per_sample_macs"]
        report = {
            "accuracy": ev["accuracy"],
            "mean_exec_blocks": ev["mean_exec_blocks"],
            "per_gate_exec_rate": [float(v) for v in ev["per_gate_exec_rate"]],
            "macs": {
                "mean": float(per.mean()),
                "median": float(np.median(per)),
                "q25": float(np.percentile(per, 25)),
                "q75": float(np.percentile(per, 75)),
                "reduction_vs_full": ev["cost_reduction"],
            },
            "mode": args.mode,
            "cost_table": table.to_dict(),
        }
        path = os.path.join(cfg.out_dir, "report.json")
        with open(path, "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
        print(json.dumps({k: report[k] for k in ("accuracy", "mean_exec_blocks")}))
    return 0


def cmd_analyze(args):
    cfg = _prepare(args)
    with OutputLock(cfg.out_dir):
        net, ck_cfg, _, _ = checkpoint_load(args.checkpoint)
        cfg_data = cfg if (args.config or args.data) else ck_cfg
        if args.data:
            cfg_data.data_dir = args.data
        _, test = load_datasets(cfg_data)
        names = args.analyses.split(",") if args.analyses else list(ANALYSES)
        for name in names:
            run_analysis(name.strip(), net, test, cfg.out_dir, dump_png=args.dump_png)
            print(f"analysis {name.strip()}: written to {cfg.out_dir}")
    return 0


def cmd_sweep(args):
    cfg = _prepare(args)
    alphas = [float(a) for a in args.alphas.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    if not alphas or not seeds:
        raise ConfigurationError("sweep needs non-empty --alphas and --seeds")
    with OutputLock(cfg.out_dir):
        cfg.dump(os.path.join(cfg.out_dir, "config.json"))
        rows = []
        for seed in seeds:
            scfg = RunConfig.from_dict({**cfg.to_dict(), "seed": seed})
            train, test = load_datasets(scfg)
            net = SkipNet(scfg.network_config(), seed=seed)
            pretrain_supervised(net, train, test, scfg.schedule(), seed,
                                gate_mode=scfg.gate_train_mode)
            base = os.path.join(cfg.out_dir, f"pretrain_seed{seed}.bin")
            checkpoint_save(net, scfg, base, extra={"stage": "pretrain"})
            table = block_and_gate_costs(net.config)
            for alpha in alphas:
                net_a, _, _, _ = checkpoint_load(base)
                rcfg = RunConfig.from_dict({**scfg.to_dict(), "alpha": alpha})
                rng = np.random.default_rng(np.random.SeedSequence([seed, 777]))
                refine_hybrid(net_a, train, test, rcfg.schedule(),
                              rcfg.reward_config(), rng)
                ev = evaluate(net_a, test, cost_table=table)
                rows.append({
                    "alpha": alpha,
                    "seed": seed,
                    "accuracy": ev["accuracy"],
                    "mean_exec_blocks": ev["mean_exec_blocks"],
                    "mean_mac_cost": ev["mean_mac_cost"],
                    "reduction": ev["cost_reduction"],
                })
                print(f"alpha {alpha} seed {seed}: acc {ev['accuracy']:.3f} "
                      f"blocks {ev['mean_exec_blocks']:.2f}")
        with open(os.path.join(cfg.out_dir, "tradeoff.csv"), "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0]))
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
        from .svgplot import Plot

        plot = Plot("Accuracy vs compute", "mean MACs per sample", "test accuracy")
        for alpha in alphas:
            pts = [(r["mean_mac_cost"], r["accuracy"]) for r in rows if r["alpha"] == alpha]
            plot.scatter([p[0] for p in pts], [p[1] for p in pts], label=f"alpha={alpha}")
        plot.render(os.path.join(cfg.out_dir, "tradeoff.svg"))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="skiplab",
                                description="Dynamically-routed residual network toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="run config JSON")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--data", help="dataset directory")

    sp = sub.add_parser("train", help="supervised pre-training (stage 1)")
    common(sp)
    sp.add_argument("--sdv-ratio", type=float, default=None,
                    help="train the random-skipping baseline at this skip ratio")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("refine", help="hybrid policy refinement (stage 2)")
    common(sp)
    sp.add_argument("--from", dest="source", default=None,
                    help="checkpoint to start from, or 'none' for scratch")
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--iterations", type=int, default=None)
    sp.add_argument("--pure-rl", action="store_true",
                    help="drop the supervised gradient term")
    sp.set_defaults(func=cmd_refine)

    sp = sub.add_parser("eval", help="evaluate a checkpoint")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--mode", choices=["inference", "dense"], default="inference")
    sp.add_argument("--all-skip", action="store_true")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("analyze", help="skipping-behavior analyses")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--analyses", default=None,
                    help=f"comma list from {','.join(ANALYSES)}")
    sp.add_argument("--dump-png", action="store_true",
                    help="write raw PPM images for easy/hard examples")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("sweep", help="alpha/seed trade-off sweep")
    common(sp)
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--seeds", required=True)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DataError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SkipLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
