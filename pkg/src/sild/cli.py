"""Command-line interface: dataset generation, training, evaluation, sweeps,
the motivation probe, and a self-test of the numerical invariants.

Exit codes: 0 success, 1 configuration/usage error, 2 numerical divergence.
Every training-style run echoes the fully resolved configuration to
``resolved_config.json`` in its output directory, which is sufficient to
reproduce the run bit-exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import graphstore as gs
from . import model as md
from . import motivation as mv
from . import objective as obj
from . import synthetic as syn
from . import training as tr
from .training import ConfigError, DivergenceError

DEFAULT_SEEDS = (0, 1, 2)


def _load_run_config(args, task):
    doc = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        doc = json.loads(path.read_text())
    doc.setdefault("task", task)
    overrides = {}
    if args.precision:
        overrides["precision"] = int(args.precision)
    cfg = tr.config_from_dict(doc, **overrides)
    for ablation in args.ablate or []:
        if ablation == "no-invariance":
            cfg = replace(cfg, no_invariance=True)
        elif ablation == "no-mask":
            cfg = replace(cfg, no_mask=True)
        else:
            raise ConfigError(f"unknown ablation {ablation!r}")
    return cfg


def _parse_seeds(args):
    if args.seed is not None:
        return [int(args.seed)]
    if args.seeds:
        return [int(s) for s in args.seeds.split(",") if s != ""]
    return list(DEFAULT_SEEDS)


def _resolved_doc(cfg, extra):
    doc = cfg.as_dict()
    doc["effective_lambda"] = cfg.effective_lam()
    doc.update(extra)
    return doc


def _write_resolved(out_dir, doc):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "resolved_config.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _infer_split(g, cfg, meta_split=None):
    if meta_split:
        return gs.chronological_split(g, meta_split)
    if cfg.task == "node":
        # label timestamps carry the group index for generated node datasets
        hi = int(g.label_timestamps.max()) + 1 if g.label_timestamps is not None else 3
        return gs.chronological_split(g, (hi - 2, 1, 1)) if hi >= 3 \
            else gs.chronological_split(g, (1, 1, 1))
    t = g.num_timestamps
    test = max(1, t // 3)
    return gs.chronological_split(g, (t - 1 - test, 1, test))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen_node(args):
    cfg = syn.NodeSynthConfig(seed=int(args.seed or 0), shift=float(args.shift))
    if args.nodes:
        cfg = replace(cfg, num_nodes=int(args.nodes))
    if args.snapshots:
        cfg = replace(cfg, num_timestamps=int(args.snapshots))
    g = syn.gen_node_synthetic(cfg)
    syn.save_generated(g, args.out, cfg)
    print(f"wrote node-classification benchmark to {args.out} "
          f"(N={g.num_nodes}, T={g.num_timestamps}, shift={cfg.shift})")
    return 0


def cmd_gen_link(args):
    cfg = syn.LinkSynthConfig(seed=int(args.seed or 0), shift=float(args.shift))
    base = gs.load_dataset(args.base) if args.base else None
    g, fit_aucs = syn.gen_link_synthetic(cfg, base=base)
    syn.save_generated(g, args.out, cfg)
    print(f"wrote link-prediction benchmark to {args.out} "
          f"(N={g.num_nodes}, T={g.num_timestamps}, shift={cfg.shift}, "
          f"median inner-fit AUC={np.median(fit_aucs):.3f})")
    return 0


def _detect_task(path):
    return "node" if (Path(path) / "labels.csv").exists() else "link"


def cmd_train(args):
    g = gs.load_dataset(args.data)
    task = args.task or _detect_task(args.data)
    cfg = _load_run_config(args, task)
    split = _infer_split(g, cfg, _parse_counts(args.split))
    seeds = _parse_seeds(args)
    out_dir = Path(args.out or "runs/train")
    _write_resolved(out_dir, _resolved_doc(cfg, {
        "dataset": str(args.data), "out": str(out_dir), "seeds": seeds,
        "ablate": list(args.ablate or []),
        "split": [list(r) for r in (split.train_range, split.val_range,
                                    split.test_range)],
    }))

    rows, reports = [], []
    for seed in seeds:
        params, report = tr.train(g, split, replace(cfg, seed=seed))
        reports.append(report)
        md.save_checkpoint(out_dir / f"checkpoint_seed{seed}.bin", params,
                           config=_resolved_doc(cfg, {"seed": seed}))
        tr.write_train_log(out_dir / f"train_log_seed{seed}.jsonl", report)
        for split_name, metric in (("val", report.val_metric),
                                   ("test", report.test_metric)):
            rows.append({"dataset": args.data, "task": cfg.task, "shift": args.shift or "",
                         "lambda": cfg.effective_lam(), "seed": seed,
                         "split": split_name, "metric": metric,
                         "epochs": cfg.epochs,
                         "wallclock_s": round(report.wallclock_s, 3)})
        print(f"seed {seed}: val {report.metric_name}={report.val_metric:.4f} "
              f"test {report.metric_name}={report.test_metric:.4f} "
              f"(best epoch {report.best_epoch})")
    tr.write_results_csv(out_dir / "results.csv", rows)
    agg = tr.aggregate_reports(reports)
    print(f"test mean={agg['test_mean']:.4f} std={agg['test_std']:.4f} "
          f"over {agg['seeds']} seeds")
    return 0


def cmd_eval(args):
    g = gs.load_dataset(args.data)
    params, header = md.load_checkpoint(args.checkpoint)
    task = args.task or _detect_task(args.data)
    cfg = _load_run_config(args, task)
    split = _infer_split(g, cfg, _parse_counts(args.split))
    metric = tr.evaluate(params, g, split, cfg, which=args.on)
    print(f"{args.on} {'acc' if cfg.task == 'node' else 'auc'}={metric:.4f}")
    return 0


def cmd_sweep(args):
    g = gs.load_dataset(args.data)
    task = args.task or _detect_task(args.data)
    cfg = _load_run_config(args, task)
    split = _infer_split(g, cfg, _parse_counts(args.split))
    lambdas = [float(x) for x in args.lambdas.split(",")]
    seeds = _parse_seeds(args)
    out_dir = Path(args.out or "runs/sweep")
    _write_resolved(out_dir, _resolved_doc(cfg, {
        "dataset": str(args.data), "lambdas": lambdas, "seeds": seeds}))
    rows = tr.lambda_sweep(g, split, cfg, lambdas, seeds=seeds)
    csv_rows = [{"dataset": args.data, "task": cfg.task, "shift": args.shift or "",
                 "lambda": r["lambda"], "seed": r["seed"], "split": "test",
                 "metric": r["test_metric"], "epochs": cfg.epochs,
                 "wallclock_s": ""} for r in rows]
    tr.write_results_csv(out_dir / "results.csv", csv_rows)
    for lam in lambdas:
        sub = [r for r in rows if r["lambda"] == lam]
        print(f"lambda={lam:g}: test mean={sub[0]['test_mean']:.4f} "
              f"std={sub[0]['test_std']:.4f}")
    return 0


def cmd_probe(args):
    out_dir = Path(args.out or "runs/probe")
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = int(args.seed or 0)
    data = mv.build_toy_dataset(n_nodes=24, T=16, band_invariant=(5, 6, 7),
                                band_variant=(1, 2), seed=seed)
    ones = np.ones(data.T)
    w = mv.optimal_time_classifier(data, ones)
    alphas = [0.0, 1.0, 10.0, 100.0, 1000.0]
    curve = mv.ood_error_curve(w, ones, data.weights,
                               np.zeros(data.T), alphas)
    with open(out_dir / "prop1_curve.csv", "w") as fh:
        fh.write("alpha,error\n")
        for a, e in zip(curve.alphas, curve.errors):
            fh.write(f"{a},{e}\n")

    mask = mv.disjoint_band_mask(data)
    s_alphas = [1.0, 1e2, 1e4, 1e6]
    errors = mv.spectral_classifier_error(data, mask, s_alphas)
    with open(out_dir / "prop2_curve.csv", "w") as fh:
        fh.write("alpha,error\n")
        for a, e in zip(s_alphas, errors):
            fh.write(f"{a},{e}\n")
    ratio = curve.errors[-1] / curve.errors[-2]
    print(f"time-domain masked fit: error({alphas[-1]:g})/error({alphas[-2]:g})"
          f" = {ratio:.2f} (quadratic growth)")
    print(f"spectral masked fit: max probe error up to alpha=1e6 is "
          f"{errors.max():.3e} (bounded)")
    return 0


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def _selftest_checks():
    from . import autograd as ag
    from . import spectral as sp

    rng = np.random.default_rng(0)

    def check_matmul_grad():
        a = rng.standard_normal((3, 4))
        b = ag.Tensor(rng.standard_normal((4, 2)))
        err = ag.grad_check(lambda x: ag.sum_(ag.square(ag.matmul(x, b))), a)
        return err < 1e-6

    def check_sigmoid_grad():
        out = ag.sigmoid(ag.Tensor(np.zeros(1), requires_grad=True))
        ag.backward(ag.sum_(out))
        return abs(out.data[0] - 0.5) < 1e-15

    def check_roundtrip():
        h = ag.Tensor(rng.standard_normal((16, 3, 2)))
        z = sp.fft_time(h)
        back = sp.ifft_time(z)
        return np.abs(back.data - h.data).max() < 1e-9

    def check_parseval():
        h = rng.standard_normal((12, 4, 3))
        z = sp.fft_time(ag.Tensor(h))
        return abs((z.re.data ** 2 + z.im.data ** 2).sum() - (h ** 2).sum()) \
            < 1e-9 * (h ** 2).sum()

    def check_against_numpy_fft():
        h = rng.standard_normal((16, 2, 2))
        z = sp.fft_time(ag.Tensor(h))
        ref = np.fft.fft(h, axis=0) / np.sqrt(16)
        return np.abs(z.values() - ref).max() < 1e-9

    def check_mask_complementarity():
        params = md.init_params(3, 4, task="node", num_bins=8, num_classes=2, seed=1)
        z = sp.fft_time(ag.Tensor(rng.standard_normal((8, 5, 4))))
        masks = md.compute_masks(z, params)
        gap = np.abs(masks.invariant.data + masks.variant.data - 1.0).max()
        zi, zv = md.filter_spectrum(z, masks)
        recon = np.abs(zi.values() + zv.values() - z.values()).max()
        return gap < 1e-12 and recon < 1e-9

    def check_auc():
        scores = rng.standard_normal(200)
        labels = rng.integers(0, 2, 200)
        if labels.sum() in (0, 200):
            labels[0] = 1 - labels[0]
        brute = np.mean([(0.5 if s == t else float(s > t))
                         for s in scores[labels == 1] for t in scores[labels == 0]])
        return abs(tr.auc(scores, labels) - brute) < 1e-12

    def check_prop1():
        data = mv.build_toy_dataset(20, 16, (5, 6), (1, 2), seed=3)
        ones = np.ones(16)
        w = mv.optimal_time_classifier(data, ones)
        curve = mv.ood_error_curve(w, ones, data.weights, np.zeros(16),
                                   [1e2, 1e3])
        ratio = curve.errors[1] / curve.errors[0]
        return 99.0 <= ratio <= 101.0

    def check_prop2():
        data = mv.build_toy_dataset(20, 16, (5, 6), (1, 2), seed=4)
        mask = mv.disjoint_band_mask(data)
        errors = mv.spectral_classifier_error(data, mask, [1.0, 1e3, 1e6])
        return errors.max() < 1e-6

    def check_adam_first_step():
        params = md.ModelParams()
        t = params.add("w", np.zeros(1), "theta")
        t.grad = np.ones(1)
        tr.Adam(params, lr=1e-2).step()
        return abs(abs(t.data[0]) - 1e-2) < 1e-9

    return [
        ("matmul gradient vs finite differences", check_matmul_grad),
        ("sigmoid(0) = 0.5", check_sigmoid_grad),
        ("DFT round trip", check_roundtrip),
        ("Parseval energy identity", check_parseval),
        ("forward transform matches numpy fft", check_against_numpy_fft),
        ("mask complementarity and spectrum decomposition", check_mask_complementarity),
        ("rank AUC equals pairwise AUC", check_auc),
        ("time-domain probe grows quadratically", check_prop1),
        ("spectral probe stays bounded", check_prop2),
        ("adam first-step magnitude equals lr", check_adam_first_step),
    ]


def cmd_selftest(_args):
    failures = 0
    for name, check in _selftest_checks():
        try:
            ok = check()
        except Exception as err:  # a crashing check is a failing check
            ok = False
            name = f"{name} ({err})"
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _parse_counts(text):
    if not text:
        return None
    return tuple(int(x) for x in text.split(","))


def _add_common(p, with_shift=True):
    p.add_argument("--config", help="JSON run config (unknown keys rejected)")
    p.add_argument("--seed", type=int, help="single seed override")
    p.add_argument("--seeds", help="comma-separated seeds (default 0,1,2)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--precision", choices=["32", "64"])
    p.add_argument("--ablate", action="append",
                   choices=["no-invariance", "no-mask"],
                   help="ablation switches (repeatable)")
    p.add_argument("--task", choices=["node", "link"])
    p.add_argument("--split", help="chronological split counts, e.g. 10,1,5")
    if with_shift:
        p.add_argument("--shift", default="", help="shift level tag for result rows")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sild",
        description="spectral invariant learning for dynamic graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-node-synthetic", help="node-classification benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shift", default="0.8", help="0.4 | 0.6 | 0.8 | 0")
    p.add_argument("--nodes", type=int)
    p.add_argument("--snapshots", type=int)
    p.set_defaults(func=cmd_gen_node)

    p = sub.add_parser("gen-link-synthetic", help="link-prediction benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shift", default="0.8")
    p.add_argument("--base", help="dataset directory to use as the base graph")
    p.set_defaults(func=cmd_gen_link)

    p = sub.add_parser("train", help="train and evaluate on a dataset directory")
    p.add_argument("--data", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--on", choices=["train", "val", "test"], default="test")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-lambda", help="train over a grid of lambda values")
    p.add_argument("--data", required=True)
    p.add_argument("--lambdas", default="0,1e-4,1e-2,1")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("probe-motivation",
                       help="closed-form time-vs-spectral masking probe")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("selftest", help="run the numerical invariant suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FloatingPointError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ConfigError, gs.ValidationError, FileNotFoundError, ValueError,
            TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
