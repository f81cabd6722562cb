"""Command-line entry point: ``msdn {train,predict,benchmark,params,synth}``."""

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .baselines import ExponentialCostError
from .data import DatasetFormatError, MinMaxScaler, load_dataset, save_dataset, synth_xor
from .experiment import MODELS, ConfigError, ExperimentConfig, check_range, make_estimator, run_benchmark
from .metrics import ema, micro_f1
from .model import param_breakdown
from .serialization import ModelFormatError, dumps, loads

log = logging.getLogger("msdn")

EXIT_OK, EXIT_FAILURES, EXIT_USAGE = 0, 1, 2


def _add_data_args(p):
    p.add_argument("--data", required=True, help="dataset file (.mlc canonical or .arff)")
    p.add_argument("--format", default="auto", choices=["auto", "mlc", "arff"], help="dataset format (default: by suffix)")
    p.add_argument("--n-labels", type=int, default=None, help="ARFF: number of trailing label attributes")
    p.add_argument("--label-xml", default=None, help="ARFF: Mulan XML file naming the label attributes")


def _add_hyper_args(p):
    g = p.add_argument_group("hyperparameters (override --config)")
    g.add_argument("--lr", dest="learning_rate", type=float, help="learning rate (default: 0.001 msdn, 0.05 base)")
    g.add_argument("--dropout", type=float, help="dropout on the hidden vector (default: 0)")
    g.add_argument("--weight-decay", type=float, help="coupled L2 penalty on weights (default: 0)")
    g.add_argument("--hidden-dim", type=int, help="msdn hidden width (default: 128)")
    g.add_argument("--kernels", dest="n_kernels", type=int, help="msdn kernel count (default: 128)")
    g.add_argument("--batch-size", type=int, help="msdn batch size (default: 128)")
    g.add_argument("--max-epochs", type=int, help="msdn epoch cap (default: 10000)")
    g.add_argument("--patience", type=int, help="msdn early-stopping patience (default: 100)")
    g.add_argument("--max-iter", type=int, help="base learner Adam iterations (default: 500)")
    g.add_argument("--interactions", action="store_true", default=None,
                   help="base learner adds degree-2 feature products (default: off)")


def build_parser():
    parser = argparse.ArgumentParser(prog="msdn", description="Multi-label classification experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit one model on a whole dataset and save it")
    p.add_argument("--model", required=True, help=f"one of {', '.join(MODELS)}")
    _add_data_args(p)
    _add_hyper_args(p)
    p.add_argument("--config", help="JSON experiment config supplying msdn/base defaults")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    p.add_argument("--budget-seconds", type=float, default=None, help="wall-clock cap on training (default: none)")
    p.add_argument("--pcc-max-labels", type=int, default=20, help="refuse PCC above this many labels (default: 20)")
    p.add_argument("--out", default="models", help="output directory (default: models)")

    p = sub.add_parser("predict", help="apply a saved model to a dataset")
    p.add_argument("--model-file", required=True)
    _add_data_args(p)
    p.add_argument("--threshold", type=float, default=0.5, help="decision threshold in (0, 1) (default: 0.5)")
    p.add_argument("--out", default="predictions.csv", help="output CSV (default: predictions.csv)")

    p = sub.add_parser("benchmark", help="run the split/scale/grid-search/test protocol")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--data", action="append", default=[], help="dataset file; repeatable (default: none)")
    p.add_argument("--n-labels", type=int, default=None, help="ARFF label count for --data files")
    p.add_argument("--synth", action="append", default=[], metavar="N,m,d,noise,seed",
                   help="add a synthetic XOR-chain dataset; repeatable (default: none)")
    p.add_argument("--models", help=f"comma-separated subset of {','.join(MODELS)} (default: all)")
    p.add_argument("--seed", type=int, help="experiment seed (default: 0)")
    p.add_argument("--repeats", type=int, help="random splits (default: 5)")
    p.add_argument("--jobs", type=int, help="parallel grid-search workers (default: 1)")
    p.add_argument("--budget-seconds", type=float, help="per-run wall-clock cap for msdn (default: none)")
    p.add_argument("--pcc-max-labels", type=int, help="refuse PCC above this many labels (default: 20)")
    p.add_argument("--selection-metric", choices=["ema", "micro_f1"], help="grid-search criterion (default: ema)")
    p.add_argument("--no-save-models", action="store_true", help="skip writing models/*.model")
    p.add_argument("--out", help="output directory (default: results)")

    p = sub.add_parser("params", help="count msdn parameters for given dimensions")
    p.add_argument("--m", type=int, required=True, help="number of features")
    p.add_argument("--d", type=int, required=True, help="number of labels")
    p.add_argument("--h", type=int, default=128, help="hidden width (default: 128)")
    p.add_argument("--K", type=int, default=128, help="kernel count (default: 128)")

    p = sub.add_parser("synth", help="write a synthetic XOR-chain dataset")
    p.add_argument("--n", type=int, default=2000, help="instances (default: 2000)")
    p.add_argument("--m", type=int, default=4, help="features (default: 4)")
    p.add_argument("--d", type=int, default=4, help="labels (default: 4)")
    p.add_argument("--noise", type=float, default=0.05, help="label flip probability (default: 0.05)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    p.add_argument("--out", required=True, help="output .mlc file")
    return parser


def _load(args):
    return load_dataset(args.data, args.format, n_labels=args.n_labels, label_xml=args.label_xml)


def _hyper(args, model):
    keys = ["learning_rate", "dropout", "weight_decay", "hidden_dim", "n_kernels", "batch_size",
            "max_epochs", "patience", "max_iter", "interactions"]
    given = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    msdn_keys = {"learning_rate", "dropout", "weight_decay", "hidden_dim", "n_kernels", "batch_size",
                 "max_epochs", "patience"}
    base_keys = {"learning_rate", "weight_decay", "max_iter", "interactions"}
    allowed = msdn_keys if model == "msdn" else base_keys
    ignored = sorted(set(given) - allowed)
    if ignored:
        raise ConfigError(f"option(s) {ignored} do not apply to model {model!r}")
    return given


def cmd_train(args):
    if args.model not in MODELS:
        raise ConfigError(f"unknown model {args.model!r}; choose from {list(MODELS)}")
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    config.budget_seconds = args.budget_seconds
    config.pcc_max_labels = args.pcc_max_labels
    overrides = _hyper(args, args.model)
    if args.model == "msdn":
        config.msdn = {**config.msdn, **overrides}
    else:
        config.base = {**config.base, **overrides}
    for key, value in overrides.items():
        check_range(key, [value])
    ds = _load(args)
    est = make_estimator(args.model, config, seed=args.seed)
    if args.model == "pcc":
        est.check_tractable(ds.Y.shape[1])
    scaler = MinMaxScaler().fit(ds.X)
    est.fit(scaler.transform(ds.X), ds.Y)
    est.scaler_ = scaler

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{ds.name}__{args.model}"
    (out / f"{stem}.model").write_text(dumps(est))
    pred = est.predict(scaler.transform(ds.X))
    lines = [f"model: {args.model}", f"dataset: {ds.name} (N={ds.shape[0]}, m={ds.shape[1]}, d={ds.shape[2]})",
             f"seed: {args.seed}", f"parameters: {est.n_parameters()}",
             f"training EMA: {ema(pred, ds.Y):.4f}", f"training micro-F1: {micro_f1(pred, ds.Y):.4f}"]
    report = "\n".join(lines) + "\n"
    if args.model == "msdn":
        report += est.train_report_.summary()
    (out / f"{stem}.report.txt").write_text(report)
    print(report, end="")
    print(f"saved {out / (stem + '.model')}")
    return EXIT_OK


def cmd_predict(args):
    est = loads(Path(args.model_file).read_text())
    ds = _load(args)
    X = est.scaler_.transform(ds.X) if getattr(est, "scaler_", None) is not None else ds.X
    proba = est.predict_proba(X)
    labels = (proba >= args.threshold).astype(int)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"p_{n}" for n in ds.label_names] + [f"y_{n}" for n in ds.label_names])
        for p, y in zip(proba, labels):
            w.writerow([repr(float(v)) for v in p] + [int(v) for v in y])
    print(f"EMA: {ema(labels, ds.Y):.4f}")
    print(f"micro-F1: {micro_f1(labels, ds.Y):.4f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_benchmark(args):
    overrides = {
        "seed": args.seed, "repeats": args.repeats, "jobs": args.jobs, "budget_seconds": args.budget_seconds,
        "pcc_max_labels": args.pcc_max_labels, "selection_metric": args.selection_metric, "output": args.out,
    }
    if args.models:
        overrides["models"] = [m.strip() for m in args.models.split(",") if m.strip()]
    config = ExperimentConfig.from_file(args.config, **overrides) if args.config else ExperimentConfig(
        **{k: v for k, v in overrides.items() if v is not None})
    if args.models is not None and not overrides.get("models"):
        config.models = []
    for path in args.data:
        config.datasets.append({"path": path, "n_labels": args.n_labels})
    for entry in args.synth:
        try:
            N, m, d, noise, seed = entry.split(",")
            config.datasets.append({"synth": {"N": int(N), "m": int(m), "d": int(d), "noise": float(noise),
                                              "seed": int(seed)}})
        except ValueError:
            raise ConfigError(f"--synth expects N,m,d,noise,seed, got {entry!r}") from None
    if args.no_save_models:
        config.save_models = False
    config.validate()
    report = run_benchmark(config)
    print(report.to_markdown(), end="")
    print(f"results written to {config.output}")
    if report.failures:
        print(f"{len(report.failures)} cell(s) failed", file=sys.stderr)
        return EXIT_FAILURES
    return EXIT_OK


def cmd_params(args):
    parts = param_breakdown(args.m, args.d, args.h, args.K)
    total = sum(parts.values())
    print(f"dense    (m+1)*h      = {parts['dense']:,}")
    print(f"conv     K(K+1)/2 + K = {parts['conv']:,}")
    print(f"decoder  (K+1)*d      = {parts['decoder']:,}")
    print(f"total                 = {total:,}")
    return EXIT_OK


def cmd_synth(args):
    ds = synth_xor(args.n, args.m, args.d, args.noise, args.seed)
    save_dataset(ds, args.out)
    print(f"wrote {args.out} (N={args.n}, m={args.m}, d={args.d}, noise={args.noise}, seed={args.seed})")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "benchmark": cmd_benchmark,
            "params": cmd_params, "synth": cmd_synth}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ExponentialCostError, DatasetFormatError, ModelFormatError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
