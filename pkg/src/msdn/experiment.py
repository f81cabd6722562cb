"""Benchmark orchestration: config, grid search and the split/scale/fit/score loop."""

import itertools
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .baselines import (
    BinaryRelevance,
    ClassifierChain,
    LogisticBase,
    ProbabilisticClassifierChain,
    StackedBinaryRelevance,
)
from .data import MinMaxScaler, load_dataset, split, synth_xor
from .metrics import ema, micro_f1
from .model import MSDNClassifier
from .numeric import Rng
from .report import MetricRecord, aggregate
from .serialization import save_model

log = logging.getLogger(__name__)

MODELS = ("msdn", "br", "cc", "pcc", "sta")

DEFAULT_GRID = {
    "learning_rate": [0.0005, 0.00075, 0.001, 0.0025, 0.005, 0.0075, 0.01, 0.025, 0.05, 0.075],
    "dropout": [0.0, 0.25, 0.5],
    "weight_decay": [0.0, 0.00001, 0.000025, 0.00005, 0.000075, 0.0001],
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Everything a benchmark run needs; loadable from a JSON file.

    ``datasets`` entries are either ``{"path": ..., "format": "auto",
    "name": ..., "n_labels": ...}`` or ``{"synth": {"N": ..., "m": ...,
    "d": ..., "noise": ..., "seed": ...}}``. ``msdn_grid`` and
    ``base_grid`` map parameter names to candidate lists; ``msdn`` and
    ``base`` hold fixed constructor arguments.
    """

    datasets: list = field(default_factory=list)
    models: list = field(default_factory=lambda: list(MODELS))
    seed: int = 0
    repeats: int = 5
    train_frac: float = 0.75
    msdn: dict = field(default_factory=dict)
    base: dict = field(default_factory=dict)
    msdn_grid: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_GRID.items()})
    base_grid: dict = field(default_factory=dict)
    selection_metric: str = "ema"
    selection_fraction: float = 0.2
    reference: str = "msdn"
    alpha: float = 0.05
    pcc_max_labels: int = 20
    budget_seconds: float = None
    jobs: int = 1
    save_models: bool = True
    output: str = "results"

    @classmethod
    def from_file(cls, path, **overrides):
        raw = json.loads(Path(path).read_text())
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def validate(self):
        if not self.models:
            raise ConfigError("at least one model is required")
        bad = [m for m in self.models if m not in MODELS]
        if bad:
            raise ConfigError(f"unknown model(s) {bad}; choose from {list(MODELS)}")
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        for entry in self.datasets:
            if not isinstance(entry, dict) or not ({"path", "synth"} & set(entry)):
                raise ConfigError(f"dataset entry needs 'path' or 'synth': {entry!r}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if not 0.0 < self.train_frac < 1.0:
            raise ConfigError(f"train_frac must be in (0, 1), got {self.train_frac}")
        if self.selection_metric not in ("ema", "micro_f1"):
            raise ConfigError(f"selection_metric must be 'ema' or 'micro_f1', got {self.selection_metric!r}")
        if not 0.0 < self.selection_fraction < 1.0:
            raise ConfigError("selection_fraction must be in (0, 1)")
        for grid in (self.msdn_grid, self.base_grid):
            for key, values in grid.items():
                if not isinstance(values, list) or not values:
                    raise ConfigError(f"grid entry {key!r} must be a non-empty list")
                check_range(key, values)
        for key, value in {**self.msdn, **self.base}.items():
            check_range(key, [value])
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self


def check_range(key, values):
    rules = {
        "learning_rate": lambda v: v > 0,
        "dropout": lambda v: 0 <= v < 1,
        "weight_decay": lambda v: v >= 0,
        "hidden_dim": lambda v: v >= 1,
        "n_kernels": lambda v: v >= 1,
        "batch_size": lambda v: v >= 1,
        "max_epochs": lambda v: v >= 0,
        "patience": lambda v: v >= 1,
        "max_iter": lambda v: v >= 0,
    }
    check = rules.get(key)
    if check is not None and not all(check(v) for v in values):
        raise ConfigError(f"value out of range for {key}: {values}")


def grid_points(grid):
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def make_estimator(name, config, hyperparams=None, seed=0):
    hyperparams = dict(hyperparams or {})
    if name == "msdn":
        params = {**config.msdn, **hyperparams, "random_state": seed}
        if config.budget_seconds is not None:
            params.setdefault("budget_seconds", config.budget_seconds)
        return MSDNClassifier(**params)
    base = LogisticBase(**{**config.base, **hyperparams, "random_state": seed})
    if name == "br":
        return BinaryRelevance(base)
    if name == "cc":
        return ClassifierChain(base)
    if name == "pcc":
        return ProbabilisticClassifierChain(base, max_labels=config.pcc_max_labels)
    if name == "sta":
        return StackedBinaryRelevance(base)
    raise ConfigError(f"unknown model {name!r}")


def _score(metric, est, X, Y):
    pred = est.predict(X)
    return ema(pred, Y) if metric == "ema" else micro_f1(pred, Y)


def select_and_fit(name, X, Y, config, seed, stream=()):
    """Grid-search on a holdout of the training rows, then refit on all of them."""
    grid = grid_points(config.msdn_grid if name == "msdn" else config.base_grid)
    if name == "pcc":
        # refuse before spending time on the grid
        make_estimator(name, config, seed=seed).check_tractable(Y.shape[1])
    best = grid[0] if grid else {}
    if len(grid) > 1:
        perm = Rng(seed, *stream, 77).shuffle(len(X))
        n_hold = max(1, int(round(config.selection_fraction * len(X))))
        hold, inner = perm[:n_hold], perm[n_hold:]

        def trial(hp):
            est = make_estimator(name, config, hp, seed).fit(X[inner], Y[inner])
            return _score(config.selection_metric, est, X[hold], Y[hold])

        scores = Parallel(n_jobs=config.jobs, prefer="threads")(delayed(trial)(hp) for hp in grid)
        best = grid[int(np.argmax(scores))]
    return make_estimator(name, config, best, seed).fit(X, Y), best


def _n_params(est):
    return int(est.n_parameters())


def resolve_dataset(entry):
    if "synth" in entry:
        s = entry["synth"]
        ds = synth_xor(s["N"], s["m"], s["d"], s.get("noise", 0.0), s.get("seed", 0))
        if entry.get("name"):
            ds.name = entry["name"]
        return ds
    return load_dataset(entry["path"], entry.get("format", "auto"), name=entry.get("name"),
                        n_labels=entry.get("n_labels"), label_xml=entry.get("label_xml"))


def run_benchmark(config):
    """Run every dataset x model x repeat cell and return the aggregated report."""
    config.validate()
    out = Path(config.output)
    records, failures = [], []
    for entry in config.datasets:
        ds = resolve_dataset(entry)
        plans = split(ds, config.seed, config.repeats, config.train_frac)
        for name in config.models:
            cell_records, failed = [], False
            for plan in plans:
                scaler = MinMaxScaler().fit(ds.X[plan.train])
                Xtr, Xte = scaler.transform(ds.X[plan.train]), scaler.transform(ds.X[plan.test])
                Ytr, Yte = ds.Y[plan.train], ds.Y[plan.test]
                seed = config.seed * 1000 + plan.repeat
                start = time.perf_counter()
                try:
                    est, hp = select_and_fit(name, Xtr, Ytr, config, seed, stream=(plan.repeat,))
                    pred = est.predict(Xte)
                except Exception as exc:  # recorded per cell; the sweep continues
                    log.warning("%s / %s / repeat %d failed: %s", ds.name, name, plan.repeat, exc)
                    failures.append((ds.name, name, plan.repeat, f"{type(exc).__name__}: {exc}"))
                    failed = True
                    continue
                elapsed = time.perf_counter() - start
                log.info("%s / %s / repeat %d: ema=%.4f (%.1fs)", ds.name, name, plan.repeat, ema(pred, Yte), elapsed)
                cell_records.append(MetricRecord(ds.name, name, plan.repeat, ema(pred, Yte), micro_f1(pred, Yte),
                                                 _n_params(est), elapsed, hp))
                if config.save_models:
                    (out / "models").mkdir(parents=True, exist_ok=True)
                    save_model(est, out / "models" / f"{ds.name}__{name}__r{plan.repeat}.model")
            if failed:
                continue  # keep repeats balanced: a partially failed cell is reported, not aggregated
            records.extend(cell_records)
    report = aggregate(records, reference=config.reference, alpha=config.alpha, failures=failures)
    report.write(out)
    return report
