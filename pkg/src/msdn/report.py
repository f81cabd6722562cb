"""Benchmark records, aggregation into mean/std cells, and report files.

Significance marks in the markdown tables follow the published layout:

* ``⊖`` the reference model is significantly better than this row's model
  (a *win* for the reference),
* ``↑`` the reference model is significantly worse (a *loss*),
* no mark: no significant difference (a *tie*).

``ttests.csv`` spells the verdicts out as words.
"""

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import ContractError
from .metrics import paired_ttest

METRICS = ("ema", "micro_f1")
METRIC_TITLES = {"ema": "Exact-match accuracy", "micro_f1": "Micro-averaged F1"}
MARKS = {"win": "⊖", "loss": "↑", "tie": ""}

# Published mean test scores (5 random 75/25 splits), kept for side-by-side
# comparison. None marks runs that were not reported.
_DATASETS = ("Scene", "Yeast", "Business", "Science", "TMC2007_500")
PUBLISHED = {
    "ema": {
        "BR": (0.5256, 0.1332, 0.5459, 0.2668, 0.3110),
        "CC": (0.6236, 0.1521, 0.5513, 0.2978, 0.3259),
        "PCC": (0.6551, 0.1934, None, None, None),
        "STA": (0.6156, 0.1620, 0.5516, 0.3323, 0.3181),
        "CC-RNN": (0.6233, 0.1736, 0.5586, 0.2111, 0.3087),
        "RethinkNet": (0.6844, 0.1904, 0.5462, 0.2180, 0.3106),
        "MSDN": (0.6764, 0.1881, 0.5730, 0.3323, 0.3585),
    },
    "micro_f1": {
        "BR": (0.6948, 0.6331, 0.6835, 0.3339, 0.6987),
        "CC": (0.7218, 0.6143, 0.6861, 0.3807, 0.6980),
        "PCC": (0.7355, 0.6464, None, None, None),
        "STA": (0.7309, 0.6378, 0.6908, 0.4258, 0.7034),
        "CC-RNN": (0.6824, 0.6212, 0.6987, 0.2449, 0.6800),
        "RethinkNet": (0.7529, 0.6451, 0.6838, 0.2776, 0.6889),
        "MSDN": (0.7516, 0.6483, 0.7263, 0.4090, 0.7251),
    },
    "params": {
        "CC-RNN": (566919, 545551, 3344799, 5302313, 599447),
        "RethinkNet": (170630, 100296, 2942366, 4897320, 199062),
        "MSDN": (23502, 46918, 2816719, 4770383, 524097),
    },
}


def published(metric, dataset):
    """``{model: value}`` published for ``dataset`` (case-insensitive), or ``{}``."""
    names = [n.lower() for n in _DATASETS]
    if dataset.lower() not in names:
        return {}
    col = names.index(dataset.lower())
    return {model: row[col] for model, row in PUBLISHED[metric].items() if row[col] is not None}


@dataclass
class MetricRecord:
    dataset: str
    model: str
    repeat: int
    ema: float
    micro_f1: float
    n_params: int = 0
    wall_time: float = 0.0
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in METRICS:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractError(f"{name}={v} is outside [0, 1]")


@dataclass(frozen=True)
class CellStat:
    mean: float
    std: float
    n: int

    @property
    def single_repeat(self):
        return self.n < 2

    def format(self, digits=4):
        flag = "*" if self.single_repeat else ""
        return f"{self.mean:.{digits}f}±{self.std:.{digits}f}{flag}"


@dataclass
class BenchmarkReport:
    reference: str
    datasets: list
    models: list
    records: list
    cells: dict  # (dataset, model, metric) -> CellStat
    verdicts: dict  # (dataset, model, metric) -> TTestVerdict
    failures: list = field(default_factory=list)

    def margins(self, metric):
        """Win/tie/loss counts of the reference model per dataset and per model."""
        per_dataset = {ds: {"win": 0, "tie": 0, "loss": 0} for ds in self.datasets}
        per_model = {m: {"win": 0, "tie": 0, "loss": 0} for m in self.models if m != self.reference}
        for (ds, model, met), v in self.verdicts.items():
            if met != metric:
                continue
            per_dataset[ds][v.verdict] += 1
            per_model[model][v.verdict] += 1
        return per_dataset, per_model

    # -- emission -------------------------------------------------------------

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(self.records, out / "metrics.csv")
        write_timings_csv(self.records, out / "timings.csv")
        self.write_ttests(out / "ttests.csv")
        (out / "report.md").write_text(self.to_markdown())

    def write_ttests(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", "metric", "reference", "baseline", "mean_diff", "t", "p_value", "verdict", "degenerate"])
            for (ds, model, metric), v in sorted(self.verdicts.items(), key=self._key):
                w.writerow([ds, metric, self.reference, model, repr(v.mean_diff), repr(v.t), repr(v.p_value),
                            v.verdict, int(v.degenerate)])

    def _key(self, item):
        (ds, model, metric), _ = item
        return self.datasets.index(ds), METRICS.index(metric), self.models.index(model)

    def to_markdown(self):
        lines = ["# Benchmark report", ""]
        lines.append(
            f"Reference model: `{self.reference}`. Cells are mean±sample std over repeats "
            f"(`*` marks a single repeat, std reported as 0). {MARKS['win']} = `{self.reference}` "
            f"significantly better than the row's model (win); {MARKS['loss']} = significantly worse "
            "(loss); no mark = tie. Paired two-sided t-test per dataset."
        )
        for metric in METRICS:
            per_dataset, per_model = self.margins(metric)
            lines += ["", f"## {METRIC_TITLES[metric]}", ""]
            lines.append("| Model | " + " | ".join(self.datasets) + " | #win/#tie/#loss |")
            lines.append("|---" * (len(self.datasets) + 2) + "|")
            for model in self.models:
                row = [model]
                for ds in self.datasets:
                    cell = self.cells.get((ds, model, metric))
                    if cell is None:
                        row.append("-")
                        continue
                    mark = ""
                    v = self.verdicts.get((ds, model, metric))
                    if v is not None:
                        mark = MARKS[v.verdict]
                    row.append((cell.format() + " " + mark).strip())
                row.append("-" if model == self.reference else _wtl(per_model[model]))
                lines.append("| " + " | ".join(row) + " |")
            lines.append("| #win/#tie/#loss | " + " | ".join(_wtl(per_dataset[ds]) for ds in self.datasets) + " | |")

        lines += ["", "## Number of parameters", ""]
        lines.append("| Model | " + " | ".join(self.datasets) + " |")
        lines.append("|---" * (len(self.datasets) + 1) + "|")
        for model in self.models:
            row = [model]
            for ds in self.datasets:
                counts = [r.n_params for r in self.records if r.dataset == ds and r.model == model]
                row.append(f"{max(counts):,}" if counts else "-")
            lines.append("| " + " | ".join(row) + " |")

        refs = [ds for ds in self.datasets if published("ema", ds)]
        if refs:
            lines += ["", "## Published reference values", ""]
            lines.append("| Dataset | Model | EMA | micro-F1 |")
            lines.append("|---|---|---|---|")
            for ds in refs:
                e, f = published("ema", ds), published("micro_f1", ds)
                for model in e:
                    lines.append(f"| {ds} | {model} | {e[model]:.4f} | {f.get(model, float('nan')):.4f} |")

        if self.failures:
            lines += ["", "## Failures", ""]
            lines += [f"- {ds} / {model} / repeat {rep}: {msg}" for ds, model, rep, msg in self.failures]
        return "\n".join(lines) + "\n"


def _wtl(c):
    return f"{c['win']} / {c['tie']} / {c['loss']}"


def aggregate(records, reference="msdn", alpha=0.05, failures=None):
    """Summarise records into mean/std cells and t-test verdicts against ``reference``."""
    groups = defaultdict(list)
    datasets, models = [], []
    for r in records:
        groups[(r.dataset, r.model)].append(r)
        if r.dataset not in datasets:
            datasets.append(r.dataset)
        if r.model not in models:
            models.append(r.model)
    counts = {len(v) for v in groups.values()}
    if len(counts) > 1:
        raise ContractError(f"unbalanced repeats across (dataset, model) cells: counts {sorted(counts)}")
    if reference in models:
        models.remove(reference)
        models.append(reference)

    cells, verdicts = {}, {}
    for (ds, model), recs in groups.items():
        recs.sort(key=lambda r: r.repeat)
        for metric in METRICS:
            vals = np.array([getattr(r, metric) for r in recs])
            std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
            cells[(ds, model, metric)] = CellStat(float(vals.mean()), std, len(vals))

    for ds in datasets:
        ref = groups.get((ds, reference))
        if not ref or len(ref) < 2:
            continue
        for model in models:
            other = groups.get((ds, model))
            if model == reference or not other:
                continue
            if [r.repeat for r in ref] != [r.repeat for r in other]:
                raise ContractError(f"{ds}: repeats of {reference} and {model} are not paired")
            for metric in METRICS:
                verdicts[(ds, model, metric)] = paired_ttest(
                    [getattr(r, metric) for r in ref], [getattr(r, metric) for r in other],
                    alpha=alpha, baseline=model,
                )
    return BenchmarkReport(reference, datasets, models, list(records), cells, verdicts, list(failures or []))


def write_metrics_csv(records, path):
    """One row per record. Wall time is left out so reruns are byte-identical."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "model", "repeat", "ema", "micro_f1", "n_params", "hyperparams"])
        for r in records:
            w.writerow([r.dataset, r.model, r.repeat, repr(r.ema), repr(r.micro_f1), r.n_params,
                        json.dumps(r.hyperparams, sort_keys=True)])


def write_timings_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "model", "repeat", "wall_time"])
        for r in records:
            w.writerow([r.dataset, r.model, r.repeat, f"{r.wall_time:.3f}"])


def read_metrics_csv(path):
    with open(path, newline="") as fh:
        return [
            MetricRecord(row["dataset"], row["model"], int(row["repeat"]), float(row["ema"]),
                         float(row["micro_f1"]), int(row["n_params"]), hyperparams=json.loads(row["hyperparams"]))
            for row in csv.DictReader(fh)
        ]
