"""Datasets, file formats, splitting, min-max scaling and a synthetic generator.

Canonical text format (``.mlc``)::

    #mlc v1 N=<int> m=<int> d=<int>
    <feature names, comma-separated>
    <label names, comma-separated>
    <N rows: m feature values then d labels (0/1), comma-separated>

Feature values are written with Python's shortest round-trip ``repr``, so
``save_dataset(load_dataset(f))`` reproduces a canonically written file
byte for byte.

ARFF support covers the dense Mulan/MEKA subset: ``@attribute`` lines of
type ``numeric``/``real``/``integer`` or ``{0,1}``, followed by ``@data``
and comma-separated rows. The label columns are found, in priority order,
from an explicit ``n_labels`` (trailing attributes), a Mulan XML sidecar
listing ``<label name="...">`` entries, or a MEKA ``-C <d>`` option in the
relation name (positive ``d``: leading attributes; negative: trailing).
"""

import math
import re
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import ContractError, check_labels
from .numeric import Rng


class DatasetFormatError(ValueError):
    """A dataset file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path, self.line = path, line


class DimensionMismatchWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DatasetMeta:
    name: str
    n_instances: int
    n_features: int
    n_labels: int
    domain: str


REGISTRY = {
    meta.name.lower(): meta
    for meta in (
        DatasetMeta("Scene", 2408, 294, 6, "image"),
        DatasetMeta("Yeast", 2417, 103, 14, "biology"),
        DatasetMeta("Business", 11214, 21950, 30, "text"),
        DatasetMeta("Science", 6428, 37230, 40, "text"),
        DatasetMeta("TMC2007_500", 28596, 500, 22, "text"),
    )
}


@dataclass
class Dataset:
    name: str
    X: np.ndarray
    Y: np.ndarray
    feature_names: list = field(default_factory=list)
    label_names: list = field(default_factory=list)
    domain: str = ""

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ContractError(f"X must be 2-D, got shape {self.X.shape}")
        self.Y = check_labels(self.Y, n_samples=self.X.shape[0]).astype(np.int64)
        N, m = self.X.shape
        d = self.Y.shape[1]
        if min(N, m, d) < 1:
            raise ContractError(f"dataset needs N, m, d >= 1, got N={N}, m={m}, d={d}")
        if not np.isfinite(self.X).all():
            raise ContractError("X contains NaN or infinite values")
        if not self.feature_names:
            self.feature_names = [f"x{i + 1}" for i in range(m)]
        if not self.label_names:
            self.label_names = [f"y{j + 1}" for j in range(d)]
        if len(self.feature_names) != m or len(self.label_names) != d:
            raise ContractError("name lists do not match the matrix dimensions")
        meta = REGISTRY.get(self.name.lower())
        if not self.domain and meta is not None:
            self.domain = meta.domain

    @property
    def shape(self):
        return self.X.shape[0], self.X.shape[1], self.Y.shape[1]

    def subset(self, idx):
        return Dataset(self.name, self.X[idx], self.Y[idx], list(self.feature_names),
                       list(self.label_names), self.domain)

    def check_registry(self):
        """Warn if a registered dataset's dimensions differ from the reference table."""
        meta = REGISTRY.get(self.name.lower())
        if meta is None:
            return None
        expected = (meta.n_instances, meta.n_features, meta.n_labels)
        if self.shape != expected:
            warnings.warn(
                f"{self.name}: loaded (N, m, d) = {self.shape}, reference table lists {expected}",
                DimensionMismatchWarning, stacklevel=2,
            )
        return meta


# -- canonical format ---------------------------------------------------------

_HEADER = re.compile(r"^#mlc v1 N=(\d+) m=(\d+) d=(\d+)$")


def save_dataset(dataset, path):
    N, m, d = dataset.shape
    lines = [f"#mlc v1 N={N} m={m} d={d}", ",".join(dataset.feature_names), ",".join(dataset.label_names)]
    for x, y in zip(dataset.X, dataset.Y):
        lines.append(",".join([repr(float(v)) for v in x] + [str(int(v)) for v in y]))
    Path(path).write_text("\n".join(lines) + "\n")


def _read_mlc(path, name):
    text = Path(path).read_text().splitlines()
    if not text:
        raise DatasetFormatError("empty file", path, 1)
    head = _HEADER.match(text[0].strip())
    if not head:
        raise DatasetFormatError("expected header '#mlc v1 N=<int> m=<int> d=<int>'", path, 1)
    N, m, d = map(int, head.groups())
    if len(text) < 3:
        raise DatasetFormatError("missing feature/label name lines", path, len(text) + 1)
    fnames, lnames = text[1].split(","), text[2].split(",")
    if len(fnames) != m:
        raise DatasetFormatError(f"expected {m} feature names, found {len(fnames)}", path, 2)
    if len(lnames) != d:
        raise DatasetFormatError(f"expected {d} label names, found {len(lnames)}", path, 3)
    rows = [(i + 4, line) for i, line in enumerate(text[3:]) if line.strip()]
    if len(rows) != N:
        raise DatasetFormatError(f"header declares N={N} rows, found {len(rows)}", path, len(text))
    X = np.empty((N, m))
    Y = np.empty((N, d))
    for r, (lineno, line) in enumerate(rows):
        cells = line.split(",")
        if len(cells) != m + d:
            raise DatasetFormatError(f"expected {m + d} values, found {len(cells)}", path, lineno)
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise DatasetFormatError(str(exc), path, lineno) from None
        X[r], Y[r] = vals[:m], vals[m:]
        bad = [j for j, v in enumerate(Y[r]) if v not in (0.0, 1.0)]
        if bad:
            raise ContractError(
                f"{path}:{lineno}: non-binary label value {Y[r, bad[0]]:g} at row {r}, label column {bad[0]}"
            )
    return Dataset(name, X, Y, fnames, lnames)


# -- ARFF ---------------------------------------------------------------------

_ATTR = re.compile(r"^@attribute\s+('(?:[^']|\\')*'|\"[^\"]*\"|\S+)\s+(.+)$", re.IGNORECASE)


def _unquote(s):
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "'\"":
        return s[1:-1]
    return s


def _mulan_labels(xml_path):
    root = ET.parse(xml_path).getroot()
    return [el.get("name") for el in root.iter() if el.tag.split("}")[-1] == "label"]


def _read_arff(path, name, n_labels=None, label_xml=None):
    relation = ""
    attrs = []  # (name, kind) with kind "numeric" or "binary"
    rows = []
    in_data = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if in_data:
                if line.startswith("{"):
                    raise DatasetFormatError("sparse ARFF rows are not supported", path, lineno)
                cells = [c.strip() for c in line.split(",")]
                if len(cells) != len(attrs):
                    raise DatasetFormatError(f"expected {len(attrs)} values, found {len(cells)}", path, lineno)
                try:
                    rows.append([float(_unquote(c)) for c in cells])
                except ValueError as exc:
                    raise DatasetFormatError(str(exc), path, lineno) from None
                continue
            low = line.lower()
            if low.startswith("@relation"):
                relation = _unquote(line[len("@relation"):])
            elif low.startswith("@attribute"):
                match = _ATTR.match(line)
                if not match:
                    raise DatasetFormatError("malformed @attribute line", path, lineno)
                aname, atype = _unquote(match.group(1)), match.group(2).strip()
                if atype.lower() in ("numeric", "real", "integer"):
                    attrs.append((aname, "numeric"))
                elif atype.startswith("{"):
                    values = {_unquote(v) for v in atype.strip("{}").split(",")}
                    if not values <= {"0", "1"}:
                        raise DatasetFormatError(f"nominal attribute {aname!r} is not {{0,1}}", path, lineno)
                    attrs.append((aname, "binary"))
                else:
                    raise DatasetFormatError(f"unsupported attribute type {atype!r}", path, lineno)
            elif low.startswith("@data"):
                in_data = True
            else:
                raise DatasetFormatError(f"unexpected line {line[:40]!r}", path, lineno)
    if not in_data:
        raise DatasetFormatError("no @data section", path)

    names = [a for a, _ in attrs]
    if n_labels is not None:
        label_idx = list(range(len(attrs) - n_labels, len(attrs)))
    elif label_xml is not None or Path(path).with_suffix(".xml").exists():
        wanted = _mulan_labels(label_xml or Path(path).with_suffix(".xml"))
        missing = [w for w in wanted if w not in names]
        if missing:
            raise DatasetFormatError(f"labels {missing[:3]} from the XML sidecar are not attributes", path)
        label_idx = [names.index(w) for w in wanted]
    else:
        meka = re.search(r"-C\s+(-?\d+)", relation)
        if not meka:
            raise DatasetFormatError("label count unknown: pass n_labels, a Mulan XML sidecar, or a MEKA -C option", path)
        c = int(meka.group(1))
        label_idx = list(range(c)) if c > 0 else list(range(len(attrs) + c, len(attrs)))
    feat_idx = [i for i in range(len(attrs)) if i not in set(label_idx)]
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(attrs))
    Y = data[:, label_idx]
    bad = np.argwhere((Y != 0) & (Y != 1))
    if bad.size:
        r, c = bad[0]
        raise ContractError(f"{path}: non-binary label value {Y[r, c]:g} at row {r}, label column {c}")
    return Dataset(name, data[:, feat_idx], Y, [names[i] for i in feat_idx], [names[i] for i in label_idx])


def load_dataset(path, format="auto", name=None, n_labels=None, label_xml=None):
    """Load a dataset from ``path`` and check it against the reference registry.

    ``format`` is ``"mlc"``, ``"arff"`` or ``"auto"`` (by file suffix).
    ``name`` defaults to the file stem.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset file: {path}")
    if format == "auto":
        format = "arff" if path.suffix.lower() == ".arff" else "mlc"
    name = name or path.stem
    if format == "mlc":
        ds = _read_mlc(path, name)
    elif format == "arff":
        ds = _read_arff(path, name, n_labels=n_labels, label_xml=label_xml)
    else:
        raise ValueError(f"unknown dataset format {format!r}")
    ds.check_registry()
    return ds


# -- splitting and scaling ----------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    seed: int
    repeat: int
    train: np.ndarray
    test: np.ndarray


def split(n_or_dataset, seed=0, repeats=5, train_frac=0.75):
    """Independent seeded train/test shuffles, one per repeat."""
    n = n_or_dataset.shape[0] if isinstance(n_or_dataset, Dataset) else int(n_or_dataset)
    if n < 4:
        raise ContractError(f"need at least 4 instances to split, got {n}")
    n_train = int(math.floor(train_frac * n + 0.5))
    plans = []
    for r in range(repeats):
        perm = Rng(seed, 1000 + r).shuffle(n)
        plans.append(SplitPlan(seed, r, np.sort(perm[:n_train]), np.sort(perm[n_train:])))
    return plans


class MinMaxScaler:
    """Per-feature min-max scaling learned on training rows.

    Constant training columns map to 0. Values outside the training range
    are not clipped.
    """

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        span = self.max_ - self.min_
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (X - self.min_) / safe, 0.0)

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)


def fit_scaler(X_train):
    return MinMaxScaler().fit(X_train)


def apply_scaler(scaler, X):
    return scaler.transform(X)


# -- synthetic data -----------------------------------------------------------

def synth_xor(N, m, d, noise=0.0, seed=0):
    """Features uniform on [0, 1]; label ``j`` is label ``j-1`` XOR ``[x_j > 0.5]``.

    The first label is ``[x_1 > 0.5]``; every label is then flipped
    independently with probability ``noise``. Requires ``m >= d``.
    """
    if d < 2:
        raise ContractError(f"synth_xor needs d >= 2, got {d}")
    if m < d:
        raise ContractError(f"synth_xor needs m >= d, got m={m}, d={d}")
    rng = Rng(seed)
    X = rng.uniform(0.0, 1.0, (N, m))
    bits = (X[:, :d] > 0.5).astype(np.int64)
    Y = np.cumsum(bits, axis=1) % 2  # running XOR
    flips = rng.random((N, d)) < noise
    return Dataset(f"synth_xor_n{N}_m{m}_d{d}", X, Y ^ flips.astype(np.int64), domain="synthetic")
