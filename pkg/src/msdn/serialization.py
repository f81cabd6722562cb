"""Versioned plain-text model files.

Layout::

    #mlc-model v1
    kind <msdn|br|cc|pcc|sta>
    params <JSON of the estimator's constructor parameters>
    meta <JSON: input/label dimensions, chain order, training summary>
    array <name> <dim> [<dim> ...]
    <values, space-separated, shortest round-trip decimal>
    ...
    end

Every float is written with Python's ``repr``, which round-trips 64-bit
values exactly, so a reloaded model predicts bit-identically.
"""

import json
from pathlib import Path

import numpy as np

from .baselines import (
    BinaryRelevance,
    ClassifierChain,
    LogisticBase,
    ProbabilisticClassifierChain,
    StackedBinaryRelevance,
)
from .data import MinMaxScaler
from .model import MSDNClassifier, MSDNNetwork, TrainReport

MAGIC = "#mlc-model v1"

KINDS = {
    "msdn": MSDNClassifier,
    "br": BinaryRelevance,
    "cc": ClassifierChain,
    "pcc": ProbabilisticClassifierChain,
    "sta": StackedBinaryRelevance,
}


class ModelFormatError(ValueError):
    pass


def _kind(est):
    for name, cls in KINDS.items():
        if type(est) is cls:
            return name
    raise TypeError(f"cannot serialize {type(est).__name__}")


def _params(est):
    params = est.get_params(deep=False)
    base = params.get("base_estimator")
    if base is not None:
        params["base_estimator"] = {"LogisticBase": base.get_params()}
    if params.get("order") is not None:
        params["order"] = [int(i) for i in params["order"]]
    return params


def _restore_params(params):
    base = params.get("base_estimator")
    if base is not None:
        params["base_estimator"] = LogisticBase(**base["LogisticBase"])
    return params


def _base_arrays(prefix, estimators):
    out = []
    for j, e in enumerate(estimators):
        out.append((f"{prefix}.{j}.coef", e.coef_))
        out.append((f"{prefix}.{j}.intercept", np.array([e.intercept_])))
    return out


def _restore_bases(arrays, prefix, n, base_params, n_inputs):
    bases = []
    for j in range(n):
        e = LogisticBase(**base_params)
        e.coef_ = arrays[f"{prefix}.{j}.coef"]
        e.intercept_ = float(arrays[f"{prefix}.{j}.intercept"][0])
        e.n_features_in_ = n_inputs(j)
        e.classes_ = np.array([0, 1])
        bases.append(e)
    return bases


def dumps(est):
    kind = _kind(est)
    arrays = []
    meta = {"n_features": int(est.n_features_in_), "n_labels": int(est.n_labels_)}
    if kind == "msdn":
        net = est.network_
        arrays += [("encoder.weight", net.encoder.weight), ("encoder.bias", net.encoder.bias)]
        arrays += [(f"conv.kernel.{i + 1}", w) for i, w in enumerate(net.bank.kernel_weights())]
        arrays += [("conv.bias", net.bank.bias), ("decoder.weight", net.decoder.weight),
                   ("decoder.bias", net.decoder.bias)]
        rep = getattr(est, "train_report_", None)
        if rep is not None:
            meta["train"] = {"epochs_run": rep.epochs_run, "best_epoch": rep.best_epoch,
                             "best_val_loss": rep.best_val_loss}
    elif kind == "br":
        arrays += _base_arrays("estimators", est.estimators_)
    elif kind in ("cc", "pcc"):
        meta["order"] = [int(i) for i in est.order_]
        arrays += _base_arrays("estimators", est.estimators_)
    else:
        arrays += _base_arrays("level1", est.level1_.estimators_)
        arrays += _base_arrays("level2", est.level2_.estimators_)

    scaler = getattr(est, "scaler_", None)
    if scaler is not None:
        arrays += [("scaler.min", scaler.min_), ("scaler.max", scaler.max_)]

    lines = [MAGIC, f"kind {kind}", "params " + json.dumps(_params(est), sort_keys=True),
             "meta " + json.dumps(meta, sort_keys=True)]
    for name, arr in arrays:
        arr = np.asarray(arr, dtype=np.float64)
        lines.append(f"array {name} " + " ".join(str(s) for s in arr.shape))
        lines.append(" ".join(repr(float(v)) for v in arr.ravel()))
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads(text):
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise ModelFormatError(f"missing '{MAGIC}' header")
    try:
        kind = lines[1].split(" ", 1)[1]
        params = json.loads(lines[2].split(" ", 1)[1])
        meta = json.loads(lines[3].split(" ", 1)[1])
    except (IndexError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"malformed model header: {exc}") from None
    if kind not in KINDS:
        raise ModelFormatError(f"unknown model kind {kind!r}")
    arrays = {}
    i = 4
    while i < len(lines) and lines[i] != "end":
        head = lines[i].split()
        if head[0] != "array" or i + 1 >= len(lines):
            raise ModelFormatError(f"line {i + 1}: expected 'array <name> <shape>'")
        shape = tuple(int(s) for s in head[2:])
        values = np.array([float(v) for v in lines[i + 1].split()], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise ModelFormatError(f"line {i + 2}: array {head[1]} declares {shape} but has {values.size} values")
        arrays[head[1]] = values.reshape(shape)
        i += 2
    if i >= len(lines):
        raise ModelFormatError("missing 'end' line")

    base_params = params["base_estimator"]["LogisticBase"] if params.get("base_estimator") else {}
    est = KINDS[kind](**_restore_params(dict(params)))
    m, d = meta["n_features"], meta["n_labels"]
    est.n_features_in_, est.n_labels_ = m, d
    if kind == "msdn":
        net = MSDNNetwork(m, d, est.hidden_dim, est.n_kernels, est.dropout)
        net.encoder.weight[...] = arrays["encoder.weight"]
        net.encoder.bias[...] = arrays["encoder.bias"]
        net.bank.set_kernel_weights([arrays[f"conv.kernel.{k}"] for k in range(1, est.n_kernels + 1)])
        net.bank.bias[...] = arrays["conv.bias"]
        net.decoder.weight[...] = arrays["decoder.weight"]
        net.decoder.bias[...] = arrays["decoder.bias"]
        est.network_ = net
        if "train" in meta:
            est.train_report_ = TrainReport(**meta["train"])
    elif kind == "br":
        est.estimators_ = _restore_bases(arrays, "estimators", d, base_params, lambda j: m)
    elif kind in ("cc", "pcc"):
        est.order_ = np.array(meta["order"], dtype=int)
        est.estimators_ = _restore_bases(arrays, "estimators", d, base_params, lambda j: m + j)
    else:
        est.level1_ = BinaryRelevance(est.base_estimator)
        est.level2_ = BinaryRelevance(est.base_estimator)
        est.level1_.n_features_in_, est.level2_.n_features_in_ = m, m + d
        est.level1_.n_labels_ = est.level2_.n_labels_ = d
        est.level1_.estimators_ = _restore_bases(arrays, "level1", d, base_params, lambda j: m)
        est.level2_.estimators_ = _restore_bases(arrays, "level2", d, base_params, lambda j: m + d)
    if "scaler.min" in arrays:
        est.scaler_ = MinMaxScaler()
        est.scaler_.min_, est.scaler_.max_ = arrays["scaler.min"], arrays["scaler.max"]
    return est


def save_model(est, path):
    Path(path).write_text(dumps(est))


def load_model(path):
    return loads(Path(path).read_text())
