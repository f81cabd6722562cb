"""The multi-scale label dependence network and its estimator wrapper.

The network has three stages:

1. a dense encoder ``m -> h`` with sigmoid activation (dropout after it
   while training),
2. a bank of ``K`` stride-1 kernels of sizes ``1..K`` slid over the hidden
   vector without padding, each followed by a sigmoid and a global max-pool,
   giving one value per kernel,
3. a dense decoder ``K -> d`` with sigmoid outputs.
"""

import copy
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import layers
from ._validation import ContractError, check_features, check_threshold, check_X_Y
from .metrics import ema
from .numeric import Rng


def param_count(m, d, h=128, K=128):
    """Trainable parameter count of a network with the given dimensions."""
    return sum(param_breakdown(m, d, h, K).values())


def param_breakdown(m, d, h=128, K=128):
    if K > h:
        raise ContractError(f"kernel_count K={K} exceeds hidden_dim h={h}")
    return {
        "dense": (m + 1) * h,
        "conv": K * (K + 1) // 2 + K,
        "decoder": (K + 1) * d,
    }


class ConvBank:
    """``K`` stride-1 kernels of sizes ``1..K`` with sigmoid + global max-pool.

    Kernel weights are packed column-wise into a ``(K, K)`` matrix whose
    entries below each kernel's size are zero; ``tap_mask`` marks the live
    entries. Max-pooling is taken on pre-activations, which selects the same
    element as pooling after the (monotone) sigmoid.
    """

    def __init__(self, hidden_dim, n_kernels, rng=None):
        if n_kernels > hidden_dim:
            raise ContractError(f"kernel_count K={n_kernels} exceeds hidden_dim h={hidden_dim}")
        self.hidden_dim, self.n_kernels = int(hidden_dim), int(n_kernels)
        sizes = np.arange(1, self.n_kernels + 1)
        self.sizes = sizes
        self.tap_mask = np.arange(self.n_kernels)[:, None] < sizes[None, :]
        # position j is valid for a size-k kernel iff j + k <= h
        self.pos_mask = np.arange(self.hidden_dim)[:, None] + sizes[None, :] <= self.hidden_dim
        self._pos_penalty = np.where(self.pos_mask, 0.0, -np.inf)
        self.weight = np.zeros((self.n_kernels, self.n_kernels))
        if rng is not None:
            for col, k in enumerate(sizes):
                # a size-k kernel feeds one output from k inputs
                limit = np.sqrt(6.0 / (k + 1))
                self.weight[:k, col] = rng.uniform(-limit, limit, k)
        self.bias = np.zeros(self.n_kernels)
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)
        self._cache = None

    def kernel_weights(self):
        return [self.weight[:k, col].copy() for col, k in enumerate(self.sizes)]

    def set_kernel_weights(self, kernels):
        self.weight[:] = 0.0
        for col, w in enumerate(kernels):
            if len(w) != self.sizes[col]:
                raise ContractError(f"kernel {col + 1} needs {self.sizes[col]} weights, got {len(w)}")
            self.weight[: len(w), col] = w

    def forward(self, H):
        B, h = H.shape
        if h != self.hidden_dim:
            raise ContractError(f"ConvBank expects hidden length {self.hidden_dim}, got {h}")
        padded = np.zeros((B, h + self.n_kernels - 1))
        padded[:, :h] = H
        # contiguous copy so the product below runs as one BLAS call
        windows = np.ascontiguousarray(sliding_window_view(padded, self.n_kernels, axis=1))
        pre = (windows.reshape(B * h, -1) @ self.weight).reshape(B, h, -1)  # (B, h, K)
        pre += self.bias
        pre += self._pos_penalty
        argmax = np.argmax(pre, axis=1)  # (B, K)
        best = np.take_along_axis(pre, argmax[:, None, :], axis=1)[:, 0, :]
        z = layers.sigmoid(best)
        self._cache = (padded, windows, argmax, z)
        return z

    def backward(self, upstream):
        if self._cache is None:
            raise ContractError("ConvBank.backward called before forward")
        padded, windows, argmax, z = self._cache
        B, width = padded.shape
        g = upstream * z * (1.0 - z)  # (B, K)
        self.grad_bias = g.sum(axis=0)
        chosen = windows[np.arange(B)[:, None], argmax]  # (B, K, taps)
        self.grad_weight = np.einsum("bk,bkt->tk", g, chosen) * self.tap_mask
        contrib = g[:, :, None] * self.weight.T[None, :, :]  # (B, K, taps)
        pos = argmax[:, :, None] + np.arange(self.n_kernels)[None, None, :]
        flat = (np.arange(B)[:, None, None] * width + pos).ravel()
        d_padded = np.bincount(flat, weights=contrib.ravel(), minlength=B * width).reshape(B, width)
        return d_padded[:, : self.hidden_dim]


class MSDNNetwork:
    """Parameters and forward/backward pass of the three-stage network."""

    def __init__(self, input_dim, label_dim, hidden_dim=128, n_kernels=128, dropout=0.0, rng=None):
        self.encoder = layers.Dense(input_dim, hidden_dim, rng=rng)
        self.hidden_act = layers.Sigmoid()
        self.dropout = layers.Dropout(dropout)
        self.bank = ConvBank(hidden_dim, n_kernels, rng=rng)
        self.decoder = layers.Dense(n_kernels, label_dim, rng=rng)
        self.output_act = layers.Sigmoid()

    def forward(self, X, training=False, rng=None):
        H = self.hidden_act.forward(self.encoder.forward(X))
        H = self.dropout.forward(H, rng=rng, training=training)
        Z = self.bank.forward(H)
        return self.output_act.forward(self.decoder.forward(Z))

    def backward_logits(self, d_logits):
        """Backpropagate a gradient taken w.r.t. the decoder pre-activations."""
        dZ = self.decoder.backward(d_logits)
        dH = self.dropout.backward(self.bank.backward(dZ))
        self.encoder.backward(self.hidden_act.backward(dH))

    def backward(self, d_proba):
        self.backward_logits(self.output_act.backward(d_proba))

    # parameter access, keyed by name; biases are the arrays never decayed
    def params(self):
        return {
            "encoder.weight": self.encoder.weight,
            "encoder.bias": self.encoder.bias,
            "conv.weight": self.bank.weight,
            "conv.bias": self.bank.bias,
            "decoder.weight": self.decoder.weight,
            "decoder.bias": self.decoder.bias,
        }

    def grads(self):
        return {
            "encoder.weight": self.encoder.grad_weight,
            "encoder.bias": self.encoder.grad_bias,
            "conv.weight": self.bank.grad_weight,
            "conv.bias": self.bank.grad_bias,
            "decoder.weight": self.decoder.grad_weight,
            "decoder.bias": self.decoder.grad_bias,
        }

    def flat_params(self):
        """All trainable values as one vector (kernel weights without padding)."""
        p = self.params()
        return np.concatenate([
            p["encoder.weight"].ravel(), p["encoder.bias"],
            *self.bank.kernel_weights(), p["conv.bias"],
            p["decoder.weight"].ravel(), p["decoder.bias"],
        ])

    def snapshot(self):
        return {k: v.copy() for k, v in self.params().items()}

    def restore(self, snap):
        for k, v in self.params().items():
            v[...] = snap[k]


@dataclass
class TrainReport:
    epochs_run: int = 0
    best_val_loss: float = float("nan")
    best_epoch: int = 0
    final_train_loss: float = float("nan")
    wall_time: float = 0.0
    stopped_early: bool = False
    budget_exhausted: bool = False
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)

    def summary(self):
        return (
            f"epochs run: {self.epochs_run}\n"
            f"best epoch: {self.best_epoch}\n"
            f"best validation loss: {self.best_val_loss:.6g}\n"
            f"final train loss: {self.final_train_loss:.6g}\n"
            f"stopped early: {self.stopped_early}\n"
            f"budget exhausted: {self.budget_exhausted}\n"
            f"wall time: {self.wall_time:.2f}s\n"
        )


class MSDNClassifier(ClassifierMixin, BaseEstimator):
    """Multi-label classifier with a multi-scale 1-D convolution label stage.

    Parameters
    ----------
    hidden_dim : int, default=128
        Width of the encoder output that the kernels slide over.
    n_kernels : int, default=128
        Number of kernels; kernel ``i`` has size ``i``. Must not exceed
        ``hidden_dim``.
    learning_rate, dropout, weight_decay : float
        Adam step size, dropout rate on the hidden vector, and coupled L2
        penalty on weight matrices.
    batch_size : int, default=128
    max_epochs : int, default=10000
    patience : int, default=100
        Epochs without a relative validation improvement of ``tol`` before
        training stops. The weights of the best validation epoch are kept.
    validation_fraction : float, default=0.1
        Share of the training rows held out for early stopping. With 0 the
        model trains for ``max_epochs`` and keeps the last weights.
    threshold : float, default=0.5
        A label is predicted positive when its probability is ``>= threshold``.
    budget_seconds : float or None
        Wall-clock cap on training.
    random_state : int, default=0

    Attributes
    ----------
    network_ : MSDNNetwork
    train_report_ : TrainReport
    n_features_in_, n_labels_ : int
    """

    def __init__(self, hidden_dim=128, n_kernels=128, learning_rate=0.001, dropout=0.0,
                 weight_decay=0.0, batch_size=128, max_epochs=10000, patience=100,
                 validation_fraction=0.1, tol=1e-6, threshold=0.5, budget_seconds=None,
                 random_state=0):
        self.hidden_dim = hidden_dim
        self.n_kernels = n_kernels
        self.learning_rate = learning_rate
        self.dropout = dropout
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.tol = tol
        self.threshold = threshold
        self.budget_seconds = budget_seconds
        self.random_state = random_state

    def _init_network(self, m, d):
        if self.n_kernels > self.hidden_dim:
            raise ContractError(f"n_kernels={self.n_kernels} exceeds hidden_dim={self.hidden_dim}")
        self.n_features_in_, self.n_labels_ = int(m), int(d)
        init_rng = Rng(self.random_state, 0)
        self.network_ = MSDNNetwork(m, d, self.hidden_dim, self.n_kernels, self.dropout, rng=init_rng)
        return self.network_

    def _optimizers(self):
        net = self.network_
        return {
            name: layers.AdamState(p.shape, learning_rate=self.learning_rate,
                                   weight_decay=self.weight_decay, decay=name.endswith("weight"))
            for name, p in net.params().items()
        }

    def _loss(self, X, Y):
        if len(X) == 0:
            return float("nan")
        return layers.bce_loss(self.network_.forward(X), Y)

    def fit(self, X, Y):
        X, Y = check_X_Y(X, Y)
        start = time.perf_counter()
        net = self._init_network(X.shape[1], Y.shape[1])
        rng = Rng(self.random_state, 1)

        n = X.shape[0]
        n_val = int(round(self.validation_fraction * n)) if self.validation_fraction > 0 else 0
        if n_val >= n:
            n_val = n - 1
        order = rng.shuffle(n)
        val_idx, train_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
        Xtr, Ytr, Xva, Yva = X[train_idx], Y[train_idx], X[val_idx], Y[val_idx]

        report = TrainReport()
        report.train_loss.append(self._loss(Xtr, Ytr))
        best = self._loss(Xva, Yva) if n_val else float("inf")
        report.val_loss.append(best)
        report.best_val_loss, report.best_epoch = best, 0
        best_snap = net.snapshot()
        reference = best  # patience resets only on a relative improvement of tol
        wait = 0
        opts = self._optimizers()
        params = net.params()
        n_tr = len(train_idx)

        for epoch in range(1, self.max_epochs + 1):
            perm = rng.shuffle(n_tr)
            total = 0.0
            for lo in range(0, n_tr, self.batch_size):
                batch = perm[lo: lo + self.batch_size]
                xb, yb = Xtr[batch], Ytr[batch]
                p = net.forward(xb, training=True, rng=rng)
                total += layers.bce_loss(p, yb) * len(batch)
                net.backward_logits((p - yb) / yb.size)
                grads = net.grads()
                for name, opt in opts.items():
                    opt.step(params[name], grads[name])
            report.epochs_run = epoch
            report.final_train_loss = total / n_tr
            report.train_loss.append(report.final_train_loss)

            if n_val:
                val = self._loss(Xva, Yva)
                report.val_loss.append(val)
                if val < report.best_val_loss:
                    report.best_val_loss, report.best_epoch = val, epoch
                    best_snap = net.snapshot()
                if val < reference - self.tol * abs(reference):
                    reference, wait = val, 0
                else:
                    wait += 1
                    if wait >= self.patience:
                        report.stopped_early = True
                        break
            if self.budget_seconds is not None and time.perf_counter() - start > self.budget_seconds:
                report.budget_exhausted = True
                break

        if n_val:
            net.restore(best_snap)
        else:
            report.best_epoch = report.epochs_run
        report.wall_time = time.perf_counter() - start
        self.train_report_ = report
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        X = check_features(X, self.n_features_in_, allow_empty=True)
        if X.shape[0] == 0:
            return np.zeros((0, self.n_labels_))
        return self.network_.forward(X, training=False)

    def predict(self, X, threshold=None):
        t = check_threshold(self.threshold if threshold is None else threshold)
        return (self.predict_proba(X) >= t).astype(int)

    def score(self, X, Y):
        return ema(self.predict(X), Y)

    def n_parameters(self):
        check_is_fitted(self, "network_")
        return self.network_.flat_params().size

    def copy(self):
        return copy.deepcopy(self)
