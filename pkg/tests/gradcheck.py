"""Central finite differences, written independently of any backward pass."""

import numpy as np

from msdn import layers
from msdn.model import MSDNNetwork
from msdn.numeric import Rng

STEP = 1e-5
FLOOR = 1e-6


def numeric_grad(f, x, step=STEP):
    """Gradient of scalar ``f()`` w.r.t. array ``x``, perturbing ``x`` in place."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + step
        up = f()
        x[i] = old - step
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * step)
    return g


def max_rel_error(analytic, numeric, mask=None):
    a, n = np.asarray(analytic, dtype=float), np.asarray(numeric, dtype=float)
    if mask is not None:
        a, n = a[mask], n[mask]
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), FLOOR)
    return float(np.max(np.abs(a - n) / denom))


# -- randomized trial suites, shared by the unit and acceptance tests ---------------
# Each returns the worst relative error seen over ``n`` accepted configurations.


def dense_trials(rng, n):
    worst = 0.0
    for _ in range(n):
        n_in, n_out, B = rng.integers(1, 6, size=3)
        layer = layers.Dense(n_in, n_out, weight=rng.normal(size=(n_out, n_in)), bias=rng.normal(size=n_out))
        x, up = rng.normal(size=(B, n_in)), rng.normal(size=(B, n_out))
        f = lambda: float(np.sum(layer.forward(x) * up))
        layer.forward(x)
        dx = layer.backward(up)
        worst = max(worst, max_rel_error(dx, numeric_grad(f, x)),
                    max_rel_error(layer.grad_weight, numeric_grad(f, layer.weight)),
                    max_rel_error(layer.grad_bias, numeric_grad(f, layer.bias)))
    return worst


def conv_trials(rng, n):
    worst = 0.0
    for _ in range(n):
        m = int(rng.integers(1, 12))
        k, s = int(rng.integers(1, m + 1)), int(rng.integers(1, 4))
        conv = layers.Conv1D(k, s, weight=rng.normal(size=k), bias=rng.normal())
        x = rng.normal(size=(2, m))
        up = rng.normal(size=(2, layers.feature_map_length(m, k, s)))
        f = lambda: float(np.sum(conv.forward(x).values * up))
        conv.forward(x)
        dx = conv.backward(up)
        bias = np.array([conv.bias])

        def f_bias():
            conv.bias = bias[0]
            return f()

        worst = max(worst, max_rel_error(dx, numeric_grad(f, x)),
                    max_rel_error(conv.grad_weight, numeric_grad(f, conv.weight)),
                    max_rel_error(conv.grad_bias, numeric_grad(f_bias, bias)))
    return worst


def maxpool_trials(rng, n, kink=1e-3):
    worst, used = 0.0, 0
    while used < n:
        x = rng.normal(size=int(rng.integers(2, 10)))
        top2 = np.sort(x)[-2:]
        if top2[1] - top2[0] < kink:
            continue
        used += 1
        pool = layers.MaxPool()
        up = rng.normal()
        f = lambda: float(pool.forward(x) * up)
        pool.forward(x)
        worst = max(worst, max_rel_error(pool.backward(up), numeric_grad(f, x)))
    return worst


def sigmoid_trials(rng, n):
    worst = 0.0
    for _ in range(n):
        z, up = rng.normal(scale=3, size=5), rng.normal(size=5)
        act = layers.Sigmoid()
        f = lambda: float(np.sum(layers.sigmoid(z) * up))
        act.forward(z)
        worst = max(worst, max_rel_error(act.backward(up), numeric_grad(f, z)))
    return worst


def dropout_trials(rng, n, training=False):
    worst = 0.0
    for _ in range(n):
        x, up = rng.normal(size=6), rng.normal(size=6)
        drop = layers.Dropout(float(rng.choice([0.0, 0.25, 0.5])))
        seed = int(rng.integers(1 << 30))
        f = lambda: float(np.sum(drop.forward(x, Rng(seed), training=training) * up))
        drop.forward(x, Rng(seed), training=training)
        worst = max(worst, max_rel_error(drop.backward(up), numeric_grad(f, x)))
    return worst


def bce_trials(rng, n):
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(1, 8))
        p = rng.uniform(0.05, 0.95, size=(2, d))
        y = rng.integers(0, 2, size=(2, d)).astype(float)
        f = lambda: layers.bce_loss(p, y)
        worst = max(worst, max_rel_error(layers.bce_grad(p, y), numeric_grad(f, p)))
    return worst


def bank_gap(net, X):
    """Smallest gap between the two largest positions of any kernel's feature map."""
    H = layers.sigmoid(X @ net.encoder.weight.T + net.encoder.bias)
    gap = np.inf
    for w, b in zip(net.bank.kernel_weights(), net.bank.bias):
        for row in H:
            pre = np.sort(np.convolve(row, w[::-1], mode="valid") + b)
            if pre.size > 1:
                gap = min(gap, pre[-1] - pre[-2])
    return gap


def composite_trials(n, m=5, h=8, K=4, d=3, kink=1e-3):
    """BCE of the full network against every parameter, one seed per trial."""
    accepted, seed, worst = 0, 0, 0.0
    while accepted < n:
        seed += 1
        r = np.random.default_rng(seed)
        net = MSDNNetwork(m, d, h, K, rng=Rng(seed))
        for p in net.params().values():
            if p.ndim == 1:
                p[:] = r.normal(scale=0.5, size=p.shape)
        X = r.normal(size=(2, m))
        Y = r.integers(0, 2, size=(2, d)).astype(float)
        if bank_gap(net, X) < kink:
            continue
        accepted += 1
        net.backward(layers.bce_grad(net.forward(X), Y))
        grads = {k: v.copy() for k, v in net.grads().items()}
        f = lambda: layers.bce_loss(net.forward(X), Y)
        for name, param in net.params().items():
            mask = net.bank.tap_mask if name == "conv.weight" else None
            worst = max(worst, max_rel_error(grads[name], numeric_grad(f, param), mask=mask))
    return worst
