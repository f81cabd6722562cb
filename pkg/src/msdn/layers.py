"""Differentiable building blocks with explicit forward/backward passes.

Every layer accepts a single vector or a batch (rows are instances), caches
what its backward pass needs, and raises :class:`ContractError` if
``backward`` is called before ``forward``.

Mini-batch semantics are the plain loop-over-instances ones: parameter
gradients are summed over the rows of the upstream gradient, so a caller
that wants a mean-over-batch gradient scales the upstream gradient by
``1 / batch_size`` (as :func:`bce_grad` does).
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import ContractError

BCE_CLAMP = 1e-12
SIGMOID_CLIP = 700.0


def _batch(x):
    x = np.asarray(x, dtype=np.float64)
    return (x[None, :], True) if x.ndim == 1 else (x, False)


def sigmoid(z):
    """Elementwise logistic function, stable for large ``|z|``.

    Inputs are clipped to [-700, 700] so very negative values still give a
    positive output instead of underflowing to zero.
    """
    z = np.clip(np.asarray(z, dtype=np.float64), -SIGMOID_CLIP, SIGMOID_CLIP)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def feature_map_length(m, k, s=1):
    """Number of valid positions of a size-``k``, stride-``s`` kernel on length ``m``.

    Without padding the last tap of position ``c`` is ``k + (c - 1) s <= m``,
    which gives ``floor((m - k) / s) + 1``.
    """
    if k < 1 or s < 1:
        raise ContractError(f"kernel size and stride must be >= 1, got k={k}, s={s}")
    if k > m:
        raise ContractError(f"kernel larger than input (k={k}, m={m})")
    return (m - k) // s + 1


class Sigmoid:
    def __init__(self):
        self._out = None

    def forward(self, z):
        self._out = sigmoid(z)
        return self._out

    def backward(self, upstream):
        if self._out is None:
            raise ContractError("Sigmoid.backward called before forward")
        return upstream * self._out * (1.0 - self._out)


class Dense:
    """Fully connected layer computing ``W x + b`` (no activation).

    ``weight`` has shape ``(out_dim, in_dim)``.
    """

    def __init__(self, in_dim, out_dim, weight=None, bias=None, rng=None):
        self.in_dim, self.out_dim = int(in_dim), int(out_dim)
        if weight is None:
            if rng is None:
                weight = np.zeros((self.out_dim, self.in_dim))
            else:
                limit = np.sqrt(6.0 / (self.in_dim + self.out_dim))
                weight = rng.uniform(-limit, limit, (self.out_dim, self.in_dim))
        self.weight = np.array(weight, dtype=np.float64).reshape(self.out_dim, self.in_dim)
        self.bias = np.zeros(self.out_dim) if bias is None else np.array(bias, dtype=np.float64).reshape(self.out_dim)
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)
        self._x = None

    def forward(self, x):
        x, single = _batch(x)
        if x.shape[1] != self.in_dim:
            raise ContractError(f"Dense expects input length {self.in_dim}, got {x.shape[1]}")
        self._x = x
        out = x @ self.weight.T + self.bias
        return out[0] if single else out

    def backward(self, upstream):
        if self._x is None:
            raise ContractError("Dense.backward called before forward")
        g, single = _batch(upstream)
        self.grad_weight = g.T @ self._x
        self.grad_bias = g.sum(axis=0)
        dx = g @ self.weight
        return dx[0] if single else dx

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def grads(self):
        return {"weight": self.grad_weight, "bias": self.grad_bias}


@dataclass
class FeatureMap:
    values: np.ndarray
    argmax: np.ndarray = None


class Conv1D:
    """A single 1-D kernel of size ``k`` and stride ``s`` with a scalar bias.

    ``forward`` maps an input of length ``m`` to the feature map
    ``o_j = act(bias + sum_i w_i x[i + (j-1) s])`` (1-based indices), with no
    zero padding.
    """

    def __init__(self, size, stride=1, weight=None, bias=0.0, activation="sigmoid"):
        if size < 1 or stride < 1:
            raise ContractError(f"kernel size and stride must be >= 1, got k={size}, s={stride}")
        self.size, self.stride = int(size), int(stride)
        self.weight = np.zeros(self.size) if weight is None else np.array(weight, dtype=np.float64).reshape(self.size)
        self.bias = float(bias)
        if activation not in ("sigmoid", "identity"):
            raise ContractError(f"unknown activation {activation!r}")
        self.activation = activation
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = 0.0
        self._windows = None
        self._out = None

    def tap_indices(self, m):
        """0-based input index of every tap, shape ``(c, k)``."""
        c = feature_map_length(m, self.size, self.stride)
        return np.arange(c)[:, None] * self.stride + np.arange(self.size)[None, :]

    def forward(self, x):
        x, single = _batch(x)
        idx = self.tap_indices(x.shape[1])
        self._windows = x[:, idx]  # (B, c, k)
        pre = self._windows @ self.weight + self.bias
        out = sigmoid(pre) if self.activation == "sigmoid" else pre
        self._out = out
        self._in_len = x.shape[1]
        return FeatureMap(out[0] if single else out)

    def backward(self, upstream):
        if self._windows is None:
            raise ContractError("Conv1D.backward called before forward")
        g, single = _batch(upstream)
        if self.activation == "sigmoid":
            g = g * self._out * (1.0 - self._out)
        self.grad_weight = np.einsum("bc,bck->k", g, self._windows)
        self.grad_bias = float(g.sum())
        dx = np.zeros((g.shape[0], self._in_len))
        idx = self.tap_indices(self._in_len)
        contrib = g[:, :, None] * self.weight[None, None, :]
        for j in range(idx.shape[0]):
            dx[:, idx[j]] += contrib[:, j, :]
        return dx[0] if single else dx


def global_maxpool(fm):
    """Return the maximum of a feature map and record its argmax on ``fm``.

    Ties resolve to the lowest index.
    """
    values = fm.values if isinstance(fm, FeatureMap) else np.asarray(fm, dtype=np.float64)
    if values.shape[-1] == 0:
        raise ContractError("cannot max-pool an empty feature map")
    argmax = np.argmax(values, axis=-1)
    if isinstance(fm, FeatureMap):
        fm.argmax = argmax
    return np.take_along_axis(values, np.asarray(argmax)[..., None], axis=-1)[..., 0]


class MaxPool:
    """Global max pooling over the last axis; gradient goes to the argmax only."""

    def __init__(self):
        self._argmax = None

    def forward(self, values):
        values = np.asarray(values, dtype=np.float64)
        fm = FeatureMap(values)
        out = global_maxpool(fm)
        self._argmax, self._shape = fm.argmax, values.shape
        return out

    def backward(self, upstream):
        if self._argmax is None:
            raise ContractError("MaxPool.backward called before forward")
        dx = np.zeros(self._shape)
        np.put_along_axis(dx, np.asarray(self._argmax)[..., None], np.asarray(upstream, dtype=np.float64)[..., None], axis=-1)
        return dx


class Dropout:
    """Inverted dropout: survivors are scaled by ``1 / (1 - rate)`` during training."""

    def __init__(self, rate=0.0):
        if not 0.0 <= rate < 1.0:
            raise ContractError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = float(rate)
        self._mask = None

    def forward(self, x, rng=None, training=False):
        x = np.asarray(x, dtype=np.float64)
        if not training or self.rate == 0.0:
            self._mask = np.ones_like(x)
            return x
        if rng is None:
            raise ContractError("training-mode dropout needs an Rng")
        self._mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, upstream):
        if self._mask is None:
            raise ContractError("Dropout.backward called before forward")
        return upstream * self._mask


def dropout(x, rate, rng=None, training=False):
    return Dropout(rate).forward(x, rng=rng, training=training)


def bce_loss(p, y):
    """Binary cross-entropy averaged over labels (and over rows for a batch)."""
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise ContractError(f"prediction shape {p.shape} does not match label shape {y.shape}")
    p = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def bce_grad(p, y):
    """Gradient of :func:`bce_loss` with respect to ``p``."""
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise ContractError(f"prediction shape {p.shape} does not match label shape {y.shape}")
    inside = (p > BCE_CLAMP) & (p < 1.0 - BCE_CLAMP)
    pc = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return np.where(inside, (pc - y) / (pc * (1.0 - pc)), 0.0) / p.size


@dataclass
class AdamState:
    """Adam moments for one parameter array.

    Weight decay is the coupled L2 form (``grad + weight_decay * param``
    before the moment updates) and is skipped when ``decay`` is False, which
    is how biases are handled.
    """

    shape: tuple
    learning_rate: float = 0.001
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay: bool = True
    t: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.shape = tuple(np.shape(np.empty(self.shape)))
        if self.m is None:
            self.m = np.zeros(self.shape)
        if self.v is None:
            self.v = np.zeros(self.shape)

    def step(self, param, grad):
        """Update ``param`` in place and return it."""
        grad = np.asarray(grad, dtype=np.float64)
        if np.shape(param) != self.shape or grad.shape != self.shape:
            raise ContractError(f"Adam state shape {self.shape} vs param {np.shape(param)} / grad {grad.shape}")
        if self.decay and self.weight_decay:
            grad = grad + self.weight_decay * param
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        return param


def adam_step(state, param, grad):
    return state.step(param, grad)
