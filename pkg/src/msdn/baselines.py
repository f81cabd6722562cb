"""Binary Relevance, classifier chains (greedy and exhaustive) and stacked BR.

All four share :class:`LogisticBase`, a logistic regression trained with
full-batch Adam on binary cross-entropy. With ``interactions=True`` the
base learner first appends all degree-2 monomials of its inputs, which
lets a single unit represent an XOR of two inputs.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.preprocessing import PolynomialFeatures
from sklearn.utils.validation import check_is_fitted

from . import layers
from ._validation import ContractError, check_features, check_labels, check_threshold, check_X_Y
from .metrics import ema
from .numeric import Rng


class LogisticBase(ClassifierMixin, BaseEstimator):
    """Single-label logistic regression fitted with Adam on BCE.

    Weight decay is coupled L2 on the weights only.
    """

    def __init__(self, learning_rate=0.05, weight_decay=0.0, max_iter=500, tol=1e-7,
                 interactions=False, random_state=0):
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.max_iter = max_iter
        self.tol = tol
        self.interactions = interactions
        self.random_state = random_state

    def _expand(self, X):
        if not self.interactions:
            return X
        return PolynomialFeatures(degree=2, include_bias=False).fit_transform(X)

    def fit(self, X, y):
        X = check_features(X)
        y = check_labels(y, n_samples=X.shape[0])
        if y.shape[1] != 1:
            raise ContractError(f"LogisticBase fits one label, got {y.shape[1]}")
        self.n_features_in_ = X.shape[1]
        Z = self._expand(X)
        dense = layers.Dense(Z.shape[1], 1, rng=Rng(self.random_state, 7))
        act = layers.Sigmoid()
        w_opt = layers.AdamState(dense.weight.shape, self.learning_rate, self.weight_decay)
        b_opt = layers.AdamState(dense.bias.shape, self.learning_rate, decay=False)
        previous = np.inf
        self.n_iter_ = 0
        for it in range(self.max_iter):
            p = act.forward(dense.forward(Z))
            loss = layers.bce_loss(p, y)
            dense.backward((p - y) / y.size)
            w_opt.step(dense.weight, dense.grad_weight)
            b_opt.step(dense.bias, dense.grad_bias)
            self.n_iter_ = it + 1
            if abs(previous - loss) < self.tol:
                break
            previous = loss
        self.coef_ = dense.weight[0].copy()
        self.intercept_ = float(dense.bias[0])
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_features(X, self.n_features_in_, allow_empty=True)
        return self._expand(X) @ self.coef_ + self.intercept_ if len(X) else np.zeros(0)

    def predict_proba(self, X):
        """Probability of the positive class, shape ``(n,)`` (not sklearn's ``(n, 2)``)."""
        return layers.sigmoid(self.decision_function(X))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)

    @classmethod
    def from_coefficients(cls, coef, intercept):
        """A fixed model with the given weights, e.g. for hand-built chains."""
        est = cls()
        est.coef_ = np.asarray(coef, dtype=np.float64).ravel()
        est.intercept_ = float(intercept)
        est.n_features_in_ = est.coef_.size
        est.classes_ = np.array([0, 1])
        return est


def _base(base_estimator):
    return LogisticBase() if base_estimator is None else base_estimator


class _MultiLabelMixin:
    threshold = 0.5

    def predict(self, X):
        t = check_threshold(self.threshold)
        return (self.predict_proba(X) >= t).astype(int)

    def score(self, X, Y):
        return ema(self.predict(X), Y)


class BinaryRelevance(_MultiLabelMixin, ClassifierMixin, BaseEstimator):
    """One independent base classifier per label."""

    def __init__(self, base_estimator=None, threshold=0.5):
        self.base_estimator = base_estimator
        self.threshold = threshold

    def fit(self, X, Y):
        X, Y = check_X_Y(X, Y)
        self.n_features_in_, self.n_labels_ = X.shape[1], Y.shape[1]
        self.estimators_ = [clone(_base(self.base_estimator)).fit(X, Y[:, j]) for j in range(Y.shape[1])]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "estimators_")
        X = check_features(X, self.n_features_in_, allow_empty=True)
        out = np.zeros((X.shape[0], self.n_labels_))
        for j, est in enumerate(self.estimators_):
            if len(X):
                out[:, j] = est.predict_proba(X)
        return out

    def n_parameters(self):
        return sum(e.coef_.size + 1 for e in self.estimators_)


def _check_order(order, d):
    if order is None:
        return np.arange(d)
    order = np.asarray(order)
    if order.shape != (d,) or sorted(order.tolist()) != list(range(d)):
        raise ContractError(f"label order must be a permutation of 0..{d - 1}, got {list(order)}")
    return order.astype(int)


class ClassifierChain(_MultiLabelMixin, ClassifierMixin, BaseEstimator):
    """Classifier chain with greedy hard-decision inference.

    Base model ``j`` predicts label ``order[j]`` from the features followed
    by the (true, at training time) labels ``order[:j]``. Prediction feeds
    each thresholded decision forward.
    """

    def __init__(self, base_estimator=None, order=None, threshold=0.5):
        self.base_estimator = base_estimator
        self.order = order
        self.threshold = threshold

    def fit(self, X, Y):
        X, Y = check_X_Y(X, Y)
        d = Y.shape[1]
        self.order_ = _check_order(self.order, d)
        self.n_features_in_, self.n_labels_ = X.shape[1], d
        Yo = Y[:, self.order_]
        self.estimators_ = [
            clone(_base(self.base_estimator)).fit(np.hstack([X, Yo[:, :j]]), Yo[:, j])
            for j in range(d)
        ]
        return self

    @classmethod
    def from_estimators(cls, estimators, n_features, order=None, threshold=0.5):
        """Assemble a chain from already-fitted base models."""
        chain = cls(order=order, threshold=threshold)
        chain.estimators_ = list(estimators)
        chain.n_features_in_, chain.n_labels_ = int(n_features), len(estimators)
        chain.order_ = _check_order(order, len(estimators))
        return chain

    def _greedy(self, X, t):
        n, d = X.shape[0], self.n_labels_
        labels = np.zeros((n, d), dtype=int)  # chain order
        cond = np.zeros((n, d))
        for j, est in enumerate(self.estimators_):
            if n:
                cond[:, j] = est.predict_proba(np.hstack([X, labels[:, :j]]))
            labels[:, j] = cond[:, j] >= t
        joint = np.prod(np.where(labels == 1, cond, 1.0 - cond), axis=1)
        return labels, cond, joint

    def _to_columns(self, A):
        out = np.empty_like(A)
        out[:, self.order_] = A
        return out

    def predict_joint(self, X):
        """Greedy labels (column order) and the chain's joint probability of them."""
        check_is_fitted(self, "estimators_")
        X = check_features(X, self.n_features_in_, allow_empty=True)
        labels, _, joint = self._greedy(X, check_threshold(self.threshold))
        return self._to_columns(labels), joint

    def predict_proba(self, X):
        """Conditional probabilities ``p(y_j = 1 | x, greedy earlier labels)``."""
        check_is_fitted(self, "estimators_")
        X = check_features(X, self.n_features_in_, allow_empty=True)
        _, cond, _ = self._greedy(X, check_threshold(self.threshold))
        return self._to_columns(cond)

    def predict(self, X):
        return self.predict_joint(X)[0]

    def joint_probability(self, X, Y):
        """Chain-factorised ``p(Y | X)`` for given label vectors (column order)."""
        check_is_fitted(self, "estimators_")
        X = check_features(X, self.n_features_in_, allow_empty=True)
        Yo = check_labels(Y, n_samples=X.shape[0])[:, self.order_]
        joint = np.ones(X.shape[0])
        for j, est in enumerate(self.estimators_):
            p = est.predict_proba(np.hstack([X, Yo[:, :j]]))
            joint *= np.where(Yo[:, j] == 1, p, 1.0 - p)
        return joint

    def n_parameters(self):
        return sum(e.coef_.size + 1 for e in self.estimators_)


class ExponentialCostError(ContractError):
    """Exhaustive inference was refused because ``2**d`` is too large."""


class ProbabilisticClassifierChain(ClassifierChain):
    """Classifier chain with exact MAP inference by enumerating all ``2**d`` label vectors.

    Training is identical to :class:`ClassifierChain`. Ties between label
    vectors go to the lowest binary value, reading the vector in chain order
    with the first chain label as the most significant bit.
    """

    def __init__(self, base_estimator=None, order=None, threshold=0.5, max_labels=20):
        super().__init__(base_estimator=base_estimator, order=order, threshold=threshold)
        self.max_labels = max_labels

    def check_tractable(self, d):
        if d > self.max_labels:
            raise ExponentialCostError(
                f"exhaustive inference over d={d} labels needs 2**{d} joint evaluations per instance; "
                f"refusing above max_labels={self.max_labels}"
            )

    def fit(self, X, Y):
        self.check_tractable(check_labels(Y).shape[1])
        return super().fit(X, Y)

    @classmethod
    def from_estimators(cls, estimators, n_features, order=None, threshold=0.5, max_labels=20):
        chain = super().from_estimators(estimators, n_features, order=order, threshold=threshold)
        chain.max_labels = max_labels
        return chain

    def _log_joints(self, x):
        """Log joint of every label vector for one instance, in enumeration order."""
        prefixes = np.zeros((1, 0))
        logp = np.zeros(1)
        for est in self.estimators_:
            inputs = np.hstack([np.repeat(x[None, :], len(prefixes), axis=0), prefixes])
            p = np.clip(est.predict_proba(inputs), layers.BCE_CLAMP, 1.0 - layers.BCE_CLAMP)
            # children of prefix i are (i, 0) then (i, 1): the new bit is least significant
            logp = np.stack([logp + np.log1p(-p), logp + np.log(p)], axis=1).ravel()
            prefixes = np.hstack([np.repeat(prefixes, 2, axis=0), np.tile([[0.0], [1.0]], (len(prefixes), 1))])
        return logp

    def _enumerate(self, X):
        check_is_fitted(self, "estimators_")
        X = check_features(X, self.n_features_in_, allow_empty=True)
        self.check_tractable(self.n_labels_)
        d = self.n_labels_
        bits = (np.arange(2 ** d)[:, None] >> np.arange(d - 1, -1, -1)[None, :]) & 1
        labels = np.zeros((X.shape[0], d), dtype=int)
        joint = np.zeros(X.shape[0])
        marginals = np.zeros((X.shape[0], d))
        for i, x in enumerate(X):
            logp = self._log_joints(x)
            best = int(np.argmax(logp))
            labels[i], joint[i] = bits[best], np.exp(logp[best])
            probs = np.exp(logp)
            marginals[i] = probs @ bits / probs.sum()
        return self._to_columns(labels), joint, self._to_columns(marginals)

    def predict_joint(self, X):
        """MAP labels (column order) and their joint probability."""
        labels, joint, _ = self._enumerate(X)
        return labels, joint

    def predict_proba(self, X):
        """Exact marginals ``p(y_j = 1 | x)`` under the chain's joint."""
        return self._enumerate(X)[2]

    def predict(self, X):
        return self.predict_joint(X)[0]


class StackedBinaryRelevance(_MultiLabelMixin, ClassifierMixin, BaseEstimator):
    """Two BR levels; the second sees the features plus the first level's probabilities."""

    def __init__(self, base_estimator=None, threshold=0.5):
        self.base_estimator = base_estimator
        self.threshold = threshold

    def fit(self, X, Y, first_level_proba=None):
        """Fit both levels.

        ``first_level_proba`` replaces the in-sample level-1 outputs used to
        train level 2 (level 1 is still fitted for prediction).
        """
        X, Y = check_X_Y(X, Y)
        self.n_features_in_, self.n_labels_ = X.shape[1], Y.shape[1]
        self.level1_ = BinaryRelevance(self.base_estimator).fit(X, Y)
        P1 = self.level1_.predict_proba(X) if first_level_proba is None else np.asarray(first_level_proba, dtype=np.float64)
        if P1.shape != Y.shape:
            raise ContractError(f"first-level outputs have shape {P1.shape}, expected {Y.shape}")
        self.level2_ = BinaryRelevance(self.base_estimator).fit(np.hstack([X, P1]), Y)
        return self

    def stacked_features(self, X):
        check_is_fitted(self, "level2_")
        X = check_features(X, self.n_features_in_, allow_empty=True)
        return np.hstack([X, self.level1_.predict_proba(X)])

    def predict_proba(self, X):
        return self.level2_.predict_proba(self.stacked_features(X))

    def n_parameters(self):
        return self.level1_.n_parameters() + self.level2_.n_parameters()
