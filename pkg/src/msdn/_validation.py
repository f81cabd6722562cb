"""Input validation helpers shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array


class ContractError(ValueError):
    """Raised when a caller violates an operation's preconditions."""


def check_features(X, n_features=None, allow_empty=False):
    X = check_array(X, dtype=np.float64, ensure_min_samples=0 if allow_empty else 1)
    if n_features is not None and X.shape[1] != n_features:
        raise ContractError(
            f"X has {X.shape[1]} features, but the model expects {n_features}"
        )
    return X


def check_labels(Y, n_samples=None):
    """Return ``Y`` as a 2-D float array of 0/1 values.

    A 1-D array is treated as a single label column.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2:
        raise ContractError(f"label matrix must be 2-D, got shape {Y.shape}")
    bad = np.argwhere((Y != 0) & (Y != 1))
    if bad.size:
        r, c = bad[0]
        raise ContractError(f"non-binary label value {Y[r, c]!r} at row {r}, column {c}")
    if n_samples is not None and Y.shape[0] != n_samples:
        raise ContractError(f"X has {n_samples} rows but Y has {Y.shape[0]}")
    return Y


def check_X_Y(X, Y):
    X = check_features(X)
    Y = check_labels(Y, n_samples=X.shape[0])
    return X, Y


def check_threshold(threshold):
    if not 0.0 < threshold < 1.0:
        raise ContractError(f"threshold must lie in (0, 1), got {threshold}")
    return float(threshold)
