"""A separately written brute-force evaluator for logistic chains."""

import itertools
import math

import numpy as np

from msdn.baselines import LogisticBase


def random_chain_models(rng, m, d, scale=2.0):
    return [LogisticBase.from_coefficients(rng.normal(scale=scale, size=m + j), rng.normal(scale=scale))
            for j in range(d)]


def brute_force_map(models, x):
    """(best vector in chain order, its joint) by plain enumeration.

    Candidates are visited in increasing binary value with the first chain
    label as the most significant bit, and only a strictly larger joint
    replaces the incumbent, so ties keep the lowest value.
    """
    best, best_p = None, -1.0
    for bits in itertools.product((0, 1), repeat=len(models)):
        p = 1.0
        for j, model in enumerate(models):
            z = float(np.dot(model.coef_, list(x) + list(bits[:j])) + model.intercept_)
            q = 1.0 / (1.0 + math.exp(-z))
            p *= q if bits[j] else 1.0 - q
        if p > best_p:
            best, best_p = bits, p
    return np.array(best), best_p
