"""Dense matrix helpers and the seeded random generator.

Matrices are plain ``numpy.float64`` arrays. Randomness comes from numpy's
PCG64 bit generator (``numpy.random.PCG64``, the numpy >= 1.17 default); a
given seed reproduces the same stream on the same numpy build.
"""

import numpy as np

from ._validation import ContractError

PRNG_ALGORITHM = "PCG64"


def as_matrix(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ContractError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def matmul(a, b):
    """Matrix product with an explicit shape check."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ContractError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


class Rng:
    """Seeded PCG64 stream.

    ``Rng(seed)`` and ``Rng(seed, stream)`` give independent, reproducible
    streams; ``stream`` is used to derive per-split or per-model generators
    from one experiment seed.
    """

    def __init__(self, seed=0, *stream):
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        entropy = [self.seed, *self.stream] if self.stream else self.seed
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream={self.stream})"

    def shuffle(self, n):
        if n < 0:
            raise ContractError(f"n must be non-negative, got {n}")
        return self._gen.permutation(n)

    def uniform(self, lo, hi, shape):
        if lo > hi:
            raise ContractError(f"lo={lo} exceeds hi={hi}")
        if lo == hi:
            return np.full(shape, float(lo))
        return self._gen.uniform(lo, hi, size=shape)

    def random(self, shape):
        return self._gen.random(shape)

    def integers(self, high):
        return int(self._gen.integers(high))
