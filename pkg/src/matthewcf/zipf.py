"""Discrete Zipf distribution over ranks 1..n.

    f(k; s, n) = k^-s / H(n, s),   H(n, s) = sum_{j=1..n} j^-s

Sampling is inverse-CDF on a cumulative table, so a draw costs one binary
search. Exponent fitting is maximum likelihood by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError

FIT_BOUNDS = (0.0, 10.0)
FIT_TOL = 1e-6
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def generalized_harmonic(n: int, s: float) -> float:
    """Return H(n, s) = sum_{j=1..n} 1/j^s.

    Terms are accumulated smallest first (reverse rank order) with
    ``math.fsum`` so the result is correctly rounded.
    """
    if n < 1:
        raise ValueError(f"harmonic number needs n >= 1, got {n}")
    ranks = np.arange(n, 0, -1, dtype=np.float64)
    return math.fsum(ranks ** -float(s))


@dataclass(frozen=True)
class ZipfModel:
    s: float = 1.0
    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"support size must be >= 1, got {self.n}")
        if self.s < 0 or not math.isfinite(self.s):
            raise ValueError(f"exponent must be finite and >= 0, got {self.s}")

    @cached_property
    def weights(self) -> np.ndarray:
        """Unnormalized weights k^-s for k = 1..n."""
        return np.arange(1, self.n + 1, dtype=np.float64) ** -float(self.s)

    @cached_property
    def normalizer(self) -> float:
        return generalized_harmonic(self.n, self.s)

    @cached_property
    def pmf_table(self) -> np.ndarray:
        table = self.weights / self.normalizer
        table.flags.writeable = False
        return table

    @cached_property
    def cdf_table(self) -> np.ndarray:
        cdf = np.cumsum(self.pmf_table)
        # guard the top of the table against cumulative rounding
        cdf[-1] = 1.0
        cdf.flags.writeable = False
        return cdf

    def pmf(self, k: int) -> float:
        if not 1 <= k <= self.n:
            raise ValueError(f"rank {k} outside 1..{self.n}")
        return (1.0 / k ** self.s) / self.normalizer

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw ranks (1-based, int64) using the caller's generator."""
        u = rng.random(size)
        ranks = np.searchsorted(self.cdf_table, u, side="right") + 1
        return np.minimum(ranks, self.n).astype(np.int64)


def zipf_pmf(model: ZipfModel, k: int) -> float:
    return model.pmf(k)


def zipf_sample(model: ZipfModel, seed: int, count: int) -> np.ndarray:
    """``count`` i.i.d. ranks from ``model``; identical output for a fixed seed."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    return model.sample(np.random.default_rng(seed), count)


def zipf_log_likelihood(s: float, rank_counts: np.ndarray) -> float:
    counts = np.asarray(rank_counts, dtype=np.float64)
    log_k = np.log(np.arange(1, len(counts) + 1, dtype=np.float64))
    log_h = math.log(generalized_harmonic(len(counts), s))
    return float(-s * np.dot(counts, log_k) - counts.sum() * log_h)


def _golden_section_max(f, lo: float, hi: float, tol: float) -> float:
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    # the likelihood may peak on a boundary (e.g. uniform data at s = 0)
    best = max((lo, hi, 0.5 * (lo + hi)), key=f)
    return best


def fit_zipf_exponent(rank_counts: Sequence[float]) -> float:
    """Maximum-likelihood Zipf exponent for counts listed in rank order.

    The support size is ``len(rank_counts)``; the search covers s in [0, 10].
    """
    counts = np.asarray(rank_counts, dtype=np.float64)
    if counts.ndim != 1 or np.count_nonzero(counts) < 2:
        raise InsufficientDataError("need at least 2 nonzero rank counts to fit")
    if np.any(counts < 0):
        raise ValueError("rank counts must be non-negative")
    s_hat = _golden_section_max(
        lambda s: zipf_log_likelihood(s, counts), *FIT_BOUNDS, FIT_TOL
    )
    return round(s_hat, 4)
