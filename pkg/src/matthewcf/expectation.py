"""Closed-form expectations for user-based and item-based CF under Zipf clicks.

Two weightings are supported:

``paper-raw``
    the literal unnormalized weights: click weight 1/i^s and co-click
    weight (1/i^s)^2. These are not probabilities.
``normalized``
    a Bernoulli-inclusion model: item i is in a user's set with probability
    pi_i = 1 - (1 - f(i))^N after N Zipf draws, so the overlap of two
    independent users is Poisson-binomial with q_i = pi_i^A * pi_i^B.

Nested sums over increasing ranks i_1 < ... < i_t of products of q are
elementary symmetric polynomials e_t(q) and are evaluated by an O(M*T) DP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import ModeError
from .zipf import ZipfModel, generalized_harmonic

Mode = Literal["paper-raw", "normalized"]
Variant = Literal["paper", "exact"]
MODES = ("paper-raw", "normalized")
VARIANTS = ("paper", "exact")


@dataclass(frozen=True)
class ExpectationConfig:
    """M items, users with N_A / N_B clicks, W users, Zipf exponent s."""

    M: int
    N_A: int = 1
    N_B: int = 1
    W: int = 1
    s: float = 1.0
    mode: Mode = "paper-raw"

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not (1 <= self.N_A <= self.M and 1 <= self.N_B <= self.M):
            raise ValueError(f"need 1 <= N_A, N_B <= M, got N_A={self.N_A} N_B={self.N_B} M={self.M}")
        if self.W < 1:
            raise ValueError(f"W must be >= 1, got {self.W}")
        if self.mode not in MODES:
            raise ModeError(f"unknown mode {self.mode!r}")

    @property
    def zipf(self) -> ZipfModel:
        return ZipfModel(self.s, self.M)

    @property
    def max_overlap(self) -> int:
        return min(self.N_A, self.N_B)


@dataclass(frozen=True)
class ItemPairModel:
    """Item A clicked by 1/m of W users, item B by 1/n, independently."""

    m: float
    n: float
    W: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.W < 1:
            raise ValueError("m, n and W must all be >= 1")


def _check_rank(i: int, M: int):
    if not 1 <= i <= M:
        raise ValueError(f"rank {i} outside 1..{M}")


def click_probability(i: int, config: ExpectationConfig) -> float:
    _check_rank(i, config.M)
    if config.mode == "paper-raw":
        return 1.0 / i ** config.s
    return config.zipf.pmf(i)


def inclusion_probabilities(config: ExpectationConfig, clicks: int) -> np.ndarray:
    """pi_i = 1 - (1 - f(i))^clicks for every rank."""
    pmf = config.zipf.pmf_table
    # -expm1(N log1p(-p)) keeps precision for tiny p
    with np.errstate(divide="ignore"):
        return -np.expm1(clicks * np.log1p(-pmf))


def overlap_weights(config: ExpectationConfig) -> np.ndarray:
    if config.mode == "paper-raw":
        return config.zipf.weights ** 2
    return inclusion_probabilities(config, config.N_A) * inclusion_probabilities(config, config.N_B)


def elementary_symmetric(q: Sequence[float], T: int) -> np.ndarray:
    """Return [e_1(q), ..., e_T(q)].

    E[j][t] = E[j-1][t] + q_j E[j-1][t-1] with E[.][0] = 1.
    """
    q = np.asarray(q, dtype=np.float64)
    if not 0 <= T <= len(q):
        raise ValueError(f"degree T={T} outside 0..{len(q)}")
    e = np.zeros(T + 1)
    e[0] = 1.0
    for j, qj in enumerate(q):
        top = min(j + 1, T)
        # descending-degree update in place
        e[1:top + 1] += qj * e[0:top]
    return e[1:]


def poisson_binomial_pmf(q: Sequence[float], max_degree: int | None = None) -> np.ndarray:
    """PMF of the number of successes among independent Bernoulli(q_i).

    Computed as the coefficients of prod_i ((1 - q_i) + q_i x). With
    ``max_degree`` T the top entry is P(count >= T): the degree-T state is
    absorbing, so the result still sums to one.
    """
    q = np.asarray(q, dtype=np.float64)
    if np.any((q < 0) | (q > 1)):
        raise ValueError("success probabilities must lie in [0, 1]")
    T = len(q) if max_degree is None else max_degree
    if T < 0:
        raise ValueError("max_degree must be >= 0")
    pmf = np.zeros(T + 1)
    pmf[0] = 1.0
    if T == 0:
        return pmf
    for qj in q:
        top = pmf[T] + qj * pmf[T - 1]
        pmf[1:T] = (1.0 - qj) * pmf[1:T] + qj * pmf[0:T - 1]
        pmf[0] *= 1.0 - qj
        pmf[T] = top
    return pmf


@dataclass(frozen=True)
class OverlapDistribution:
    """Shared-item count law for two users.

    ``e[t - 1]`` is e_t of the overlap weights. ``pmf`` (normalized mode
    only) runs over t = 0..T, with P(t >= T) folded into the last entry.
    """

    e: np.ndarray
    pmf: np.ndarray | None
    T: int

    def mean(self) -> float:
        if self.pmf is None:
            raise ModeError("overlap PMF exists only in normalized mode")
        return float(np.dot(np.arange(self.T + 1), self.pmf))


def overlap_distribution(config: ExpectationConfig, max_degree: int | None = None) -> OverlapDistribution:
    T = config.max_overlap if max_degree is None else max_degree
    q = overlap_weights(config)
    e = elementary_symmetric(q, min(T, len(q)))
    pmf = poisson_binomial_pmf(q, T) if config.mode == "normalized" else None
    return OverlapDistribution(e, pmf, T)


def expected_overlap_union(config: ExpectationConfig) -> tuple[float, float]:
    """(E|A n B|, E|A u B|) under the Bernoulli-inclusion model."""
    if config.mode != "normalized":
        raise ModeError("expected overlap/union is defined only in normalized mode")
    pa = inclusion_probabilities(config, config.N_A)
    pb = inclusion_probabilities(config, config.N_B)
    q = pa * pb
    return math.fsum(q), math.fsum(pa + pb - q)


def default_union_size(config: ExpectationConfig) -> int:
    """N_A + N_B - round(sum q_i), never below max(N_A, N_B).

    sum q_i is E|A n B| in normalized mode and its raw-weight analogue in
    paper-raw mode.
    """
    overlap = math.fsum(overlap_weights(config))
    return max(config.N_A + config.N_B - round(overlap), config.N_A, config.N_B)


def expected_similarity_user_pair(config: ExpectationConfig, union_size: int | None = None) -> float:
    """sum_{t=1..T} e_t(q) * t / union_size with T = min(N_A, N_B).

    The union size is held fixed, as in the nested-sum formula.
    """
    if union_size is None:
        union_size = default_union_size(config)
    if union_size < 1:
        raise ValueError(f"union_size must be >= 1, got {union_size}")
    T = min(config.max_overlap, config.M)
    e = elementary_symmetric(overlap_weights(config), T)
    t = np.arange(1, T + 1)
    return math.fsum(e * t) / union_size


def expected_item_similarity(model: ItemPairModel, norm: str) -> float:
    """Plug-in cosine of two independently clicked items.

    l1: (W/mn) / ((W/m)(W/n)) = 1/W.   l2: (W/mn) / sqrt((W/m)(W/n)) = 1/sqrt(mn).
    """
    if norm in ("l1", "cosine-l1"):
        return 1.0 / model.W
    if norm in ("l2", "cosine-l2"):
        return 1.0 / math.sqrt(model.m * model.n)
    raise ValueError(f"unknown norm {norm!r}")


def expected_user_neighbors(config: ExpectationConfig, variant: Variant = "paper",
                            item_set: Sequence[int] | None = None) -> float:
    """Expected number of other users co-clicking with a given user.

    ``paper`` sums (W - 1) p_i over all M items, which counts a neighbour
    once per shared item. ``exact`` is (W - 1)(1 - prod_{i in item_set}(1 - pi_i)),
    the expected number of distinct neighbours of a user holding
    ``item_set``, where pi_i is another user's inclusion probability with
    N_B clicks.
    """
    if variant == "paper":
        weights = config.zipf.weights
        total = math.fsum(weights)
        if config.mode == "normalized":
            # factor the normalizer out so the sum is exactly W - 1
            return (config.W - 1) * (total / config.zipf.normalizer)
        return (config.W - 1) * total
    if variant != "exact":
        raise ValueError(f"unknown variant {variant!r}")
    if item_set is None:
        raise ValueError("the exact variant needs the user's item_set")
    ranks = np.asarray(sorted(set(int(i) for i in item_set)), dtype=np.int64)
    if len(ranks) and (ranks.min() < 1 or ranks.max() > config.M):
        raise ValueError(f"item_set ranks must lie in 1..{config.M}")
    pi = inclusion_probabilities(config, config.N_B)[ranks - 1]
    miss_all = math.exp(math.fsum(np.log1p(-pi))) if np.all(pi < 1) else 0.0
    return (config.W - 1) * (1.0 - miss_all)


def user_neighbors_literal_upper(config: ExpectationConfig) -> float:
    """The displayed sum read literally: N terms of (N - 1)/H_M with N = W."""
    return config.W * (config.W - 1) / generalized_harmonic(config.M, 1.0)


def expected_item_neighbors(i: int, config: ExpectationConfig, variant: Variant = "paper") -> float:
    """Expected number of other items co-clicked with the item of rank i.

    ``paper`` is the raw sum_{j != i} i^-s j^-s = i^-s (H(M, s) - i^-s).
    ``exact`` is sum_{j != i} 1 - (1 - pi_i pi_j)^W with pi from N_A clicks:
    items co-clicked by at least one of W independent users.
    """
    _check_rank(i, config.M)
    if variant == "paper":
        w = 1.0 / i ** config.s
        return w * (config.zipf.normalizer - w)
    if variant != "exact":
        raise ValueError(f"unknown variant {variant!r}")
    pi = inclusion_probabilities(config, config.N_A)
    joint = np.delete(pi[i - 1] * pi, i - 1)
    return math.fsum(-np.expm1(config.W * np.log1p(-joint)))


def neighborhood_ratio(i: int, j: int) -> float:
    """N(i)/N(j) = j/i."""
    if i < 1 or j < 1:
        raise ValueError("ranks must be >= 1")
    return j / i


def analytic_report(config: ExpectationConfig, item_rank: int = 1, union_size: int | None = None,
                    pair: ItemPairModel | None = None) -> dict:
    """Every formula evaluated for one configuration, keyed by formula name."""
    params = {"M": config.M, "N_A": config.N_A, "N_B": config.N_B, "W": config.W, "s": config.s}
    union = default_union_size(config) if union_size is None else union_size
    report = {
        "click_probability": {"mode": config.mode, "parameters": {**params, "i": item_rank},
                              "value": click_probability(item_rank, config)},
        "expected_similarity_user_pair": {"mode": config.mode, "parameters": {**params, "union_size": union},
                                          "value": expected_similarity_user_pair(config, union)},
        "overlap_e": {"mode": config.mode, "parameters": params,
                      "value": overlap_distribution(config).e.tolist()},
        "expected_user_neighbors": {"mode": config.mode,
                                    "parameters": {**params, "variant": "paper", "upper_index": "M", "chosen": True},
                                    "value": expected_user_neighbors(config, "paper")},
        "expected_user_neighbors_upper_N": {"mode": "paper-raw",
                                            "parameters": {**params, "variant": "paper", "upper_index": "N=W",
                                                           "chosen": False},
                                            "value": user_neighbors_literal_upper(config)},
        "expected_item_neighbors": {"mode": config.mode, "parameters": {**params, "i": item_rank, "variant": "paper"},
                                    "value": expected_item_neighbors(item_rank, config, "paper")},
        "expected_item_neighbors_exact": {"mode": "normalized",
                                          "parameters": {**params, "i": item_rank, "variant": "exact"},
                                          "value": expected_item_neighbors(item_rank, config, "exact")},
    }
    if config.mode == "normalized":
        overlap, union_mean = expected_overlap_union(config)
        report["expected_overlap_union"] = {"mode": config.mode, "parameters": params,
                                            "value": [overlap, union_mean]}
        report["overlap_pmf"] = {"mode": config.mode, "parameters": params,
                                 "value": overlap_distribution(config).pmf.tolist()}
    if pair is not None:
        pair_params = {"m": pair.m, "n": pair.n, "W": pair.W}
        for norm in ("l1", "l2"):
            report[f"expected_item_similarity_{norm}"] = {
                "mode": "plug-in", "parameters": pair_params, "value": expected_item_similarity(pair, norm)}
    return report
