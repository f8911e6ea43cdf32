"""Seeded simulation estimates of the analytic expectations.

Trials run in fixed-size chunks. Chunk k draws from PCG64 seeded by
``SeedSequence([seed, k])`` and its moments are merged in chunk order, so a
report depends only on (config, seed, trials) and not on how many threads
processed the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Literal

import numpy as np
from scipy import stats

from .expectation import ExpectationConfig, ItemPairModel, inclusion_probabilities
from .interactions import GeneratorConfig, InteractionMatrix, _log_from_pairs, build_interaction_matrix, generate_synthetic
from .similarity import neighbor_counts

Inclusion = Literal["iid-draws", "bernoulli-inclusion"]
RNG_ALGORITHM = "numpy.PCG64 via SeedSequence([seed, chunk])"
CHUNK = 1024
Z99 = float(stats.norm.ppf(0.995))


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, chunk])))


@dataclass
class Moments:
    """Mergeable count / mean / sum of squared deviations (Chan et al.)."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        values = np.asarray(values, dtype=np.float64)
        if len(values) == 0:
            return cls()
        mu = float(values.mean())
        return cls(len(values), mu, float(((values - mu) ** 2).sum()))

    def merge(self, other: "Moments") -> "Moments":
        if other.n == 0:
            return Moments(self.n, self.mean, self.m2)
        if self.n == 0:
            return Moments(other.n, other.mean, other.m2)
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Moments(n, mean, m2)

    @property
    def stderr(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.n - 1)) / math.sqrt(self.n)


@dataclass(frozen=True)
class EstimateReport:
    quantity: str
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int
    rng: str = RNG_ALGORITHM

    @classmethod
    def from_moments(cls, quantity: str, moments: Moments, seed: int) -> "EstimateReport":
        half = Z99 * moments.stderr
        return cls(quantity, moments.mean, moments.stderr, moments.mean - half,
                   moments.mean + half, moments.n, seed)

    def to_dict(self) -> dict:
        return asdict(self)

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def _run_chunks(trials: int, seed: int, body: Callable[[np.random.Generator, int], dict],
                threads: int = 1) -> list[dict]:
    """Evaluate ``body(rng, size)`` per chunk; results returned in chunk order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sizes = [min(CHUNK, trials - start) for start in range(0, trials, CHUNK)]

    def run(k):
        return body(chunk_rng(seed, k), sizes[k])

    if threads <= 1 or len(sizes) == 1:
        return [run(k) for k in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, range(len(sizes))))


def _merge(results: list[dict], key: str) -> Moments:
    total = Moments()
    for r in results:
        total = total.merge(r[key])
    return total


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int
    model: ExpectationConfig
    inclusion: Inclusion = "bernoulli-inclusion"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.inclusion not in ("iid-draws", "bernoulli-inclusion"):
            raise ValueError(f"unknown inclusion model {self.inclusion!r}")


@dataclass(frozen=True)
class UserPairResult:
    overlap: EstimateReport
    union: EstimateReport
    jaccard: EstimateReport
    histogram: np.ndarray  # counts of overlap t = 0..T, top bin is t >= T
    trials: int
    seed: int
    inclusion: str

    def reports(self) -> list[EstimateReport]:
        return [self.overlap, self.union, self.jaccard]


def _iid_sets(cdf: np.ndarray, rng: np.random.Generator, size: int, clicks: int, M: int) -> np.ndarray:
    ranks = np.searchsorted(cdf, rng.random((size, clicks)), side="right")
    ranks = np.minimum(ranks, M - 1)
    members = np.zeros((size, M), dtype=bool)
    members[np.arange(size)[:, None], ranks] = True
    return members


def simulate_user_pair(config: SimConfig, threads: int = 1) -> UserPairResult:
    """Realize two independent users' click sets per trial.

    ``iid-draws``: N Zipf draws per user, repeats collapsed.
    ``bernoulli-inclusion``: item i included independently with pi_i.
    """
    model = config.model
    M, T = model.M, model.max_overlap
    pi_a = inclusion_probabilities(model, model.N_A)
    pi_b = inclusion_probabilities(model, model.N_B)
    cdf = model.zipf.cdf_table

    def body(rng, size):
        if config.inclusion == "bernoulli-inclusion":
            a = rng.random((size, M)) < pi_a
            b = rng.random((size, M)) < pi_b
        else:
            a = _iid_sets(cdf, rng, size, model.N_A, M)
            b = _iid_sets(cdf, rng, size, model.N_B, M)
        inter = (a & b).sum(axis=1)
        union = (a | b).sum(axis=1)
        jac = np.divide(inter, union, out=np.zeros(size), where=union > 0)
        return {"inter": Moments.of(inter), "union": Moments.of(union), "jaccard": Moments.of(jac),
                "hist": np.bincount(np.minimum(inter, T), minlength=T + 1)}

    results = _run_chunks(config.trials, config.seed, body, threads)
    hist = np.sum([r["hist"] for r in results], axis=0)
    return UserPairResult(
        EstimateReport.from_moments("overlap", _merge(results, "inter"), config.seed),
        EstimateReport.from_moments("union", _merge(results, "union"), config.seed),
        EstimateReport.from_moments("jaccard", _merge(results, "jaccard"), config.seed),
        hist, config.trials, config.seed, config.inclusion)


@dataclass(frozen=True)
class ItemPairResult:
    l1: EstimateReport
    l2: EstimateReport
    skipped: int
    trials: int


def simulate_item_pair(model: ItemPairModel, trials: int, seed: int, threads: int = 1) -> ItemPairResult:
    """Per trial, W users click A w.p. 1/m and B w.p. 1/n independently.

    Per-user outcomes are tallied with one multinomial draw over
    (both, A only, B only, neither). Trials where A or B got no clicks are
    skipped and counted.
    """
    if model.m > model.W or model.n > model.W:
        raise ValueError("need m <= W and n <= W")
    pa, pb = 1.0 / model.m, 1.0 / model.n
    cells = np.array([pa * pb, pa * (1 - pb), (1 - pa) * pb, (1 - pa) * (1 - pb)])
    cells = np.clip(cells, 0.0, None)
    cells /= cells.sum()

    def body(rng, size):
        draws = rng.multinomial(model.W, cells, size=size)
        co = draws[:, 0].astype(np.float64)
        a = co + draws[:, 1]
        b = co + draws[:, 2]
        ok = (a > 0) & (b > 0)
        co, a, b = co[ok], a[ok], b[ok]
        return {"l1": Moments.of(co / (a * b)), "l2": Moments.of(co / np.sqrt(a * b)),
                "skipped": int(size - ok.sum())}

    results = _run_chunks(trials, seed, body, threads)
    skipped = sum(r["skipped"] for r in results)
    return ItemPairResult(
        EstimateReport.from_moments("cosine_l1", _merge(results, "l1"), seed),
        EstimateReport.from_moments("cosine_l2", _merge(results, "l2"), seed),
        skipped, trials)


@dataclass(frozen=True)
class NeighborhoodEstimates:
    """Per-entity neighbourhood means, indexed by generative rank (id - 1)."""

    user: list[EstimateReport]
    item: list[EstimateReport]
    trials: int
    seed: int

    def means(self, axis: str) -> np.ndarray:
        return np.array([r.mean for r in getattr(self, axis)])

    def stderrs(self, axis: str) -> np.ndarray:
        return np.array([r.stderr for r in getattr(self, axis)])


def _neighbors_by_id(matrix, axis, size) -> np.ndarray:
    out = np.zeros(size)
    out[matrix.ids(axis) - 1] = neighbor_counts(matrix, axis)
    return out


def bernoulli_matrix(gen: GeneratorConfig, rng: np.random.Generator) -> InteractionMatrix | None:
    """User r holds item i independently with pi_i = 1 - (1 - f(i))^clicks(r)."""
    model = ExpectationConfig(M=gen.items, s=gen.s, mode="normalized")
    clicks = np.array([gen.clicks_for(r) for r in range(1, gen.users + 1)])
    pi = {c: inclusion_probabilities(model, c) for c in np.unique(clicks)}
    table = np.stack([pi[c] for c in clicks])
    users, items = np.nonzero(rng.random(table.shape) < table)
    if len(users) == 0:
        return None
    return build_interaction_matrix(_log_from_pairs(users + 1, items + 1))


def simulate_neighborhoods(gen: GeneratorConfig, trials: int, seed: int, threads: int = 1,
                           inclusion: Inclusion = "iid-draws") -> NeighborhoodEstimates:
    """Generate ``trials`` synthetic logs and average neighbourhood sizes.

    ``iid-draws`` uses the generator as configured; ``bernoulli-inclusion``
    includes each item per user independently (see ``bernoulli_matrix``).
    Entities are indexed by generative rank: user id r and Zipf item rank r
    map to position r - 1. Entities absent from a trial count as 0
    neighbours. ``gen.seed`` is ignored; trial t uses the stream ``[seed, t]``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if inclusion not in ("iid-draws", "bernoulli-inclusion"):
        raise ValueError(f"unknown inclusion model {inclusion!r}")

    def run(t):
        rng = chunk_rng(seed, t)
        if inclusion == "iid-draws":
            matrix = generate_synthetic(gen, rng)
        else:
            matrix = bernoulli_matrix(gen, rng)
            if matrix is None:
                return np.zeros(gen.users), np.zeros(gen.items)
        return (_neighbors_by_id(matrix, "user", gen.users), _neighbors_by_id(matrix, "item", gen.items))

    if threads <= 1:
        samples = [run(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(run, range(trials)))
    users = np.array([s[0] for s in samples])
    items = np.array([s[1] for s in samples])

    def reports(stack, axis):
        return [EstimateReport.from_moments(f"{axis}_neighbors_rank_{r + 1}", Moments.of(stack[:, r]), seed)
                for r in range(stack.shape[1])]

    return NeighborhoodEstimates(reports(users, "user"), reports(items, "item"), trials, seed)
