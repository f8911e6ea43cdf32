"""Set similarities and the co-counting engines behind the rank heatmaps.

Pair co-counts come from the inverted index: every entity on the opposite
axis contributes +1 to each pair of entities it touches. With ``X`` the
binary incidence this is ``X^T X`` accumulated one opposite-axis partition
at a time; counts are integers so partitioning cannot change the result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateInputError
from .interactions import Axis, InteractionMatrix, RankMap, popularity_ranking

Metric = Literal["jaccard", "cosine-l1", "cosine-l2"]
METRICS = ("jaccard", "cosine-l1", "cosine-l2")
METRIC_ALIASES = {"l1": "cosine-l1", "l2": "cosine-l2", "jaccard": "jaccard",
                  "cosine-l1": "cosine-l1", "cosine-l2": "cosine-l2"}
DEFAULT_BINS = 100


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def cosine_l1(a, b) -> float:
    """Co-count over the product of set sizes."""
    a, b = set(a), set(b)
    if not a or not b:
        raise DegenerateInputError("cosine similarity of an empty set is undefined")
    return len(a & b) / (len(a) * len(b))


def cosine_l2(a, b) -> float:
    """Co-count over the geometric mean of set sizes."""
    a, b = set(a), set(b)
    if not a or not b:
        raise DegenerateInputError("cosine similarity of an empty set is undefined")
    return len(a & b) / math.sqrt(len(a) * len(b))


def score_from_counts(co, size_a, size_b, metric: Metric):
    """Vectorized metric from co-count and the two set sizes."""
    co = np.asarray(co, dtype=np.float64)
    size_a = np.asarray(size_a, dtype=np.float64)
    size_b = np.asarray(size_b, dtype=np.float64)
    if metric == "jaccard":
        return co / (size_a + size_b - co)
    if metric == "cosine-l1":
        return co / (size_a * size_b)
    if metric == "cosine-l2":
        return co / np.sqrt(size_a * size_b)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Upper-triangular scores indexed by 0-based popularity rank position.

    ``population`` counts the ranked entities covered (after any top-R cap).
    """

    axis: Axis
    metric: Metric
    population: int
    rank_a: np.ndarray
    rank_b: np.ndarray
    score: np.ndarray
    ranking: RankMap

    def __len__(self):
        return len(self.score)

    def as_sparse(self) -> sp.csr_matrix:
        p = self.population
        return sp.csr_matrix((self.score, (self.rank_a, self.rank_b)), shape=(p, p))

    def get(self, rank_a: int, rank_b: int) -> float:
        """Score for two 0-based rank positions; 0 when the pair shares nothing."""
        if rank_a == rank_b:
            raise ValueError("self-similarity is not stored")
        a, b = min(rank_a, rank_b), max(rank_a, rank_b)
        lo = np.searchsorted(self.rank_a, a, side="left")
        hi = np.searchsorted(self.rank_a, a, side="right")
        pos = lo + np.searchsorted(self.rank_b[lo:hi], b)
        if pos < hi and self.rank_b[pos] == b:
            return float(self.score[pos])
        return 0.0

    def dense(self) -> np.ndarray:
        """Symmetric dense scores with zeros for absent pairs and the diagonal."""
        out = np.zeros((self.population, self.population))
        out[self.rank_a, self.rank_b] = self.score
        out[self.rank_b, self.rank_a] = self.score
        return out


def _partitions(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n))
    edges = [(k * n) // parts for k in range(parts + 1)]
    return [(edges[k], edges[k + 1]) for k in range(parts) if edges[k + 1] > edges[k]]


def co_counts(matrix: InteractionMatrix, axis: Axis, entities: np.ndarray | None = None,
              threads: int = 1) -> sp.csr_matrix:
    """Integer co-interaction counts between entities on ``axis``.

    ``entities`` restricts (and orders) the output rows/columns. The sum runs
    over partitions of the opposite axis; each partition is a block of
    inverted-index postings.
    """
    postings = matrix.axis_view("item" if axis == "user" else "user").astype(np.int64)
    if entities is not None:
        postings = postings[:, entities]
    blocks = _partitions(postings.shape[0], threads)

    def accumulate(block):
        part = postings[block[0]:block[1]]
        return (part.T @ part).tocsr()

    if len(blocks) == 1:
        total = accumulate(blocks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            pieces = list(pool.map(accumulate, blocks))
        total = pieces[0]
        for piece in pieces[1:]:
            total = total + piece
    total = total.tocsr()
    total.eliminate_zeros()
    return total


def pairwise_similarity(matrix: InteractionMatrix, axis: Axis, metric: str = "jaccard",
                        top_r: int | None = None, threads: int = 1) -> SimilarityMatrix:
    """Scores for every pair of entities sharing at least one interaction.

    With ``top_r`` only the ``top_r`` most popular entities on ``axis`` are
    paired; co-counts still use the full opposite axis.
    """
    metric = METRIC_ALIASES.get(metric, metric)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    ranking = popularity_ranking(matrix, axis)
    population = len(ranking) if top_r is None else min(top_r, len(ranking))
    # rows/columns of the co-count matrix are rank positions
    selected = ranking.order[:population]
    co = sp.triu(co_counts(matrix, axis, selected, threads), k=1).tocoo()
    order = np.lexsort((co.col, co.row))
    rank_a = co.row[order].astype(np.int64)
    rank_b = co.col[order].astype(np.int64)
    counts = co.data[order]
    sizes = ranking.counts[selected]
    score = score_from_counts(counts, sizes[rank_a], sizes[rank_b], metric)
    return SimilarityMatrix(axis, metric, population, rank_a, rank_b, score, ranking)


def naive_pairwise_similarity(matrix: InteractionMatrix, axis: Axis, metric: str = "jaccard") -> dict:
    """All-pairs set-intersection reference keyed by 0-based rank positions."""
    metric = METRIC_ALIASES.get(metric, metric)
    ranking = popularity_ranking(matrix, axis)
    view = matrix.axis_view(axis)
    sets = [set(view.indices[view.indptr[e]:view.indptr[e + 1]].tolist()) for e in ranking.order]
    fn = {"jaccard": jaccard, "cosine-l1": cosine_l1, "cosine-l2": cosine_l2}[metric]
    out = {}
    for a in range(len(sets)):
        for b in range(a + 1, len(sets)):
            if sets[a] & sets[b]:
                out[(a, b)] = fn(sets[a], sets[b])
    return out


def predict_rating_paper(sim: SimilarityMatrix, matrix: InteractionMatrix, user_id: int, item_id: int) -> float:
    """Mean of sim(i, k) over users k != i with sim(i, k) > 0 who clicked the item.

    Returns 0.0 when no such neighbour exists.
    """
    if sim.axis != "user":
        raise ValueError("rating prediction needs a user-axis similarity matrix")
    u = matrix.index_of("user", user_id)
    j = matrix.index_of("item", item_id)
    me = int(sim.ranking.rank_of[u])
    if me >= sim.population:
        raise KeyError(f"user {user_id} is outside the similarity matrix (top-R cap)")
    scores = []
    for k in matrix.column(j):
        if k == u:
            continue
        other = int(sim.ranking.rank_of[k])
        if other >= sim.population:
            continue
        value = sim.get(me, other)
        if value > 0:
            scores.append(value)
    if not scores:
        return 0.0
    return math.fsum(scores) / len(scores)


@dataclass(frozen=True)
class HeatmapGrid:
    """Symmetric B x B grid of mean pair scores over rank bins.

    ``pair_count[a, b]`` is the number of unordered entity pairs with one
    member in bin a and the other in bin b, so the distinct pairs total
    ``population * (population - 1) / 2`` over the upper triangle.
    """

    edges: np.ndarray  # B + 1 rank-position boundaries
    mean: np.ndarray
    pair_count: np.ndarray
    population: int

    @property
    def bins(self) -> int:
        return len(self.edges) - 1

    def total_pairs(self) -> int:
        return int(np.triu(self.pair_count).sum())

    def block_mean(self, rows: slice, cols: slice) -> float:
        """Pair-weighted mean score over a block of cells."""
        counts = self.pair_count[rows, cols]
        total = counts.sum()
        if total == 0:
            return float("nan")
        sums = np.nan_to_num(self.mean[rows, cols]) * counts
        return float(sums.sum() / total)

    def labels(self) -> list[str]:
        p = self.population
        return [f"{100 * lo / p:.1f}-{100 * hi / p:.1f}%" for lo, hi in zip(self.edges[:-1], self.edges[1:])]


def bin_edges(population: int, bins: int) -> np.ndarray:
    return (np.arange(bins + 1, dtype=np.int64) * population) // bins


def rank_binned_grid(sim: SimilarityMatrix, bins: int = DEFAULT_BINS) -> HeatmapGrid:
    p = sim.population
    if not 1 <= bins <= p:
        raise ValueError(f"bins must be in 1..{p}, got {bins}")
    edges = bin_edges(p, bins)
    sizes = np.diff(edges)
    bin_of = np.repeat(np.arange(bins), sizes)
    counts = np.outer(sizes, sizes).astype(np.int64)
    np.fill_diagonal(counts, sizes * (sizes - 1) // 2)
    sums = np.zeros((bins, bins))
    np.add.at(sums, (bin_of[sim.rank_a], bin_of[sim.rank_b]), sim.score)
    sums = np.triu(sums) + np.triu(sums, k=1).T
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return HeatmapGrid(edges, mean, counts, p)


@dataclass(frozen=True)
class NeighborhoodProfile:
    """Co-interacting entity counts listed in popularity-rank order."""

    axis: Axis
    ids: np.ndarray     # entity id at each rank
    counts: np.ndarray  # neighbours at each rank

    @property
    def ranks(self) -> np.ndarray:
        return np.arange(1, len(self.counts) + 1)

    def loglog_slope(self, max_rank: int | None = None) -> float:
        return loglog_slope(self.counts[:max_rank])


DENSE_NEIGHBOR_LIMIT = 4_000_000  # max entities^2 for the dense product


def neighbor_counts(matrix: InteractionMatrix, axis: Axis, threads: int = 1) -> np.ndarray:
    """Distinct co-interacting entities per dense index on ``axis``.

    Small populations use a dense float32 product of the same postings
    (exact while co-counts stay below 2**24).
    """
    view = matrix.axis_view(axis)
    n, inner = view.shape
    if n * n <= DENSE_NEIGHBOR_LIMIT and inner < 2 ** 24:
        x = view.toarray().astype(np.float32)
        co = x @ x.T
        np.fill_diagonal(co, 0)
        return np.count_nonzero(co, axis=1)
    co = co_counts(matrix, axis, threads=threads)
    co.setdiag(0)
    co.eliminate_zeros()
    return np.diff(co.indptr)


def neighborhood_sizes(matrix: InteractionMatrix, axis: Axis, threads: int = 1) -> NeighborhoodProfile:
    ranking = popularity_ranking(matrix, axis)
    counts = neighbor_counts(matrix, axis, threads)
    return NeighborhoodProfile(axis, matrix.ids(axis)[ranking.order], counts[ranking.order])


def naive_neighbor_count(matrix: InteractionMatrix, axis: Axis, index: int) -> int:
    view = matrix.axis_view(axis)
    mine = set(view.indices[view.indptr[index]:view.indptr[index + 1]].tolist())
    total = 0
    for other in range(view.shape[0]):
        if other == index:
            continue
        theirs = view.indices[view.indptr[other]:view.indptr[other + 1]]
        if mine.intersection(theirs.tolist()):
            total += 1
    return total


def loglog_slope(values, ranks=None) -> float:
    """Least-squares slope of log(value) on log(rank), positive values only."""
    values = np.asarray(values, dtype=np.float64)
    ranks = np.arange(1, len(values) + 1) if ranks is None else np.asarray(ranks, dtype=np.float64)
    keep = values > 0
    if keep.sum() < 2:
        raise ValueError("need at least 2 positive values for a log-log slope")
    return float(np.polyfit(np.log(ranks[keep]), np.log(values[keep]), 1)[0])
