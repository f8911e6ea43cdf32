"""Click logs, binary user x item incidence, popularity ranks, synthetic logs.

The on-disk format is the hetrec-2011 Lastfm ``user_artists.dat`` layout:
a header line ``userID\\tartistID\\tweight`` followed by tab-separated
integer rows. Weights are kept in the log but every matrix is binary.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import BinaryIO, Iterable, Literal

import numpy as np
import scipy.sparse as sp

from .errors import EmptyLogError, ParseError
from .zipf import ZipfModel

Axis = Literal["user", "item"]
HEADER = "userID\tartistID\tweight"


@dataclass(frozen=True)
class InteractionLog:
    """Deduplicated (user, item, weight) records sorted by (user, item)."""

    users: np.ndarray
    items: np.ndarray
    weights: np.ndarray
    lines_read: int = 0
    lines_skipped: int = 0

    def __len__(self):
        return len(self.users)

    @property
    def n_users(self) -> int:
        return len(np.unique(self.users))

    @property
    def n_items(self) -> int:
        return len(np.unique(self.items))

    @classmethod
    def from_records(cls, records: Iterable[tuple[int, int, int]], **counters):
        """Merge duplicate (user, item) pairs by summing weights."""
        merged: dict[tuple[int, int], int] = {}
        for user, item, weight in records:
            if weight < 1:
                raise ValueError(f"weight must be >= 1, got {weight} for ({user}, {item})")
            key = (int(user), int(item))
            merged[key] = merged.get(key, 0) + int(weight)
        keys = sorted(merged)
        users = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        items = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        weights = np.fromiter((merged[k] for k in keys), dtype=np.int64, count=len(keys))
        return cls(users, items, weights, **counters)

    def records(self):
        return zip(self.users.tolist(), self.items.tolist(), self.weights.tolist())


def ingest_lastfm_tsv(source: BinaryIO) -> InteractionLog:
    """Parse a Lastfm-style TSV byte stream.

    Blank lines are skipped and counted; a third column, when present, is
    the listen weight (default 1). Raises ``ParseError`` naming the line on
    malformed input and ``EmptyLogError`` when no data lines remain.
    """
    text = io.TextIOWrapper(source, encoding="utf-8", newline=None)
    records = []
    lines_read = 0
    skipped = 0
    header_seen = False
    for line_number, raw in enumerate(text, start=1):
        lines_read += 1
        line = raw.rstrip("\r\n")
        if not header_seen:
            header_seen = True
            continue
        if not line.strip():
            skipped += 1
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise ParseError(line_number, f"expected >= 2 tab-separated fields, got {line!r}")
        try:
            values = [int(f) for f in fields[:3]]
        except ValueError:
            raise ParseError(line_number, f"non-integer field in {line!r}") from None
        weight = values[2] if len(values) > 2 else 1
        if weight < 1:
            raise ParseError(line_number, f"weight must be >= 1, got {weight}")
        records.append((values[0], values[1], weight))
    text.detach()
    if not records:
        raise EmptyLogError("log has no data lines")
    return InteractionLog.from_records(records, lines_read=lines_read, lines_skipped=skipped)


def read_log(path) -> InteractionLog:
    with open(path, "rb") as fh:
        return ingest_lastfm_tsv(fh)


def serialize_log(log: InteractionLog) -> bytes:
    """Canonical TSV: header, records sorted by (user, item), LF endings."""
    lines = [HEADER]
    lines.extend(f"{u}\t{i}\t{w}" for u, i, w in log.records())
    return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """Binary incidence with dense indices assigned in ascending id order."""

    user_ids: np.ndarray
    item_ids: np.ndarray
    incidence: sp.csr_matrix  # users x items, int32 ones

    @property
    def shape(self) -> tuple[int, int]:
        return self.incidence.shape

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @cached_property
    def by_item(self) -> sp.csr_matrix:
        """items x users view (the transpose, in CSR form)."""
        return self.incidence.T.tocsr()

    def row(self, u: int) -> np.ndarray:
        """Sorted dense item indices of user ``u``."""
        m = self.incidence
        return m.indices[m.indptr[u]:m.indptr[u + 1]]

    def column(self, i: int) -> np.ndarray:
        """Sorted dense user indices of item ``i``."""
        m = self.by_item
        return m.indices[m.indptr[i]:m.indptr[i + 1]]

    def axis_view(self, axis: Axis) -> sp.csr_matrix:
        """Entities on ``axis`` as rows."""
        return self.incidence if axis == "user" else self.by_item

    def ids(self, axis: Axis) -> np.ndarray:
        return self.user_ids if axis == "user" else self.item_ids

    def index_of(self, axis: Axis, entity_id: int) -> int:
        ids = self.ids(axis)
        pos = int(np.searchsorted(ids, entity_id))
        if pos >= len(ids) or ids[pos] != entity_id:
            raise KeyError(f"unknown {axis} id {entity_id}")
        return pos

    def degrees(self, axis: Axis) -> np.ndarray:
        return np.diff(self.axis_view(axis).indptr)


def build_interaction_matrix(log: InteractionLog) -> InteractionMatrix:
    if len(log) == 0:
        raise EmptyLogError("cannot build a matrix from an empty log")
    user_ids, rows = np.unique(log.users, return_inverse=True)
    item_ids, cols = np.unique(log.items, return_inverse=True)
    data = np.ones(len(rows), dtype=np.int32)
    incidence = sp.csr_matrix((data, (rows, cols)), shape=(len(user_ids), len(item_ids)))
    incidence.sum_duplicates()
    incidence.data[:] = 1
    incidence.sort_indices()
    return InteractionMatrix(user_ids, item_ids, incidence)


@dataclass(frozen=True)
class RankMap:
    """``order[r]`` is the dense index holding popularity rank r + 1."""

    axis: Axis
    order: np.ndarray
    counts: np.ndarray  # per dense index

    @cached_property
    def rank_of(self) -> np.ndarray:
        """0-based rank position of each dense index."""
        pos = np.empty_like(self.order)
        pos[self.order] = np.arange(len(self.order))
        return pos

    @property
    def counts_by_rank(self) -> np.ndarray:
        return self.counts[self.order]

    def __len__(self):
        return len(self.order)


def rank_entities(counts: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Order by descending count, ties by ascending id."""
    return np.lexsort((ids, -np.asarray(counts)))


def popularity_ranking(matrix: InteractionMatrix, axis: Axis) -> RankMap:
    counts = matrix.degrees(axis)
    return RankMap(axis, rank_entities(counts, matrix.ids(axis)), counts)


@dataclass(frozen=True)
class GeneratorConfig:
    """Synthetic click-log parameters.

    Item ids are Zipf ranks 1..items and user ids are 1..users. With
    ``user_exponent`` unset every user makes ``clicks`` draws; otherwise the
    user of rank r makes ``max(1, ceil(clicks / r**user_exponent))`` draws.
    ``dedup`` collapses repeated draws into one set member; without it
    repeats are redrawn until the user holds ``min(clicks, items)``
    distinct items.
    """

    users: int
    items: int
    clicks: int = 20
    s: float = 1.0
    seed: int = 0
    dedup: bool = True
    user_exponent: float | None = None

    def __post_init__(self):
        if self.users < 1 or self.items < 1 or self.clicks < 1:
            raise ValueError("users, items and clicks must all be >= 1")

    def clicks_for(self, user_rank: int) -> int:
        if self.user_exponent is None:
            return self.clicks
        return max(1, math.ceil(self.clicks / user_rank ** self.user_exponent))


def _distinct_draws(model: ZipfModel, rng: np.random.Generator, want: int) -> np.ndarray:
    want = min(want, model.n)
    chosen = np.unique(model.sample(rng, want))
    while len(chosen) < want:
        chosen = np.union1d(chosen, model.sample(rng, want - len(chosen)))
    return chosen


def generate_synthetic_log(config: GeneratorConfig, rng: np.random.Generator | None = None) -> InteractionLog:
    """Synthetic log; weights are per-user draw multiplicities."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    model = ZipfModel(config.s, config.items)
    if config.user_exponent is None and config.dedup:
        draws = model.sample(rng, (config.users, config.clicks))
        users = np.repeat(np.arange(1, config.users + 1), config.clicks)
        return _log_from_pairs(users, draws.ravel())
    user_parts, item_parts = [], []
    for u in range(1, config.users + 1):
        c = config.clicks_for(u)
        items = model.sample(rng, c) if config.dedup else _distinct_draws(model, rng, c)
        user_parts.append(np.full(len(items), u, dtype=np.int64))
        item_parts.append(items)
    return _log_from_pairs(np.concatenate(user_parts), np.concatenate(item_parts))


def _log_from_pairs(users: np.ndarray, items: np.ndarray) -> InteractionLog:
    span = int(items.max()) + 1
    keys, weights = np.unique(users * span + items, return_counts=True)
    return InteractionLog(keys // span, keys % span, weights.astype(np.int64))


def generate_synthetic(config: GeneratorConfig, rng: np.random.Generator | None = None) -> InteractionMatrix:
    return build_interaction_matrix(generate_synthetic_log(config, rng))
