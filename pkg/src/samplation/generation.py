"""Synthetic reserve construction.

One reserve per observed value of the discriminant variable, filled with
interpolated (SMOTE-style) instances built strictly from that group's real
instances: a new point lies on the segment between a random base instance
and one of its k nearest same-group neighbors, and copies the base's label.
Keeping neighbor search inside the group pool preserves reserve purity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .dataset import Dataset, read_csv, write_csv
from .errors import ConfigError, GenerationError, SizeError
from .rng import spawn_seed

__all__ = [
    "Reserve",
    "SmoteTrace",
    "knn",
    "smote_generate",
    "smote_trace",
    "build_reserves",
    "save_reserve",
    "load_reserve",
    "load_reserves",
]

DEFAULT_K = 5


@dataclass
class Reserve:
    """Pool of synthetic instances for one discriminant value."""

    group: int
    data: Dataset
    base_count: int
    k: int
    seed: int

    def __len__(self) -> int:
        return len(self.data)


@dataclass(frozen=True)
class SmoteTrace:
    """Generated data plus the provenance of every synthetic point."""

    data: Dataset
    base_index: np.ndarray      # row in the pool each point started from
    neighbor_index: np.ndarray  # pool row of the chosen neighbor
    lam: np.ndarray             # interpolation weight in [0, 1)


def knn(points, query_index: int, k: int,
        metric: str = "euclidean") -> np.ndarray:
    """Indices of the k nearest points to ``points[query_index]``.

    The metric is fixed to Euclidean (the parameter exists to make that
    explicit); the query itself is excluded and exact ties break toward
    the lower index.
    """
    if metric != "euclidean":
        raise ConfigError(f"only the euclidean metric is supported, "
                          f"got {metric!r}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise SizeError("points must be a 2-d array-like")
    p, d = pts.shape
    if k < 1:
        raise SizeError(f"k must be >= 1, got {k}")
    if k > p - 1:
        raise SizeError(f"k={k} exceeds the {p - 1} available neighbors")
    # accumulate per dimension, matching the kernel backends bit for bit
    d2 = np.zeros(p, dtype=np.float64)
    for t in range(d):
        diff = pts[:, t] - pts[query_index, t]
        d2 += diff * diff
    d2[query_index] = np.inf
    return np.argsort(d2, kind="stable")[:k].astype(np.int64)


def smote_trace(group_pool: Dataset, count: int, k: int, seed: int) -> SmoteTrace:
    """Like `smote_generate` but keeps per-point provenance."""
    if len(group_pool) < 2:
        raise GenerationError(
            f"need at least 2 instances to interpolate, got {len(group_pool)}",
            group=int(group_pool.groups[0]) if len(group_pool) else None)
    groups = np.unique(group_pool.groups)
    if len(groups) != 1:
        raise GenerationError(f"pool mixes groups {groups.tolist()}")
    if k < 1 or k > len(group_pool) - 1:
        raise SizeError(f"k={k} invalid for a pool of {len(group_pool)}")
    if count < 0:
        raise SizeError(f"count must be >= 0, got {count}")
    nn = kernels.knn_table(np.ascontiguousarray(group_pool.features), k)
    synth, base, pick, lam = kernels.smote_fill(
        np.ascontiguousarray(group_pool.features), nn, count, seed)
    data = Dataset(synth,
                   group_pool.labels[base] if count else np.empty(0, np.int64),
                   np.full(count, groups[0], dtype=np.int64),
                   np.ones(count, dtype=bool),
                   n_labels=group_pool.n_labels,
                   n_groups=group_pool.n_groups)
    neighbor = nn[base, pick] if count else np.empty(0, np.int64)
    return SmoteTrace(data, base, neighbor, lam)


def smote_generate(group_pool: Dataset, count: int, k: int, seed: int) -> Dataset:
    """``count`` interpolated instances from one group's pool.

    Each point is base + lam * (neighbor - base) for a uniformly chosen
    base, a uniform pick among its k nearest same-group neighbors and lam
    uniform on [0, 1); the label is copied from the base instance.
    """
    return smote_trace(group_pool, count, k, seed).data


def build_reserves(train: Dataset, reserve_size: int, k: int = DEFAULT_K,
                   seed: int = 0) -> list[Reserve]:
    """One reserve per group value observed in ``train``.

    Every reserve holds exactly ``reserve_size`` synthetic instances grown
    from that group's real instances only.  Groups draw independent child
    seeds, so adding a group never reshuffles another group's reserve.  A
    group with fewer than 2 real instances fails the whole call -- no
    partial reserves.  k is capped per group at pool size - 1.
    """
    if reserve_size < 0:
        raise SizeError(f"reserve_size must be >= 0, got {reserve_size}")
    present = [int(g) for g in np.unique(train.groups)]
    pools = {g: train.take(train.group_indices(g)) for g in present}
    for g in present:
        if len(pools[g]) < 2:
            raise GenerationError(
                f"group {g} has {len(pools[g])} real instance(s); at least 2 "
                "are required to build its reserve", group=g)
    reserves = []
    for g in present:
        pool = pools[g]
        k_eff = min(k, len(pool) - 1)
        child = spawn_seed(seed, g)
        data = smote_generate(pool, reserve_size, k_eff, child)
        reserves.append(Reserve(group=g, data=data, base_count=len(pool),
                                k=k_eff, seed=child))
    return reserves


# -- persistence ---------------------------------------------------------------


def save_reserve(reserve: Reserve, directory) -> None:
    """Write a reserve as `reserve_<g>.csv` plus a JSON metadata sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(reserve.data, directory / f"reserve_{reserve.group}.csv")
    meta = {
        "group": reserve.group,
        "base_count": reserve.base_count,
        "k": reserve.k,
        "seed": reserve.seed,
        "reserve_size": len(reserve.data),
    }
    (directory / f"reserve_{reserve.group}.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def load_reserve(directory, group: int, *, n_labels: int | None = None,
                 n_groups: int | None = None) -> Reserve:
    directory = Path(directory)
    meta = json.loads((directory / f"reserve_{group}.json").read_text())
    data = read_csv(directory / f"reserve_{group}.csv",
                    n_labels=n_labels, n_groups=n_groups)
    return Reserve(group=meta["group"], data=data,
                   base_count=meta["base_count"], k=meta["k"],
                   seed=meta["seed"])


def load_reserves(directory, *, n_labels: int | None = None,
                  n_groups: int | None = None) -> list[Reserve]:
    """Load every `reserve_<g>.csv`/`.json` pair found, sorted by group."""
    directory = Path(directory)
    groups = sorted(int(p.stem.split("_")[1])
                    for p in directory.glob("reserve_*.json"))
    return [load_reserve(directory, g, n_labels=n_labels, n_groups=n_groups)
            for g in groups]
