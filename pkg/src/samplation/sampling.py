"""Probabilistic sampling primitives and the reverse-bias allocator.

Three layers: uniform streaming selection (reservoir, after Vitter's
Algorithm R), classical simple random sampling without replacement, and the
allocator that turns observed prediction shares into per-reserve draw
counts with the bias inverted.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .dataset import Dataset, concat
from .errors import CapacityError, ConfigError, SizeError
from .rng import bounded_int, spawn_seed

__all__ = [
    "Allocation",
    "ReservoirSample",
    "reservoir_sample",
    "srs_without_replacement",
    "reverse_allocation",
    "draw_from_reserves",
    "inclusion_frequencies",
    "srs_inclusion_frequencies",
    "write_frequency_csv",
]


@dataclass(frozen=True)
class Allocation:
    """Per-group draw counts summing to the sample size ``tau``."""

    counts: tuple[int, ...]
    tau: int

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if any(c < 0 for c in self.counts):
            raise ConfigError(f"negative allocation count in {self.counts}")
        if sum(self.counts) != self.tau:
            raise ConfigError(f"allocation counts {self.counts} do not sum "
                              f"to tau={self.tau}")


@dataclass(frozen=True)
class ReservoirSample:
    """Result of a reservoir pass; ``short`` flags a stream below size n."""

    items: list
    short: bool

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def reservoir_sample(stream: Iterable, n: int, seed: int) -> ReservoirSample:
    """Uniform sample of n items from a stream of unknown length.

    Single pass, O(n) memory.  The first n items fill the reservoir; each
    later item j (0-based) displaces a uniformly chosen slot with
    probability n/(j+1), which gives every item inclusion probability n/M
    for a stream of length M.  A stream shorter than n comes back whole
    with ``short=True`` so the caller can decide.
    """
    if n < 0:
        raise SizeError(f"sample size must be >= 0, got {n}")
    if n == 0:
        return ReservoirSample([], False)
    items: list = []
    for j, value in enumerate(stream):
        if j < n:
            items.append(value)
            continue
        alpha = bounded_int(seed, j, j + 1)
        if alpha < n:
            items[alpha] = value
    return ReservoirSample(items, len(items) < n)


def srs_without_replacement(ds: Dataset, n: int, seed: int) -> Dataset:
    """n distinct instances, uniform over all n-subsets; order randomized."""
    if n < 0:
        raise SizeError(f"sample size must be >= 0, got {n}")
    if n > len(ds):
        raise SizeError(f"cannot draw {n} from {len(ds)} instances "
                        "without replacement")
    return ds.take(kernels.srs_indices(len(ds), n, seed))


def reverse_allocation(pred_shares: Sequence[float], tau: int) -> Allocation:
    """Split ``tau`` across groups proportionally to the *other* groups'
    predicted shares.

    Weights are (1 - share_g) / (K - 1): with two groups this is exactly the
    opposite group's share, and in general a group seen more often in the
    predictions draws less from its reserve.  Integer counts come from
    largest-remainder rounding (ties to the lower group id), so they always
    sum to tau.
    """
    shares = np.asarray(pred_shares, dtype=np.float64)
    if shares.ndim != 1 or len(shares) < 2:
        raise ConfigError("reverse allocation needs at least two groups")
    if tau < 0:
        raise ConfigError(f"tau must be >= 0, got {tau}")
    if (shares < 0).any() or not np.isfinite(shares).all():
        raise ConfigError(f"shares must be finite and non-negative: {shares}")
    if abs(shares.sum() - 1.0) > 1e-9:
        raise ConfigError(f"shares must sum to 1, got {shares.sum()!r}")
    k = len(shares)
    if k == 2:
        # the two-group rule verbatim: each group's quota is the other
        # group's share (exact, no 1-s round trip)
        weights = shares[::-1].copy()
    else:
        weights = (1.0 - shares) / (k - 1)
    raw = tau * weights
    counts = np.floor(raw).astype(np.int64)
    leftover = int(tau - counts.sum())
    if leftover:
        remainders = raw - counts
        order = np.lexsort((np.arange(k), -remainders))
        counts[order[:leftover]] += 1
    return Allocation(tuple(int(c) for c in counts), tau)


def draw_from_reserves(reserves: Sequence, alloc: Allocation,
                       seed: int) -> Dataset:
    """Concatenation of per-reserve uniform draws of the allocated counts.

    ``alloc.counts[i]`` applies to ``reserves[i]``; the output's group
    composition therefore equals the allocation exactly, whatever the seed.
    Each reserve is sampled with an independent child seed.
    """
    if len(alloc.counts) != len(reserves):
        raise ConfigError(f"allocation has {len(alloc.counts)} entries for "
                          f"{len(reserves)} reserves")
    parts = []
    for i, (reserve, count) in enumerate(zip(reserves, alloc.counts)):
        pool: Dataset = reserve.data
        if count > len(pool):
            raise CapacityError(
                f"allocation asks {count} instances from the reserve of "
                f"group {reserve.group}, which holds {len(pool)}",
                group=reserve.group)
        idx = kernels.srs_indices(len(pool), count, spawn_seed(seed, reserve.group))
        parts.append(pool.take(idx))
    return concat(parts, name="reverse-biased sample")


# -- Monte-Carlo summaries ----------------------------------------------------


def inclusion_frequencies(m: int, n: int, trials: int, seed: int) -> np.ndarray:
    """Per-item inclusion frequency of reservoir sampling over seeded trials.

    Trial t runs with child seed spawn_seed(seed, t); frequencies converge
    to n/m.
    """
    return kernels.reservoir_counts(m, n, trials, seed) / float(trials)


def srs_inclusion_frequencies(m: int, n: int, trials: int, seed: int) -> np.ndarray:
    """Per-item inclusion frequency of SRS draws over seeded trials."""
    return kernels.srs_counts(m, n, trials, seed) / float(trials)


def write_frequency_csv(frequencies: np.ndarray, path) -> None:
    """Emit `item_index,frequency` rows (full float precision)."""
    lines = ["item_index,frequency"]
    lines += [f"{i},{repr(float(f))}" for i, f in enumerate(frequencies)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8",
                          newline="\n")
