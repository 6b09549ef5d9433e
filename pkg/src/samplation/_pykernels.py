"""Numpy implementation of the hot kernels (fallback backend).

Same arithmetic as ``_ckernels``: SplitMix64 substreams, bitmask-rejection
bounded integers, sequential-over-dimension distance accumulation.  The
Monte-Carlo kernels vectorize across trials, which is legal because every
trial draws from its own addressable substream (see ``rng``).

uint64 arithmetic relies on numpy's well-defined modulo-2**64 wraparound.
"""

from __future__ import annotations

import functools

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ONE = np.uint64(1)
_U53_SCALE = 2.0 ** -53

BACKEND_NAME = "python"


def _modular(fn):
    """Run ``fn`` with uint64 overflow warnings off: wraparound is intended."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(over="ignore"):
            return fn(*args, **kwargs)

    return wrapper


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _substream(key, index):
    # key and index may each be scalar or array; broadcasting applies
    return _mix64(key + (index + _ONE) * _GAMMA)


def _masks_for(bounds):
    """Smallest all-ones bitmask covering bound-1, per element."""
    m = (bounds - 1).astype(np.uint64)
    for shift in (1, 2, 4, 8, 16, 32):
        m |= m >> np.uint64(shift)
    return m


def _bounded_vec(keys, bounds):
    """Per-element uniform integers in [0, bounds[i]).

    ``keys`` are the per-element substream keys; rejection attempts advance
    each element's private counter only, exactly like the scalar
    ``rng.bounded_int``.
    """
    bounds = np.asarray(bounds, dtype=np.int64)
    out = np.zeros(bounds.shape, dtype=np.int64)
    pending = bounds > 1
    if not pending.any():
        return out
    masks = _masks_for(bounds)
    keys = np.broadcast_to(keys, bounds.shape)
    attempt = 0
    while pending.any():
        idx = np.nonzero(pending)[0]
        v = _substream(keys[idx], np.uint64(attempt)) & masks[idx]
        ok = v < bounds[idx].astype(np.uint64)
        out[idx[ok]] = v[ok].astype(np.int64)
        pending[idx[ok]] = False
        attempt += 1
    return out


@_modular
def reservoir_indices(m: int, n: int, seed: int) -> np.ndarray:
    """Algorithm R over stream positions 0..m-1; returns reservoir content."""
    n_eff = min(n, m)
    res = np.arange(n_eff, dtype=np.int64)
    if n == 0 or m <= n:
        return res
    js = np.arange(n, m, dtype=np.uint64)
    keys = _substream(np.uint64(seed), js)
    alphas = _bounded_vec(keys, (js + _ONE).astype(np.int64))
    hit = alphas < n
    # replacements must land in stream order: later items overwrite earlier
    for j, a in zip(np.arange(n, m, dtype=np.int64)[hit], alphas[hit]):
        res[a] = j
    return res


@_modular
def reservoir_counts(m: int, n: int, trials: int, seed: int) -> np.ndarray:
    """Inclusion counts of items 0..m-1 over seeded reservoir trials.

    Trial t uses child seed substream(seed, t); bit-identical to running
    ``reservoir_indices`` once per trial.
    """
    counts = np.zeros(m, dtype=np.int64)
    if trials == 0 or n == 0 or m == 0:
        return counts
    if m <= n:
        counts[:] = trials
        return counts
    tkeys = _substream(np.uint64(seed), np.arange(trials, dtype=np.uint64))
    res = np.tile(np.arange(n, dtype=np.int64), (trials, 1))
    full_bound = np.empty(trials, dtype=np.int64)
    for j in range(n, m):
        kj = _substream(tkeys, np.uint64(j))
        full_bound[:] = j + 1
        alpha = _bounded_vec(kj, full_bound)
        sel = alpha < n
        res[sel, alpha[sel]] = j
    return np.bincount(res.ravel(), minlength=m).astype(np.int64)


@_modular
def srs_indices(m: int, n: int, seed: int) -> np.ndarray:
    """n distinct indices from 0..m-1, uniform over ordered n-tuples.

    Partial Fisher-Yates; n == m yields a full random permutation.
    """
    a = np.arange(m, dtype=np.int64)
    if n == 0:
        return a[:0]
    keys = _substream(np.uint64(seed), np.arange(n, dtype=np.uint64))
    offs = _bounded_vec(keys, (m - np.arange(n)).astype(np.int64))
    for i in range(n):
        r = i + offs[i]
        a[i], a[r] = a[r], a[i]
    return a[:n]


@_modular
def srs_counts(m: int, n: int, trials: int, seed: int) -> np.ndarray:
    """Inclusion counts over seeded ``srs_indices`` trials (vectorized)."""
    counts = np.zeros(m, dtype=np.int64)
    if trials == 0 or n == 0:
        return counts
    tkeys = _substream(np.uint64(seed), np.arange(trials, dtype=np.uint64))
    a = np.tile(np.arange(m, dtype=np.int64), (trials, 1))
    rows = np.arange(trials)
    bound = np.empty(trials, dtype=np.int64)
    for i in range(n):
        ki = _substream(tkeys, np.uint64(i))
        bound[:] = m - i
        r = i + _bounded_vec(ki, bound)
        vi = a[rows, i].copy()
        a[rows, i] = a[rows, r]
        a[rows, r] = vi
    return np.bincount(a[:, :n].ravel(), minlength=m).astype(np.int64)


@_modular
def smote_fill(pool: np.ndarray, nn: np.ndarray, count: int, seed: int):
    """Interpolated synthetic rows from a feature pool.

    For synthetic point i: pick a base row, one of its ``nn`` neighbors and
    an interpolation weight lam in [0, 1); emit base + lam * (neighbor -
    base).  Returns (points, base_idx, neighbor_slot, lam).
    """
    p = pool.shape[0]
    k = nn.shape[1]
    ki = _substream(np.uint64(seed), np.arange(count, dtype=np.uint64))
    base = _bounded_vec(_substream(ki, np.uint64(0)),
                        np.full(count, p, dtype=np.int64))
    pick = _bounded_vec(_substream(ki, np.uint64(1)),
                        np.full(count, k, dtype=np.int64))
    raw = _substream(_substream(ki, np.uint64(2)), np.uint64(0))
    lam = (raw >> np.uint64(11)).astype(np.float64) * _U53_SCALE
    b = pool[base]
    nbr = pool[nn[base, pick]]
    synth = b + lam[:, None] * (nbr - b)
    return synth, base, pick, lam


@_modular
def knn_table(pool: np.ndarray, k: int, block: int = 1024) -> np.ndarray:
    """k nearest neighbors of every row (Euclidean, self excluded).

    Ties break toward the lower index.  Squared distances accumulate one
    dimension at a time so the compiled backend, which loops dimensions the
    same way, lands on identical floats.
    """
    p, d = pool.shape
    out = np.empty((p, k), dtype=np.int64)
    for s in range(0, p, block):
        e = min(s + block, p)
        d2 = np.zeros((e - s, p), dtype=np.float64)
        for t in range(d):
            diff = pool[s:e, t][:, None] - pool[:, t][None, :]
            d2 += diff * diff
        d2[np.arange(e - s), np.arange(s, e)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        out[s:e] = order[:, :k]
    return out
