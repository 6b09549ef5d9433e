"""Backend equivalence: the compiled and numpy kernels must agree bit for bit,
and both must agree with the scalar reference in `samplation.rng`."""

import numpy as np
import pytest

from samplation import rng
from samplation.kernels import available_backends, load_backend

BACKENDS = available_backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2,
                                reason="compiled backend not built")


@pytest.fixture(params=BACKENDS)
def kern(request):
    return load_backend(request.param)


# -- scalar reference ----------------------------------------------------------


def test_substream_matches_published_splitmix_vector():
    # first outputs of SplitMix64 seeded with 0 (state += golden gamma,
    # then finalize); our substream(0, i) is exactly that sequence
    assert rng.substream(0, 0) == 0xE220A8397B1DCDAF
    assert rng.mix64(rng.GAMMA) == 0xE220A8397B1DCDAF


def test_bounded_int_range_and_determinism():
    for bound in (1, 2, 3, 7, 8, 100, 2**40):
        vals = [rng.bounded_int(99, i, bound) for i in range(200)]
        assert all(0 <= v < bound for v in vals)
        assert vals == [rng.bounded_int(99, i, bound) for i in range(200)]
    with pytest.raises(ValueError):
        rng.bounded_int(1, 2, 0)


def _reference_reservoir(m, n, seed):
    """Scalar Algorithm R straight from the rng primitives."""
    res = list(range(min(n, m)))
    for j in range(n, m):
        alpha = rng.bounded_int(seed, j, j + 1)
        if alpha < n:
            res[alpha] = j
    return res


def _reference_srs(m, n, seed):
    a = list(range(m))
    for i in range(n):
        r = i + rng.bounded_int(seed, i, m - i)
        a[i], a[r] = a[r], a[i]
    return a[:n]


@pytest.mark.parametrize("m,n,seed", [(5, 5, 0), (20, 5, 1), (3, 1, 7),
                                      (100, 7, 42), (13, 13, 9), (50, 1, 3)])
def test_kernels_match_scalar_reference(kern, m, n, seed):
    assert kern.reservoir_indices(m, n, seed).tolist() == _reference_reservoir(m, n, seed)
    assert kern.srs_indices(m, n, seed).tolist() == _reference_srs(m, n, seed)


def test_counts_equal_per_trial_runs(kern):
    trials = 300
    counts = kern.reservoir_counts(12, 4, trials, 77)
    manual = np.zeros(12, dtype=np.int64)
    for t in range(trials):
        for i in kern.reservoir_indices(12, 4, rng.spawn_seed(77, t)):
            manual[i] += 1
    assert np.array_equal(counts, manual)

    counts = kern.srs_counts(9, 3, trials, 5)
    manual = np.zeros(9, dtype=np.int64)
    for t in range(trials):
        for i in kern.srs_indices(9, 3, rng.spawn_seed(5, t)):
            manual[i] += 1
    assert np.array_equal(counts, manual)


# -- cross-backend bit equality --------------------------------------------------


@needs_both
@pytest.mark.parametrize("m,n", [(0, 0), (1, 1), (5, 5), (20, 5), (3, 1),
                                 (64, 16), (257, 31)])
def test_backend_parity_sampling(m, n):
    c, py = load_backend("c"), load_backend("py")
    for seed in (0, 1, 999, 2**63):
        assert np.array_equal(c.reservoir_indices(m, n, seed),
                              py.reservoir_indices(m, n, seed))
        assert np.array_equal(c.srs_indices(m, n, seed),
                              py.srs_indices(m, n, seed))
    assert np.array_equal(c.reservoir_counts(m, n, 200, 3),
                          py.reservoir_counts(m, n, 200, 3))
    assert np.array_equal(c.srs_counts(m, n, 200, 3),
                          py.srs_counts(m, n, 200, 3))


@needs_both
@pytest.mark.parametrize("p,d,k", [(10, 2, 1), (40, 6, 5), (100, 3, 7),
                                   (25, 7, 24)])
def test_backend_parity_generation(p, d, k):
    c, py = load_backend("c"), load_backend("py")
    pool = np.ascontiguousarray(np.random.default_rng(p).normal(size=(p, d)))
    nn_c = c.knn_table(pool, k)
    nn_py = py.knn_table(pool, k)
    assert np.array_equal(nn_c, nn_py)
    out_c = c.smote_fill(pool, nn_c, 500, 11)
    out_py = py.smote_fill(pool, nn_py, 500, 11)
    for a, b in zip(out_c, out_py):
        assert np.array_equal(a, b)


@needs_both
def test_backend_parity_with_duplicate_points():
    c, py = load_backend("c"), load_backend("py")
    pool = np.ascontiguousarray(
        np.repeat(np.arange(6, dtype=np.float64), 3).reshape(-1, 1))
    assert np.array_equal(c.knn_table(pool, 4), py.knn_table(pool, 4))


# -- knn against an independent oracle -------------------------------------------


def _knn_oracle(pool, k):
    """Full-precision distances via hypot-free norm, lexicographic order."""
    p = pool.shape[0]
    out = np.empty((p, k), dtype=np.int64)
    for i in range(p):
        d = np.linalg.norm(pool - pool[i], axis=1)
        d[i] = np.inf
        order = np.lexsort((np.arange(p), d))
        out[i] = order[:k]
    return out


def test_knn_table_matches_oracle(kern):
    pool = np.ascontiguousarray(
        np.random.default_rng(8).normal(size=(60, 5)))
    # continuous data: no ties, so sqrt vs squared distances rank identically
    assert np.array_equal(kern.knn_table(pool, 6), _knn_oracle(pool, 6))


def test_knn_table_duplicate_tie_breaks_to_lower_index(kern):
    pool = np.ascontiguousarray(np.array(
        [[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [9.0, 9.0]]))
    nn = kern.knn_table(pool, 3)
    assert nn[0].tolist() == [1, 2, 3]
    # the three duplicates sit at distance 0 from each other
    assert nn[1].tolist() == [2, 3, 0]
    assert nn[2].tolist() == [1, 3, 0]


def test_smote_fill_outputs_in_range(kern):
    pool = np.ascontiguousarray(np.random.default_rng(4).normal(size=(30, 3)))
    nn = kern.knn_table(pool, 5)
    synth, base, pick, lam = kern.smote_fill(pool, nn, 400, 21)
    assert synth.shape == (400, 3)
    assert base.min() >= 0 and base.max() < 30
    assert pick.min() >= 0 and pick.max() < 5
    assert (lam >= 0).all() and (lam < 1).all()
    # interpolation identity, checked independently per point
    for i in (0, 17, 399):
        b = pool[base[i]]
        nbr = pool[nn[base[i], pick[i]]]
        assert np.array_equal(synth[i], b + lam[i] * (nbr - b))


def test_reservoir_counts_total_is_conserved(kern):
    # every trial contributes exactly n inclusions
    counts = kern.reservoir_counts(17, 6, 250, 13)
    assert counts.sum() == 6 * 250
    counts = kern.srs_counts(17, 6, 250, 13)
    assert counts.sum() == 6 * 250
