"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with the measured values (run with -s to see them live)."""

import subprocess
import sys
import time

import numpy as np
import pytest

from samplation import kernels
from samplation.dataset import Dataset, write_csv
from samplation.errors import ApplicabilityError
from samplation.fairness import Attestations
from samplation.generation import smote_trace
from samplation.model import Model, loss_and_grad
from samplation.pipeline import ScenarioConfig, run_scenario
from samplation.sampling import reverse_allocation

MASTER_SEED = 20_240_211


def _verdict(name: str, ok: bool, detail: str) -> bool:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


# -- criterion 1: reservoir uniformity -------------------------------------------


def test_criterion_1_reservoir_uniformity():
    m, n, trials = 20, 5, 200_000
    t0 = time.perf_counter()
    counts = kernels.reservoir_counts(m, n, trials, MASTER_SEED)
    elapsed = time.perf_counter() - t0
    freq = counts / trials
    dev = float(np.abs(freq - n / m).max())
    ok = dev <= 0.01 and elapsed < 10.0
    assert _verdict("criterion 1 (reservoir uniformity)", ok,
                    f"max |freq - 0.25| = {dev:.5f}, {trials} trials in "
                    f"{elapsed:.2f}s on backend '{kernels.BACKEND}'")


# -- criterion 2: SMOTE geometry ---------------------------------------------------


def _on_segment(x, a, b, tol=1e-9):
    ab = b - a
    ax = x - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return bool(np.abs(ax).max() <= tol)
    t = float(ax @ ab) / denom
    if t < -tol or t > 1.0 + tol:
        return False
    return bool(np.abs(ax - t * ab).max() <= tol)


def test_criterion_2_smote_geometry():
    gen = np.random.default_rng(MASTER_SEED)
    generations = 1000
    checked = 0
    bad = 0
    for g in range(generations):
        p = int(gen.integers(3, 30))
        d = int(gen.integers(1, 6))
        k = int(gen.integers(1, p))
        count = int(gen.integers(1, 12))
        feats = gen.normal(scale=gen.uniform(0.1, 10.0), size=(p, d))
        labels = gen.integers(0, 4, size=p)
        pool = Dataset(feats, labels, np.full(p, 2), n_labels=4, n_groups=3)
        trace = smote_trace(pool, count, k, seed=int(gen.integers(2**63)))
        lo = feats.min(axis=0) - 1e-9
        hi = feats.max(axis=0) + 1e-9
        for i in range(count):
            checked += 1
            x = trace.data.features[i]
            a = feats[trace.base_index[i]]
            b = feats[trace.neighbor_index[i]]
            segment_ok = _on_segment(x, a, b)
            box_ok = bool(((x >= lo) & (x <= hi)).all())
            label_ok = trace.data.labels[i] == labels[trace.base_index[i]]
            if not (segment_ok and box_ok and label_ok):
                bad += 1
    ok = bad == 0
    assert _verdict("criterion 2 (SMOTE geometry)", ok,
                    f"{checked} synthetic points from {generations} "
                    f"generations, {bad} violations")


# -- criterion 3: gradient oracle ----------------------------------------------------


def test_criterion_3_gradient_oracle():
    gen = np.random.default_rng(MASTER_SEED + 3)
    worst = 0.0
    for _ in range(100):
        d = int(gen.integers(1, 6))
        n_labels = int(gen.integers(2, 5))
        n = int(gen.integers(2, 16))
        model = Model(gen.normal(size=(n_labels, d)),
                      gen.normal(size=n_labels))
        batch = Dataset(gen.normal(size=(n, d)),
                        gen.integers(0, n_labels, size=n),
                        np.zeros(n, dtype=int), n_labels=n_labels)
        l2 = float(gen.choice([0.0, 0.01, 0.1]))
        _, (gw, gb) = loss_and_grad(model, batch, l2)
        eps = 1e-5
        fd_w = np.zeros_like(gw)
        for idx in np.ndindex(gw.shape):
            hi = model.weights.copy(); hi[idx] += eps
            lo = model.weights.copy(); lo[idx] -= eps
            fd_w[idx] = (loss_and_grad(Model(hi, model.bias), batch, l2)[0]
                         - loss_and_grad(Model(lo, model.bias), batch, l2)[0]) / (2 * eps)
        fd_b = np.zeros_like(gb)
        for i in range(n_labels):
            hi = model.bias.copy(); hi[i] += eps
            lo = model.bias.copy(); lo[i] -= eps
            fd_b[i] = (loss_and_grad(Model(model.weights, hi), batch, l2)[0]
                       - loss_and_grad(Model(model.weights, lo), batch, l2)[0]) / (2 * eps)
        scale = max(np.abs(fd_w).max(), np.abs(fd_b).max(), 1e-8)
        err = max(np.abs(gw - fd_w).max(), np.abs(gb - fd_b).max()) / scale
        worst = max(worst, err)
    ok = worst < 1e-4
    assert _verdict("criterion 3 (gradient oracle)", ok,
                    f"100 model/batch pairs, worst relative error "
                    f"{worst:.2e} vs central differences")


# -- criterion 4: reverse-allocation exactness ------------------------------------------


def _largest_remainder_oracle(weights, tau):
    raw = [tau * w for w in weights]
    base = [int(np.floor(r)) for r in raw]
    leftover = tau - sum(base)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return tuple(base)


def test_criterion_4_reverse_allocation_exactness():
    grid = [round(0.05 * i, 2) for i in range(21)]
    cases = 0
    bad = 0
    for a in grid:
        for b in grid:
            if a + b == 0:
                continue
            shares = (a / (a + b), b / (a + b))
            for tau in range(1, 51):
                cases += 1
                counts = reverse_allocation(shares, tau).counts
                expected = _largest_remainder_oracle(
                    (shares[1], shares[0]), tau)  # two groups: opposite share
                if counts != expected or sum(counts) != tau:
                    bad += 1
    ok = bad == 0
    assert _verdict("criterion 4 (reverse-allocation exactness)", ok,
                    f"{cases} share/tau combinations, {bad} mismatches "
                    "against the largest-remainder oracle")


# -- criteria 5 and 6: desk-scale dose-response --------------------------------------


@pytest.fixture(scope="module")
def desk_run():
    t0 = time.perf_counter()
    result = run_scenario(ScenarioConfig(seed=MASTER_SEED))
    elapsed = time.perf_counter() - t0
    return result, elapsed


def test_criterion_5_desk_scale_dose_response(desk_run):
    result, elapsed = desk_run
    sw = result.sweep
    ratio_before = sw.ratio_before
    star = sw.selection.tau_star
    ratio_at_star = sw.mean_ratio[star] if star is not None else float("nan")
    ratio_at_max = sw.mean_ratio[100]
    acc_drop = (sw.acc_before - sw.mean_accuracy[star]
                if star is not None else float("nan"))
    checks = {
        "a: ratio_before >= 3": ratio_before >= 3.0,
        "b: tau* in band": star is not None
                           and abs(ratio_at_star - 1.0) <= 0.25,
        "c: over-correction at tau=100": ratio_at_max < 1.0,
        "d: accuracy drop <= 5pp": star is not None and acc_drop <= 0.05,
        "runtime < 60s": elapsed < 60.0,
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    assert _verdict(
        "criterion 5 (desk-scale dose-response)", ok,
        f"ratio_before={ratio_before:.2f}, tau*={star}, "
        f"ratio@tau*={ratio_at_star:.3f}, ratio@100={ratio_at_max:.3f}, "
        f"acc_drop@tau*={acc_drop:+.3f}, {elapsed:.1f}s"
        + (f"; failed: {failed}" if failed else ""))


def _spearman(xs, ys):
    def rank(v):
        order = np.argsort(v, kind="stable")
        r = np.empty(len(v))
        r[order] = np.arange(len(v))
        return r

    rx = rank(np.asarray(xs, dtype=float))
    ry = rank(np.asarray(ys, dtype=float))
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx * ry).sum()
                 / np.sqrt((rx * rx).sum() * (ry * ry).sum()))


def test_criterion_6_monotone_trend(desk_run):
    result, _ = desk_run
    sw = result.sweep
    taus = list(sw.taus)
    rho = _spearman(taus, [sw.mean_ratio[t] for t in taus])
    ok = rho <= -0.8
    assert _verdict("criterion 6 (monotone trend)", ok,
                    f"Spearman(tau, mean ratio) = {rho:.3f} over "
                    f"{len(taus)} grid points")


# -- criterion 7: CLI determinism -------------------------------------------------------


def test_criterion_7_cli_determinism(tmp_path):
    outs = [tmp_path / "run1", tmp_path / "run2"]
    for out in outs:
        proc = subprocess.run(
            [sys.executable, "-m", "samplation", "sweep",
             "--seed", str(MASTER_SEED), "--out", str(out)],
            capture_output=True, text=True, timeout=300)
        assert proc.returncode == 0, proc.stderr
    compared = []
    identical = True
    for name in ("plot.csv", "report.json", "rows.csv", "config.json",
                 "audit.json", "model.json", "train.csv", "test.csv"):
        same = (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        compared.append(name)
        identical = identical and same
    assert _verdict("criterion 7 (CLI determinism)", identical,
                    f"two `sweep` runs, {len(compared)} artifacts "
                    "byte-compared")


# -- criterion 8: applicability gate -----------------------------------------------------


def test_criterion_8_applicability_gate(tmp_path):
    feats = np.linspace(0.0, 1.0, 12).reshape(-1, 1)
    groups = np.array([0] * 11 + [1])
    train_path = tmp_path / "train.csv"
    write_csv(Dataset(feats, groups, groups), train_path)

    proc = subprocess.run(
        [sys.executable, "-m", "samplation", "audit",
         "--train", str(train_path), "--attest-all"],
        capture_output=True, text=True, timeout=60)
    audit_blocks = proc.returncode == 3
    cond6_fail = "condition 6: fail" in proc.stdout

    proc_force = subprocess.run(
        [sys.executable, "-m", "samplation", "audit",
         "--train", str(train_path), "--attest-all", "--force"],
        capture_output=True, text=True, timeout=60)
    force_passes = proc_force.returncode == 0

    # the pipeline must refuse the same way
    cfg = ScenarioConfig(n_train=60, n_test=40, d=2, reserve_size=20,
                         tau_grid=(5,), n_seeds=1, pretrain_epochs=2,
                         attestations=Attestations())
    try:
        run_scenario(cfg)
        pipeline_refuses = False
    except ApplicabilityError:
        pipeline_refuses = True

    ok = audit_blocks and cond6_fail and force_passes and pipeline_refuses
    assert _verdict("criterion 8 (applicability gate)", ok,
                    f"audit exit={proc.returncode} (want 3), condition 6 "
                    f"fail={cond6_fail}, --force exit="
                    f"{proc_force.returncode}, pipeline refuses="
                    f"{pipeline_refuses}")
