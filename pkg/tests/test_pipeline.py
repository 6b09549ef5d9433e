import json

import numpy as np
import pytest

from samplation.dataset import SynthConfig, generate_synthetic
from samplation.errors import ApplicabilityError, ConfigError
from samplation.fairness import Attestations, evaluate
from samplation.generation import build_reserves
from samplation.model import TrainConfig, pretrain
from samplation.pipeline import (SamplationConfig, ScenarioConfig,
                                 desk_tau_grid, emit_plot_csv, emit_report,
                                 full_scale_tau_grid, read_rows_csv,
                                 run_scenario, samplate, select_tau, sweep,
                                 write_rows_csv)
from samplation.sampling import reverse_allocation


@pytest.fixture(scope="module")
def setup():
    """Small but realistic pre-trained world shared by the pipeline tests."""
    train = generate_synthetic(SynthConfig(n=500, d=3,
                                           group_prevalence=(0.8, 0.2),
                                           class_separation=1.5, seed=51))
    test = generate_synthetic(SynthConfig(n=300, d=3,
                                          group_prevalence=(0.5, 0.5),
                                          class_separation=1.5, seed=52))
    model = pretrain(train, TrainConfig(epochs=20, learning_rate=0.1,
                                        seed=53))
    reserves = build_reserves(train, reserve_size=200, k=5, seed=54)
    return train, test, model, reserves


def _cfg(tau=20, **kw):
    base = dict(tau=tau, reserve_size=200,
                finetune=TrainConfig(epochs=3, batch_size=4,
                                     learning_rate=0.03, seed=0))
    base.update(kw)
    return SamplationConfig(**base)


# -- samplate -----------------------------------------------------------------


def test_zero_dose_changes_nothing(setup):
    _, test, model, reserves = setup
    row = samplate(model, reserves, test, _cfg(tau=0), seed=1)
    assert row.ratio_after == row.ratio_before
    assert row.acc_after == row.acc_before
    assert row.allocation == (0, 0)


def test_recorded_allocation_obeys_the_reverse_rule(setup):
    _, test, model, reserves = setup
    row = samplate(model, reserves, test, _cfg(tau=37), seed=5)
    before = evaluate(model, test)
    expected = reverse_allocation(before.shares, 37)
    assert row.allocation == expected.counts
    assert row.ratio_before == before.ratio
    assert row.acc_before == before.accuracy


def test_samplate_is_deterministic(setup):
    _, test, model, reserves = setup
    a = samplate(model, reserves, test, _cfg(tau=25), seed=9)
    b = samplate(model, reserves, test, _cfg(tau=25), seed=9)
    assert a == b


def test_samplate_leaves_model_untouched(setup):
    _, test, model, reserves = setup
    w = model.weights.copy()
    samplate(model, reserves, test, _cfg(tau=30), seed=2)
    assert np.array_equal(model.weights, w)


def test_missing_reserve_group_rejected(setup):
    _, test, model, reserves = setup
    with pytest.raises(ConfigError):
        samplate(model, reserves[:1], test, _cfg(tau=5), seed=1)


# -- sweep --------------------------------------------------------------------


def test_single_point_sweep(setup):
    _, test, model, reserves = setup
    res = sweep(model, reserves, test, _cfg(), (15,), (3,))
    assert len(res.rows) == 1
    assert res.rows[0].tau == 15
    assert res.taus == (15,)


def test_sweep_means_match_brute_force(setup):
    _, test, model, reserves = setup
    res = sweep(model, reserves, test, _cfg(), (10, 30), (1, 2, 3))
    assert len(res.rows) == 6
    for tau in (10, 30):
        rows = [r for r in res.rows if r.tau == tau]
        assert res.mean_ratio[tau] == np.mean([r.ratio_after for r in rows])
        assert res.mean_accuracy[tau] == np.mean([r.acc_after for r in rows])


def test_ratio_before_constant_across_rows(setup):
    _, test, model, reserves = setup
    res = sweep(model, reserves, test, _cfg(), (5, 10, 15), (1, 2))
    assert len({r.ratio_before for r in res.rows}) == 1


def test_capacity_failures_annotated_and_skipped(setup):
    _, test, model, reserves = setup
    # reserves hold 200 per group; tau=500 cannot be allocated
    res = sweep(model, reserves, test, _cfg(), (10, 500), (1, 2))
    assert {r.tau for r in res.rows} == {10}
    assert len(res.failures) == 2
    assert all(tau == 500 for tau, _, _ in res.failures)
    assert 500 not in res.mean_ratio


def test_grid_validation(setup):
    _, test, model, reserves = setup
    with pytest.raises(ConfigError):
        sweep(model, reserves, test, _cfg(), (), (1,))
    with pytest.raises(ConfigError):
        sweep(model, reserves, test, _cfg(), (10, 10), (1,))
    with pytest.raises(ConfigError):
        sweep(model, reserves, test, _cfg(), (30, 10), (1,))
    with pytest.raises(ConfigError):
        sweep(model, reserves, test, _cfg(), (10,), ())


def test_sweep_is_deterministic(setup):
    _, test, model, reserves = setup
    a = sweep(model, reserves, test, _cfg(), (10, 20), (7,))
    b = sweep(model, reserves, test, _cfg(), (10, 20), (7,))
    assert a.rows == b.rows
    assert a.mean_ratio == b.mean_ratio


# -- select_tau ----------------------------------------------------------------


def test_selection_hand_example():
    means = {400: 3.1, 500: 1.1, 600: 0.95, 700: 0.4}
    sel = select_tau(means, target=1.0, band=0.25)
    assert sel.tau_star == 500


def test_selection_prefers_smallest_in_band():
    sel = select_tau({10: 1.1, 20: 1.0, 30: 0.9}, target=1.0, band=0.25)
    assert sel.tau_star == 10


def test_selection_none_with_advisory():
    sel = select_tau({10: 3.0, 20: 2.0, 30: 0.5}, target=1.0, band=0.25)
    assert sel.tau_star is None
    assert sel.advisory_tau == 30  # |0.5 - 1| beats |2 - 1|


def test_selection_empty():
    sel = select_tau({}, target=1.0, band=0.25)
    assert sel.tau_star is None and sel.advisory_tau is None


def test_selection_accepts_sweep_result(setup):
    _, test, model, reserves = setup
    res = sweep(model, reserves, test, _cfg(), (5,), (1,))
    assert select_tau(res, 1.0, 10.0).tau_star == 5


# -- grids ----------------------------------------------------------------------


def test_full_scale_grid_shape():
    grid = full_scale_tau_grid()
    assert grid[:6] == (400, 450, 500, 550, 600, 650)
    assert grid[6:17] == tuple(range(700, 801, 10))
    assert grid[17:] == (850, 900, 950, 1000)
    assert len(grid) == 21


def test_desk_grid_is_one_tenth():
    assert desk_tau_grid() == tuple(t // 10 for t in full_scale_tau_grid())


# -- emission --------------------------------------------------------------------


def test_plot_csv_rows_and_means(tmp_path, setup):
    _, test, model, reserves = setup
    res = sweep(model, reserves, test, _cfg(), (10, 20), (1, 2, 3))
    path = tmp_path / "plot.csv"
    emit_plot_csv(res, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "tau,seed,ratio_after"
    points = [ln for ln in lines[1:] if ",MEAN," not in ln]
    means = [ln for ln in lines[1:] if ",MEAN," in ln]
    assert len(points) == 6
    assert len(means) == 2
    # re-parsed means reproduce the stored aggregates exactly
    for ln in means:
        tau, _, value = ln.split(",")
        assert abs(float(value) - res.mean_ratio[int(tau)]) <= 1e-12


def test_rows_csv_round_trip(tmp_path, setup):
    _, test, model, reserves = setup
    res = sweep(model, reserves, test, _cfg(), (10, 20), (1, 2))
    path = tmp_path / "rows.csv"
    write_rows_csv(res, path)
    back = read_rows_csv(path)
    assert back.rows == res.rows
    assert back.mean_ratio == res.mean_ratio
    assert back.mean_accuracy == res.mean_accuracy


def test_report_contains_accuracy_tradeoff(tmp_path, setup):
    _, test, model, reserves = setup
    res = sweep(model, reserves, test, _cfg(), (10, 20), (1, 2))
    path = tmp_path / "report.json"
    payload = emit_report(res, None, path, config={"x": 1})
    on_disk = json.loads(path.read_text())
    assert on_disk == json.loads(json.dumps(payload))
    for tau in (10, 20):
        drop = on_disk["sweep"]["mean_accuracy_drop"][str(tau)]
        assert drop == pytest.approx(res.acc_before - res.mean_accuracy[tau])
    assert on_disk["config"] == {"x": 1}


# -- scenario -------------------------------------------------------------------


def _tiny_scenario(**kw):
    base = dict(seed=71, n_train=300, n_test=200, d=3,
                reserve_size=80, tau_grid=(10, 20, 30), n_seeds=2,
                pretrain_epochs=8)
    base.update(kw)
    return ScenarioConfig(**base)


def test_run_scenario_writes_all_artifacts(tmp_path):
    out = tmp_path / "run"
    result = run_scenario(_tiny_scenario(), out_dir=out)
    for name in ("train.csv", "test.csv", "model.json", "audit.json",
                 "config.json", "rows.csv", "plot.csv", "report.json"):
        assert (out / name).exists(), name
    assert (out / "reserves" / "reserve_0.csv").exists()
    assert (out / "reserves" / "reserve_1.json").exists()
    assert len(result.sweep.rows) == 3 * 2


def test_run_scenario_is_deterministic(tmp_path):
    a = run_scenario(_tiny_scenario(), out_dir=tmp_path / "a")
    b = run_scenario(_tiny_scenario(), out_dir=tmp_path / "b")
    assert a.sweep.rows == b.sweep.rows
    for name in ("rows.csv", "plot.csv", "report.json", "model.json"):
        assert ((tmp_path / "a" / name).read_bytes()
                == (tmp_path / "b" / name).read_bytes()), name


def test_unattested_scenario_refuses(tmp_path):
    cfg = _tiny_scenario(attestations=Attestations())
    with pytest.raises(ApplicabilityError):
        run_scenario(cfg)
    # force pushes through
    result = run_scenario(cfg, force=True)
    assert not result.audit.ok
    assert result.sweep.rows


def test_scenario_config_dict_round_trip():
    cfg = _tiny_scenario()
    back = ScenarioConfig.from_dict(cfg.to_dict())
    assert back.to_dict() == cfg.to_dict()
    # and a config read from JSON text behaves the same
    again = ScenarioConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()


def test_scenario_config_partial_dict_uses_defaults():
    cfg = ScenarioConfig.from_dict({"seed": 3, "sweep": {"tau_grid": [5, 6]}})
    assert cfg.seed == 3
    assert cfg.tau_grid == (5, 6)
    assert cfg.n_train == 2000
    assert cfg.reserve_size == 1600
