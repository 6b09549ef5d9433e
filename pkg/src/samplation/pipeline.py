"""The remediation procedure end to end.

One trial (`samplate`) measures prediction shares, allocates a fine-tuning
sample of size tau across the per-group reserves with the bias reversed,
fine-tunes a copy of the pre-trained model and measures again.  `sweep`
repeats this over a tau grid and several seeds, always restarting from the
same pre-trained model so doses never compound, and `select_tau` picks the
smallest tau whose mean ratio lands inside the tolerance band around the
target -- the conservative choice, since overshooting the target flips the
bias instead of curing it.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, SynthConfig, generate_synthetic, write_csv
from .errors import ApplicabilityError, CapacityError, ConfigError
from .fairness import (ApplicabilityReport, Attestations, FairnessReport,
                       check_applicability, evaluate)
from .generation import Reserve, build_reserves, save_reserve
from .model import Model, TrainConfig, finetune, pretrain, save_model
from .rng import spawn_seed
from .sampling import draw_from_reserves, reverse_allocation

__all__ = [
    "SamplationConfig",
    "SweepRow",
    "SweepResult",
    "TauSelection",
    "ScenarioConfig",
    "ScenarioResult",
    "samplate",
    "sweep",
    "select_tau",
    "emit_plot_csv",
    "emit_report",
    "run_scenario",
    "desk_tau_grid",
    "full_scale_tau_grid",
    "DEFAULT_MASTER_SEED",
]

DEFAULT_MASTER_SEED = 20_240_211


def _banded_grid(lo: int, hi: int, coarse: int, dense_lo: int, dense_hi: int,
                 dense_step: int) -> tuple[int, ...]:
    grid = list(range(lo, dense_lo, coarse))
    grid += list(range(dense_lo, dense_hi + 1, dense_step))
    grid += list(range(dense_hi + coarse, hi + 1, coarse))
    return tuple(grid)


def full_scale_tau_grid() -> tuple[int, ...]:
    """Sample-size grid 400..1000, densified between 700 and 800."""
    return _banded_grid(400, 1000, 50, 700, 800, 10)


def desk_tau_grid() -> tuple[int, ...]:
    """The full-scale grid scaled by 10: 40..100, dense between 70 and 80."""
    return _banded_grid(40, 100, 5, 70, 80, 1)


@dataclass(frozen=True)
class SamplationConfig:
    """Settings for one remediation trial."""

    tau: int
    reserve_size: int
    target_ratio: float = 1.0
    privileged: int = 0
    unprivileged: int = 1
    k: int = 5
    overcorrection_band: float = 0.25
    finetune: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.tau < 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")
        if self.target_ratio <= 0:
            raise ConfigError(f"target_ratio must be > 0, got {self.target_ratio}")
        if self.overcorrection_band <= 0:
            raise ConfigError("overcorrection_band must be > 0")
        if self.privileged == self.unprivileged:
            raise ConfigError("privileged and unprivileged groups must differ")


@dataclass(frozen=True)
class SweepRow:
    """One fine-tuning trial: dose, seed and before/after measurements."""

    tau: int
    seed: int
    ratio_before: float
    ratio_after: float
    acc_before: float
    acc_after: float
    allocation: tuple[int, ...]


@dataclass(frozen=True)
class TauSelection:
    """Outcome of the conservative dose choice."""

    tau_star: int | None
    advisory_tau: int | None
    target: float
    band: float


@dataclass(frozen=True)
class SweepResult:
    """All rows of a sweep plus per-tau aggregates and the selected dose."""

    rows: tuple[SweepRow, ...]
    taus: tuple[int, ...]                       # taus with at least one row
    mean_ratio: dict[int, float]
    mean_accuracy: dict[int, float]
    selection: TauSelection
    failures: tuple[tuple[int, int, str], ...]  # (tau, seed, message)

    @property
    def tau_star(self) -> int | None:
        return self.selection.tau_star

    @property
    def ratio_before(self) -> float:
        return self.rows[0].ratio_before if self.rows else float("nan")

    @property
    def acc_before(self) -> float:
        return self.rows[0].acc_before if self.rows else float("nan")


def samplate(m: Model, reserves: list[Reserve], test: Dataset,
             cfg: SamplationConfig, seed: int) -> SweepRow:
    """One remediation trial; the input model is never modified.

    Measures prediction shares, reverses them into an allocation over the
    reserves, draws the fine-tuning sample, fine-tunes a copy of the model
    and re-measures.  Callers are expected to have passed the applicability
    audit (or overridden it) beforehand.
    """
    if not reserves:
        raise ConfigError("samplate needs at least one reserve")
    groups = [r.group for r in reserves]
    for gid in (cfg.privileged, cfg.unprivileged):
        if gid not in groups:
            raise ConfigError(f"no reserve covers configured group {gid}")
    before = evaluate(m, test, cfg.target_ratio, cfg.privileged,
                      cfg.unprivileged)
    # shares restricted to the reserve groups; identical to the full share
    # vector whenever predictions only ever hit reserve-covered groups
    shares = np.array([before.shares[r.group] for r in reserves])
    total = shares.sum()
    if total <= 0:
        raise ConfigError("no predictions fall on any reserve group")
    alloc = reverse_allocation(shares / total, cfg.tau)
    sample = draw_from_reserves(reserves, alloc, spawn_seed(seed, 1))
    ft_cfg = dataclasses.replace(cfg.finetune, seed=spawn_seed(seed, 2))
    tuned = finetune(m, sample, ft_cfg)
    after = evaluate(tuned, test, cfg.target_ratio, cfg.privileged,
                     cfg.unprivileged)
    return SweepRow(tau=cfg.tau, seed=seed,
                    ratio_before=before.ratio, ratio_after=after.ratio,
                    acc_before=before.accuracy, acc_after=after.accuracy,
                    allocation=alloc.counts)


def select_tau(result, target: float, band: float) -> TauSelection:
    """Smallest tau whose mean ratio lies within target +/- band.

    ``result`` is a `SweepResult` or a bare {tau: mean ratio} mapping.  If
    no tau qualifies, tau_star is None and the tau closest to the target is
    returned as advisory only; picking the smallest qualifying dose is what
    guards against over-correction.
    """
    mean_ratio = getattr(result, "mean_ratio", result)
    if not mean_ratio:
        return TauSelection(None, None, target, band)
    taus = sorted(mean_ratio)
    for tau in taus:
        if abs(mean_ratio[tau] - target) <= band:
            return TauSelection(tau, tau, target, band)
    advisory = min(taus, key=lambda t: (abs(mean_ratio[t] - target), t))
    return TauSelection(None, advisory, target, band)


def sweep(m: Model, reserves: list[Reserve], test: Dataset,
          cfg: SamplationConfig, tau_grid, seeds) -> SweepResult:
    """Run `samplate` for every (tau, seed) pair from one pre-trained model.

    Trials are mutually independent (each gets a private model copy and its
    own seeded draws), so doses never compound across grid points and the
    loop could run in parallel; rows always come out in deterministic
    (tau, seed) order.  Capacity errors do not abort the sweep: the
    offending (tau, seed) is recorded in ``failures`` and the grid
    continues.
    """
    grid = [int(t) for t in tau_grid]
    if not grid:
        raise ConfigError("tau grid must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"tau grid must be strictly increasing: {grid}")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ConfigError("need at least one seed")
    rows: list[SweepRow] = []
    failures: list[tuple[int, int, str]] = []
    for tau in grid:
        trial_cfg = dataclasses.replace(cfg, tau=tau)
        for seed in seeds:
            try:
                rows.append(samplate(m, reserves, test, trial_cfg, seed))
            except CapacityError as exc:
                failures.append((tau, seed, str(exc)))
    by_tau: dict[int, list[SweepRow]] = {}
    for row in rows:
        by_tau.setdefault(row.tau, []).append(row)
    mean_ratio = {t: float(np.mean([r.ratio_after for r in rs]))
                  for t, rs in by_tau.items()}
    mean_acc = {t: float(np.mean([r.acc_after for r in rs]))
                for t, rs in by_tau.items()}
    selection = select_tau(mean_ratio, cfg.target_ratio,
                           cfg.overcorrection_band)
    return SweepResult(rows=tuple(rows), taus=tuple(sorted(by_tau)),
                       mean_ratio=mean_ratio, mean_accuracy=mean_acc,
                       selection=selection, failures=tuple(failures))


# -- result emission -----------------------------------------------------------


def emit_plot_csv(res: SweepResult, path) -> None:
    """Point and mean rows of the ratio-vs-dose curve.

    Columns: tau,seed,ratio_after.  After each tau's point rows comes an
    aggregate row with literal seed `MEAN` carrying the per-tau mean ratio
    (the bold-line value).  Full float precision, LF endings.
    """
    lines = ["tau,seed,ratio_after"]
    for tau in res.taus:
        group = [r for r in res.rows if r.tau == tau]
        lines += [f"{r.tau},{r.seed},{repr(r.ratio_after)}" for r in group]
        lines.append(f"{tau},MEAN,{repr(res.mean_ratio[tau])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8",
                          newline="\n")


def write_rows_csv(res: SweepResult, path) -> None:
    """Full per-trial rows, one line per (tau, seed)."""
    if not res.rows:
        n_groups = 0
    else:
        n_groups = len(res.rows[0].allocation)
    alloc_cols = ",".join(f"alloc_g{i}" for i in range(n_groups))
    header = "tau,seed,ratio_before,ratio_after,acc_before,acc_after"
    lines = [header + ("," + alloc_cols if alloc_cols else "")]
    for r in res.rows:
        cells = [str(r.tau), str(r.seed), repr(r.ratio_before),
                 repr(r.ratio_after), repr(r.acc_before), repr(r.acc_after)]
        cells += [str(c) for c in r.allocation]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8",
                          newline="\n")


def read_rows_csv(path) -> SweepResult:
    """Rebuild a SweepResult (rows + recomputed aggregates) from disk.

    Selection is not stored in the CSV; it is recomputed by the caller via
    `select_tau` with the desired target and band (see `emit_report`).
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    header = lines[0].split(",")
    fixed = ["tau", "seed", "ratio_before", "ratio_after", "acc_before",
             "acc_after"]
    if header[:6] != fixed:
        raise ConfigError(f"{path}: unexpected rows header {lines[0]!r}")
    rows = []
    for ln in lines[1:]:
        c = ln.split(",")
        rows.append(SweepRow(tau=int(c[0]), seed=int(c[1]),
                             ratio_before=float(c[2]), ratio_after=float(c[3]),
                             acc_before=float(c[4]), acc_after=float(c[5]),
                             allocation=tuple(int(v) for v in c[6:])))
    by_tau: dict[int, list[SweepRow]] = {}
    for row in rows:
        by_tau.setdefault(row.tau, []).append(row)
    mean_ratio = {t: float(np.mean([r.ratio_after for r in rs]))
                  for t, rs in by_tau.items()}
    mean_acc = {t: float(np.mean([r.acc_after for r in rs]))
                for t, rs in by_tau.items()}
    return SweepResult(rows=tuple(rows), taus=tuple(sorted(by_tau)),
                       mean_ratio=mean_ratio, mean_accuracy=mean_acc,
                       selection=TauSelection(None, None, float("nan"), float("nan")),
                       failures=())


def emit_report(res: SweepResult, audit: ApplicabilityReport | None, path, *,
                config: dict | None = None,
                before: FairnessReport | None = None) -> dict:
    """Bundle config, audit, per-tau aggregates and the dose choice as JSON.

    Includes the fairness-accuracy trade-off: mean acc_before - acc_after
    per tau (positive = accuracy lost).
    """
    acc_before = res.acc_before
    payload = {
        "config": config,
        "applicability": audit.to_dict() if audit else None,
        "before": before.to_dict() if before else {
            "ratio": res.ratio_before, "accuracy": acc_before},
        "sweep": {
            "taus": list(res.taus),
            "mean_ratio": {str(t): res.mean_ratio[t] for t in res.taus},
            "mean_accuracy": {str(t): res.mean_accuracy[t] for t in res.taus},
            "mean_accuracy_drop": {
                str(t): acc_before - res.mean_accuracy[t] for t in res.taus},
            "n_rows": len(res.rows),
            "failures": [list(f) for f in res.failures],
        },
        "target_ratio": res.selection.target,
        "band": res.selection.band,
        "tau_star": res.selection.tau_star,
        "advisory_tau": res.selection.advisory_tau,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n",
                          encoding="utf-8")
    return payload


# -- the shipped desk-scale scenario --------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to run the pipeline end to end on synthetic data.

    The defaults reproduce the shipped desk-scale experiment: a classifier
    pre-trained on 2000 instances drawn 90/10 between two groups, reserves
    of 1600 synthetic instances per group, and a fine-tuning dose sweep
    over 40..100 with 5 replicate seeds.  The test set is generated with a
    balanced group mix: the induced imbalance is a property of the training
    sample, not of the population the model is judged against (which is
    also what makes a cured model no less accurate).

    Seeds for each stage are derived from ``seed`` unless set explicitly.
    """

    seed: int = DEFAULT_MASTER_SEED
    n_train: int = 2000
    n_test: int = 1000
    d: int = 6
    train_prevalence: tuple[float, ...] = (0.9, 0.1)
    test_prevalence: tuple[float, ...] = (0.5, 0.5)
    class_separation: float = 1.5
    noise_sd: float = 1.0
    pretrain_epochs: int = 40
    pretrain_batch_size: int = 32
    pretrain_learning_rate: float = 0.1
    pretrain_l2: float = 1e-4
    pretrain_seed: int | None = None
    reserve_size: int = 1600
    k: int = 5
    reserves_seed: int | None = None
    target_ratio: float = 1.0
    privileged: int = 0
    unprivileged: int = 1
    overcorrection_band: float = 0.25
    finetune_epochs: int = 5
    finetune_batch_size: int = 4
    finetune_learning_rate: float = 0.042
    finetune_l2: float = 0.0
    tau_grid: tuple[int, ...] = field(default_factory=desk_tau_grid)
    n_seeds: int = 5
    trial_seeds: tuple[int, ...] | None = None
    attestations: Attestations = field(default_factory=Attestations.all_true)

    # fixed substream ids for stage-seed derivation
    _TRAIN, _TEST, _PRETRAIN, _RESERVES, _TRIALS = 10, 11, 12, 13, 1000

    def resolved_pretrain_seed(self) -> int:
        return (self.pretrain_seed if self.pretrain_seed is not None
                else spawn_seed(self.seed, self._PRETRAIN))

    def resolved_reserves_seed(self) -> int:
        return (self.reserves_seed if self.reserves_seed is not None
                else spawn_seed(self.seed, self._RESERVES))

    def resolved_trial_seeds(self) -> tuple[int, ...]:
        if self.trial_seeds is not None:
            return tuple(int(s) for s in self.trial_seeds)
        return tuple(spawn_seed(self.seed, self._TRIALS + i)
                     for i in range(self.n_seeds))

    def train_config(self) -> SynthConfig:
        return SynthConfig(n=self.n_train, d=self.d,
                           group_prevalence=self.train_prevalence,
                           class_separation=self.class_separation,
                           noise_sd=self.noise_sd,
                           seed=spawn_seed(self.seed, self._TRAIN),
                           name="train")

    def test_config(self) -> SynthConfig:
        return SynthConfig(n=self.n_test, d=self.d,
                           group_prevalence=self.test_prevalence,
                           class_separation=self.class_separation,
                           noise_sd=self.noise_sd,
                           seed=spawn_seed(self.seed, self._TEST),
                           name="test")

    def pretrain_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.pretrain_epochs,
                           batch_size=self.pretrain_batch_size,
                           learning_rate=self.pretrain_learning_rate,
                           l2=self.pretrain_l2,
                           seed=self.resolved_pretrain_seed())

    def finetune_config(self) -> TrainConfig:
        # the per-trial seed is substituted inside samplate
        return TrainConfig(epochs=self.finetune_epochs,
                           batch_size=self.finetune_batch_size,
                           learning_rate=self.finetune_learning_rate,
                           l2=self.finetune_l2, seed=0)

    def samplation_config(self) -> SamplationConfig:
        return SamplationConfig(tau=self.tau_grid[0],
                                reserve_size=self.reserve_size,
                                target_ratio=self.target_ratio,
                                privileged=self.privileged,
                                unprivileged=self.unprivileged,
                                k=self.k,
                                overcorrection_band=self.overcorrection_band,
                                finetune=self.finetune_config())

    def to_dict(self) -> dict:
        """Fully resolved configuration (all derived seeds spelled out)."""
        return {
            "seed": self.seed,
            "data": {
                "n_train": self.n_train, "n_test": self.n_test, "d": self.d,
                "train_prevalence": list(self.train_prevalence),
                "test_prevalence": list(self.test_prevalence),
                "class_separation": self.class_separation,
                "noise_sd": self.noise_sd,
                "train_seed": self.train_config().seed,
                "test_seed": self.test_config().seed,
            },
            "pretrain": {
                "epochs": self.pretrain_epochs,
                "batch_size": self.pretrain_batch_size,
                "learning_rate": self.pretrain_learning_rate,
                "l2": self.pretrain_l2,
                "seed": self.resolved_pretrain_seed(),
            },
            "reserves": {
                "size": self.reserve_size, "k": self.k,
                "seed": self.resolved_reserves_seed(),
            },
            "samplation": {
                "target_ratio": self.target_ratio,
                "privileged": self.privileged,
                "unprivileged": self.unprivileged,
                "overcorrection_band": self.overcorrection_band,
                "finetune": {
                    "epochs": self.finetune_epochs,
                    "batch_size": self.finetune_batch_size,
                    "learning_rate": self.finetune_learning_rate,
                    "l2": self.finetune_l2,
                },
            },
            "sweep": {
                "tau_grid": list(self.tau_grid),
                "trial_seeds": list(self.resolved_trial_seeds()),
            },
            "attestations": self.attestations.to_dict(),
        }

    @staticmethod
    def from_dict(raw: dict) -> "ScenarioConfig":
        """Inverse of `to_dict`; missing keys fall back to defaults."""
        kw: dict = {}
        if "seed" in raw:
            kw["seed"] = int(raw["seed"])
        data = raw.get("data", {})
        for src, dst in (("n_train", "n_train"), ("n_test", "n_test"),
                         ("d", "d"), ("class_separation", "class_separation"),
                         ("noise_sd", "noise_sd")):
            if src in data:
                kw[dst] = data[src]
        if "train_prevalence" in data:
            kw["train_prevalence"] = tuple(data["train_prevalence"])
        if "test_prevalence" in data:
            kw["test_prevalence"] = tuple(data["test_prevalence"])
        pre = raw.get("pretrain", {})
        for src, dst in (("epochs", "pretrain_epochs"),
                         ("batch_size", "pretrain_batch_size"),
                         ("learning_rate", "pretrain_learning_rate"),
                         ("l2", "pretrain_l2"), ("seed", "pretrain_seed")):
            if src in pre:
                kw[dst] = pre[src]
        res = raw.get("reserves", {})
        for src, dst in (("size", "reserve_size"), ("k", "k"),
                         ("seed", "reserves_seed")):
            if src in res:
                kw[dst] = res[src]
        samp = raw.get("samplation", {})
        for src, dst in (("target_ratio", "target_ratio"),
                         ("privileged", "privileged"),
                         ("unprivileged", "unprivileged"),
                         ("overcorrection_band", "overcorrection_band")):
            if src in samp:
                kw[dst] = samp[src]
        ft = samp.get("finetune", {})
        for src, dst in (("epochs", "finetune_epochs"),
                         ("batch_size", "finetune_batch_size"),
                         ("learning_rate", "finetune_learning_rate"),
                         ("l2", "finetune_l2")):
            if src in ft:
                kw[dst] = ft[src]
        sw = raw.get("sweep", {})
        if "tau_grid" in sw:
            kw["tau_grid"] = tuple(int(t) for t in sw["tau_grid"])
        if "n_seeds" in sw:
            kw["n_seeds"] = int(sw["n_seeds"])
        if "trial_seeds" in sw:
            kw["trial_seeds"] = tuple(int(s) for s in sw["trial_seeds"])
        att = raw.get("attestations")
        if att is not None:
            kw["attestations"] = Attestations(
                bool(att.get("nonprobabilistic_data", False)),
                bool(att.get("biased_pretraining", False)),
                bool(att.get("unfairness_with_known_target", False)),
                bool(att.get("accuracy_secondary", False)))
        return ScenarioConfig(**kw)


@dataclass(frozen=True)
class ScenarioResult:
    """Artifacts of a full scenario run."""

    config: ScenarioConfig
    train: Dataset
    test: Dataset
    model: Model
    before: FairnessReport
    audit: ApplicabilityReport
    reserves: list[Reserve]
    sweep: SweepResult


def run_scenario(cfg: ScenarioConfig, out_dir=None,
                 force: bool = False) -> ScenarioResult:
    """Generate data, pre-train, audit, build reserves, sweep, and emit.

    Raises `ApplicabilityError` when the audit fails and ``force`` is not
    set.  With ``out_dir`` given, writes train/test CSVs, the pre-trained
    model, the audit report, the reserves, the full trial rows, the plot
    CSV and the report JSON; all outputs are deterministic functions of the
    configuration, byte for byte.
    """
    train = generate_synthetic(cfg.train_config())
    test = generate_synthetic(cfg.test_config())
    model = pretrain(train, cfg.pretrain_config())
    before = evaluate(model, test, cfg.target_ratio, cfg.privileged,
                      cfg.unprivileged)
    audit = check_applicability(train, before, cfg.attestations)
    if not audit.ok and not force:
        failed = ", ".join(str(c.id) for c in audit.failures)
        raise ApplicabilityError(
            f"applicability conditions failed: {failed} (use force to "
            "override)")
    reserves = build_reserves(train, cfg.reserve_size, cfg.k,
                              cfg.resolved_reserves_seed())
    result = sweep(model, reserves, test, cfg.samplation_config(),
                   cfg.tau_grid, cfg.resolved_trial_seeds())
    scenario = ScenarioResult(config=cfg, train=train, test=test, model=model,
                              before=before, audit=audit, reserves=reserves,
                              sweep=result)
    if out_dir is not None:
        _write_artifacts(scenario, Path(out_dir))
    return scenario


def _write_artifacts(res: ScenarioResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(res.train, out / "train.csv")
    write_csv(res.test, out / "test.csv")
    save_model(res.model, out / "model.json")
    (out / "audit.json").write_text(res.audit.to_json(), encoding="utf-8")
    (out / "config.json").write_text(
        json.dumps(res.config.to_dict(), indent=2) + "\n", encoding="utf-8")
    reserve_dir = out / "reserves"
    for reserve in res.reserves:
        save_reserve(reserve, reserve_dir)
    write_rows_csv(res.sweep, out / "rows.csv")
    emit_plot_csv(res.sweep, out / "plot.csv")
    emit_report(res.sweep, res.audit, out / "report.json",
                config=res.config.to_dict(), before=res.before)
