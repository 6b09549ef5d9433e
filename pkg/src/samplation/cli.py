"""Command-line interface.

Subcommands mirror the pipeline stages (gen-data, split, pretrain, audit,
build-reserves, finetune, sweep, report).  Exit codes: 0 success, 1 usage
error, 2 data/capacity error, 3 applicability failure without --force.
The master seed falls back to the SAMPLATION_SEED environment variable
when no --seed is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import pipeline
from .dataset import SynthConfig, generate_synthetic, read_csv, split, write_csv
from .errors import ApplicabilityError, ConfigError, SamplationError
from .fairness import Attestations, check_applicability, evaluate
from .generation import build_reserves, save_reserve
from .model import TrainConfig, finetune, load_model, pretrain, save_model
from .pipeline import ScenarioConfig, emit_report, read_rows_csv, select_tau

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_APPLICABILITY = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems via exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("SAMPLATION_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"SAMPLATION_SEED must be an integer, "
                              f"got {env!r}") from None
    return pipeline.DEFAULT_MASTER_SEED


def _parse_prevalence(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"bad prevalence list {text!r}") from None


def _add_train_flags(p: argparse.ArgumentParser, *, epochs: int,
                     lr: float, l2: float, batch: int = 32) -> None:
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--batch-size", type=int, default=batch)
    p.add_argument("--learning-rate", type=float, default=lr)
    p.add_argument("--l2", type=float, default=l2)


def build_parser() -> _Parser:
    parser = _Parser(prog="samplation",
                     description="Cure unfair predictions by reverse-biased "
                                 "synthetic fine-tuning samples.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("gen-data", parents=[], help="generate a synthetic "
                       "dataset with a controlled group mix")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--prevalence", default="0.9,0.1",
                   help="comma-separated group proportions")
    p.add_argument("--class-separation", type=float, default=1.5)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("split", help="shuffled train/test partition")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--train-frac", type=float, default=0.75)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)

    p = sub.add_parser("pretrain", help="train a fresh classifier")
    p.add_argument("--train", required=True, help="training CSV")
    _add_train_flags(p, epochs=40, lr=0.1, l2=1e-4)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output model JSON")

    p = sub.add_parser("audit", help="run the applicability checklist")
    p.add_argument("--train", required=True, help="training CSV")
    p.add_argument("--model", help="model JSON for fairness evidence")
    p.add_argument("--test", help="test CSV for fairness evidence")
    p.add_argument("--target", type=float, default=1.0)
    p.add_argument("--privileged", type=int, default=0)
    p.add_argument("--unprivileged", type=int, default=1)
    for flag, dest in (("--attest-nonprobabilistic-data", "a1"),
                       ("--attest-biased-pretraining", "a2"),
                       ("--attest-unfairness-known-target", "a3"),
                       ("--attest-accuracy-secondary", "a4")):
        p.add_argument(flag, dest=dest, action="store_true")
    p.add_argument("--attest-all", action="store_true",
                   help="shorthand for all four attestations")
    p.add_argument("--force", action="store_true",
                   help="exit 0 even when conditions fail")
    p.add_argument("--out", help="write the report JSON here")

    p = sub.add_parser("build-reserves", help="grow one synthetic reserve "
                       "per group from real instances")
    p.add_argument("--train", required=True)
    p.add_argument("--reserve-size", type=int, default=1600)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("finetune", help="continue training from a model")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--data", required=True, help="fine-tuning sample CSV")
    _add_train_flags(p, epochs=5, lr=0.042, l2=0.0, batch=4)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output model JSON")

    p = sub.add_parser("sweep", help="run the full scenario and sweep the "
                       "fine-tuning dose")
    p.add_argument("--config", help="scenario config JSON "
                   "(defaults to the shipped desk-scale scenario)")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--out", default="samplation_out",
                   help="output directory")
    p.add_argument("--force", action="store_true",
                   help="proceed despite applicability failures")

    p = sub.add_parser("report", help="rebuild the report JSON from stored "
                       "trial rows")
    p.add_argument("--rows", required=True, help="rows CSV from a sweep")
    p.add_argument("--audit", help="audit JSON to embed")
    p.add_argument("--config", help="config JSON to embed")
    p.add_argument("--target", type=float, default=1.0)
    p.add_argument("--band", type=float, default=0.25)
    p.add_argument("--out", required=True, help="output report JSON")
    return parser


# -- subcommand bodies -----------------------------------------------------------


def _cmd_gen_data(args) -> int:
    cfg = SynthConfig(n=args.n, d=args.d,
                      group_prevalence=_parse_prevalence(args.prevalence),
                      class_separation=args.class_separation,
                      noise_sd=args.noise_sd, seed=_resolve_seed(args.seed))
    ds = generate_synthetic(cfg)
    write_csv(ds, args.out)
    print(f"wrote {len(ds)} instances to {args.out}")
    return EXIT_OK


def _cmd_split(args) -> int:
    ds = read_csv(args.data)
    train, test = split(ds, args.train_frac, _resolve_seed(args.seed))
    write_csv(train, args.train_out)
    write_csv(test, args.test_out)
    print(f"split {len(ds)} -> {len(train)} train / {len(test)} test")
    return EXIT_OK


def _cmd_pretrain(args) -> int:
    train = read_csv(args.train)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.learning_rate, l2=args.l2,
                      seed=_resolve_seed(args.seed))
    model = pretrain(train, cfg)
    save_model(model, args.out)
    print(f"pretrained on {len(train)} instances "
          f"({cfg.epochs} epochs) -> {args.out}")
    return EXIT_OK


def _cmd_audit(args) -> int:
    train = read_csv(args.train)
    report = None
    if args.model and args.test:
        model = load_model(args.model)
        test = read_csv(args.test)
        report = evaluate(model, test, args.target, args.privileged,
                          args.unprivileged)
    att = (Attestations.all_true() if args.attest_all
           else Attestations(args.a1, args.a2, args.a3, args.a4))
    audit = check_applicability(train, report, att)
    if args.out:
        Path(args.out).write_text(audit.to_json(), encoding="utf-8")
    for cond in audit.conditions:
        print(f"condition {cond.id}: {cond.status} -- {cond.evidence}")
    if not audit.ok and not args.force:
        print("applicability audit failed", file=sys.stderr)
        return EXIT_APPLICABILITY
    return EXIT_OK


def _cmd_build_reserves(args) -> int:
    train = read_csv(args.train)
    reserves = build_reserves(train, args.reserve_size, args.k,
                              _resolve_seed(args.seed))
    for reserve in reserves:
        save_reserve(reserve, args.out)
    sizes = ", ".join(f"group {r.group}: {len(r)}" for r in reserves)
    print(f"built {len(reserves)} reserves ({sizes}) in {args.out}")
    return EXIT_OK


def _cmd_finetune(args) -> int:
    model = load_model(args.model)
    sample = read_csv(args.data)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.learning_rate, l2=args.l2,
                      seed=_resolve_seed(args.seed))
    tuned = finetune(model, sample, cfg)
    save_model(tuned, args.out)
    print(f"fine-tuned on {len(sample)} instances -> {args.out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    raw = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        raw["seed"] = args.seed
    elif "seed" not in raw:
        raw["seed"] = _resolve_seed(None)
    cfg = ScenarioConfig.from_dict(raw)
    result = pipeline.run_scenario(cfg, out_dir=args.out, force=args.force)
    res = result.sweep
    print(f"ratio before: {res.ratio_before:.3f}")
    star = res.selection.tau_star
    if star is not None:
        print(f"tau* = {star} (mean ratio {res.mean_ratio[star]:.3f}, "
              f"mean accuracy {res.mean_accuracy[star]:.3f})")
    else:
        print(f"no tau hit the band; closest: {res.selection.advisory_tau}")
    if res.failures:
        print(f"{len(res.failures)} trial(s) failed on capacity",
              file=sys.stderr)
    if not res.rows:
        print("no successful trials", file=sys.stderr)
        return EXIT_DATA
    print(f"artifacts in {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    res = read_rows_csv(args.rows)
    selection = select_tau(res.mean_ratio, args.target, args.band)
    res = pipeline.SweepResult(rows=res.rows, taus=res.taus,
                               mean_ratio=res.mean_ratio,
                               mean_accuracy=res.mean_accuracy,
                               selection=selection, failures=res.failures)
    audit = None
    if args.audit:
        raw = json.loads(Path(args.audit).read_text(encoding="utf-8"))
        audit = _AuditEcho(raw)
    config = None
    if args.config:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    emit_report(res, audit, args.out, config=config)
    print(f"report written to {args.out}")
    return EXIT_OK


class _AuditEcho:
    """Adapter so a stored audit dict can be re-embedded verbatim."""

    def __init__(self, payload: dict):
        self._payload = payload

    def to_dict(self) -> dict:
        return self._payload


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "split": _cmd_split,
    "pretrain": _cmd_pretrain,
    "audit": _cmd_audit,
    "build-reserves": _cmd_build_reserves,
    "finetune": _cmd_finetune,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ApplicabilityError as exc:
        print(f"applicability: {exc}", file=sys.stderr)
        return EXIT_APPLICABILITY
    except SamplationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
