"""Fairness measurement and the applicability audit.

The fairness metric is the imbalance ratio: the privileged group's share of
predictions divided by the unprivileged group's, with 1.0 meaning perfect
balance.  The audit runs a six-point checklist before any remediation is
attempted; two conditions are machine-checkable from the training data, the
other four are statements about data provenance and intent that only the
operator can make, so they enter as explicit attestations instead of being
silently assumed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, SizeError
from .model import Model, predict

__all__ = [
    "FairnessReport",
    "ApplicabilityReport",
    "Condition",
    "Attestations",
    "prediction_shares",
    "imbalance_ratio",
    "evaluate",
    "check_applicability",
]

# minimum minority/majority count ratio for oversampling to stand a chance
MIN_GROUP_RATIO = 0.1
# minimum number of real minority instances to interpolate between
MIN_MINORITY_COUNT = 2


@dataclass(frozen=True)
class FairnessReport:
    """Prediction shares, imbalance ratio and accuracy on a test set."""

    shares: tuple[float, ...]
    ratio: float
    target: float
    accuracy: float
    per_group_accuracy: tuple[float, ...]
    n_test: int
    privileged: int
    unprivileged: int

    def to_dict(self) -> dict:
        return {
            "shares": list(self.shares),
            "ratio": self.ratio,
            "target": self.target,
            "accuracy": self.accuracy,
            "per_group_accuracy": list(self.per_group_accuracy),
            "n_test": self.n_test,
            "privileged": self.privileged,
            "unprivileged": self.unprivileged,
        }


@dataclass(frozen=True)
class Condition:
    """One applicability checklist entry."""

    id: int
    status: str  # pass | fail | attested | not-checkable
    evidence: str


@dataclass(frozen=True)
class Attestations:
    """Operator declarations for the non-machine-checkable conditions.

    1: the training data do not come from a probabilistic sampling design
       (selection bias is present);
    2: the pre-trained model was itself trained on such data;
    3: predictions are unfair against a group and the desired fairness
       level is known in advance;
    4: accuracy is accepted as secondary to reaching that level.
    """

    nonprobabilistic_data: bool = False
    biased_pretraining: bool = False
    unfairness_with_known_target: bool = False
    accuracy_secondary: bool = False

    @staticmethod
    def all_true() -> "Attestations":
        return Attestations(True, True, True, True)

    def to_dict(self) -> dict:
        return {
            "nonprobabilistic_data": self.nonprobabilistic_data,
            "biased_pretraining": self.biased_pretraining,
            "unfairness_with_known_target": self.unfairness_with_known_target,
            "accuracy_secondary": self.accuracy_secondary,
        }


@dataclass(frozen=True)
class ApplicabilityReport:
    """Six-condition audit result; remediation should not run on any fail."""

    conditions: tuple[Condition, ...]

    def __post_init__(self):
        ids = [c.id for c in self.conditions]
        if sorted(ids) != [1, 2, 3, 4, 5, 6]:
            raise ConfigError(f"expected conditions 1..6, got ids {ids}")

    @property
    def ok(self) -> bool:
        return all(c.status != "fail" for c in self.conditions)

    @property
    def failures(self) -> list[Condition]:
        return [c for c in self.conditions if c.status == "fail"]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "conditions": [
                {"id": c.id, "status": c.status, "evidence": c.evidence}
                for c in self.conditions
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def prediction_shares(m: Model, test: Dataset) -> np.ndarray:
    """Proportion of test instances predicted as each label value."""
    if len(test) == 0:
        raise SizeError("prediction shares need a non-empty test set")
    labels, _ = predict(m, test)
    return np.bincount(labels, minlength=m.n_labels) / len(test)


def imbalance_ratio(shares: Sequence[float], privileged: int,
                    unprivileged: int) -> float:
    """privileged share / unprivileged share; inf when the denominator is 0.

    The reciprocal orientation holds: ratio(s, a, b) * ratio(s, b, a) == 1
    whenever both shares are positive.
    """
    shares = np.asarray(shares, dtype=np.float64)
    k = len(shares)
    for gid, label in ((privileged, "privileged"), (unprivileged, "unprivileged")):
        if not 0 <= gid < k:
            raise ConfigError(f"{label} group id {gid} outside 0..{k - 1}")
    if shares[unprivileged] == 0.0:
        return math.inf
    return float(shares[privileged] / shares[unprivileged])


def evaluate(m: Model, test: Dataset, target: float = 1.0,
             privileged: int = 0, unprivileged: int = 1) -> FairnessReport:
    """Full fairness snapshot of a model on a test set."""
    if len(test) == 0:
        raise SizeError("cannot evaluate on an empty test set")
    if target <= 0:
        raise ConfigError(f"target ratio must be > 0, got {target}")
    labels, _ = predict(m, test)
    shares = np.bincount(labels, minlength=m.n_labels) / len(test)
    correct = labels == test.labels
    per_group = []
    for g in range(test.n_groups):
        mask = test.groups == g
        per_group.append(float(correct[mask].mean()) if mask.any() else float("nan"))
    return FairnessReport(
        shares=tuple(float(s) for s in shares),
        ratio=imbalance_ratio(shares, privileged, unprivileged),
        target=float(target),
        accuracy=float(correct.mean()),
        per_group_accuracy=tuple(per_group),
        n_test=len(test),
        privileged=privileged,
        unprivileged=unprivileged,
    )


def check_applicability(train: Dataset, report: FairnessReport | None,
                        attestations: Attestations) -> ApplicabilityReport:
    """Run the six-point applicability checklist.

    Conditions 1-4 mirror the attestations; 5 and 6 are computed from the
    training group counts (5: minority/majority count ratio >= 1/10, with
    the boundary counting as a pass; 6: at least 2 minority instances, the
    minimum for interpolation).  This function always returns a report --
    refusing to proceed on failures is the pipeline's job.
    """
    conds = []

    def attested(cid: int, flag: bool, claim: str, extra: str = ""):
        status = "attested" if flag else "fail"
        evidence = ("declared by operator" if flag
                    else "not attested by operator")
        if extra:
            evidence += f"; {extra}"
        conds.append(Condition(cid, status, f"{claim}: {evidence}"))

    attested(1, attestations.nonprobabilistic_data,
             "training data gathered without a probabilistic design")
    attested(2, attestations.biased_pretraining,
             "pre-trained model fitted on such data")
    ratio_note = ""
    if report is not None:
        ratio_note = (f"measured ratio {report.ratio:.4g} vs "
                      f"target {report.target:.4g}")
    attested(3, attestations.unfairness_with_known_target,
             "unfair predictions with a known desired fairness level",
             ratio_note)
    attested(4, attestations.accuracy_secondary,
             "accuracy accepted as secondary to fairness")

    counts = train.group_counts()
    if train.n_groups < 2:
        note = (f"{train.n_groups} group(s) declared; need at least 2 to "
                "compare minority against majority")
        conds.append(Condition(5, "not-checkable", note))
        conds.append(Condition(6, "not-checkable", note))
    else:
        # min over declared groups: an absent group counts as 0 and fails,
        # since synthetic data cannot be manufactured from scratch
        minority = int(counts.min())
        majority = int(counts.max())
        ratio = minority / majority if majority else 0.0
        conds.append(Condition(
            5, "pass" if ratio >= MIN_GROUP_RATIO else "fail",
            f"minority/majority counts {minority}/{majority} = {ratio:.4g} "
            f"(threshold {MIN_GROUP_RATIO})"))
        conds.append(Condition(
            6, "pass" if minority >= MIN_MINORITY_COUNT else "fail",
            f"minority group holds {minority} real instance(s) "
            f"(minimum {MIN_MINORITY_COUNT})"))
    return ApplicabilityReport(tuple(conds))
