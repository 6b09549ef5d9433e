"""Labeled tabular data with a discriminant group attribute.

A `Dataset` is an ordered collection of instances, stored column-wise
(numpy arrays) for speed but exposed row-wise as `Instance` values.  The
bundled synthetic generator produces group-conditional Gaussian blobs with
a controllable group mix; it exists to exercise the remediation pipeline at
desk scale, and its distributional choices (isotropic noise, means spread
along the first axis) are implementation decisions, not part of the method.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, ParseError, SchemaError, SizeError

__all__ = [
    "Instance",
    "Dataset",
    "SynthConfig",
    "generate_synthetic",
    "split",
    "read_csv",
    "write_csv",
    "concat",
]


@dataclass(frozen=True)
class Instance:
    """One labeled unit: features, class label, group value, provenance."""

    features: tuple[float, ...]
    label: int
    group: int
    synthetic: bool = False


class Dataset:
    """Ordered, immutable collection of instances sharing one schema.

    Parameters
    ----------
    features : array-like, shape (n, d), finite floats
    labels, groups : integer arrays of length n
    synthetic : bool array of length n (default all False)
    n_labels, n_groups : declared cardinalities; inferred as max+1 if omitted
    """

    def __init__(self, features, labels, groups, synthetic=None, *,
                 n_labels: int | None = None, n_groups: int | None = None,
                 name: str = ""):
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim != 2:
            feats = feats.reshape(len(feats), -1) if len(feats) else feats.reshape(0, 0)
        labels_a = np.asarray(labels, dtype=np.int64)
        groups_a = np.asarray(groups, dtype=np.int64)
        if synthetic is None:
            synth_a = np.zeros(len(feats), dtype=bool)
        else:
            synth_a = np.asarray(synthetic, dtype=bool)
            if synth_a.shape == ():
                synth_a = np.full(len(feats), bool(synth_a))
        n = feats.shape[0]
        if not (len(labels_a) == len(groups_a) == len(synth_a) == n):
            raise ConfigError("features, labels, groups and synthetic must "
                              "have identical lengths")
        if n and not np.isfinite(feats).all():
            raise ConfigError("features must be finite")
        if n and (labels_a.min() < 0 or groups_a.min() < 0):
            raise ConfigError("labels and groups must be non-negative")
        self._n_labels = int(n_labels if n_labels is not None
                             else (labels_a.max() + 1 if n else 0))
        self._n_groups = int(n_groups if n_groups is not None
                             else (groups_a.max() + 1 if n else 0))
        if n and labels_a.max() >= self._n_labels:
            raise ConfigError(f"label {labels_a.max()} outside declared "
                              f"cardinality {self._n_labels}")
        if n and groups_a.max() >= self._n_groups:
            raise ConfigError(f"group {groups_a.max()} outside declared "
                              f"cardinality {self._n_groups}")
        feats.setflags(write=False)
        labels_a.setflags(write=False)
        groups_a.setflags(write=False)
        synth_a.setflags(write=False)
        self.features = feats
        self.labels = labels_a
        self.groups = groups_a
        self.synthetic = synth_a
        self.name = name

    # -- basic container protocol -------------------------------------------

    def __len__(self) -> int:
        return self.features.shape[0]

    def __getitem__(self, i: int) -> Instance:
        return Instance(tuple(float(v) for v in self.features[i]),
                        int(self.labels[i]), int(self.groups[i]),
                        bool(self.synthetic[i]))

    def __iter__(self) -> Iterator[Instance]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.features.shape == other.features.shape
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.groups, other.groups)
                and np.array_equal(self.synthetic, other.synthetic)
                and self.n_labels == other.n_labels
                and self.n_groups == other.n_groups)

    def __repr__(self) -> str:
        return (f"Dataset(n={len(self)}, d={self.d}, "
                f"n_labels={self.n_labels}, n_groups={self.n_groups}"
                + (f", name={self.name!r}" if self.name else "") + ")")

    # -- schema --------------------------------------------------------------

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self._n_labels

    @property
    def n_groups(self) -> int:
        return self._n_groups

    # -- derived views -------------------------------------------------------

    def take(self, indices) -> "Dataset":
        """New dataset with the rows at ``indices``, in that order."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.groups[idx],
                       self.synthetic[idx], n_labels=self._n_labels,
                       n_groups=self._n_groups, name=self.name)

    def group_indices(self, group: int) -> np.ndarray:
        return np.nonzero(self.groups == group)[0]

    def group_counts(self) -> np.ndarray:
        """Instance count per declared group value."""
        return np.bincount(self.groups, minlength=self._n_groups)

    @staticmethod
    def from_instances(instances: Sequence[Instance], *,
                       n_labels: int | None = None,
                       n_groups: int | None = None,
                       name: str = "") -> "Dataset":
        feats = np.array([inst.features for inst in instances], dtype=np.float64)
        if feats.size == 0:
            feats = feats.reshape(0, 0)
        return Dataset(feats,
                       [inst.label for inst in instances],
                       [inst.group for inst in instances],
                       [inst.synthetic for inst in instances],
                       n_labels=n_labels, n_groups=n_groups, name=name)


def concat(parts: Sequence[Dataset], name: str = "") -> Dataset:
    """Concatenate datasets that share a schema, preserving order."""
    if not parts:
        raise ConfigError("concat needs at least one dataset")
    d = parts[0].d
    for p in parts[1:]:
        if p.d != d:
            raise SchemaError(f"dimension mismatch in concat: {p.d} != {d}")
    return Dataset(np.concatenate([p.features for p in parts]),
                   np.concatenate([p.labels for p in parts]),
                   np.concatenate([p.groups for p in parts]),
                   np.concatenate([p.synthetic for p in parts]),
                   n_labels=max(p.n_labels for p in parts),
                   n_groups=max(p.n_groups for p in parts),
                   name=name)


@dataclass(frozen=True)
class SynthConfig:
    """Recipe for a synthetic dataset with a controlled group mix.

    ``group_prevalence`` gives the sampling probability of each group;
    group g's feature cloud is an isotropic Gaussian whose mean sits at
    ``(g - (K-1)/2) * class_separation`` along the first axis, so two groups
    land at +/- class_separation/2.  The label of every instance equals its
    group: the classifier's task is to predict the discriminant attribute
    itself, which makes prediction shares directly comparable to group
    shares.
    """

    n: int
    d: int
    group_prevalence: tuple[float, ...]
    class_separation: float = 1.5
    noise_sd: float = 1.0
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "group_prevalence",
                           tuple(float(p) for p in self.group_prevalence))
        prev = self.group_prevalence
        if len(prev) < 1:
            raise ConfigError("group_prevalence must be non-empty")
        if any(not (0.0 < p <= 1.0) for p in prev):
            raise ConfigError(f"prevalences must lie in (0, 1], got {prev}")
        if abs(sum(prev) - 1.0) > 1e-9:
            raise ConfigError(f"prevalences must sum to 1, got sum {sum(prev)!r}")
        if self.n < len(prev):
            raise ConfigError(f"n={self.n} smaller than the number of groups")
        if self.class_separation < 0:
            raise ConfigError("class_separation must be >= 0")
        if self.noise_sd <= 0:
            raise ConfigError("noise_sd must be > 0")
        if self.d < 1:
            raise ConfigError("d must be >= 1")


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Draw ``cfg.n`` instances with the configured group mix.

    Deterministic in ``cfg.seed``; all instances are flagged as real
    (synthetic=False) since they play the role of collected data.
    """
    rng = np.random.default_rng(cfg.seed)
    k = len(cfg.group_prevalence)
    groups = rng.choice(k, size=cfg.n, p=np.asarray(cfg.group_prevalence))
    offsets = (np.arange(k) - (k - 1) / 2.0) * cfg.class_separation
    feats = rng.normal(0.0, cfg.noise_sd, size=(cfg.n, cfg.d))
    feats[:, 0] += offsets[groups]
    return Dataset(feats, groups.copy(), groups, np.zeros(cfg.n, dtype=bool),
                   n_labels=k, n_groups=k, name=cfg.name)


def split(ds: Dataset, train_frac: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled partition into (train, test).

    The train size is ``round(n * train_frac)`` (banker's rounding); the
    remainder goes to test.  The two parts are disjoint and jointly cover
    the input.
    """
    if len(ds) == 0:
        raise SizeError("cannot split an empty dataset")
    if not (0.0 < train_frac < 1.0):
        raise ConfigError(f"train_frac must lie in (0, 1), got {train_frac}")
    n = len(ds)
    n_train = int(round(n * train_frac))
    perm = np.random.default_rng(seed).permutation(n)
    return ds.take(perm[:n_train]), ds.take(perm[n_train:])


# -- CSV persistence ---------------------------------------------------------
#
# Schema: header `f0,...,f{d-1},label,group,synthetic`; features as decimal
# floats (shortest round-trip repr), label/group as non-negative integers,
# synthetic as 0/1.  UTF-8, LF line endings, '.' decimal separator.


def _header(d: int) -> str:
    return ",".join([f"f{i}" for i in range(d)] + ["label", "group", "synthetic"])


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` to ``path``; full precision, stable row order."""
    lines = [_header(ds.d)]
    for i in range(len(ds)):
        feats = ",".join(repr(float(v)) for v in ds.features[i])
        row = f"{ds.labels[i]},{ds.groups[i]},{int(ds.synthetic[i])}"
        lines.append(f"{feats},{row}" if ds.d else row)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8",
                          newline="\n")


def read_csv(path, *, n_labels: int | None = None,
             n_groups: int | None = None) -> Dataset:
    """Read a dataset written by `write_csv`.

    Cardinalities are inferred from the data unless given explicitly.
    Raises `SchemaError` for a bad header or wrong column count (naming the
    line) and `ParseError` for unparseable values.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SchemaError(f"{path}: empty file, expected a header")
    header = lines[0].split(",")
    if len(header) < 3 or header[-3:] != ["label", "group", "synthetic"]:
        raise SchemaError(f"{path}: line 1: bad header {lines[0]!r}")
    d = len(header) - 3
    if [h for h in header[:d]] != [f"f{i}" for i in range(d)]:
        raise SchemaError(f"{path}: line 1: bad feature columns in header")
    feats = np.empty((len(lines) - 1, d), dtype=np.float64)
    labels = np.empty(len(lines) - 1, dtype=np.int64)
    groups = np.empty(len(lines) - 1, dtype=np.int64)
    synth = np.empty(len(lines) - 1, dtype=bool)
    for row, line in enumerate(lines[1:]):
        lineno = row + 2
        cells = line.split(",")
        if len(cells) != d + 3:
            raise SchemaError(f"{path}: line {lineno}: expected {d + 3} "
                              f"columns, found {len(cells)}")
        try:
            for j in range(d):
                feats[row, j] = float(cells[j])
            labels[row] = int(cells[d])
            groups[row] = int(cells[d + 1])
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from None
        if cells[d + 2] not in ("0", "1"):
            raise ParseError(f"{path}: line {lineno}: synthetic flag must be "
                             f"0 or 1, got {cells[d + 2]!r}")
        synth[row] = cells[d + 2] == "1"
    if labels.size and (labels.min() < 0 or groups.min() < 0):
        raise ParseError(f"{path}: negative label or group id")
    return Dataset(feats, labels, groups, synth,
                   n_labels=n_labels, n_groups=n_groups)
