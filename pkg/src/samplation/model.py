"""Multinomial logistic (softmax) classifier trained by mini-batch SGD.

This is the pre-trainable / fine-tunable model the remediation pipeline
operates on: convex objective, analytic gradient (checked against finite
differences in the test suite), fully seed-deterministic.  `finetune`
continues SGD from existing weights without re-initialization, which is the
whole point -- the reverse-biased sample acts on an already trained model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, SizeError, TrainingError

__all__ = [
    "Model",
    "TrainConfig",
    "pretrain",
    "finetune",
    "predict",
    "loss_and_grad",
    "save_model",
    "load_model",
]

INIT_WEIGHT_SD = 0.01


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training round.

    ``epochs`` and ``learning_rate`` may be zero, which turns training into
    the identity on parameters (useful as an explicit no-op).
    """

    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 0.05
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (self.learning_rate >= 0 and np.isfinite(self.learning_rate)):
            raise ConfigError(f"learning_rate must be finite and >= 0")
        if not (self.l2 >= 0 and np.isfinite(self.l2)):
            raise ConfigError("l2 must be finite and >= 0")


@dataclass(frozen=True)
class Model:
    """Softmax classifier parameters plus training metadata."""

    weights: np.ndarray          # (n_labels, d)
    bias: np.ndarray             # (n_labels,)
    trained_epochs: int = 0
    seed_history: tuple[int, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ConfigError(f"inconsistent parameter shapes {w.shape}, {b.shape}")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ConfigError("model parameters must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    @property
    def n_labels(self) -> int:
        return self.weights.shape[0]


def _check_dims(m: Model, ds: Dataset) -> None:
    if ds.d != m.d:
        raise SizeError(f"dataset dimension {ds.d} does not match model "
                        f"dimension {m.d}")


def _softmax(logits: np.ndarray) -> np.ndarray:
    # max-subtraction keeps exp() in range for logits of any magnitude
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def predict(m: Model, xs: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Predicted labels and softmax probabilities for every instance.

    Returns (labels, probs) with probs rows on the probability simplex;
    argmax ties resolve to the lowest label id.
    """
    _check_dims(m, xs)
    probs = _softmax(xs.features @ m.weights.T + m.bias)
    return probs.argmax(axis=1).astype(np.int64), probs


def _loss_grad_arrays(w, b, x, y, l2):
    """Mean cross-entropy + (l2/2)*||w||^2 and its analytic gradient.

    Overflow is not a failure mode here: a non-finite loss is how training
    divergence gets detected, so the computation runs warning-free.
    """
    n = x.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        logits = x @ w.T + b
        zmax = logits.max(axis=1, keepdims=True)
        z = logits - zmax
        lse = np.log(np.exp(z).sum(axis=1))
        loss = float((lse - z[np.arange(n), y]).mean()
                     + 0.5 * l2 * (w * w).sum())
        p = np.exp(z - lse[:, None])
        p[np.arange(n), y] -= 1.0
        gw = p.T @ x / n + l2 * w
        gb = p.mean(axis=0)
    return loss, gw, gb


def loss_and_grad(m: Model, batch: Dataset, l2: float = 0.0):
    """Objective value and gradient of the model on a batch.

    The objective is the mean cross-entropy of the true labels plus an
    (l2/2)*||weights||^2 ridge penalty (bias unpenalized).
    """
    _check_dims(m, batch)
    if len(batch) == 0:
        raise SizeError("loss_and_grad needs a non-empty batch")
    loss, gw, gb = _loss_grad_arrays(m.weights, m.bias, batch.features,
                                     batch.labels, l2)
    return loss, (gw, gb)


def _sgd(w, b, ds: Dataset, cfg: TrainConfig):
    """In-place mini-batch SGD; raises TrainingError on divergence."""
    rng = np.random.default_rng(cfg.seed)
    n = len(ds)
    x, y = ds.features, ds.labels
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            loss, gw, gb = _loss_grad_arrays(w, b, x[idx], y[idx], cfg.l2)
            if not np.isfinite(loss):
                raise TrainingError(
                    "training diverged (non-finite loss); try a smaller "
                    "learning rate")
            w -= cfg.learning_rate * gw
            b -= cfg.learning_rate * gb
    if not (np.isfinite(w).all() and np.isfinite(b).all()):
        raise TrainingError("training diverged (non-finite parameters); "
                            "try a smaller learning rate")


def pretrain(train: Dataset, cfg: TrainConfig) -> Model:
    """Train a fresh model from a Gaussian initialization.

    Weights start at N(0, 0.01^2) drawn from cfg.seed, bias at zero; epoch
    shuffling reuses the same generator, so the whole run is a pure
    function of (data, config).
    """
    if len(train) == 0:
        raise SizeError("cannot pretrain on an empty dataset")
    rng = np.random.default_rng(cfg.seed)
    w = rng.normal(0.0, INIT_WEIGHT_SD, size=(train.n_labels, train.d))
    b = np.zeros(train.n_labels)
    _sgd(w, b, train, cfg)
    return Model(w, b, trained_epochs=cfg.epochs, seed_history=(cfg.seed,))


def finetune(m: Model, sample: Dataset, cfg: TrainConfig) -> Model:
    """Continue SGD from m's parameters on ``sample``; m itself is untouched.

    An empty sample or epochs=0 returns an identical model.
    """
    _check_dims(m, sample)
    if len(sample) == 0 or cfg.epochs == 0:
        return Model(m.weights.copy(), m.bias.copy(),
                     trained_epochs=m.trained_epochs,
                     seed_history=m.seed_history)
    w = m.weights.copy()
    b = m.bias.copy()
    _sgd(w, b, sample, cfg)
    return Model(w, b, trained_epochs=m.trained_epochs + cfg.epochs,
                 seed_history=m.seed_history + (cfg.seed,))


# -- persistence ----------------------------------------------------------------


def save_model(m: Model, path) -> None:
    """Serialize to JSON (weights row-major, full float precision)."""
    payload = {
        "d": m.d,
        "n_labels": m.n_labels,
        "weights": [float(v) for v in m.weights.ravel()],
        "bias": [float(v) for v in m.bias],
        "trained_epochs": m.trained_epochs,
        "seed_history": list(m.seed_history),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n",
                          encoding="utf-8")


def load_model(path) -> Model:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    w = np.array(payload["weights"], dtype=np.float64).reshape(
        payload["n_labels"], payload["d"])
    return Model(w, np.array(payload["bias"], dtype=np.float64),
                 trained_epochs=payload["trained_epochs"],
                 seed_history=tuple(payload["seed_history"]))
