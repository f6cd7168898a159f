"""Hierarchical weight stacking: per-timestep multiplicative weight
optimization under an arbitrary loss, and the layered model that learns
those weights from side-information features.

The weight optimizer is a grid argmin evaluated independently at every
timestep. It only ever calls the loss as a value function, so losses with
a zero or undefined second derivative (L1, pinball) work unchanged; no
gradient or hessian is computed anywhere in this module.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    ChronoSplit,
    ConfigError,
    DataError,
    Dataset,
    EmptyInput,
    FeatureGroups,
    LengthMismatch,
    validate_groups,
)
from .learners import BoostConfig, BoostedModel, fit_boosted, predict_boosted


class GroupCountTooSmall(DataError):
    """Hierarchical stacking needs at least two feature groups."""


LossFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def l1_loss(y_true: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
    return np.abs(y_true - y_pred)


def l2_loss(y_true: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
    return (y_true - y_pred) ** 2


def pinball_loss(quantile: float) -> LossFn:
    if not (0.0 < quantile < 1.0):
        raise ConfigError("pinball quantile must be in (0, 1)")

    def loss(y_true: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
        d = y_true - y_pred
        return np.maximum(quantile * d, (quantile - 1.0) * d)

    return loss


_LOSS_REGISTRY: dict[str, Callable[..., LossFn]] = {
    "l1": lambda: l1_loss,
    "l2": lambda: l2_loss,
    "pinball": pinball_loss,
}


def register_loss(name: str, factory: Callable[..., LossFn]) -> None:
    """Register a loss under a config-referencable name.

    ``factory()`` (with optional float arguments) must return a plain
    value function (y_true, y_pred) -> elementwise loss. Nothing in the
    pipeline will ask it for derivatives.
    """
    _LOSS_REGISTRY[name.lower()] = factory


def resolve_loss(spec) -> LossFn:
    """Turn 'l1' / 'l2' / 'pinball(0.3)' / a callable into a loss function."""
    if callable(spec):
        return spec
    text = str(spec).strip().lower()
    match = re.fullmatch(r"(\w+)(?:\(([^)]*)\))?", text)
    if not match:
        raise ConfigError(f"cannot parse loss {spec!r}")
    name, argtext = match.group(1), match.group(2)
    factory = _LOSS_REGISTRY.get(name)
    if factory is None:
        raise ConfigError(f"unknown loss {name!r}; registered: {sorted(_LOSS_REGISTRY)}")
    args = [float(a) for a in argtext.split(",")] if argtext else []
    return factory(*args)


@dataclass(frozen=True)
class CostOptConfig:
    """Grid settings for the per-timestep weight search.

    The grid spans [1 - beta, 1 + beta] with n_steps evenly spaced points
    including both endpoints.
    """

    beta: float = 0.33
    n_steps: int = 30
    loss: object = "l1"

    def __post_init__(self):
        if not (0.0 <= self.beta <= 1.0):
            raise ConfigError("beta must be in [0, 1]")
        if self.n_steps < 2:
            raise ConfigError("n_steps must be >= 2")
        resolve_loss(self.loss)  # fail fast on unknown identifiers

    def grid(self) -> np.ndarray:
        return np.linspace(1.0 - self.beta, 1.0 + self.beta, self.n_steps)


def optimize_alphas(y, y_tilde, cfg: CostOptConfig) -> np.ndarray:
    """Per-timestep grid argmin of loss(y_t, alpha * y_tilde_t).

    Each timestep is optimized independently; ties break toward the
    smallest grid value. Every returned weight is exactly one of the
    grid points.
    """
    y = np.asarray(y, dtype=np.float64)
    y_tilde = np.asarray(y_tilde, dtype=np.float64)
    if len(y) != len(y_tilde):
        raise LengthMismatch(f"y has {len(y)} elements, y_tilde has {len(y_tilde)}")
    if len(y) == 0:
        raise EmptyInput("nothing to optimize")
    if not (np.isfinite(y).all() and np.isfinite(y_tilde).all()):
        raise DataError("inputs must be finite")
    loss = resolve_loss(cfg.loss)
    grid = cfg.grid()
    losses = loss(y[None, :], grid[:, None] * y_tilde[None, :])
    idx = np.argmin(losses, axis=0)  # first minimum = smallest grid value
    return grid[idx]


@dataclass(frozen=True)
class WeightLayer:
    """One stacking step: a learner mapping side features to weights."""

    weight_learner: BoostedModel
    columns: tuple[int, ...]
    group_index: int


@dataclass(frozen=True)
class HierarchicalModel:
    """Chain: base predictions rescaled by one learned weight per layer.

    ``clamp`` restricts test-time weights to the training grid range
    [1 - beta, 1 + beta]; the weight learner may extrapolate beyond the
    targets it was trained on otherwise.
    """

    base_learner: BoostedModel
    base_columns: tuple[int, ...]
    layers: tuple[WeightLayer, ...]
    cost: CostOptConfig
    clamp: bool = True


def _out_of_fold_predictions(X, y, boost: BoostConfig, seed: int, folds: int) -> np.ndarray:
    """Leave-one-block-out predictions over contiguous chronological blocks."""
    n = len(y)
    if folds < 2 or folds > n:
        raise ConfigError("oof_folds must be in [2, n_train]")
    blocks = np.array_split(np.arange(n), folds)
    out = np.empty(n)
    for block in blocks:
        rest = np.setdiff1d(np.arange(n), block)
        model = fit_boosted(X[rest], y[rest], boost, seed)
        out[block] = predict_boosted(model, X[block])
    return out


def fit_hierarchical(
    dataset: Dataset,
    groups: FeatureGroups,
    split: ChronoSplit,
    boost: BoostConfig,
    cost: CostOptConfig,
    seed: int = 0,
    *,
    clamp: bool = True,
    oof_folds: int | None = None,
) -> HierarchicalModel:
    """Fit the layered stacker on the training window.

    Layer 1 fits the base learner on the target-history group (group 0).
    For each side group in order: optimize per-timestep weights against
    the current training predictions, fit a weight learner on that
    group's features to predict them, and rescale the training
    predictions by the learner's (not the optimizer's) output before the
    next layer.

    ``oof_folds`` switches the weight targets to out-of-fold base
    predictions (contiguous blocks), which counters the in-sample
    optimism of a strong base learner; default is plain in-sample.
    """
    validate_groups(dataset, groups)
    if groups.k < 2:
        raise GroupCountTooSmall("need a target-history group plus at least one side group")

    tr = split.train_slice
    y_train = dataset.y[tr]
    base_cols = groups.columns(0)
    X_base = dataset.X[tr][:, base_cols]

    base = fit_boosted(X_base, y_train, boost, seed)
    if oof_folds is None:
        y_tilde = predict_boosted(base, X_base)
    else:
        y_tilde = _out_of_fold_predictions(X_base, y_train, boost, seed, oof_folds)

    layers: list[WeightLayer] = []
    for gi in range(1, groups.k):
        cols = groups.columns(gi)
        X_side = dataset.X[tr][:, cols]
        alphas = optimize_alphas(y_train, y_tilde, cost)
        learner = fit_boosted(X_side, alphas, boost, seed + gi)
        alpha_hat = predict_boosted(learner, X_side)
        y_tilde = alpha_hat * y_tilde
        layers.append(WeightLayer(learner, cols, gi))

    return HierarchicalModel(
        base_learner=base,
        base_columns=base_cols,
        layers=tuple(layers),
        cost=cost,
        clamp=clamp,
    )


def predict_hierarchical(model: HierarchicalModel, X) -> np.ndarray:
    """Base predictions, rescaled layer by layer by the learned weights."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"X must be 2-dimensional, got shape {X.shape}")
    needed = max(
        max(model.base_columns),
        max((max(l.columns) for l in model.layers), default=0),
    )
    if needed >= X.shape[1]:
        raise DataError(f"model needs column {needed}, matrix has {X.shape[1]}")
    y_hat = predict_boosted(model.base_learner, X[:, model.base_columns])
    lo, hi = 1.0 - model.cost.beta, 1.0 + model.cost.beta
    for layer in model.layers:
        alpha = predict_boosted(layer.weight_learner, X[:, layer.columns])
        if model.clamp:
            alpha = np.clip(alpha, lo, hi)
        y_hat = alpha * y_hat
    return y_hat
