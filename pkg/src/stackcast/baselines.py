"""Compared methods, all built on the shared boosted learner: backward-
elimination wrapper, target-history-only (embedded) model, flat two-model
ensemble, Pearson-correlation filter, and the all-features baseline.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    ChronoSplit,
    ConfigError,
    DataError,
    Dataset,
    EmptyGroup,
    FeatureGroups,
)
from .learners import BoostConfig, BoostedModel, fit_boosted, predict_boosted


class GroupCountMismatch(DataError):
    """The flat ensemble is defined for exactly two feature groups."""


class DegenerateFeature(UserWarning):
    """A zero-variance column cannot be correlation-scored; it gets 0."""


@dataclass(frozen=True)
class WrapperTrace:
    """Every candidate fit of the backward elimination, plus stage summaries.

    candidate_fits holds one (stage, removed_feature, val_loss) per model
    fit; stage_subsets / stage_losses record the surviving subset after
    each stage and its (best-candidate) validation loss.
    """

    candidate_fits: tuple[tuple[int, int, float], ...]
    stage_subsets: tuple[tuple[int, ...], ...]
    stage_losses: tuple[float, ...]


def _val_mse(model: BoostedModel, X_val, y_val, cols) -> float:
    pred = predict_boosted(model, X_val[:, cols])
    return float(np.mean((y_val - pred) ** 2))


def fit_wrapper_backward(
    dataset: Dataset,
    split: ChronoSplit,
    boost: BoostConfig,
    seed: int = 0,
) -> tuple[tuple[int, ...], BoostedModel, WrapperTrace]:
    """Backward elimination over all columns, driven by validation L2 loss.

    Starting from the full feature set, each stage refits once per
    remaining feature with that feature removed and permanently drops the
    one whose removal gives the lowest validation loss (ties drop the
    lowest index). After reaching one feature, the stage subset with the
    global minimum validation loss is refit on the training window and
    returned.
    """
    if split.val_start == split.val_end:
        raise ConfigError("wrapper needs a non-empty validation window")
    X_tr = dataset.X[split.train_slice]
    y_tr = dataset.y[split.train_slice]
    X_val = dataset.X[split.val_slice]
    y_val = dataset.y[split.val_slice]

    remaining = list(range(dataset.m))
    fits: list[tuple[int, int, float]] = []
    subsets: list[tuple[int, ...]] = []
    losses: list[float] = []

    stage = 0
    while len(remaining) > 1:
        best_loss = np.inf
        best_drop = None
        for f in remaining:
            cols = [c for c in remaining if c != f]
            model = fit_boosted(X_tr[:, cols], y_tr, boost, seed)
            loss = _val_mse(model, X_val, y_val, cols)
            fits.append((stage, f, loss))
            if loss < best_loss:  # strict: ties keep the earlier = lower index
                best_loss = loss
                best_drop = f
        remaining.remove(best_drop)
        subsets.append(tuple(remaining))
        losses.append(best_loss)
        stage += 1

    if losses:
        selected = subsets[int(np.argmin(losses))]
    else:
        selected = tuple(remaining)
    final = fit_boosted(X_tr[:, selected], y_tr, boost, seed)
    trace = WrapperTrace(tuple(fits), tuple(subsets), tuple(losses))
    return selected, final, trace


def fit_embedded(
    dataset: Dataset,
    groups: FeatureGroups,
    split: ChronoSplit,
    boost: BoostConfig,
    seed: int = 0,
) -> BoostedModel:
    """Boosted model trained on the target-history group only."""
    cols = groups.columns(0)
    if not cols:
        raise EmptyGroup("target-history group is empty")
    tr = split.train_slice
    return fit_boosted(dataset.X[tr][:, cols], dataset.y[tr], boost, seed)


def fit_full_baseline(
    dataset: Dataset,
    split: ChronoSplit,
    boost: BoostConfig,
    seed: int = 0,
    groups: FeatureGroups | None = None,
) -> BoostedModel:
    """Boosted model on all assigned features (all columns when no groups)."""
    cols = groups.all_columns() if groups is not None else tuple(range(dataset.m))
    tr = split.train_slice
    return fit_boosted(dataset.X[tr][:, cols], dataset.y[tr], boost, seed)


@dataclass(frozen=True)
class FlatEnsemble:
    """Convex per-timestep combination of two independently trained learners.

    Training weights come from the grid search of the classic two-model
    ensemble; at test time a single constant ``alpha_star`` (the grid
    argmin of aggregate validation loss) mixes the models, because the
    per-timestep weights need the true target.
    """

    model_one: BoostedModel
    model_two: BoostedModel
    columns_one: tuple[int, ...]
    columns_two: tuple[int, ...]
    alpha_star: float
    alpha_train: np.ndarray
    grid: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        p1 = predict_boosted(self.model_one, X[:, self.columns_one])
        p2 = predict_boosted(self.model_two, X[:, self.columns_two])
        return self.alpha_star * p1 + (1.0 - self.alpha_star) * p2


def fit_flat_ensemble(
    dataset: Dataset,
    groups: FeatureGroups,
    split: ChronoSplit,
    boost: BoostConfig,
    seed: int = 0,
    n_alpha_steps: int = 30,
    loss="l1",
) -> FlatEnsemble:
    """Two base learners (one per group) mixed on a [0, 1] weight grid.

    Training weights minimize loss(y_t, a*p1_t + (1-a)*p2_t) per
    timestep; ties take the smallest grid value. alpha_star minimizes
    the summed loss over the validation window.
    """
    from .hierarchy import resolve_loss  # local import to avoid a cycle

    if groups.k != 2:
        raise GroupCountMismatch(f"flat ensemble needs exactly 2 groups, got {groups.k}")
    if n_alpha_steps < 2:
        raise ConfigError("n_alpha_steps must be >= 2")
    loss_fn = resolve_loss(loss)

    tr = split.train_slice
    c1, c2 = groups.columns(0), groups.columns(1)
    y_tr = dataset.y[tr]
    m1 = fit_boosted(dataset.X[tr][:, c1], y_tr, boost, seed)
    m2 = fit_boosted(dataset.X[tr][:, c2], y_tr, boost, seed + 1)

    grid = np.linspace(0.0, 1.0, n_alpha_steps)
    p1 = predict_boosted(m1, dataset.X[tr][:, c1])
    p2 = predict_boosted(m2, dataset.X[tr][:, c2])
    mix = grid[:, None] * p1[None, :] + (1.0 - grid[:, None]) * p2[None, :]
    alpha_train = grid[np.argmin(loss_fn(y_tr[None, :], mix), axis=0)]

    if split.val_start < split.val_end:
        va = split.val_slice
        v1 = predict_boosted(m1, dataset.X[va][:, c1])
        v2 = predict_boosted(m2, dataset.X[va][:, c2])
        vmix = grid[:, None] * v1[None, :] + (1.0 - grid[:, None]) * v2[None, :]
        val_losses = loss_fn(dataset.y[va][None, :], vmix).sum(axis=1)
        alpha_star = float(grid[int(np.argmin(val_losses))])
    else:
        # no validation window: fall back to the training aggregate
        agg = loss_fn(y_tr[None, :], mix).sum(axis=1)
        alpha_star = float(grid[int(np.argmin(agg))])

    return FlatEnsemble(m1, m2, c1, c2, alpha_star, alpha_train, grid)


def pearson_scores(dataset: Dataset, split: ChronoSplit) -> np.ndarray:
    """|corr(feature, y)| per column on the training window; 0 when degenerate."""
    tr = split.train_slice
    X = dataset.X[tr]
    y = dataset.y[tr]
    yc = y - y.mean()
    sy = np.sqrt(np.mean(yc * yc))
    scores = np.zeros(dataset.m)
    degenerate = []
    for j in range(dataset.m):
        xc = X[:, j] - X[:, j].mean()
        sx = np.sqrt(np.mean(xc * xc))
        if sx == 0.0 or sy == 0.0:
            degenerate.append(dataset.feature_names[j])
            continue
        scores[j] = np.mean(xc * yc) / (sx * sy)
    if degenerate:
        warnings.warn(
            DegenerateFeature(f"zero-variance columns scored 0: {degenerate}"),
            stacklevel=2,
        )
    return scores


def fit_filter(
    dataset: Dataset,
    m: int,
    split: ChronoSplit,
    boost: BoostConfig,
    seed: int = 0,
) -> tuple[tuple[int, ...], BoostedModel]:
    """Keep the m columns with the largest |Pearson score|, then refit.

    Ranking ties break toward the lower column index; zero-variance
    columns score 0 and land last.
    """
    if not (1 <= m <= dataset.m):
        raise ConfigError(f"m must be in [1, {dataset.m}]")
    scores = np.abs(pearson_scores(dataset, split))
    order = sorted(range(dataset.m), key=lambda j: (-scores[j], j))
    selected = tuple(sorted(order[:m]))
    tr = split.train_slice
    model = fit_boosted(dataset.X[tr][:, selected], dataset.y[tr], boost, seed)
    return selected, model
