"""Synthetic benchmark generator: a non-stationary ARMA(4,5) target whose
scale is driven by a hidden binary regime, observed only through noisy
side-information features.

The target is min-max scaled, multiplied per element by an up/down factor
selected by the regime label, perturbed with Gaussian noise, and rescaled.
The feature matrix stacks a target-history group (lags and rolling stats)
with the side-information group, so a forecaster can only explain the
scale swings by reading the side features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, Dataset, FeatureGroups, LengthMismatch, build_dataset
from .featgen import FeatureRecipe, history_features, minmax_apply, minmax_fit

BURN_IN = 50

# lags {1..4} + rolling mean/std over windows {2,4,8} = 10 history columns
HISTORY_RECIPE = FeatureRecipe(lag_orders=(1, 2, 3, 4), rolling_windows=(2, 4, 8))


@dataclass(frozen=True)
class ArmaSpec:
    """ARMA(4,5) target process; phi are AR weights, theta MA weights."""

    phi: tuple[float, float, float, float] = (0.4, 0.3, 0.2, 0.1)
    theta: tuple[float, float, float, float, float] = (0.65, 0.35, 0.3, -0.15, -0.3)
    noise_std: float = 1.0
    n: int = 500
    seed: int = 0

    def __post_init__(self):
        if len(self.phi) != 4 or len(self.theta) != 5:
            raise ConfigError("process order is fixed at (4, 5)")
        if self.noise_std <= 0:
            raise ConfigError("noise_std must be positive")
        if self.n < 20:
            raise ConfigError("n must be >= 20")
        object.__setattr__(self, "phi", tuple(float(p) for p in self.phi))
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))


@dataclass(frozen=True)
class SideInfoSpec:
    n_features: int = 26
    imbalance: float = 0.65
    flip_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_features < 1:
            raise ConfigError("n_features must be >= 1")
        if not (0.0 <= self.imbalance <= 1.0):
            raise ConfigError("imbalance must be in [0, 1]")
        if not (0.0 <= self.flip_noise < 0.5):
            raise ConfigError("flip_noise must be in [0, 0.5)")


def gen_arma(spec: ArmaSpec) -> np.ndarray:
    """y_t = sum phi_i * y_{t-i} + sum theta_j * eps_{t-j} + eps_t.

    Zero initial conditions; the first BURN_IN samples are discarded to
    wash out the start-up transient. Deterministic per seed.
    """
    rng = np.random.default_rng(spec.seed)
    total = spec.n + BURN_IN
    eps = rng.normal(0.0, spec.noise_std, total)
    y = np.zeros(total)
    phi, theta = spec.phi, spec.theta
    for t in range(total):
        acc = eps[t]
        for i in range(1, 5):
            if t - i >= 0:
                acc += phi[i - 1] * y[t - i]
        for j in range(1, 6):
            if t - j >= 0:
                acc += theta[j - 1] * eps[t - j]
        y[t] = acc
    return y[BURN_IN:]


def gen_side_info(spec: SideInfoSpec, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Binary regime labels plus class-conditionally Gaussian feature views.

    Every column is informative: column j is N(+delta_j, 1) under label 1
    and N(-delta_j, 1) under label 0, with delta_j drawn once from
    U(0.5, 1.5). ``flip_noise`` corrupts the label a feature row is
    generated from, but the emitted labels stay clean.
    """
    rng = np.random.default_rng(spec.seed)
    labels = (rng.random(n) < spec.imbalance).astype(np.int64)
    delta = rng.uniform(0.5, 1.5, spec.n_features)
    seen = labels.copy()
    if spec.flip_noise > 0:
        flips = rng.random(n) < spec.flip_noise
        seen = np.where(flips, 1 - seen, seen)
    signs = np.where(seen == 1, 1.0, -1.0)
    features = signs[:, None] * delta[None, :] + rng.normal(0.0, 1.0, (n, spec.n_features))
    return labels, features


@dataclass(frozen=True)
class SyntheticBundle:
    """Assembled dataset plus the generator internals, row-aligned."""

    dataset: Dataset
    groups: FeatureGroups
    labels: np.ndarray
    base_series: np.ndarray  # min-max of the raw ARMA draw
    pre_noise: np.ndarray    # base_series scaled by the label multiplier


def assemble_synthetic(
    arma: ArmaSpec,
    side: SideInfoSpec,
    beta_scale: tuple[float, float] = (0.66, 1.33),
    target_noise_std: float = 0.5,
) -> SyntheticBundle:
    """Build the full benchmark dataset.

    Pipeline: min-max the ARMA draw; multiply by beta_scale[1] where the
    regime label is 1, beta_scale[0] otherwise; add N(0, target_noise_std^2)
    noise; min-max rescale. Features are the target-history group (10
    columns) and the side-information columns; the labels themselves are
    not observable.
    """
    series = gen_arma(arma)
    labels, side_feats = gen_side_info(side, arma.n)
    if len(series) != len(side_feats):
        raise LengthMismatch("target and side-information lengths differ")

    base = minmax_apply(minmax_fit(series), series)
    mult = np.where(labels == 1, beta_scale[1], beta_scale[0])
    pre_noise = base * mult
    target = pre_noise
    if target_noise_std > 0:
        noise_rng = np.random.default_rng([arma.seed, side.seed, 0x5CA1E])
        target = pre_noise + noise_rng.normal(0.0, target_noise_std, arma.n)
    y = minmax_apply(minmax_fit(target), target)

    hist, hist_names = history_features(y, HISTORY_RECIPE)
    side_names = [f"side_{j:02d}" for j in range(side.n_features)]
    X = np.column_stack([hist, side_feats])

    # leading rows lost to the longest lag/window
    trim = int(np.argmax(np.isfinite(hist).all(axis=1)))
    dataset = build_dataset(y, X, hist_names + side_names)
    n_hist = len(hist_names)
    groups = FeatureGroups(
        (tuple(range(n_hist)), tuple(range(n_hist, n_hist + side.n_features)))
    )
    return SyntheticBundle(
        dataset=dataset,
        groups=groups,
        labels=labels[trim:],
        base_series=base[trim:],
        pre_noise=pre_noise[trim:],
    )
