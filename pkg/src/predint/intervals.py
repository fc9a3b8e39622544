"""Prediction intervals and sets from leave-one-out and K-fold residuals.

Eight constructions share the two corrected quantile operators:

* ``naive_interval``     - in-sample residual quantile around the full fit
* ``split_conformal``    - holdout residual quantile around the split fit
* ``jackknife``          - leave-one-out residual quantile around the full fit
* ``jackknife_plus``     - quantiles of per-point leave-one-out predictions
                           shifted by their own residuals
* ``jackknife_minmax``   - residual quantile around the extreme LOO predictions
* ``cv_plus``            - jackknife+ with K-fold instead of leave-one-out fits
* ``cross_conformal_set``- exact sweep over the rank-test membership predicate
* ``full_conformal_set`` - refit on the augmented sample per candidate y

All intervals are closed. Empty intervals (lower > upper) are kept explicit
rather than silently swapped. The interval methods accept an epsilon
inflation and an asymmetric (signed-residual) mode; the two set-valued
methods are rank tests on absolute residuals and reject both options.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dataset import Dataset, SplitSpec
from .errors import ConfigError
from .quantiles import lower_quantile, upper_quantile
from .regressors import FittedModel, Regressor, canonical_order

__all__ = [
    "IntervalSpec",
    "GridSpec",
    "PredictionInterval",
    "PredictionSet",
    "LooCache",
    "build_loo_cache",
    "naive_interval",
    "split_conformal",
    "jackknife",
    "jackknife_from_cache",
    "jackknife_plus",
    "jackknife_minmax",
    "cv_plus",
    "cross_conformal_set",
    "full_conformal_set",
    "contains",
    "interval_about",
    "METHOD_TOKENS",
]

METHOD_TOKENS = (
    "naive",
    "split",
    "jackknife",
    "jackknife+",
    "jackknife-mm",
    "cv+",
    "cross-conformal",
    "full-conformal",
)


@dataclass(frozen=True)
class IntervalSpec:
    """Target level and mode for an interval construction.

    Symmetric mode uses absolute residuals at level ``alpha``. Asymmetric mode
    splits the budget into ``alpha_lo`` (lower tail) and ``alpha_hi`` (upper
    tail), both positive and summing to alpha, and works with signed
    residuals. ``inflation_eps`` widens each endpoint outward by eps.
    """

    alpha: float
    alpha_lo: float | None = None
    alpha_hi: float | None = None
    inflation_eps: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.inflation_eps < 0.0:
            raise ConfigError(f"inflation_eps must be >= 0, got {self.inflation_eps}")
        if (self.alpha_lo is None) != (self.alpha_hi is None):
            raise ConfigError("asymmetric mode needs both alpha_lo and alpha_hi")
        if self.alpha_lo is not None:
            if self.alpha_lo <= 0.0 or self.alpha_hi <= 0.0:
                raise ConfigError("alpha_lo and alpha_hi must be positive")
            if abs((self.alpha_lo + self.alpha_hi) - self.alpha) > 1e-12:
                raise ConfigError(
                    f"alpha_lo + alpha_hi = {self.alpha_lo + self.alpha_hi} "
                    f"does not match alpha = {self.alpha}"
                )

    @property
    def asymmetric(self) -> bool:
        return self.alpha_lo is not None


@dataclass(frozen=True)
class GridSpec:
    """Candidate grid for full conformal: ``num_points`` evenly spaced values.

    Bounds default to the observed training response range.
    """

    num_points: int = 200
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.num_points < 2:
            raise ConfigError(f"grid needs at least 2 points, got {self.num_points}")
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ConfigError("grid lower bound exceeds upper bound")


@dataclass(frozen=True)
class PredictionInterval:
    """A closed interval [lower, upper] on the extended real line.

    ``lower > upper`` encodes the empty interval; endpoints are never swapped.
    """

    lower: float
    upper: float

    @property
    def is_empty(self) -> bool:
        return self.lower > self.upper

    @property
    def width(self) -> float:
        if self.is_empty:
            return 0.0
        return self.upper - self.lower

    def contains(self, y: float) -> bool:
        return bool(not self.is_empty and self.lower <= y <= self.upper)

    def inflate(self, eps: float) -> "PredictionInterval":
        if eps == 0.0:
            return self
        return PredictionInterval(self.lower - eps, self.upper + eps)


@dataclass(frozen=True)
class PredictionSet:
    """A finite union of disjoint closed intervals, sorted by lower endpoint.

    Canonical form: empties dropped, overlapping or touching components
    merged. May be empty (no components) or all of R (one infinite interval).
    """

    intervals: tuple[PredictionInterval, ...]

    @classmethod
    def from_intervals(cls, items) -> "PredictionSet":
        live = sorted(
            (iv for iv in items if not iv.is_empty), key=lambda iv: (iv.lower, iv.upper)
        )
        merged: list[PredictionInterval] = []
        for iv in live:
            if merged and iv.lower <= merged[-1].upper:
                if iv.upper > merged[-1].upper:
                    merged[-1] = PredictionInterval(merged[-1].lower, iv.upper)
            else:
                merged.append(iv)
        return cls(tuple(merged))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def total_width(self) -> float:
        return float(sum(iv.width for iv in self.intervals))

    def contains(self, y: float) -> bool:
        return any(iv.contains(y) for iv in self.intervals)


def contains(obj, y: float) -> bool:
    """Membership test for either a PredictionInterval or a PredictionSet."""
    return obj.contains(y)


class LooCache:
    """Fitted fold models and residuals, shared across interval constructions.

    For ``k_folds == n`` the folds are singletons and the cache holds the
    classic leave-one-out fits. Immutable once built; all downstream methods
    read from it without refitting.
    """

    def __init__(self, train, regressor, k_folds, fold_of, fold_models, full_model):
        self.train = train
        self.regressor = regressor
        self.k_folds = k_folds
        self.fold_of = fold_of
        self.fold_models = fold_models
        self.full_model = full_model
        preds = np.empty(train.n)
        for k, model in enumerate(fold_models):
            mask = fold_of == k
            preds[mask] = model.predict_many(train.features[mask])
        self.signed_residuals = train.responses - preds
        self.residuals = np.abs(self.signed_residuals)
        self.signed_residuals.flags.writeable = False
        self.residuals.flags.writeable = False
        fold_of.flags.writeable = False

    @property
    def n(self) -> int:
        return self.train.n

    def predictions_at(self, x) -> np.ndarray:
        """Per-row fold predictions mu_{-fold(i)}(x), one entry per row."""
        per_fold = np.array([m.predict(x) for m in self.fold_models], dtype=float)
        return per_fold[self.fold_of]


def build_loo_cache(
    train: Dataset,
    regressor: Regressor,
    k_folds: int | None = None,
    *,
    fold_seed: int = 0,
    strict: bool = False,
    fold_assignment=None,
) -> LooCache:
    """Fit the K fold models (K defaults to n, i.e. leave-one-out).

    The fold partition is dealt uniformly at random (seeded) over the
    canonical row order, so it is a function of row content, not row order.
    With ``strict`` set, K must divide n; otherwise fold sizes may differ by
    one and a warning is emitted. ``fold_assignment`` overrides the partition
    with an explicit per-row fold index array (mainly for worked examples).
    """
    n = train.n
    if n < 1:
        raise ConfigError("cannot build a cache from an empty training set")
    k = n if k_folds is None else k_folds
    if not 1 <= k <= n:
        raise ConfigError(f"k_folds must be in [1, {n}], got {k}")

    if fold_assignment is not None:
        fold_of = np.asarray(fold_assignment, dtype=int).copy()
        if fold_of.shape != (n,) or fold_of.min() < 0 or fold_of.max() >= k:
            raise ConfigError("fold_assignment must map each row into range(k_folds)")
    elif k == n:
        fold_of = np.arange(n)
    else:
        if n % k != 0:
            if strict:
                raise ConfigError(f"k_folds={k} does not divide n={n} (strict mode)")
            warnings.warn(
                f"k_folds={k} does not divide n={n}; fold sizes will differ by one",
                stacklevel=2,
            )
        order = canonical_order(train.features, train.responses)
        deal = order[np.random.default_rng(fold_seed).permutation(n)]
        fold_of = np.empty(n, dtype=int)
        sizes = [n // k + (1 if j < n % k else 0) for j in range(k)]
        start = 0
        for j, size in enumerate(sizes):
            fold_of[deal[start : start + size]] = j
            start += size

    fold_models = []
    for j in range(k):
        fold_models.append(regressor.fit(train.drop(np.flatnonzero(fold_of == j))))
    return LooCache(train, regressor, k, fold_of, fold_models, regressor.fit(train))


def _symmetric_interval(center_lo, center_hi, residuals, spec):
    """[center_lo - q_hi, center_hi + q_hi] from absolute residuals."""
    q = upper_quantile(residuals, spec.alpha)
    eps = spec.inflation_eps
    return PredictionInterval(center_lo - q - eps, center_hi + q + eps)


def _asymmetric_interval(center_lo, center_hi, signed_residuals, spec):
    """Signed-residual endpoints: lower tail at alpha_lo, upper at alpha_hi."""
    lo = lower_quantile(signed_residuals, spec.alpha_lo)
    hi = upper_quantile(signed_residuals, spec.alpha_hi)
    eps = spec.inflation_eps
    return PredictionInterval(center_lo + lo - eps, center_hi + hi + eps)


def interval_about(model: FittedModel, signed_residuals, spec: IntervalSpec, x) -> PredictionInterval:
    """Residual-quantile interval around ``model``'s prediction at x.

    Shared core of naive, split, and jackknife: only the residual source
    differs between the three.
    """
    center = model.predict(x)
    if spec.asymmetric:
        return _asymmetric_interval(center, center, signed_residuals, spec)
    return _symmetric_interval(center, center, np.abs(signed_residuals), spec)


def naive_interval(
    train: Dataset, regressor: Regressor, spec: IntervalSpec, x
) -> PredictionInterval:
    """Full-fit prediction plus an in-sample residual quantile.

    No coverage guarantee: an interpolating fit has zero in-sample residuals
    and produces a zero-width interval.
    """
    model = regressor.fit(train)
    return naive_from_model(model, train, spec, x)


def naive_from_model(
    model: FittedModel, train: Dataset, spec: IntervalSpec, x
) -> PredictionInterval:
    signed = train.responses - model.predict_many(train.features)
    return interval_about(model, signed, spec, x)


def split_conformal(
    train: Dataset, regressor: Regressor, spec: IntervalSpec, split: SplitSpec, x
) -> PredictionInterval:
    """Fit on one part, take the corrected residual quantile on the holdout."""
    fit_idx, holdout_idx = split.resolve(train.n)
    model = regressor.fit(train.take(fit_idx))
    holdout = train.take(holdout_idx)
    signed = holdout.responses - model.predict_many(holdout.features)
    return interval_about(model, signed, spec, x)


def jackknife(
    train: Dataset, regressor: Regressor, spec: IntervalSpec, x
) -> PredictionInterval:
    """Full-fit prediction plus a leave-one-out residual quantile."""
    if train.n < 2:
        raise ConfigError("jackknife needs at least 2 training rows")
    cache = build_loo_cache(train, regressor)
    return jackknife_from_cache(cache, spec, x)


def jackknife_from_cache(cache: LooCache, spec: IntervalSpec, x) -> PredictionInterval:
    _require_loo(cache, "jackknife")
    return interval_about(cache.full_model, cache.signed_residuals, spec, x)


def cv_plus(cache: LooCache, spec: IntervalSpec, x) -> PredictionInterval:
    """Quantiles of the per-row fold predictions shifted by their residuals.

    With K = n folds this is exactly jackknife+; the two share this code path
    bit for bit.
    """
    if cache.k_folds < 2:
        raise ConfigError("cv+ needs at least 2 folds (K=1 is leave-all-out)")
    m = cache.predictions_at(x)
    eps = spec.inflation_eps
    if spec.asymmetric:
        shifted = m + cache.signed_residuals
        return PredictionInterval(
            lower_quantile(shifted, spec.alpha_lo) - eps,
            upper_quantile(shifted, spec.alpha_hi) + eps,
        )
    return PredictionInterval(
        lower_quantile(m - cache.residuals, spec.alpha) - eps,
        upper_quantile(m + cache.residuals, spec.alpha) + eps,
    )


def jackknife_plus(cache: LooCache, spec: IntervalSpec, x) -> PredictionInterval:
    _require_loo(cache, "jackknife+")
    return cv_plus(cache, spec, x)


def jackknife_minmax(cache: LooCache, spec: IntervalSpec, x) -> PredictionInterval:
    """Residual quantile around the extreme leave-one-out predictions."""
    _require_loo(cache, "jackknife-mm")
    m = cache.predictions_at(x)
    lo, hi = float(np.min(m)), float(np.max(m))
    if spec.asymmetric:
        return _asymmetric_interval(lo, hi, cache.signed_residuals, spec)
    return _symmetric_interval(lo, hi, cache.residuals, spec)


def _require_loo(cache: LooCache, name: str) -> None:
    if cache.k_folds != cache.n:
        raise ConfigError(f"{name} needs a leave-one-out cache (k_folds == n)")


def _require_plain_spec(spec: IntervalSpec, name: str) -> None:
    if spec.asymmetric:
        raise ConfigError(f"{name} is a rank test on absolute residuals; "
                          "asymmetric mode is not defined")
    if spec.inflation_eps != 0.0:
        raise ConfigError(f"{name} does not define epsilon inflation")


def cross_conformal_set(
    cache: LooCache, spec: IntervalSpec, x, tau: float
) -> PredictionSet:
    """Exact membership set of the cross-conformal rank test.

    y belongs to the set iff

        (tau + #{i: |y - m_i| < R_i} + tau * #{i: |y - m_i| = R_i}) / (n + 1)
            > alpha

    with m_i the fold prediction at x for row i and R_i its residual. The
    count is piecewise constant between the breakpoints m_i +- R_i, so the
    predicate is evaluated exactly on every open gap and at every breakpoint,
    and adjacent accepted cells are merged. The returned set is the closure
    of the exact membership set (components are closed intervals).
    """
    if cache.k_folds < 2:
        raise ConfigError("cross-conformal needs at least 2 folds")
    _require_plain_spec(spec, "cross-conformal")
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau must be in [0, 1], got {tau}")

    m = cache.predictions_at(x)
    r = cache.residuals
    lo_pts = m - r
    hi_pts = m + r
    n = cache.n
    tau_frac = Fraction(tau)
    threshold = Fraction(spec.alpha) * (n + 1)

    def accepted_at_point(y: float) -> bool:
        dist = np.abs(y - m)
        strict = int(np.count_nonzero(dist < r))
        equal = int(np.count_nonzero(dist == r))
        return tau_frac * (1 + equal) + strict > threshold

    def accepted_on_gap(left: float, right: float) -> bool:
        # For y strictly between consecutive breakpoints, |y - m_i| < R_i
        # iff lo_i <= left and hi_i >= right; no equality cases can occur.
        strict = int(np.count_nonzero((lo_pts <= left) & (hi_pts >= right)))
        return tau_frac + strict > threshold

    breaks = np.unique(np.concatenate([lo_pts, hi_pts]))
    cells = []  # (left, right, accepted), in increasing order
    cells.append((-math.inf, breaks[0], accepted_on_gap(-math.inf, breaks[0])))
    for i, b in enumerate(breaks):
        cells.append((float(b), float(b), accepted_at_point(float(b))))
        right = breaks[i + 1] if i + 1 < len(breaks) else math.inf
        cells.append((float(b), float(right), accepted_on_gap(float(b), float(right))))

    intervals = []
    run_start = None
    run_end = None
    for left, right, ok in cells:
        if ok:
            if run_start is None:
                run_start = left
            run_end = right
        elif run_start is not None:
            intervals.append(PredictionInterval(run_start, run_end))
            run_start = None
    if run_start is not None:
        intervals.append(PredictionInterval(run_start, run_end))
    return PredictionSet.from_intervals(intervals)


def full_conformal_set(
    train: Dataset,
    regressor: Regressor,
    spec: IntervalSpec,
    x,
    grid: GridSpec | None = None,
) -> PredictionSet:
    """Refit-on-augmented-sample membership over a candidate grid.

    Each candidate y is added to the training set, the model is refit, and y
    is kept iff its own residual is at most the corrected quantile of the
    original rows' residuals under the refit model. Contiguous accepted grid
    points merge into closed intervals.
    """
    _require_plain_spec(spec, "full-conformal")
    if grid is None:
        grid = GridSpec()
    lo = grid.lower if grid.lower is not None else float(np.min(train.responses))
    hi = grid.upper if grid.upper is not None else float(np.max(train.responses))
    if lo > hi:
        raise ConfigError("grid lower bound exceeds upper bound")
    ys = np.linspace(lo, hi, grid.num_points)

    x = np.asarray(x, dtype=float)
    aug_features = np.vstack([train.features, x])
    accepted = np.zeros(len(ys), dtype=bool)
    for idx, y in enumerate(ys):
        aug = Dataset(aug_features, np.append(train.responses, y))
        model = regressor.fit(aug)
        resid = np.abs(train.responses - model.predict_many(train.features))
        accepted[idx] = abs(y - model.predict(x)) <= upper_quantile(resid, spec.alpha)

    intervals = []
    start = None
    for idx, ok in enumerate(accepted):
        if ok and start is None:
            start = idx
        elif not ok and start is not None:
            intervals.append(PredictionInterval(float(ys[start]), float(ys[idx - 1])))
            start = None
    if start is not None:
        intervals.append(PredictionInterval(float(ys[start]), float(ys[-1])))
    return PredictionSet.from_intervals(intervals)
