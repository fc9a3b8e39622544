"""Executable coverage-proof machinery: residual matrices and strange sets.

For a sample of n+1 rows (training rows plus one test row), fit every
pairwise-deleted model mu_{-(i,j)} and form the (n+1) x (n+1) matrix

    R_ij = | Y_i - mu_{-(i,j)}(X_i) |,   R_ii = +inf.

Row i of the comparison matrix records which pairwise contests row i loses
badly: A_ij = 1{R_ij > R_ji} (plus variant) or 1{min_j' R_ij' > R_ji}
(minmax variant). A row is "strange" when it wins at least (1-alpha)(n+1)
contests. Counting arguments bound how many strange rows can exist, and a
test row not covered by the matching interval is always strange; the audit
checks both facts on concrete instances with exact rational thresholds.

Everything here fits the pairwise models directly (no sharing tricks);
intended for n + 1 up to a few dozen rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dataset import Dataset, gen_gaussian_linear
from .errors import ConfigError
from .intervals import PredictionInterval
from .quantiles import lower_quantile, upper_quantile
from .regressors import Regressor
from .rng import derive_seed

__all__ = [
    "residual_matrix",
    "comparison_matrix",
    "strange_set",
    "AuditReport",
    "audit_instance",
    "run_audit",
]

VARIANTS = ("plus", "minmax", "both")


def _pairwise_models(data: Dataset, regressor: Regressor) -> dict:
    """Fit mu_{-(i,j)} for every unordered pair i < j."""
    models = {}
    for i in range(data.n):
        for j in range(i + 1, data.n):
            models[(i, j)] = regressor.fit(data.drop([i, j]))
    return models


def _residuals_from_models(data: Dataset, models: dict) -> np.ndarray:
    m = data.n
    R = np.full((m, m), math.inf)
    for (i, j), model in models.items():
        R[i, j] = abs(data.responses[i] - model.predict(data.features[i]))
        R[j, i] = abs(data.responses[j] - model.predict(data.features[j]))
    return R


def residual_matrix(data: Dataset, regressor: Regressor) -> np.ndarray:
    """The pairwise-deletion residual matrix with +inf on the diagonal."""
    if data.n < 3:
        raise ConfigError("residual matrix needs at least 3 rows")
    return _residuals_from_models(data, _pairwise_models(data, regressor))


def comparison_matrix(R: np.ndarray, variant: str = "plus") -> np.ndarray:
    """0/1 contest matrix from a residual matrix.

    plus:   A_ij = 1{ R_ij > R_ji }
    minmax: A_ij = 1{ min_j' R_ij' > R_ji }
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ConfigError("residual matrix must be square")
    if variant == "plus":
        A = R > R.T
    elif variant == "minmax":
        A = R.min(axis=1, keepdims=True) > R.T
    else:
        raise ConfigError(f"variant must be 'plus' or 'minmax', got {variant!r}")
    np.fill_diagonal(A, False)
    return A.astype(int)


def strange_set(A: np.ndarray, alpha: float) -> list[int]:
    """Row indices whose contest-win count reaches (1 - alpha)(n + 1).

    The threshold comparison is exact (rational), never floating-point.
    """
    A = np.asarray(A)
    m = A.shape[0]  # m = n + 1
    threshold = (1 - Fraction(alpha)) * m
    sums = A.sum(axis=1)
    return [int(i) for i in range(m) if sums[i] >= threshold]


@dataclass
class AuditReport:
    """Outcome of auditing one (n+1)-row instance."""

    n: int
    alpha: float
    variant: str
    strange_plus: list[int] = field(default_factory=list)
    strange_minmax: list[int] = field(default_factory=list)
    interval_plus: PredictionInterval | None = None
    interval_minmax: PredictionInterval | None = None
    covered_plus: bool | None = None
    covered_minmax: bool | None = None
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_instance(
    data: Dataset, regressor: Regressor, alpha: float, variant: str = "both"
) -> AuditReport:
    """Check the counting bounds and the noncoverage-implies-strange facts.

    ``data`` holds the n training rows followed by the test row. Checks, per
    variant:

    * plus:   |S| < 2 alpha (n+1), and if the test response lies outside the
      jackknife+ interval built from the same (i, test) fits, the test row is
      in S.
    * minmax: |S| <= alpha (n+1), with the analogous implication for the
      minmax interval.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if data.n < 3:
        raise ConfigError("audit needs at least 3 rows (2 train + 1 test)")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")

    m = data.n            # rows including the test point
    n = m - 1             # training rows
    last = m - 1
    models = _pairwise_models(data, regressor)
    R = _residuals_from_models(data, models)
    report = AuditReport(n=n, alpha=alpha, variant=variant)
    count = Fraction(m)

    # Leave-one-out ingredients for the test row come from the (i, last) fits.
    x_test = data.features[last]
    y_test = data.responses[last]
    loo_preds = np.array(
        [models[(i, last)].predict(x_test) for i in range(n)], dtype=float
    )
    loo_resid = R[:last, last]

    if variant in ("plus", "both"):
        A = comparison_matrix(R, "plus")
        report.strange_plus = strange_set(A, alpha)
        if len(report.strange_plus) >= 2 * Fraction(alpha) * count:
            report.violations.append(
                f"plus strange set has {len(report.strange_plus)} rows, "
                f"needs fewer than 2*alpha*(n+1) = {float(2 * alpha * m)}"
            )
        report.interval_plus = PredictionInterval(
            lower_quantile(loo_preds - loo_resid, alpha),
            upper_quantile(loo_preds + loo_resid, alpha),
        )
        report.covered_plus = report.interval_plus.contains(y_test)
        if not report.covered_plus and last not in report.strange_plus:
            report.violations.append(
                "test row escaped the jackknife+ interval without being strange (plus)"
            )

    if variant in ("minmax", "both"):
        A = comparison_matrix(R, "minmax")
        report.strange_minmax = strange_set(A, alpha)
        if len(report.strange_minmax) > Fraction(alpha) * count:
            report.violations.append(
                f"minmax strange set has {len(report.strange_minmax)} rows, "
                f"needs at most alpha*(n+1) = {float(alpha * m)}"
            )
        q = upper_quantile(loo_resid, alpha)
        report.interval_minmax = PredictionInterval(
            float(np.min(loo_preds)) - q, float(np.max(loo_preds)) + q
        )
        report.covered_minmax = report.interval_minmax.contains(y_test)
        if not report.covered_minmax and last not in report.strange_minmax:
            report.violations.append(
                "test row escaped the minmax interval without being strange (minmax)"
            )

    return report


def run_audit(
    trials: int,
    n: int,
    alpha: float,
    regressor: Regressor,
    variant: str = "both",
    seed: int = 0,
    d: int = 2,
):
    """Audit ``trials`` random Gaussian-linear instances of n train rows + 1.

    Returns a list of violation records (empty means the audit passed); each
    record carries the full instance so it can be replayed.
    """
    if n > 30:
        raise ConfigError("audit is limited to n <= 30 (pairwise fits are direct)")
    if n < 2:
        raise ConfigError("audit needs n >= 2 training rows")
    violations = []
    for t in range(trials):
        data, _ = gen_gaussian_linear(n + 1, d, derive_seed(seed, "audit", t))
        report = audit_instance(data, regressor, alpha, variant)
        if not report.ok:
            violations.append(
                {
                    "trial": t,
                    "alpha": alpha,
                    "variant": variant,
                    "regressor": regressor.token,
                    "features": data.features.tolist(),
                    "responses": data.responses.tolist(),
                    "violations": report.violations,
                }
            )
    return violations
