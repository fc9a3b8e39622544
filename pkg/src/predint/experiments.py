"""Monte Carlo coverage experiments and adversarial pathology runs.

A trial is the unit of randomness: each trial owns a seed derived from the
experiment's master seed by purpose tag and trial index, draws its own data
(including a fresh coefficient vector where applicable), and reports the
coverage fraction and mean width over its test points. Reports aggregate
per-trial rows in trial order, so results are reproducible regardless of how
work is batched.

Widths are totals of finite component lengths; infinite-width intervals are
counted separately and excluded from width means (they still count toward
coverage).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, SplitSpec, attach_tau, gen_gaussian_linear, gen_pathological_abc
from .errors import ConfigError
from .intervals import (
    METHOD_TOKENS,
    GridSpec,
    IntervalSpec,
    PredictionInterval,
    build_loo_cache,
    cross_conformal_set,
    cv_plus,
    full_conformal_set,
    interval_about,
    jackknife_minmax,
    jackknife_plus,
)
from .quantiles import lower_index, upper_index
from .regressors import Memorizer, MinNormOLS, Regressor, make_regressor
from .rng import derive_rng, derive_seed

__all__ = [
    "MethodSpec",
    "TrialStats",
    "CoverageReport",
    "aggregate",
    "run_trial",
    "figure2_experiment",
    "run_coverage_mc",
    "pathology_memorizer",
    "pathology_parity",
    "ParityResult",
]

@dataclass(frozen=True)
class MethodSpec:
    """One interval/set construction plus its method-specific knobs."""

    method: str
    k_folds: int | None = None
    split_holdout: float = 0.5
    grid_points: int = 200

    def __post_init__(self):
        if self.method not in METHOD_TOKENS:
            raise ConfigError(
                f"unknown method {self.method!r}; expected one of {', '.join(METHOD_TOKENS)}"
            )

    @property
    def label(self) -> str:
        if self.method in ("cv+", "cross-conformal") and self.k_folds is not None:
            return f"{self.method}(K={self.k_folds})"
        return self.method


@dataclass(frozen=True)
class TrialStats:
    """Coverage and width summary of one trial for one (method, spec)."""

    coverage: float
    width_mean: float  # mean finite width over test points; NaN when none finite
    infinite_count: int
    n_test: int


@dataclass(frozen=True)
class CoverageReport:
    """Per-trial coverage rows for one method at one level."""

    method: str
    alpha: float
    coverages: tuple[float, ...]
    widths: tuple[float, ...]
    infinite_count: int

    @property
    def trials(self) -> int:
        return len(self.coverages)

    @property
    def coverage_mean(self) -> float:
        return float(np.mean(self.coverages))

    @property
    def coverage_se(self) -> float:
        if self.trials < 2:
            return 0.0
        return float(np.std(self.coverages, ddof=1) / math.sqrt(self.trials))

    @property
    def width_mean(self) -> float:
        finite = [w for w in self.widths if not math.isnan(w)]
        return float(np.mean(finite)) if finite else math.nan

    @property
    def width_se(self) -> float:
        finite = [w for w in self.widths if not math.isnan(w)]
        if len(finite) < 2:
            return 0.0
        return float(np.std(finite, ddof=1) / math.sqrt(len(finite)))

    @staticmethod
    def from_trials(method: str, alpha: float, stats: list[TrialStats]) -> "CoverageReport":
        return CoverageReport(
            method=method,
            alpha=alpha,
            coverages=tuple(s.coverage for s in stats),
            widths=tuple(s.width_mean for s in stats),
            infinite_count=sum(s.infinite_count for s in stats),
        )


def aggregate(reports) -> CoverageReport:
    """Pool per-trial rows from reports of the same method and level."""
    reports = list(reports)
    if not reports:
        raise ConfigError("nothing to aggregate")
    first = reports[0]
    for rep in reports[1:]:
        if rep.method != first.method or rep.alpha != first.alpha:
            raise ConfigError(
                f"cannot aggregate {rep.method!r}@{rep.alpha} with "
                f"{first.method!r}@{first.alpha}"
            )
    return CoverageReport(
        method=first.method,
        alpha=first.alpha,
        coverages=tuple(c for rep in reports for c in rep.coverages),
        widths=tuple(w for rep in reports for w in rep.widths),
        infinite_count=sum(rep.infinite_count for rep in reports),
    )


def _object_width(obj) -> tuple[float, bool]:
    """(finite total width or NaN, is_infinite) for an interval or set."""
    if isinstance(obj, PredictionInterval):
        w = obj.width
    else:
        w = obj.total_width
    if math.isinf(w):
        return math.nan, True
    return w, False


def run_trial(
    train: Dataset,
    test: Dataset,
    regressor: Regressor,
    methods: list[MethodSpec],
    specs: list[IntervalSpec],
    seed: int = 0,
) -> dict:
    """Evaluate every (method, spec) on one train/test draw.

    Returns ``{(label, spec_index): TrialStats}``. Fold models are fitted
    once per distinct K and shared across methods and levels. For
    cross-conformal, one tau per test point is drawn from the trial's seed
    stream and reused across levels.
    """
    if not methods or not specs:
        raise ConfigError("need at least one method and one spec")
    labels = [m.label for m in methods]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate method labels: {labels}")

    n = train.n
    caches: dict[int, object] = {}

    def cache_for(k: int):
        if k not in caches:
            caches[k] = build_loo_cache(
                train, regressor, k, fold_seed=derive_seed(seed, f"folds/{k}")
            )
        return caches[k]

    def full_model():
        if caches:
            return next(iter(caches.values())).full_model
        return cache_for(n).full_model if n >= 1 else None

    taus = None
    results = {}
    X_test = test.features
    y_test = test.responses
    n_test = test.n

    for mspec in methods:
        token = mspec.method
        # Accumulators indexed by spec.
        covered = np.zeros((len(specs), n_test), dtype=bool)
        widths = np.full((len(specs), n_test), math.nan)
        inf_counts = np.zeros(len(specs), dtype=int)

        def record(si, j, obj):
            covered[si, j] = obj.contains(y_test[j])
            w, is_inf = _object_width(obj)
            widths[si, j] = w
            if is_inf:
                inf_counts[si] += 1

        if token in ("naive", "split", "jackknife"):
            # One fit per trial; the residual vector is fixed and only the
            # center moves across test points.
            if token == "naive":
                model = full_model()
                signed = train.responses - model.predict_many(train.features)
            elif token == "split":
                split = SplitSpec(
                    holdout_fraction=mspec.split_holdout,
                    seed=derive_seed(seed, "split"),
                )
                fit_idx, hold_idx = split.resolve(n)
                model = regressor.fit(train.take(fit_idx))
                holdout = train.take(hold_idx)
                signed = holdout.responses - model.predict_many(holdout.features)
            else:
                cache = cache_for(n)
                model = cache.full_model
                signed = cache.signed_residuals
            for j in range(n_test):
                for si, spec in enumerate(specs):
                    record(si, j, interval_about(model, signed, spec, X_test[j]))

        elif token in ("jackknife+", "cv+", "jackknife-mm"):
            k = mspec.k_folds or n if token == "cv+" else n
            cache = cache_for(k)
            fn = {"jackknife+": jackknife_plus, "cv+": cv_plus, "jackknife-mm": jackknife_minmax}[token]
            for j in range(n_test):
                for si, spec in enumerate(specs):
                    record(si, j, fn(cache, spec, X_test[j]))

        elif token == "cross-conformal":
            cache = cache_for(mspec.k_folds or n)
            if taus is None:
                taus = derive_rng(seed, "tau").random(n_test)
            for j in range(n_test):
                for si, spec in enumerate(specs):
                    record(si, j, cross_conformal_set(cache, spec, X_test[j], taus[j]))

        elif token == "full-conformal":
            grid = GridSpec(num_points=mspec.grid_points)
            for j in range(n_test):
                for si, spec in enumerate(specs):
                    record(si, j, full_conformal_set(train, regressor, spec, X_test[j], grid))

        for si in range(len(specs)):
            w = widths[si]
            finite = w[~np.isnan(w)]
            results[(mspec.label, si)] = TrialStats(
                coverage=float(np.mean(covered[si])),
                width_mean=float(np.mean(finite)) if finite.size else math.nan,
                infinite_count=int(inf_counts[si]),
                n_test=n_test,
            )
    return results


def default_method_list(n: int, k_folds: int = 10) -> list[MethodSpec]:
    """The six default comparison methods (full conformal costs n_grid fits
    per test point and is opt-in)."""
    k = k_folds if k_folds <= n and n % k_folds == 0 else None
    return [
        MethodSpec("naive"),
        MethodSpec("split"),
        MethodSpec("jackknife"),
        MethodSpec("jackknife+"),
        MethodSpec("jackknife-mm"),
        MethodSpec("cv+", k_folds=k),
    ]


def figure2_experiment(
    n: int = 100,
    d_list=(20, 100, 180),
    trials: int = 20,
    n_test: int = 100,
    alpha: float = 0.1,
    seed: int = 0,
    methods: list[MethodSpec] | None = None,
    regressor: Regressor | None = None,
) -> dict:
    """Coverage and width of the default methods across feature dimensions.

    For each d, each trial draws train and test jointly from one Gaussian
    linear model (the coefficient vector is redrawn every trial). Returns
    ``{d: {label: CoverageReport}}``.
    """
    if regressor is None:
        regressor = MinNormOLS()
    if methods is None:
        methods = default_method_list(n)
    spec = IntervalSpec(alpha)
    out: dict = {}
    for d in d_list:
        per_method: dict = {m.label: [] for m in methods}
        for t in range(trials):
            data, _ = gen_gaussian_linear(n + n_test, d, derive_seed(seed, f"figure2/d={d}", t))
            stats = run_trial(
                data.head(n),
                data.tail_from(n),
                regressor,
                methods,
                [spec],
                seed=derive_seed(seed, f"figure2-trial/d={d}", t),
            )
            for m in methods:
                per_method[m.label].append(stats[(m.label, 0)])
        out[d] = {
            label: CoverageReport.from_trials(label, alpha, rows)
            for label, rows in per_method.items()
        }
    return out


def _bound_for(label: str, alpha: float, n: int) -> float:
    if label.startswith("cv+"):
        return 1.0 - 2.0 * alpha - math.sqrt(2.0 / n)
    lookup = {
        "jackknife+": 1.0 - 2.0 * alpha,
        "jackknife-mm": 1.0 - alpha,
        "split": 1.0 - alpha,
    }
    return lookup.get(label, math.nan)


def run_coverage_mc(
    n: int = 20,
    d: int = 5,
    trials: int = 500,
    n_test: int = 50,
    alphas=(0.1, 0.2),
    regressors=("mean", "ols"),
    k_list=(2, 5, None),
    seed: int = 0,
) -> list[dict]:
    """Guarantee-versus-empirical coverage table on Gaussian linear data.

    Methods: jackknife+, jackknife-mm, split, and cv+ at each K in
    ``k_list`` (None means K = n). Returns one row per (regressor, method,
    alpha) with the matching assumption-free lower bound.
    """
    methods = [MethodSpec("jackknife+"), MethodSpec("jackknife-mm"), MethodSpec("split")]
    for k in k_list:
        methods.append(MethodSpec("cv+", k_folds=k))
    specs = [IntervalSpec(a) for a in alphas]

    rows = []
    for token in regressors:
        reg = make_regressor(token) if isinstance(token, str) else token
        name = token if isinstance(token, str) else reg.token
        per_key: dict = {(m.label, si): [] for m in methods for si in range(len(specs))}
        for t in range(trials):
            data, _ = gen_gaussian_linear(
                n + n_test, d, derive_seed(seed, f"coverage-mc/{name}", t)
            )
            stats = run_trial(
                data.head(n),
                data.tail_from(n),
                reg,
                methods,
                specs,
                seed=derive_seed(seed, f"coverage-mc-trial/{name}", t),
            )
            for key, value in stats.items():
                per_key[key].append(value)
        for m in methods:
            for si, spec in enumerate(specs):
                report = CoverageReport.from_trials(m.label, spec.alpha, per_key[(m.label, si)])
                rows.append(
                    {
                        "regressor": name,
                        "method": m.label,
                        "alpha": spec.alpha,
                        "report": report,
                        "bound": _bound_for(m.label, spec.alpha, n),
                    }
                )
    return rows


def pathology_memorizer(
    n: int = 10,
    eps: float = 1.0,
    trials: int = 50,
    n_test: int = 10,
    alpha: float = 0.1,
    seed: int = 0,
) -> dict:
    """Interpolating-memorizer failure case: X ~ N(0,1), Y identically 0.

    The naive and jackknife intervals sit entirely above zero (coverage 0);
    jackknife+ pins its lower endpoint at 0 (coverage 1).
    """
    regressor = Memorizer(eps=eps)
    methods = [MethodSpec("naive"), MethodSpec("jackknife"), MethodSpec("jackknife+")]
    spec = IntervalSpec(alpha)
    per_method: dict = {m.label: [] for m in methods}
    for t in range(trials):
        rng = derive_rng(seed, "memorizer", t)
        X = rng.standard_normal((n + n_test, 1))
        data = Dataset(X, np.zeros(n + n_test))
        stats = run_trial(
            data.head(n),
            data.tail_from(n),
            regressor,
            methods,
            [spec],
            seed=derive_seed(seed, "memorizer-trial", t),
        )
        for m in methods:
            per_method[m.label].append(stats[(m.label, 0)])
    return {
        label: CoverageReport.from_trials(label, alpha, rows)
        for label, rows in per_method.items()
    }


@dataclass(frozen=True)
class ParityResult:
    """Outcome of the sign-flip pathology run for epsilon-inflated jackknife+."""

    n: int
    alpha: float
    eps: float
    gamma: float
    tau: float
    report: CoverageReport
    bound_upper: float  # 1 - 2*alpha + 6*sqrt(log(n)/n)


def parity_vacuity_slack(n: int) -> float:
    return 6.0 * math.sqrt(math.log(n) / n)


def _parity_loo_arrays(train: Dataset, tau: float):
    b = train.features[:, 1]
    # Leave-one-out sign products in O(n): prod_{j != i} B_j = (prod B) * B_i.
    b_minus = float(np.prod(b)) * b
    preds_self = tau * train.features[:, 0] * train.features[:, 2] * b_minus
    resid = np.abs(train.responses - preds_self)
    return b_minus, resid


def _parity_interval(b_minus, resid, tau, x, alpha, eps):
    """epsilon-inflated jackknife+ endpoints, identical floats to the generic
    cache path (same multiply order, same order statistics)."""
    loo = tau * x[0] * x[2] * b_minus
    uppers = loo + resid
    lowers = loo - resid
    n = resid.size
    k = upper_index(n, alpha)
    j = lower_index(n, alpha)
    hi = math.inf if k > n else (-math.inf if k < 1 else float(np.partition(uppers, k - 1)[k - 1]))
    lo = -math.inf if j < 1 else (math.inf if j > n else float(np.partition(lowers, j - 1)[j - 1]))
    return lo - eps, hi + eps


def pathology_parity(
    n: int = 100_000,
    alpha: float = 0.25,
    eps: float = 0.01,
    trials: int = 5,
    n_test: int = 2000,
    seed: int = 0,
    gamma: float | None = None,
    tau: float | None = None,
) -> ParityResult:
    """Sign-flip pathology: epsilon-inflated jackknife+ coverage near 1 - 2*alpha.

    Uses gamma = (2.15 / alpha) * sqrt(log(n) / n) and tau = eps * n unless
    overridden. Rejects configurations where the theoretical noncoverage
    slack 6*sqrt(log(n)/n) exceeds alpha, since the coverage window is then
    too loose to demonstrate anything.
    """
    if eps <= 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    slack = parity_vacuity_slack(n)
    if slack > alpha:
        raise ConfigError(
            f"pathology is vacuous at n={n}, alpha={alpha}: noncoverage slack "
            f"6*sqrt(log(n)/n) = {slack:.5f} exceeds alpha; increase n"
        )
    if gamma is None:
        gamma = (2.15 / alpha) * math.sqrt(math.log(n) / n)
    if not 0.0 < gamma < 1.0:
        raise ConfigError(f"gamma must be in (0, 1), got {gamma}")
    if tau is None:
        tau = eps * n

    stats = []
    for t in range(trials):
        train = attach_tau(
            gen_pathological_abc(n, alpha, gamma, derive_seed(seed, "parity-train", t)), tau
        )
        test = attach_tau(
            gen_pathological_abc(n_test, alpha, gamma, derive_seed(seed, "parity-test", t)), tau
        )
        b_minus, resid = _parity_loo_arrays(train, tau)
        covered = 0
        width_sum = 0.0
        width_count = 0
        inf_count = 0
        zero_case = None  # the interval is the same for every A = 0 test row
        for j in range(test.n):
            x = test.features[j]
            if x[0] == 0.0 and zero_case is not None:
                lo, hi = zero_case
            else:
                lo, hi = _parity_interval(b_minus, resid, tau, x, alpha, eps)
                if x[0] == 0.0:
                    zero_case = (lo, hi)
            if lo <= test.responses[j] <= hi:
                covered += 1
            if math.isinf(hi - lo):
                inf_count += 1
            else:
                width_sum += hi - lo
                width_count += 1
        stats.append(
            TrialStats(
                coverage=covered / test.n,
                width_mean=width_sum / width_count if width_count else math.nan,
                infinite_count=inf_count,
                n_test=test.n,
            )
        )
    report = CoverageReport.from_trials("jackknife+", alpha, stats)
    return ParityResult(
        n=n,
        alpha=alpha,
        eps=eps,
        gamma=gamma,
        tau=tau,
        report=report,
        bound_upper=1.0 - 2.0 * alpha + slack,
    )
