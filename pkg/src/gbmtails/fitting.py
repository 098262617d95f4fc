"""Tail-exponent estimation and heavy-tail model comparison.

A fitted curve is never reported alone: too many families fit the same
material equally well, so every fit here comes with competitors
(double-Pareto, lognormal, upper-tail Pareto), their likelihoods, AIC and
a KS statistic against the fitted CDF. The KS statistic is reported
without a p-value on purpose: parameters were estimated from the same
data, which invalidates the standard tables.

All estimators sort their input internally, so results are byte-identical
under permutation of the sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .dpareto import DoubleParetoDist, dpareto_cdf

MODEL_DOUBLE_PARETO = "double_pareto"
MODEL_LOGNORMAL = "lognormal"
MODEL_PARETO_TAIL = "pareto_tail"
ALL_MODELS = (MODEL_DOUBLE_PARETO, MODEL_LOGNORMAL, MODEL_PARETO_TAIL)

_MODEL_N_PARAMS = {MODEL_DOUBLE_PARETO: 3, MODEL_LOGNORMAL: 2, MODEL_PARETO_TAIL: 2}


class DegenerateInputError(ValueError):
    """Sample has no usable spread for the requested estimator."""


class OneSidedDataError(ValueError):
    """Profile likelihood peaks with all data on one side of the center."""


class SampleCsvError(ValueError):
    """CSV rows violating the sample schema; offending line numbers attached."""

    def __init__(self, message: str, lines: list[int]):
        super().__init__(message)
        self.lines = lines


@dataclass(frozen=True)
class SampleSet:
    """Strictly positive observations plus a provenance label."""

    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a non-empty 1-d array")
        if np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("values must be finite and strictly positive")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


SAMPLE_CSV_HEADER = "value"


def read_sample_csv(path, source: str | None = None) -> SampleSet:
    """Load the one-column sample schema; bad rows are reported by line number."""
    bad: list[tuple[int, str]] = []
    values: list[float] = []
    with open(path, "r") as fh:
        header = fh.readline()
        if header.strip() != SAMPLE_CSV_HEADER:
            raise SampleCsvError(
                f"expected header {SAMPLE_CSV_HEADER!r}, got {header.strip()!r}", [1]
            )
        for lineno, line in enumerate(fh, start=2):
            text = line.strip()
            if not text:
                continue
            try:
                v = float(text)
            except ValueError:
                bad.append((lineno, f"not a number: {text!r}"))
                continue
            if not math.isfinite(v):
                bad.append((lineno, f"non-finite value {text}"))
            elif v <= 0:
                bad.append((lineno, f"non-positive value {text}"))
            else:
                values.append(v)
    if bad:
        shown = "; ".join(f"line {ln}: {why}" for ln, why in bad[:20])
        more = "" if len(bad) <= 20 else f" (+{len(bad) - 20} more)"
        raise SampleCsvError(f"invalid sample rows: {shown}{more}", [ln for ln, _ in bad])
    if not values:
        raise SampleCsvError("CSV contains no data rows", [])
    return SampleSet(np.array(values), source=source if source is not None else str(path))


def write_sample_csv_fh(fh, samples: SampleSet) -> None:
    fh.write(SAMPLE_CSV_HEADER + "\n")
    for v in samples.values:
        fh.write("%.17g\n" % v)


def write_sample_csv(path, samples: SampleSet) -> None:
    with open(path, "w", newline="\n") as fh:
        write_sample_csv_fh(fh, samples)


# ---------------------------------------------------------------------------
# Individual estimators
# ---------------------------------------------------------------------------


def default_hill_k(n: int) -> int:
    """Default order-statistic count: max(10, n // 100). No automatic tuning."""
    return max(10, int(n) // 100)


def hill_estimator(samples: SampleSet, k: int) -> float:
    """Upper-tail exponent from the k largest order statistics.

    k / sum_{i=1..k} ln(x_(n-i+1) / x_(n-k)): the reciprocal mean log
    excess over the (k+1)-th largest value.
    """
    x = np.sort(samples.values)
    n = x.size
    k = int(k)
    if not (2 <= k < n):
        raise ValueError(f"k must satisfy 2 <= k < n = {n}, got {k}")
    top = np.log(x[n - k :])
    threshold = math.log(x[n - k - 1])
    denom = float(np.sum(top) - k * threshold)
    if denom <= 0.0:
        raise DegenerateInputError(
            "zero log-spacings in the upper tail (tied order statistics)"
        )
    return k / denom


def fit_lognormal(samples: SampleSet) -> tuple[float, float, float]:
    """Closed-form lognormal MLE: (mu_hat, sigma_hat, log_likelihood).

    sigma_hat is the population standard deviation of the logs. A zero
    sigma_hat marks a degenerate point-mass fit and is flagged with an
    infinite log-likelihood.
    """
    x = np.sort(samples.values)
    n = x.size
    if n < 2:
        raise ValueError("lognormal fit needs n >= 2")
    logs = np.log(x)
    mu = float(np.mean(logs))
    if x[0] == x[-1]:  # point mass; rounding can hide it in the log moments
        return math.log(x[0]), 0.0, math.inf
    sigma = float(math.sqrt(np.mean((logs - mu) ** 2)))
    if sigma == 0.0:
        return mu, 0.0, math.inf
    return mu, sigma, _lognormal_loglik(logs, mu, sigma)


def _lognormal_loglik(logs: np.ndarray, mu: float, sigma: float) -> float:
    n = logs.size
    return float(
        -np.sum(logs)
        - n * math.log(sigma)
        - 0.5 * n * math.log(2.0 * math.pi)
        - float(np.sum((logs - mu) ** 2)) / (2.0 * sigma * sigma)
    )


def fit_dpareto_mle(samples: SampleSet) -> tuple[float, float, float, float]:
    """Profile-likelihood double-Pareto fit: (center, m1, m2, loglik).

    For a fixed center c the tail rates are the reciprocal mean log
    distances on each side, m1 = n_above / sum(ln(x/c) above) and
    m2 = n_below / sum(ln(c/x) below), with points tied to the center
    carrying no distance and counted on neither side. The center is
    profiled over the observed order statistics (only candidates with at
    least one point strictly on each side are admissible), then refined by
    golden section between the neighbours of the best candidate; the
    profile is piecewise smooth with kinks at the data points, so the
    candidate itself is kept when the kink is the peak.

    Raises OneSidedDataError when no candidate has data on both sides
    (all log-distance mass on one side): the data wants a one-sided power
    law, so fit the pareto_tail model instead.
    """
    x = np.sort(samples.values)
    n = x.size
    if n < 3:
        raise ValueError("double-Pareto fit needs n >= 3")
    if x[0] == x[-1]:
        raise ValueError("double-Pareto fit needs at least 2 distinct values")
    logs = np.log(x)
    prefix = np.cumsum(logs)
    total = prefix[-1]

    uniq, first = np.unique(x, return_index=True)
    right = np.append(first[1:], n)  # one past the last occurrence
    log_u = np.log(uniq)
    n_lo = first.astype(float)
    n_hi = (n - right).astype(float)
    sum_lo = np.where(first > 0, prefix[first - 1], 0.0)
    sum_hi = total - prefix[right - 1]
    s_lo = n_lo * log_u - sum_lo
    s_hi = sum_hi - n_hi * log_u
    valid = (n_lo >= 1) & (n_hi >= 1)
    if not np.any(valid):
        raise OneSidedDataError(
            "no candidate center has data on both sides; fit the pareto_tail model"
        )

    ll = np.full(uniq.size, -np.inf)
    m1 = n_hi[valid] / s_hi[valid]
    m2 = n_lo[valid] / s_lo[valid]
    ll[valid] = (
        n * (np.log(m1) + np.log(m2) - np.log(m1 + m2) - log_u[valid])
        - n_lo[valid]
        - n_hi[valid]
        + (s_lo[valid] - s_hi[valid])
    )
    # the profile can be exactly flat (log-equispaced data); break ulp-level
    # ties toward the most balanced split so symmetric samples keep their
    # center, without disturbing genuinely distinct candidates
    ll_max = float(np.max(ll))
    tied = np.flatnonzero(ll >= ll_max - 64.0 * np.spacing(max(1.0, abs(ll_max))))
    best = int(tied[np.argmin(np.abs(n_lo[tied] - n_hi[tied]))])

    def profile(c: float) -> float:
        left = int(np.searchsorted(x, c, side="left"))
        rgt = int(np.searchsorted(x, c, side="right"))
        k_lo, k_hi = left, n - rgt
        if k_lo < 1 or k_hi < 1:
            return -math.inf
        log_c = math.log(c)
        lo = k_lo * log_c - prefix[left - 1]
        hi = (total - prefix[rgt - 1]) - k_hi * log_c
        mm1 = k_hi / hi
        mm2 = k_lo / lo
        return (
            n * (math.log(mm1) + math.log(mm2) - math.log(mm1 + mm2) - log_c)
            - k_lo
            - k_hi
            + (lo - hi)
        )

    # refine between the neighbours of the best candidate; golden section
    # runs in log-ratio coordinates so its iterates commute with rescaling
    center = float(uniq[best])
    lo_edge = float(uniq[best - 1]) if best > 0 else center
    hi_edge = float(uniq[best + 1]) if best < uniq.size - 1 else center
    if hi_edge > lo_edge:
        theta = _golden_max(
            lambda th: profile(center * math.exp(th)),
            math.log(lo_edge / center),
            math.log(hi_edge / center),
        )
        refined = center * math.exp(theta)
        if profile(refined) > ll[best]:
            center = float(refined)

    # final side sums computed directly (not via prefix differences) so
    # exactly mirrored samples give byte-equal rates
    log_c = math.log(center)
    below = logs[x < center]
    above = logs[x > center]
    s_lo_c = below.size * log_c - float(np.sum(below))
    s_hi_c = float(np.sum(above)) - above.size * log_c
    m1_hat = above.size / s_hi_c
    m2_hat = below.size / s_lo_c
    return float(center), float(m1_hat), float(m2_hat), float(profile(center))


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(fn, lo: float, hi: float, tol: float = 1e-13) -> float:
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(200):
        if (b - a) <= max(tol, 1e-12 * max(abs(a), abs(b))):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
    return c if fc >= fd else d


# ---------------------------------------------------------------------------
# Model comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelFit:
    model: str
    parameters: dict
    log_likelihood: float
    aic: float
    ks_statistic: float


@dataclass(frozen=True)
class FitReport:
    """Per-model fits, failures, and the AIC-preferred model id."""

    n: int
    source: str
    fits: tuple[ModelFit, ...]
    errors: dict
    preferred: str | None

    def fit_for(self, model: str) -> ModelFit:
        for f in self.fits:
            if f.model == model:
                return f
        raise KeyError(model)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "source": self.source,
            "models": [
                {
                    "model": f.model,
                    "parameters": f.parameters,
                    "log_likelihood": f.log_likelihood,
                    "aic": f.aic,
                    "ks_statistic": f.ks_statistic,
                }
                for f in self.fits
            ],
            "errors": self.errors,
            "preferred": self.preferred,
        }


def _ks_statistic(sorted_x: np.ndarray, model_cdf: np.ndarray) -> float:
    n = sorted_x.size
    grid = np.arange(1, n + 1, dtype=float) / n
    d_plus = float(np.max(grid - model_cdf))
    d_minus = float(np.max(model_cdf - (grid - 1.0 / n)))
    return max(d_plus, d_minus, 0.0)


def compare_models(
    samples: SampleSet,
    models: tuple[str, ...] = ALL_MODELS,
    hill_k: int | None = None,
) -> FitReport:
    """Fit the requested models and rank them by AIC.

    Per-model failures (degenerate spread, one-sided data, ...) are
    recorded under ``errors`` while the remaining models are still
    reported. Fits are independent of each other and of evaluation order.
    """
    n = len(samples)
    if n < 10:
        raise ValueError(f"model comparison needs n >= 10, got {n}")
    unknown = set(models) - set(ALL_MODELS)
    if unknown:
        raise ValueError(f"unknown models: {sorted(unknown)}")
    x = np.sort(samples.values)
    fits: list[ModelFit] = []
    errors: dict[str, str] = {}

    for model in ALL_MODELS:
        if model not in models:
            continue
        try:
            fits.append(_fit_one(model, samples, x, hill_k))
        except (ValueError, ArithmeticError) as exc:
            errors[model] = str(exc)

    preferred = None
    if fits:
        preferred = min(fits, key=lambda f: f.aic).model
    return FitReport(
        n=n, source=samples.source, fits=tuple(fits), errors=errors, preferred=preferred
    )


def _fit_one(model: str, samples: SampleSet, x: np.ndarray, hill_k) -> ModelFit:
    n = x.size
    if model == MODEL_DOUBLE_PARETO:
        center, m1, m2, ll = fit_dpareto_mle(samples)
        dist = DoubleParetoDist(center=center, m1=m1, m2=m2)
        ks = _ks_statistic(x, dpareto_cdf(dist, x))
        params = {"center": center, "m1": m1, "m2": m2}
    elif model == MODEL_LOGNORMAL:
        mu, sigma, ll = fit_lognormal(samples)
        if sigma == 0.0:
            raise DegenerateInputError("zero log-variance: point-mass lognormal fit")
        ks = _ks_statistic(x, ndtr((np.log(x) - mu) / sigma))
        params = {"mu": mu, "sigma": sigma}
    elif model == MODEL_PARETO_TAIL:
        k = default_hill_k(n) if hill_k is None else int(hill_k)
        exponent = hill_estimator(samples, k)
        xmin = float(x[0])
        ll = float(
            n * math.log(exponent)
            + n * exponent * math.log(xmin)
            - (exponent + 1.0) * np.sum(np.log(x))
        )
        ks = _ks_statistic(x, 1.0 - (xmin / x) ** exponent)
        params = {"exponent": exponent, "xmin": xmin, "hill_k": float(k)}
    else:  # pragma: no cover
        raise ValueError(f"unknown model {model!r}")
    aic = 2.0 * _MODEL_N_PARAMS[model] - 2.0 * ll
    return ModelFit(
        model=model, parameters=params, log_likelihood=float(ll), aic=float(aic),
        ks_statistic=float(ks),
    )


# ---------------------------------------------------------------------------
# Log-log histogram diagnostics
# ---------------------------------------------------------------------------


def loglog_histogram(samples: SampleSet, bins_per_decade: int) -> np.ndarray:
    """Logarithmically binned density estimate, rows (bin_center, density).

    Bins span [min, max] with ``bins_per_decade`` bins per factor of ten;
    density is count / (n * linear bin width), so density * width sums to
    one. Empty bins are omitted; bin centers are geometric midpoints.
    """
    bins_per_decade = int(bins_per_decade)
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")
    x = np.sort(samples.values)
    n = x.size
    lo, hi = float(x[0]), float(x[-1])
    if lo == hi:
        edges = np.array([lo, lo * 10.0 ** (1.0 / bins_per_decade)])
    else:
        n_bins = max(1, int(math.ceil(math.log10(hi / lo) * bins_per_decade - 1e-12)))
        edges = lo * 10.0 ** (np.arange(n_bins + 1) / bins_per_decade)
        edges[-1] = max(edges[-1], hi)
    counts, edges = np.histogram(x, bins=edges)
    widths = np.diff(edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    density = counts / (n * widths)
    keep = counts > 0
    return np.column_stack([centers[keep], density[keep]])
