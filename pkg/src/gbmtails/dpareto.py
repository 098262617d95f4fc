"""Closed-form double-Pareto analytics and tail-exponent solvers.

The log of a GBM state observed at an Exp(nu) horizon is asymmetric
Laplace, so the state itself is double-Pareto: density ~ x**(m2-1) below
the center and ~ x**(-m1-1) above it. The tail rates (m1, m2) are the
positive and negated-negative roots of the characteristic quadratic

    (alpha**2 / 2) s**2 + mu s - nu = 0,      mu = r - alpha**2 / 2,

the points where the moment generating function of the log-state,
exp(s ln c) * m1 m2 / ((m1 - s)(m2 + s)), has its poles. This module keeps
two conventions side by side:

* canonical: both rates positive (m1 upper tail, m2 lower tail); the only
  convention under which the density is a normalizable probability model.
* signed: the textbook closed forms
  (mu/alpha**2) * (1 +- sqrt(1 + 8 nu alpha**2 / (2r - alpha**2)**2)),
  roots of the sign-flipped quadratic. Their signs flip across the
  critical volatility and their commonly tabulated one-sided limits are
  internally inconsistent; ``limit_table`` verifies magnitudes and records
  sign agreement instead of guessing intent.

The critical volatility alpha_star = sqrt(2 r) is where the log-drift mu
vanishes; below it the upper tail is the heavier one (quasi-stochastic
regime), above it the lower tail is (stochastic regime).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .killing import KillSchedule
from .sde import GbmParams

# Fixed proxy extremes used by limit_table, chosen once so reports are
# reproducible without user-tuned epsilons.
NU_TINY = 1e-10
NU_HUGE = 1e10
ALPHA_TINY = 1e-6
ALPHA_HUGE = 1e3
CRIT_REL_OFFSET = 1e-6

# Relative half-width of the band classified as Critical.
CRITICAL_BAND = 1e-12


class Regime(str, enum.Enum):
    QUASI_STOCHASTIC = "QuasiStochastic"
    CRITICAL = "Critical"
    STOCHASTIC = "Stochastic"


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be finite and strictly positive, got {value!r}")
    return value


def classify_regime(r: float, alpha: float) -> tuple[float, Regime]:
    """Critical volatility sqrt(2 r) and which side of it alpha falls on.

    Rejects r <= 0, where the critical volatility is undefined.
    """
    r = _check_positive("r", r)
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be finite and non-negative, got {alpha!r}")
    alpha_star = math.sqrt(2.0 * r)
    if abs(alpha - alpha_star) <= CRITICAL_BAND * alpha_star:
        return alpha_star, Regime.CRITICAL
    if alpha < alpha_star:
        return alpha_star, Regime.QUASI_STOCHASTIC
    return alpha_star, Regime.STOCHASTIC


@dataclass(frozen=True)
class ExponentSolution:
    """Tail exponents in both conventions plus regime metadata."""

    m1_canonical: float
    m2_canonical: float
    m1_signed: float
    m2_signed: float
    mu: float
    alpha_star: float
    regime: Regime

    def vieta_residuals(self, r: float, alpha: float, nu: float) -> tuple[float, float]:
        """Machine-precision residuals of the root identities.

        Product identity m1*m2 = 2 nu / alpha**2 (relative) and difference
        identity m2 - m1 = 2 mu / alpha** 2 (normalized by the root gap
        m1 + m2, which stays meaningful when mu ~ 0).
        """
        a2 = alpha * alpha
        prod = abs(self.m1_canonical * self.m2_canonical * a2 / (2.0 * nu) - 1.0)
        diff = abs((self.m2_canonical - self.m1_canonical) - 2.0 * self.mu / a2) / (
            self.m1_canonical + self.m2_canonical
        )
        return prod, diff


def solve_exponents_canonical(r: float, alpha: float, nu: float) -> ExponentSolution:
    """Positive tail rates from the characteristic quadratic, cancellation-free.

    The larger-magnitude root comes from the sign-safe quadratic formula,
    the other from the Vieta product, so no accuracy is lost when
    nu << mu**2 / alpha**2. alpha = 0 is rejected: the quadratic
    degenerates (see ``limit_table`` for the alpha -> 0 behavior).
    """
    r = _check_positive("r", r)
    alpha = _check_positive("alpha", alpha)
    nu = _check_positive("nu", nu)
    half_a2 = 0.5 * alpha * alpha
    mu = r - half_a2
    disc = math.sqrt(mu * mu + 2.0 * (alpha * alpha) * nu)
    sign_mu = 1.0 if mu >= 0 else -1.0
    q = -0.5 * (mu + sign_mu * disc)
    root_big = q / half_a2
    root_small = -nu / q
    if root_big > 0:
        m1, m2 = root_big, -root_small
    else:
        m1, m2 = root_small, -root_big
    alpha_star, regime = classify_regime(r, alpha)
    m1_signed, m2_signed = solve_exponents_signed(r, alpha, nu)
    return ExponentSolution(
        m1_canonical=m1,
        m2_canonical=m2,
        m1_signed=m1_signed,
        m2_signed=m2_signed,
        mu=mu,
        alpha_star=alpha_star,
        regime=regime,
    )


def solve_exponents_signed(r: float, alpha: float, nu: float) -> tuple[float, float]:
    """The textbook closed forms, evaluated exactly as printed.

    m1,2 = ((r - alpha^2/2)/alpha^2) * (1 +- sqrt(1 + 8 nu alpha^2 / (2r - alpha^2)^2)).

    Signs carry the convention's quirks deliberately: for mu > 0 this pair
    is (m2_canonical, -m1_canonical); for mu < 0 it is
    (-m1_canonical, m2_canonical). At alpha**2 == 2 r exactly, where the
    printed expression divides by zero, the limiting branch
    (+sqrt(nu/r), -sqrt(nu/r)) is returned.
    """
    r = float(r)
    if not math.isfinite(r):
        raise ValueError(f"r must be finite, got {r!r}")
    alpha = _check_positive("alpha", alpha)
    nu = _check_positive("nu", nu)
    a2 = alpha * alpha
    if a2 == 2.0 * r:
        lim = math.sqrt(nu / r)
        return lim, -lim
    lead = (r - 0.5 * a2) / a2
    root = math.sqrt(1.0 + 8.0 * nu * a2 / (2.0 * r - a2) ** 2)
    return lead * (1.0 + root), lead * (1.0 - root)


# ---------------------------------------------------------------------------
# Double-Pareto distribution in levels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DoubleParetoDist:
    """Power-law tails on both sides of ``center``: m1 above, m2 below."""

    center: float
    m1: float
    m2: float

    def __post_init__(self):
        _check_positive("center", self.center)
        _check_positive("m1", self.m1)
        _check_positive("m2", self.m2)

    @property
    def split(self) -> float:
        """Probability mass below the center, m1 / (m1 + m2)."""
        return self.m1 / (self.m1 + self.m2)


def killed_state_dist(params: GbmParams, schedule: KillSchedule) -> DoubleParetoDist:
    """Analytic marginal law of the killed state: centered at x0, canonical rates."""
    sol = solve_exponents_canonical(params.r, params.alpha, schedule.nu)
    return DoubleParetoDist(center=params.x0, m1=sol.m1_canonical, m2=sol.m2_canonical)


def _check_levels(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("levels must be finite and strictly positive")
    return x


def dpareto_pdf(dist: DoubleParetoDist, x):
    """Density: C (x/c)^(m2-1) below c, C (x/c)^(-m1-1) above, C = m1 m2 / ((m1+m2) c).

    The 1/c factor is the Jacobian that makes the piecewise power form
    integrate to one. Continuous at the center. Scalar or array ``x``.
    """
    x = _check_levels(x)
    c, m1, m2 = dist.center, dist.m1, dist.m2
    norm = m1 * m2 / ((m1 + m2) * c)
    ratio = np.atleast_1d(x / c)
    below = ratio <= 1.0
    out = np.empty_like(ratio)
    out[below] = norm * ratio[below] ** (m2 - 1.0)
    out[~below] = norm * ratio[~below] ** (-m1 - 1.0)
    return float(out[0]) if x.ndim == 0 else out


def dpareto_cdf(dist: DoubleParetoDist, x):
    """Closed-form CDF; equals m1/(m1+m2) at the center."""
    x = _check_levels(x)
    c, m1, m2 = dist.center, dist.m1, dist.m2
    ratio = np.atleast_1d(x / c)
    below = ratio <= 1.0
    out = np.empty_like(ratio)
    out[below] = (m1 / (m1 + m2)) * ratio[below] ** m2
    out[~below] = 1.0 - (m2 / (m1 + m2)) * ratio[~below] ** (-m1)
    return float(out[0]) if x.ndim == 0 else out


def dpareto_quantile(dist: DoubleParetoDist, p):
    """Exact inverse of the CDF on (0, 1); maps the split mass to the center."""
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any((p <= 0) | (p >= 1)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    c, m1, m2 = dist.center, dist.m1, dist.m2
    split = dist.split
    with np.errstate(divide="ignore"):
        lo = c * (p / split) ** (1.0 / m2)
        hi = c * ((1.0 - p) * (m1 + m2) / m2) ** (-1.0 / m1)
    out = np.where(p < split, lo, np.where(p == split, c, hi))
    return float(out) if out.ndim == 0 else out


def dpareto_log_mgf(dist: DoubleParetoDist, s: float) -> float:
    """Moment generating function of ln(state), finite only on (-m2, m1)."""
    s = float(s)
    if not (-dist.m2 < s < dist.m1):
        raise ValueError(
            f"s={s!r} outside the convergence strip (-{dist.m2}, {dist.m1})"
        )
    return math.exp(s * math.log(dist.center)) * dist.m1 * dist.m2 / (
        (dist.m1 - s) * (dist.m2 + s)
    )


# ---------------------------------------------------------------------------
# Limit verification and exponent-vs-volatility curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitRecord:
    """One extreme-parameter check of the signed closed forms.

    ``deviation`` compares magnitudes: | |evaluated| - |stated| | when the
    stated limit is finite, |1/evaluated| when it is infinite (zero means
    the divergence is confirmed). ``sign_agrees`` records whether direct
    evaluation matches the tabulated sign; a stated value of zero agrees
    with anything.
    """

    limit_id: str
    evaluated: float
    stated: float
    deviation: float
    sign_agrees: bool


@dataclass(frozen=True)
class LimitReport:
    r: float
    alpha: float
    nu: float
    records: tuple[LimitRecord, ...]

    def by_id(self, limit_id: str) -> LimitRecord:
        for rec in self.records:
            if rec.limit_id == limit_id:
                return rec
        raise KeyError(limit_id)


def _limit_record(limit_id: str, evaluated: float, stated: float) -> LimitRecord:
    if math.isinf(stated):
        deviation = 0.0 if math.isinf(evaluated) else abs(1.0 / evaluated)
    else:
        deviation = abs(abs(evaluated) - abs(stated))
    if stated == 0.0:
        agrees = True
    else:
        agrees = (evaluated > 0) == (stated > 0)
    return LimitRecord(limit_id, evaluated, stated, deviation, agrees)


def limit_table(r: float, alpha: float, nu: float) -> LimitReport:
    """Evaluate the signed closed forms at fixed proxy extremes.

    Twelve records: each of (m1, m2) as nu -> 0, nu -> inf, alpha -> 0,
    alpha -> critical from either side, and alpha -> inf, compared against
    the tabulated limiting values. Magnitudes are the trustworthy content;
    the tabulated signs around the critical volatility disagree with
    direct evaluation (they appear side-swapped), so signs are only
    recorded, never corrected.
    """
    r = _check_positive("r", r)
    alpha = _check_positive("alpha", alpha)
    nu = _check_positive("nu", nu)
    alpha_star = math.sqrt(2.0 * r)
    sqrt_nur = math.sqrt(nu / r)

    nu0_m1, nu0_m2 = solve_exponents_signed(r, alpha, NU_TINY)
    nuinf_m1, nuinf_m2 = solve_exponents_signed(r, alpha, NU_HUGE)
    a0_m1, a0_m2 = solve_exponents_signed(r, ALPHA_TINY, nu)
    above = alpha_star * (1.0 + CRIT_REL_OFFSET)
    below = alpha_star * (1.0 - CRIT_REL_OFFSET)
    crit_above = solve_exponents_signed(r, above, nu)
    crit_below = solve_exponents_signed(r, below, nu)
    ainf_m1, ainf_m2 = solve_exponents_signed(r, ALPHA_HUGE, nu)

    records = (
        _limit_record("nu_to_zero_m1", nu0_m1, (2.0 * r - alpha * alpha) / (alpha * alpha)),
        _limit_record("nu_to_zero_m2", nu0_m2, 0.0),
        _limit_record("nu_to_inf_m1", nuinf_m1, math.inf),
        _limit_record("nu_to_inf_m2", nuinf_m2, -math.inf),
        _limit_record("alpha_to_zero_m1", a0_m1, math.inf),
        _limit_record("alpha_to_zero_m2", a0_m2, -nu / r),
        _limit_record("alpha_to_crit_above_m1", crit_above[0], sqrt_nur),
        _limit_record("alpha_to_crit_below_m1", crit_below[0], -sqrt_nur),
        _limit_record("alpha_to_crit_above_m2", crit_above[1], -sqrt_nur),
        _limit_record("alpha_to_crit_below_m2", crit_below[1], sqrt_nur),
        _limit_record("alpha_to_inf_m1", ainf_m1, -1.0),
        _limit_record("alpha_to_inf_m2", ainf_m2, 0.0),
    )
    return LimitReport(r=r, alpha=alpha, nu=nu, records=records)


LIMIT_CSV_HEADER = "limit_id,evaluated,stated,deviation,sign_agrees"

EXPONENT_CURVE_CSV_HEADER = "alpha,m1_signed,m2_signed,m1_canonical,m2_canonical"


def write_limit_csv(path, report: LimitReport) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(limit_csv_text(report))


def limit_csv_text(report: LimitReport) -> str:
    lines = [LIMIT_CSV_HEADER]
    for rec in report.records:
        lines.append(
            "%s,%.17g,%.17g,%.17g,%s"
            % (rec.limit_id, rec.evaluated, rec.stated, rec.deviation,
               "true" if rec.sign_agrees else "false")
        )
    return "\n".join(lines) + "\n"


def exponent_curves(r: float, nu: float, alpha_grid) -> np.ndarray:
    """Rows (alpha, m1_signed, m2_signed, m1_canonical, m2_canonical).

    For plotting exponents as a function of volatility. Grid points within
    a relative 1e-9 band of the critical volatility are rejected (the
    signed forms blow up there).
    """
    r = _check_positive("r", r)
    nu = _check_positive("nu", nu)
    grid = np.asarray(alpha_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("alpha_grid must be a non-empty 1-d array")
    if np.any(~np.isfinite(grid)) or np.any(grid <= 0):
        raise ValueError("alpha grid values must be finite and positive")
    alpha_star = math.sqrt(2.0 * r)
    if np.any(np.abs(grid - alpha_star) <= 1e-9 * alpha_star):
        raise ValueError(
            f"alpha grid must exclude the critical volatility {alpha_star!r} "
            "(relative band 1e-9)"
        )
    out = np.empty((grid.size, 5))
    for i, a in enumerate(grid):
        sol = solve_exponents_canonical(r, a, nu)
        out[i] = (a, sol.m1_signed, sol.m2_signed, sol.m1_canonical, sol.m2_canonical)
    return out


def exponent_curves_csv_text(rows: np.ndarray) -> str:
    lines = [EXPONENT_CURVE_CSV_HEADER]
    for row in np.asarray(rows, dtype=float):
        lines.append(",".join("%.17g" % v for v in row))
    return "\n".join(lines) + "\n"


def write_exponent_curves_csv(path, rows: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(exponent_curves_csv_text(rows))
