"""Incubation-period families and the induced forward-time and mixture densities.

A duration sample is modeled as a two-component mixture: with weight ``p`` the
observation is an incubation period with density ``f(t; lam, alpha)``, and with
weight ``1 - p`` it is the equilibrium forward-recurrence time with density
``g(t) = (1 - F(t)) / mean``.

Parameter convention: ``lam`` is a positive rate-like scale (1/time) and
``alpha`` a positive dimensionless shape.  For the lognormal family we map
``(lam, alpha)`` to (location, scale) of ``log t`` as
``location = -log(lam)``, ``scale = alpha``, so ``lam`` stays rate-like.

Log-densities are the primitive; plain densities exponentiate them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

EULER_GAMMA = np.euler_gamma

_SF_TAIL = 1e-12  # survival level defining the quadrature truncation point


class Kind(str, enum.Enum):
    WEIBULL = "weibull"
    GAMMA = "gamma"
    LOGNORMAL = "lognormal"


class HazardLimit(str, enum.Enum):
    ZERO = "zero"
    INFINITY = "infinity"
    FINITE = "finite"


class IdentifiabilityCategory(str, enum.Enum):
    FULLY_IDENTIFIABLE = "fully_identifiable"
    SHARED_PARAMS_ONLY = "shared_params_only_p_not_identifiable"


@dataclass(frozen=True)
class IdentifiabilityClass:
    category: IdentifiabilityCategory
    hazard_limit: HazardLimit
    hazard_value: float | None = None  # finite limit value, when applicable


def _expx_e1(x):
    """Stable ``exp(x) * E1(x)`` for x > 0 (E1 the exponential integral).

    Direct evaluation overflows past x ~ 700; beyond a crossover the
    asymptotic series (1/x) * sum_k (-1)^k k! / x^k is accurate to ~1e-13.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 50.0
    out[small] = np.exp(x[small]) * special.exp1(x[small])
    xl = x[~small]
    term = np.ones_like(xl)
    acc = np.ones_like(xl)
    for k in range(1, 13):
        term = term * (-k) / xl
        acc += term
    out[~small] = acc / xl
    return out


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(~np.isfinite(t)):
        raise ValueError("time points must be positive and finite")
    return t


@dataclass(frozen=True)
class IncubationFamily:
    """Two-parameter incubation-period distribution."""

    kind: Kind
    lam: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be positive and finite, got {self.lam}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")

    # ---- incubation density f --------------------------------------------

    def log_pdf(self, t):
        t = _check_t(t)
        lam, a = self.lam, self.alpha
        if self.kind is Kind.WEIBULL:
            lx = np.log(lam * t)
            u = np.exp(np.minimum(a * lx, 700.0))
            return np.log(lam) + np.log(a) + (a - 1.0) * lx - u
        if self.kind is Kind.GAMMA:
            return (
                a * np.log(lam)
                + (a - 1.0) * np.log(t)
                - lam * t
                - special.gammaln(a)
            )
        # lognormal with location m = -log lam, scale s = alpha
        m, s = -np.log(lam), a
        z = (np.log(t) - m) / s
        return -np.log(t) - np.log(s) - 0.5 * np.log(2 * np.pi) - 0.5 * z * z

    def pdf(self, t):
        return np.exp(self.log_pdf(t))

    def cdf(self, t):
        t = _check_t(t)
        lam, a = self.lam, self.alpha
        if self.kind is Kind.WEIBULL:
            return -np.expm1(-np.exp(np.minimum(a * np.log(lam * t), 700.0)))
        if self.kind is Kind.GAMMA:
            return special.gammainc(a, lam * t)
        z = (np.log(t) + np.log(lam)) / a
        return special.ndtr(z)

    def log_sf(self, t):
        """Log survival function, exact in the far tail."""
        t = _check_t(t)
        lam, a = self.lam, self.alpha
        if self.kind is Kind.WEIBULL:
            return -np.exp(np.minimum(a * np.log(lam * t), 700.0))
        if self.kind is Kind.GAMMA:
            with np.errstate(divide="ignore"):
                return np.log(special.gammaincc(a, lam * t))
        z = (np.log(t) + np.log(lam)) / a
        return special.log_ndtr(-z)

    def sf(self, t):
        return np.exp(self.log_sf(t))

    def mean(self) -> float:
        lam, a = self.lam, self.alpha
        if self.kind is Kind.WEIBULL:
            return special.gamma(1.0 + 1.0 / a) / lam
        if self.kind is Kind.GAMMA:
            return a / lam
        return math.exp(-math.log(lam) + 0.5 * a * a)

    def raw_moment(self, k: int) -> float:
        lam, a = self.lam, self.alpha
        if self.kind is Kind.WEIBULL:
            return special.gamma(1.0 + k / a) / lam**k
        if self.kind is Kind.GAMMA:
            return math.exp(special.gammaln(a + k) - special.gammaln(a)) / lam**k
        m, s = -math.log(lam), a
        return math.exp(k * m + 0.5 * k * k * s * s)

    def partial_first_moment(self, t):
        """``int_0^t s f(s) ds`` in closed form (drives the forward CDF)."""
        t = _check_t(t)
        lam, a = self.lam, self.alpha
        if self.kind is Kind.WEIBULL:
            x = np.exp(np.minimum(a * np.log(lam * t), 700.0))
            return self.mean() * special.gammainc(1.0 + 1.0 / a, x)
        if self.kind is Kind.GAMMA:
            return (a / lam) * special.gammainc(a + 1.0, lam * t)
        m, s = -np.log(lam), a
        return self.mean() * special.ndtr((np.log(t) - m - s * s) / s)

    # ---- forward-time density g ------------------------------------------

    def log_pdf_forward(self, t):
        return self.log_sf(t) - math.log(self.mean())

    def pdf_forward(self, t):
        return np.exp(self.log_pdf_forward(t))

    def cdf_forward(self, t):
        """CDF of the forward time: ``(int_0^t s f ds + t (1-F(t))) / mean``."""
        t = _check_t(t)
        return np.clip(
            (self.partial_first_moment(t) + t * self.sf(t)) / self.mean(), 0.0, 1.0
        )

    def sf_forward(self, t):
        """Forward-time survival ``(int_t^inf (1-F(s)) ds) / mean``, tail-exact.

        Uses ``int_t^inf (1-F) = (mean - int_0^t s f ds) - t (1-F(t))`` with the
        complement of the partial moment in closed form, so it does not lose
        precision where the CDF is numerically 1.
        """
        t = _check_t(t)
        lam, a = self.lam, self.alpha
        if self.kind is Kind.WEIBULL:
            x = np.exp(np.minimum(a * np.log(lam * t), 700.0))
            tail_pm = self.mean() * special.gammaincc(1.0 + 1.0 / a, x)
        elif self.kind is Kind.GAMMA:
            tail_pm = (a / lam) * special.gammaincc(a + 1.0, lam * t)
        else:
            m, s = -np.log(lam), a
            tail_pm = self.mean() * special.ndtr(-(np.log(t) - m - s * s) / s)
        return np.maximum((tail_pm - t * self.sf(t)) / self.mean(), 0.0)

    def ppf_forward(self, u, tol: float = 1e-10):
        """Invert the forward CDF by bracketed bisection with Newton polish.

        Solves ``G(t) = u`` to ``|G(t) - u| < tol`` elementwise.
        """
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u >= 1)):
            raise ValueError("u must lie in [0, 1)")
        scalar = u.ndim == 0
        u = np.atleast_1d(u).copy()
        t = np.full_like(u, np.nan)
        zero = u == 0.0
        t[zero] = 0.0
        active = ~zero
        if np.any(active):
            lo = np.zeros(active.sum())
            hi = np.full(active.sum(), self.mean())
            ua = u[active]
            for _ in range(200):
                bad = self.cdf_forward(np.maximum(hi, 1e-300)) < ua
                if not bad.any():
                    break
                hi[bad] *= 2.0
            for _ in range(120):
                mid = 0.5 * (lo + hi)
                gm = self.cdf_forward(np.maximum(mid, 1e-300))
                below = gm < ua
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
                if np.max(np.abs(gm - ua)) < tol and np.max(hi - lo) < 1e-13 * (
                    1.0 + np.max(hi)
                ):
                    break
            t[active] = 0.5 * (lo + hi)
        return float(t[0]) if scalar else t

    # ---- misc -------------------------------------------------------------

    def quadrature_upper_limit(self) -> float:
        """Smallest t at which both component survivals drop below 1e-12.

        The forward tail dominates the incubation tail, so truncating on the
        joint survival bounds the missing mixture mass for any weight.
        """

        def surv(t):
            return max(float(self.sf(t)), float(self.sf_forward(t)))

        hi = self.mean()
        while surv(hi) >= _SF_TAIL:
            hi *= 2.0
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= 0 or surv(max(mid, 1e-300)) < _SF_TAIL:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-12 * (1.0 + hi):
                break
        return hi

    @property
    def is_c0_family(self) -> bool:
        """Whether the family has an exponential point f = g (at alpha = 1)."""
        return self.kind in (Kind.WEIBULL, Kind.GAMMA)

    @property
    def c0_shape(self) -> float:
        if not self.is_c0_family:
            raise ValueError(f"{self.kind.value} family has no exponential point")
        return 1.0


@dataclass(frozen=True)
class MixtureModel:
    """Mixture of incubation and forward-time densities with weight ``p``."""

    family: IncubationFamily
    p: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"mixing weight p must lie in [0, 1], got {self.p}")

    def log_pdf(self, t):
        if self.p == 1.0:
            return self.family.log_pdf(t)
        if self.p == 0.0:
            return self.family.log_pdf_forward(t)
        return np.logaddexp(
            math.log(self.p) + self.family.log_pdf(t),
            math.log1p(-self.p) + self.family.log_pdf_forward(t),
        )

    def pdf(self, t):
        return np.exp(self.log_pdf(t))

    def cdf(self, t):
        return self.p * self.family.cdf(t) + (1.0 - self.p) * self.family.cdf_forward(t)


def pdf_f(family: IncubationFamily, t):
    return family.pdf(t)


def pdf_g(family: IncubationFamily, t):
    return family.pdf_forward(t)


def pdf_h(model: MixtureModel, t):
    return model.pdf(t)


def score_vector(family: IncubationFamily, t):
    """Score components under the exponential null.

    Returns ``(X, Y1, Y2)`` where ``X`` is the rate score of log f, and
    ``Y1``/``Y2`` are the shape scores of log f / log g, all evaluated at
    ``(lam, alpha) = (family.lam, 1)``.  Analytic throughout; the Gamma
    forward score involves ``exp(x) E1(x)``, evaluated stably.
    """
    if not family.is_c0_family:
        raise ValueError("scores at the exponential point need a Weibull or Gamma family")
    t = _check_t(t)
    lam0 = family.lam
    x = lam0 * t
    lx = np.log(x)
    X = (1.0 - x) / lam0
    if family.kind is Kind.WEIBULL:
        Y1 = 1.0 + (1.0 - x) * lx
        Y2 = (1.0 - EULER_GAMMA) - x * lx
    else:
        Y1 = lx + EULER_GAMMA
        Y2 = EULER_GAMMA - 1.0 + lx + _expx_e1(x)
    return X, Y1, Y2


def identifiability_class(family: IncubationFamily) -> IdentifiabilityClass:
    """Identifiability of ``(lam, alpha, p)`` from the limiting hazard."""
    if family.kind is Kind.LOGNORMAL:
        return IdentifiabilityClass(
            IdentifiabilityCategory.FULLY_IDENTIFIABLE, HazardLimit.ZERO
        )
    if family.alpha == 1.0:
        return IdentifiabilityClass(
            IdentifiabilityCategory.SHARED_PARAMS_ONLY,
            HazardLimit.FINITE,
            hazard_value=family.lam,
        )
    if family.kind is Kind.GAMMA:
        return IdentifiabilityClass(
            IdentifiabilityCategory.FULLY_IDENTIFIABLE,
            HazardLimit.FINITE,
            hazard_value=family.lam,
        )
    # Weibull, alpha != 1: hazard tends to 0 (alpha < 1) or infinity (alpha > 1)
    limit = HazardLimit.INFINITY if family.alpha > 1.0 else HazardLimit.ZERO
    return IdentifiabilityClass(IdentifiabilityCategory.FULLY_IDENTIFIABLE, limit)
