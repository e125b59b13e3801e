"""Likelihood-ratio test of exponential homogeneity and its asymptotics.

Under the null the LRT statistic converges to the supremum over the mixing
weight of a squared Gaussian process.  That limit has an exact polar
representation: with ``rho^2 ~ chi2(2)`` and ``eta ~ U[-pi, pi]`` independent,

    T = rho^2 * [ 1{eta in A1}
                  + 1{eta in A2} cos^2(eta - Delta2)
                  + 1{eta in A3} cos^2(eta - Delta1) ],

where the arcs A1-A3 are determined by the two angles ``Delta1 < Delta2``
swept by the unit vector ``(c1(p), c2(p))`` as ``p`` runs over [0, 1].
Critical values and p-values are Monte Carlo estimates from this sampler.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .families import IncubationFamily, Kind, score_vector
from .likelihood import DurationSample, FitOptions, fit_full, fit_null

_PI = math.pi

DEFAULT_PVALUE_DRAWS = 10**6
DEFAULT_TABLE_DRAWS = 10**7
_CHUNK = 1 << 20  # fixed chunk size keys the per-chunk RNG streams


class ConstantsSource(str, enum.Enum):
    CLOSED_FORM_WEIBULL = "closed_form_weibull"
    CLOSED_FORM_GAMMA = "closed_form_gamma"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class AsymptoticConstants:
    sigma11: float
    sigma12: float
    sigma22: float
    delta1: float
    delta2: float
    source: ConstantsSource

    def __post_init__(self):
        if self.sigma22 <= 0:
            raise ValueError("sigma22 must be positive")
        p = np.linspace(0.0, 1.0, 101)
        if np.any(self.sigma(p, p) <= 0):
            raise ValueError("sigma(p, p) must be positive on [0, 1]")
        if not (-_PI / 2 < self.delta1 < self.delta2 < _PI / 2):
            raise ValueError(
                "angles must satisfy -pi/2 < delta1 < delta2 < pi/2; "
                f"got ({self.delta1}, {self.delta2})"
            )

    def sigma(self, p1, p2):
        p1, p2 = np.asarray(p1, float), np.asarray(p2, float)
        return p1 * p2 * self.sigma22 + (p1 + p2) * self.sigma12 + self.sigma11

    def unit_circle_map(self, p):
        """The point ``(c1(p), c2(p))`` on the unit circle."""
        p = np.asarray(p, float)
        a1 = math.sqrt(self.sigma11 - self.sigma12**2 / self.sigma22)
        a2 = math.sqrt(self.sigma22)
        denom = np.sqrt(self.sigma(p, p))
        return a1 / denom, (p + self.sigma12 / self.sigma22) * a2 / denom

    def to_dict(self) -> dict:
        return {
            "sigma11": self.sigma11,
            "sigma12": self.sigma12,
            "sigma22": self.sigma22,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "source": self.source.value,
        }


@dataclass(frozen=True)
class LrtReport:
    statistic: float
    p_value: float
    constants: AsymptoticConstants
    mc_draws: int
    mc_seed: int
    null_fit: object = None
    full_fit: object = None

    def to_dict(self) -> dict:
        out = {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "constants": self.constants.to_dict(),
            "mc_draws": self.mc_draws,
            "mc_seed": self.mc_seed,
        }
        if self.null_fit is not None:
            out["null_fit"] = self.null_fit.to_dict()
        if self.full_fit is not None:
            out["full_fit"] = self.full_fit.to_dict()
        return out


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


def _angles_from_sigmas(s11, s12, s22):
    a1 = math.sqrt(s11 - s12**2 / s22)
    a2 = math.sqrt(s22)

    def angle(p):
        denom = math.sqrt(p * p * s22 + 2 * p * s12 + s11)
        return math.atan2((p + s12 / s22) * a2 / denom, a1 / denom)

    return angle(0.0), angle(1.0)


def asymptotic_constants(kind: Kind | str) -> AsymptoticConstants:
    """Closed-form constants for the Weibull and Gamma families.

    Both are free of the null rate, so no plug-in estimate is needed.
    """
    kind = Kind(kind)
    pi2 = _PI * _PI
    pi4 = pi2 * pi2
    if kind is Kind.WEIBULL:
        s11, s12, s22 = pi2 / 3 - 3, 2 - pi2 / 6, pi2 / 6 - 1
        d1 = math.acos(math.sqrt((pi4 - 6 * pi2 - 36) / (2 * pi4 - 30 * pi2 + 108)))
        d2 = math.acos(math.sqrt((pi4 - 6 * pi2 - 36) / (pi4 - 6 * pi2)))
        src = ConstantsSource.CLOSED_FORM_WEIBULL
    elif kind is Kind.GAMMA:
        s11, s12, s22 = pi2 / 3 - 13 / 4, 7 / 4 - pi2 / 6, pi2 / 6 - 5 / 4
        d1 = math.acos(
            math.sqrt((4 * pi4 - 54 * pi2 + 144) / ((4 * pi2 - 39) * (2 * pi2 - 15)))
        )
        d2 = math.acos(
            math.sqrt((4 * pi4 - 54 * pi2 + 144) / ((2 * pi2 - 12) * (2 * pi2 - 15)))
        )
        src = ConstantsSource.CLOSED_FORM_GAMMA
    else:
        raise ValueError(
            "asymptotic calibration is available only for Weibull and Gamma; "
            "the lognormal family has no exponential point and no verified angles"
        )
    return AsymptoticConstants(s11, s12, s22, d1, d2, src)


def numeric_constants(kind: Kind | str, lam0: float = 1.0) -> AsymptoticConstants:
    """Constants from quadrature of score products against the null density.

    Independent route to the closed forms: builds the 3x3 second-moment
    matrix of the null scores, reduces it to the three sigma constants, and
    reads the angles off the unit-circle map at p = 0 and p = 1.
    """
    kind = Kind(kind)
    if kind not in (Kind.WEIBULL, Kind.GAMMA):
        raise ValueError("numeric constants need a Weibull or Gamma family")
    if lam0 <= 0:
        raise ValueError("lam0 must be positive")
    fam = IncubationFamily(kind, lam0, 1.0)

    def component(i, t):
        return score_vector(fam, t)[i]

    B = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            val, err = integrate.quad(
                lambda t: component(i, np.array([t]))[0]
                * component(j, np.array([t]))[0]
                * lam0
                * math.exp(-lam0 * t),
                0.0,
                200.0 / lam0,
                limit=400,
                epsabs=1e-12,
                epsrel=1e-12,
            )
            if err > 1e-7:
                raise RuntimeError(f"quadrature for B[{i}{j}] did not converge")
            B[i, j] = B[j, i] = val

    s11 = B[2, 2] - B[0, 2] ** 2 / B[0, 0]
    s12 = B[1, 2] - B[2, 2] - B[0, 1] * B[0, 2] / B[0, 0] + B[0, 2] ** 2 / B[0, 0]
    s22 = (
        B[1, 1]
        + B[2, 2]
        - 2 * B[1, 2]
        - B[0, 1] ** 2 / B[0, 0]
        - B[0, 2] ** 2 / B[0, 0]
        + 2 * B[0, 1] * B[0, 2] / B[0, 0]
    )
    d1, d2 = _angles_from_sigmas(s11, s12, s22)
    if not (d1 > 0 and d2 > 0):
        raise ValueError(
            "the arc-interval geometry assumes both angles positive; "
            f"got ({d1}, {d2})"
        )
    return AsymptoticConstants(s11, s12, s22, d1, d2, ConstantsSource.NUMERIC)


# ---------------------------------------------------------------------------
# limit-distribution sampler
# ---------------------------------------------------------------------------


def classify_angle(eta, constants: AsymptoticConstants):
    """Arc membership of eta in [-pi, pi]: 1, 2 or 3 (boundaries to the lowest).

    Valid because both angles are positive, which the constants guarantee
    for Weibull and Gamma and the numeric path checks explicitly.
    """
    d1, d2 = constants.delta1, constants.delta2
    dm = 0.5 * (d1 + d2)
    eta = np.asarray(eta, float)
    in_a1 = ((eta >= d1) & (eta <= d2)) | ((eta >= d1 - _PI) & (eta <= d2 - _PI))
    in_a2 = ((eta >= d2) & (eta <= dm + _PI / 2)) | (
        (eta >= d2 - _PI) & (eta <= dm - _PI / 2)
    )
    out = np.full(eta.shape, 3, dtype=np.int8)
    out[in_a2] = 2
    out[in_a1] = 1
    return out


def limit_draws_from(rho2, eta, constants: AsymptoticConstants):
    """Evaluate T(rho^2, eta) for given radius/angle draws."""
    arc = classify_angle(eta, constants)
    factor = np.ones_like(np.asarray(rho2, float))
    a2 = arc == 2
    a3 = arc == 3
    factor[a2] = np.cos(eta[a2] - constants.delta2) ** 2
    factor[a3] = np.cos(eta[a3] - constants.delta1) ** 2
    return rho2 * factor


def sample_null_limit(
    constants: AsymptoticConstants, draws: int, seed: int
) -> np.ndarray:
    """Sorted Monte Carlo draws of the limiting null distribution.

    Streams are keyed by (seed, chunk index) over a fixed chunk grid, so the
    output is independent of any parallel execution plan.
    """
    if draws < 1:
        raise ValueError("need at least one draw")
    out = np.empty(draws)
    pos = 0
    for chunk_idx in range(0, (draws + _CHUNK - 1) // _CHUNK):
        m = min(_CHUNK, draws - pos)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), chunk_idx]))
        rho2 = 2.0 * rng.standard_exponential(m)  # chi-square with 2 df
        eta = rng.uniform(-_PI, _PI, m)
        out[pos : pos + m] = limit_draws_from(rho2, eta, constants)
        pos += m
    out.sort()
    return out


def p_value_from_draws(statistic: float, sorted_draws: np.ndarray) -> float:
    """Add-one-smoothed exceedance fraction; never exactly zero."""
    if statistic < 0:
        raise ValueError("LRT statistic must be nonnegative")
    m = sorted_draws.size
    exceed = m - np.searchsorted(sorted_draws, statistic, side="right")
    return float((exceed + 1) / (m + 1))


def critical_values(sorted_draws: np.ndarray, levels) -> dict[float, float]:
    return {
        float(level): float(np.quantile(sorted_draws, 1.0 - level))
        for level in levels
    }


def p_value(
    statistic: float,
    constants: AsymptoticConstants,
    draws: int = DEFAULT_PVALUE_DRAWS,
    seed: int = 0,
) -> float:
    return p_value_from_draws(statistic, sample_null_limit(constants, draws, seed))


# ---------------------------------------------------------------------------
# LRT statistic and report
# ---------------------------------------------------------------------------

_NEGATIVE_SLACK = 1e-8


def lrt_statistic(
    sample: DurationSample,
    kind: Kind | str = Kind.WEIBULL,
    options: FitOptions | None = None,
    fits: tuple | None = None,
) -> float:
    """``2 * (full loglik - null loglik)``, floored at zero.

    ``fits`` may carry precomputed ``(null_fit, full_fit)`` to avoid refitting.
    """
    kind = Kind(kind)
    if fits is None:
        null_fit = fit_null(sample, kind)
        full_fit = fit_full(sample, kind, options)
    else:
        null_fit, full_fit = fits
    r = 2.0 * (full_fit.loglik - null_fit.loglik)
    if r < -_NEGATIVE_SLACK:
        raise RuntimeError(
            f"full fit fell below the nested null by {-r}; optimization failed"
        )
    return max(r, 0.0)


def lrt_test(
    sample: DurationSample,
    kind: Kind | str = Kind.WEIBULL,
    draws: int = DEFAULT_PVALUE_DRAWS,
    seed: int = 0,
    options: FitOptions | None = None,
) -> LrtReport:
    kind = Kind(kind)
    null_fit = fit_null(sample, kind)
    full_fit = fit_full(sample, kind, options)
    r = lrt_statistic(sample, kind, fits=(null_fit, full_fit))
    constants = asymptotic_constants(kind)
    pv = p_value(r, constants, draws, seed)
    return LrtReport(
        statistic=r,
        p_value=pv,
        constants=constants,
        mc_draws=draws,
        mc_seed=seed,
        null_fit=null_fit,
        full_fit=full_fit,
    )


# ---------------------------------------------------------------------------
# asymptotic local power
# ---------------------------------------------------------------------------


def local_power(
    delta: float,
    p0: float,
    constants: AsymptoticConstants,
    level: float = 0.05,
    draws: int = 10**5,
    seed: int = 0,
    grid_step: float = 1e-3,
    critical_value: float | None = None,
) -> float:
    """Power of the level-``level`` test against the local drift ``delta``.

    Simulates the shifted limit ``sup_p (Z(p) + omega(p, p0))^2`` from the
    two-dimensional Gaussian seed of the process and compares against the
    null critical value.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must lie in [0, 1]")
    s11, s12, s22 = constants.sigma11, constants.sigma12, constants.sigma22
    if critical_value is None:
        null_draws = sample_null_limit(constants, DEFAULT_PVALUE_DRAWS, seed + 1)
        critical_value = critical_values(null_draws, [level])[level]

    p = np.arange(0.0, 1.0 + grid_step / 2, grid_step)
    root_spp = np.sqrt(constants.sigma(p, p))
    omega = delta * constants.sigma(p, p0) / root_spp
    a1 = math.sqrt(s11 - s12**2 / s22)
    a2 = math.sqrt(s22)

    exceed = 0
    pos = 0
    chunk = 4096
    chunk_idx = 0
    while pos < draws:
        m = min(chunk, draws - pos)
        rng = np.random.default_rng(
            np.random.SeedSequence([int(seed), 7, chunk_idx])
        )
        w = rng.standard_normal((m, 2))
        z2 = a2 * w[:, 1]
        z1 = a1 * w[:, 0] + (s12 / s22) * z2
        path = (z1[:, None] + np.outer(z2, p)) / root_spp[None, :] + omega[None, :]
        stat = np.max(path * path, axis=1)
        exceed += int(np.sum(stat > critical_value))
        pos += m
        chunk_idx += 1
    return exceed / draws
