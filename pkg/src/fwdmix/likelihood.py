"""Log-likelihood evaluation and maximum-likelihood fitting.

The full model is the forward/incubation mixture with parameters
``(lam, alpha, p)``; the null model is the exponential special case
``(lam, alpha0=1, p=1)`` whose MLE is closed form.

``fit_full`` profiles the likelihood over a fixed grid of mixing weights,
maximizing over ``(log lam, log alpha)`` at each grid point (warm-started
along the sweep, with method-of-moments restarts at anchor points), then
polishes the best point jointly with ``p`` clamped to [0, 1].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .families import IncubationFamily, Kind, MixtureModel


class Provenance(str, enum.Enum):
    RAW = "raw"
    JITTER = "jitter"
    MIDPOINT = "midpoint"


@dataclass(frozen=True)
class DurationSample:
    """Positive duration times with provenance."""

    times: np.ndarray
    provenance: Provenance = Provenance.RAW
    seed: int | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("sample must be a nonempty 1-d array")
        if np.any(times <= 0) or np.any(~np.isfinite(times)):
            raise ValueError("duration times must be positive and finite")
        object.__setattr__(self, "times", times)

    @property
    def n(self) -> int:
        return self.times.size


class DegenerateLikelihoodError(ValueError):
    """Some observation has zero density under the proposed model."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class FitResult:
    lam: float
    alpha: float
    p: float
    loglik: float
    converged: bool
    iterations: int
    profile_trace: list[tuple[float, float]] | None = None

    def model(self, kind: Kind) -> MixtureModel:
        return MixtureModel(IncubationFamily(kind, self.lam, self.alpha), self.p)

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "alpha": self.alpha,
            "p": self.p,
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class FitOptions:
    p_grid_size: int = 50          # profile grid is {0, 1/K, ..., 1}
    max_iter: int = 200
    ftol: float = 1e-12
    gtol: float = 1e-9
    log_shape_bounds: tuple[float, float] = (math.log(0.02), math.log(50.0))


def loglik(model: MixtureModel, sample: DurationSample) -> float:
    """Sum of stable log mixture densities; raises if any term is degenerate."""
    lp = model.log_pdf(sample.times)
    if np.any(np.isneginf(lp)) or np.any(np.isnan(lp)):
        raise DegenerateLikelihoodError(
            "zero mixture density at some observation; likelihood is -inf"
        )
    return float(np.sum(lp))


def fit_null(sample: DurationSample, kind: Kind | str = Kind.WEIBULL) -> FitResult:
    """Closed-form exponential MLE ``lam0 = 1 / mean(times)``."""
    kind = Kind(kind)
    if kind not in (Kind.WEIBULL, Kind.GAMMA):
        raise ValueError("null fit requires a family with an exponential point")
    lam0 = 1.0 / float(np.mean(sample.times))
    ll = sample.n * (math.log(lam0) - 1.0)
    return FitResult(lam=lam0, alpha=1.0, p=1.0, loglik=ll, converged=True, iterations=0)


# ---------------------------------------------------------------------------
# negative log-likelihood in (log lam, log alpha) for fixed p
# ---------------------------------------------------------------------------


def _mixture_logpdf_terms(kind, lam, alpha, p, t):
    fam = IncubationFamily(kind, lam, alpha)
    lf = fam.log_pdf(t)
    lg = fam.log_pdf_forward(t)
    if p == 1.0:
        return lf, lf, lg
    if p == 0.0:
        return lg, lf, lg
    lh = np.logaddexp(math.log(p) + lf, math.log1p(-p) + lg)
    return lh, lf, lg


def _neg_loglik(kind, t, p, x):
    lam, alpha = math.exp(x[0]), math.exp(x[1])
    try:
        lh, _, _ = _mixture_logpdf_terms(kind, lam, alpha, p, t)
    except (OverflowError, FloatingPointError):
        return 1e300
    val = np.sum(lh)
    if not np.isfinite(val):
        return 1e300
    return -float(val)


def _neg_loglik_grad_weibull(t, p, x, with_p=False):
    """Value and gradient in (log lam, log alpha[, p]) for the Weibull mixture."""
    L, A = x[0], x[1]
    lam, a = math.exp(L), math.exp(A)
    lx = np.log(lam * t)
    u = np.exp(np.minimum(a * lx, 700.0))
    lf = L + A + (a - 1.0) * lx - u
    lg = L - u - special.gammaln(1.0 + 1.0 / a)
    if p == 1.0:
        lh, wf = lf, np.ones_like(t)
    elif p == 0.0:
        lh, wf = lg, np.zeros_like(t)
    else:
        lh = np.logaddexp(math.log(p) + lf, math.log1p(-p) + lg)
        wf = p * np.exp(lf - lh)
    val = np.sum(lh)
    if not np.isfinite(val):
        g = np.zeros(3 if with_p else 2)
        return 1e300, g
    wg = 1.0 - wf
    dL = wf * a * (1.0 - u) + wg * (1.0 - a * u)
    dA = wf * (1.0 + a * (1.0 - u) * lx) + wg * (
        -a * u * lx + special.digamma(1.0 + 1.0 / a) / a
    )
    grad = [-np.sum(dL), -np.sum(dA)]
    if with_p:
        dp = np.exp(lf - lh) - np.exp(lg - lh)
        grad.append(-np.sum(dp))
    return -float(val), np.array(grad)


def _profile_max(kind, t, p, x0, options: FitOptions):
    """Maximize over (log lam, log alpha) at fixed p. Returns (loglik, x, nit)."""
    lam_center = math.log(1.0 / float(np.mean(t)))
    bounds = [
        (lam_center - 12.0, lam_center + 12.0),
        options.log_shape_bounds,
    ]
    kwargs = dict(
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": options.max_iter, "ftol": options.ftol, "gtol": options.gtol},
    )
    if kind is Kind.WEIBULL:
        res = optimize.minimize(
            lambda x: _neg_loglik_grad_weibull(t, p, x), x0, jac=True, **kwargs
        )
    else:
        res = optimize.minimize(lambda x: _neg_loglik(kind, t, p, x), x0, **kwargs)
    return -float(res.fun), np.asarray(res.x), int(res.nit)


# ---------------------------------------------------------------------------
# method-of-moments starting values
# ---------------------------------------------------------------------------


def _mom_pure_f(kind, mean, cv2):
    """(lam, alpha) matching mean and variance under the incubation density."""
    if kind is Kind.GAMMA:
        a = min(max(1.0 / cv2, 0.05), 50.0)
        return a / mean, a
    if kind is Kind.LOGNORMAL:
        s2 = math.log1p(cv2)
        m = math.log(mean) - 0.5 * s2
        return math.exp(-m), math.sqrt(s2)
    # Weibull: CV^2 = Gamma(1+2/a)/Gamma(1+1/a)^2 - 1, monotone decreasing in a
    def eq(loga):
        a = math.exp(loga)
        return (
            special.gammaln(1.0 + 2.0 / a) - 2.0 * special.gammaln(1.0 + 1.0 / a)
        ) - math.log1p(cv2)

    try:
        loga = optimize.brentq(eq, math.log(0.05), math.log(50.0), xtol=1e-10)
        a = math.exp(loga)
    except ValueError:
        a = 1.0
    return special.gamma(1.0 + 1.0 / a) / mean, a


def _mom_pure_g(kind, mean, cv2):
    """(lam, alpha) matching mean and variance under the forward density.

    Forward-time moments follow from raw moments of the incubation law:
    E[V] = m2/(2 m1) and E[V^2] = m3/(3 m1), so the forward CV is scale-free.
    """
    if kind is Kind.GAMMA:
        denom = 3.0 * cv2 - 1.0
        if denom <= 0:
            raise ValueError("forward-moment match infeasible")
        a = (5.0 - 3.0 * cv2) / denom
        if not (0.05 <= a <= 50.0):
            raise ValueError("forward-moment match out of range")
        return (a + 1.0) / (2.0 * mean), a
    if kind is Kind.LOGNORMAL:
        ratio = 0.75 * (1.0 + cv2)
        if ratio <= 1.0:
            raise ValueError("forward-moment match infeasible")
        s2 = math.log(ratio)
        m = math.log(2.0 * mean) - 1.5 * s2
        return math.exp(-m), math.sqrt(s2)

    def eq(loga):
        a = math.exp(loga)
        lr = (
            special.gammaln(1.0 + 3.0 / a)
            + special.gammaln(1.0 + 1.0 / a)
            - 2.0 * special.gammaln(1.0 + 2.0 / a)
        )
        return lr + math.log(4.0 / 3.0) - math.log1p(cv2)

    loga = optimize.brentq(eq, math.log(0.05), math.log(50.0), xtol=1e-10)
    a = math.exp(loga)
    lam = special.gamma(1.0 + 2.0 / a) / (2.0 * mean * special.gamma(1.0 + 1.0 / a))
    return lam, a


def _starting_points(kind, t, options: FitOptions):
    mean = float(np.mean(t))
    var = float(np.var(t))
    cv2 = max(var / mean**2, 1e-6)
    starts = [np.array([math.log(1.0 / mean), 0.0])]
    lo, hi = options.log_shape_bounds
    for mom in (_mom_pure_f, _mom_pure_g):
        try:
            lam, a = mom(kind, mean, cv2)
            x = np.array([math.log(lam), min(max(math.log(a), lo), hi)])
            if all(np.max(np.abs(x - s)) > 1e-6 for s in starts):
                starts.append(x)
        except (ValueError, ZeroDivisionError, OverflowError):
            continue
    return starts


# ---------------------------------------------------------------------------
# full fit
# ---------------------------------------------------------------------------

_ANCHOR_COUNT = 5  # grid indices at which all starting points are retried


def fit_full(
    sample: DurationSample,
    kind: Kind | str = Kind.WEIBULL,
    options: FitOptions | None = None,
) -> FitResult:
    """Global maximization by a profile sweep over the mixing weight.

    Ties between equally good grid optima are broken toward larger ``p``.
    The returned log-likelihood dominates every grid evaluation and the
    closed-form null point, so nesting holds exactly.
    """
    kind = Kind(kind)
    options = options or FitOptions()
    t = sample.times
    K = options.p_grid_size
    p_grid = np.linspace(0.0, 1.0, K + 1)
    anchors = set(np.linspace(0, K, _ANCHOR_COUNT, dtype=int).tolist())
    starts = _starting_points(kind, t, options)

    trace = []
    best = None  # (loglik, p, x)
    prev_x = None
    total_iter = 0
    failures = []
    for idx, p in enumerate(p_grid):
        cand = [prev_x] if prev_x is not None else []
        if idx in anchors or prev_x is None:
            cand.extend(starts)
        local = None
        for x0 in cand:
            try:
                val, x, nit = _profile_max(kind, t, float(p), x0, options)
            except Exception as exc:  # scipy failure at one start is non-fatal
                failures.append((float(p), repr(exc)))
                continue
            total_iter += nit
            if val > -1e299 and (local is None or val > local[0]):
                local = (val, x)
        if local is None:
            trace.append((float(p), -math.inf))
            continue
        trace.append((float(p), local[0]))
        prev_x = local[1]
        if best is None or local[0] >= best[0]:  # >= breaks ties toward larger p
            best = (local[0], float(p), local[1])

    if best is None:
        raise ConvergenceError("all profile maximizations failed", trace=failures)

    # joint polish with p clamped to [0, 1]
    best_val, best_p, best_x = best
    polished_ok = True
    lam_center = math.log(1.0 / float(np.mean(t)))
    x0 = np.array([best_x[0], best_x[1], best_p])
    bounds = [
        (lam_center - 12.0, lam_center + 12.0),
        options.log_shape_bounds,
        (0.0, 1.0),
    ]
    opts = {"maxiter": options.max_iter, "ftol": options.ftol, "gtol": options.gtol}
    try:
        if kind is Kind.WEIBULL:
            res = optimize.minimize(
                lambda x: _neg_loglik_grad_weibull(t, float(x[2]), x[:2], with_p=True),
                x0,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options=opts,
            )
        else:
            res = optimize.minimize(
                lambda x: _neg_loglik(kind, t, float(np.clip(x[2], 0, 1)), x[:2]),
                x0,
                method="L-BFGS-B",
                bounds=bounds,
                options=opts,
            )
        total_iter += int(res.nit)
        if -float(res.fun) > best_val:
            best_val = -float(res.fun)
            best_x = np.asarray(res.x[:2])
            best_p = float(np.clip(res.x[2], 0.0, 1.0))
        polished_ok = bool(res.success) or res.status == 1  # status 1: maxiter
    except Exception:
        polished_ok = False

    # the closed-form null point is always a candidate: nesting holds exactly
    null_fit = fit_null(sample, kind)
    null_val = loglik(
        MixtureModel(IncubationFamily(kind, null_fit.lam, 1.0), 1.0), sample
    )
    if null_val > best_val:
        best_val, best_p = null_val, 1.0
        best_x = np.array([math.log(null_fit.lam), 0.0])

    return FitResult(
        lam=math.exp(best_x[0]),
        alpha=math.exp(best_x[1]),
        p=best_p,
        loglik=best_val,
        converged=polished_ok,
        iterations=total_iter,
        profile_trace=trace,
    )
