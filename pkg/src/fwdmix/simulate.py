"""Mixture sampling and the Monte Carlo harness for size and power tables.

Each replicate draws a fresh dataset, fits the null and full models, forms
the LRT statistic, and compares it against asymptotic critical values.
Replicate RNG streams are keyed by (master seed, replicate index), so tables
are bit-identical regardless of how replicates are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .families import IncubationFamily, Kind, MixtureModel
from .likelihood import DurationSample, FitOptions, Provenance, fit_full, fit_null
from .lrt import (
    DEFAULT_TABLE_DRAWS,
    asymptotic_constants,
    critical_values,
    lrt_statistic,
    sample_null_limit,
)

DEFAULT_LEVELS = (0.10, 0.05, 0.01)


@dataclass(frozen=True)
class SimConfig:
    kind: Kind = Kind.WEIBULL
    lam: float = 1.0
    alpha: float = 1.0
    p: float = 1.0
    n: int = 100
    replicates: int = 1000
    levels: tuple[float, ...] = DEFAULT_LEVELS
    seed: int = 0
    cv_draws: int = DEFAULT_TABLE_DRAWS
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if any(not 0.0 < lv < 1.0 for lv in self.levels):
            raise ValueError("levels must lie in (0, 1)")

    def model(self) -> MixtureModel:
        return MixtureModel(IncubationFamily(self.kind, self.lam, self.alpha), self.p)


@dataclass(frozen=True)
class SimTable:
    config: SimConfig
    rates: dict[float, float]
    standard_errors: dict[float, float]
    critical_values: dict[float, float]
    statistics: np.ndarray

    def to_rows(self) -> list[dict]:
        return [
            {
                "n": self.config.n,
                "lam": self.config.lam,
                "alpha": self.config.alpha,
                "p": self.config.p,
                "replicates": self.config.replicates,
                "level": level,
                "rate": self.rates[level],
                "se": self.standard_errors[level],
                "critical_value": self.critical_values[level],
                "seed": self.config.seed,
            }
            for level in self.config.levels
        ]


def sample_mixture(model: MixtureModel, n: int, seed) -> DurationSample:
    """Draw ``n`` durations: incubation branch with probability ``p``, forward
    branch otherwise (by numeric inversion of the forward CDF)."""
    rng = np.random.default_rng(seed)
    fam = model.family
    take_f = rng.random(n) < model.p
    u = rng.random(n)  # one uniform per slot keeps the stream layout fixed
    out = np.empty(n)
    n_f = int(take_f.sum())
    if n_f:
        if fam.kind is Kind.WEIBULL:
            out[take_f] = rng.weibull(fam.alpha, n_f) / fam.lam
        elif fam.kind is Kind.GAMMA:
            out[take_f] = rng.gamma(fam.alpha, 1.0 / fam.lam, n_f)
        else:
            out[take_f] = rng.lognormal(-math.log(fam.lam), fam.alpha, n_f)
    if n_f < n:
        out[~take_f] = fam.ppf_forward(u[~take_f])
    out = np.maximum(out, 1e-300)
    return DurationSample(out, provenance=Provenance.RAW)


def replicate_statistics(config: SimConfig) -> np.ndarray:
    """LRT statistics over all replicates, one keyed RNG stream each."""
    model = config.model()
    stats = np.empty(config.replicates)
    for rep in range(config.replicates):
        stream = np.random.SeedSequence([int(config.seed), rep])
        sample = sample_mixture(model, config.n, stream)
        null_fit = fit_null(sample, config.kind)
        full_fit = fit_full(sample, config.kind, config.fit_options)
        stats[rep] = lrt_statistic(
            sample, config.kind, fits=(null_fit, full_fit)
        )
    return stats


def _rejection_table(config: SimConfig, stats: np.ndarray) -> SimTable:
    constants = asymptotic_constants(config.kind)
    draws = sample_null_limit(constants, config.cv_draws, config.seed + 10**9)
    cvs = critical_values(draws, config.levels)
    rates = {}
    ses = {}
    for level in config.levels:
        r = float(np.mean(stats > cvs[level]))
        rates[level] = r
        ses[level] = math.sqrt(r * (1.0 - r) / config.replicates)
    return SimTable(config, rates, ses, cvs, stats)


def type1_table(config: SimConfig) -> SimTable:
    """Rejection rates under the exponential null (alpha at its C0 point)."""
    if config.alpha != 1.0:
        raise ValueError("type-I study needs alpha at the exponential point")
    return _rejection_table(config, replicate_statistics(config))


def power_table(config: SimConfig) -> SimTable:
    """Rejection rates under a fixed alternative."""
    if config.alpha == 1.0:
        raise ValueError("power study needs alpha away from the exponential point")
    return _rejection_table(config, replicate_statistics(config))


def qq_data(
    config: SimConfig, statistics: np.ndarray | None = None
) -> list[tuple[float, float]]:
    """Pairs (empirical quantile of the LRT statistic, matched limit quantile)."""
    stats = replicate_statistics(config) if statistics is None else statistics
    stats = np.sort(stats)
    constants = asymptotic_constants(config.kind)
    draws = sample_null_limit(constants, config.cv_draws, config.seed + 10**9)
    probs = (np.arange(stats.size) + 0.5) / stats.size
    limit_q = np.quantile(draws, probs)
    return list(zip(stats.tolist(), limit_q.tolist()))
