"""Ingestion of integer-day duration counts and imputation to real times.

Observed durations are whole days; the mixture model needs continuous times.
Two schemes: jitter (day i becomes a Uniform(i, i+1) draw) and midpoint
(day i becomes i + 0.5).  Jitter draws are keyed by (seed, replicate, day),
so input row order never changes the imputed sample.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .likelihood import DurationSample, Provenance, fit_full, fit_null
from .lrt import asymptotic_constants, lrt_statistic, p_value_from_draws, sample_null_limit


class CountsParseError(ValueError):
    pass


@dataclass(frozen=True)
class DurationCounts:
    """Frequency table of integer-day durations."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        days = [d for d, _ in self.pairs]
        if not self.pairs:
            raise CountsParseError("no count rows")
        if len(set(days)) != len(days):
            raise CountsParseError("duplicate day values")
        for d, c in self.pairs:
            if d < 0 or c < 1:
                raise CountsParseError(f"invalid pair (day={d}, count={c})")

    @property
    def n(self) -> int:
        return sum(c for _, c in self.pairs)


def load_counts(path: str | Path, fmt: str | None = None) -> DurationCounts:
    """Read a ``day,count`` CSV or a JSON array of ``{day, count}`` objects."""
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    if fmt == "json":
        try:
            rows = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CountsParseError(f"malformed JSON: {exc}") from exc
        pairs = []
        for i, row in enumerate(rows):
            try:
                pairs.append((int(row["day"]), int(row["count"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise CountsParseError(f"malformed entry {i}: {row!r}") from exc
        return DurationCounts(tuple(pairs))
    pairs = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["day", "count"]:
            raise CountsParseError("expected header 'day,count'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                pairs.append((int(row[0]), int(row[1])))
            except (IndexError, ValueError) as exc:
                raise CountsParseError(f"malformed row at line {lineno}: {row!r}") from exc
    return DurationCounts(tuple(pairs))


def impute_jitter(counts: DurationCounts, seed: int, replicate: int = 0) -> DurationSample:
    """Each day-``i`` case becomes an independent Uniform(i, i+1) draw."""
    times = []
    for day, count in sorted(counts.pairs):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), replicate, day]))
        times.append(day + rng.random(count))
    return DurationSample(
        np.concatenate(times), provenance=Provenance.JITTER, seed=seed
    )


def impute_midpoint(counts: DurationCounts) -> DurationSample:
    times = np.concatenate(
        [np.full(count, day + 0.5) for day, count in sorted(counts.pairs)]
    )
    return DurationSample(times, provenance=Provenance.MIDPOINT)


def replicate_analysis(
    counts: DurationCounts,
    kind="weibull",
    reps: int = 1000,
    seed: int = 0,
    mc_draws: int = 10**6,
) -> dict:
    """Jitter-impute, fit, and test repeatedly; summarize across replicates.

    Per-replicate fit failures are recorded, not fatal.
    """
    if reps < 1:
        raise ValueError("need at least one replicate")
    constants = asymptotic_constants(kind)
    null_draws = sample_null_limit(constants, mc_draws, seed + 10**9)
    estimates = []
    statistics = []
    p_values = []
    errors = []
    for rep in range(reps):
        sample = impute_jitter(counts, seed, replicate=rep)
        try:
            null_fit = fit_null(sample, kind)
            full_fit = fit_full(sample, kind)
            r = lrt_statistic(sample, kind, fits=(null_fit, full_fit))
        except Exception as exc:
            errors.append({"replicate": rep, "error": repr(exc)})
            continue
        estimates.append((full_fit.lam, full_fit.alpha, full_fit.p))
        statistics.append(r)
        p_values.append(p_value_from_draws(r, null_draws))
    if not statistics:
        raise RuntimeError("every replicate failed", errors)
    est = np.array(estimates)
    stats = np.array(statistics)
    return {
        "replicates": reps,
        "succeeded": len(statistics),
        "seed": seed,
        "mean_estimates": {
            "lam": float(est[:, 0].mean()),
            "alpha": float(est[:, 1].mean()),
            "p": float(est[:, 2].mean()),
        },
        "statistic_min": float(stats.min()),
        "statistic_max": float(stats.max()),
        "statistics": stats.tolist(),
        "p_values": p_values,
        "errors": errors,
    }
