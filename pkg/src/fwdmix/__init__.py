"""Forward/incubation-time mixture duration model.

Fits the two-component mixture of an incubation-period density and its
equilibrium forward-recurrence density to duration data, tests exponential
homogeneity with an asymptotically exact non-regular LRT, runs chi-square
goodness-of-fit checks, and reproduces size/power tables by simulation.
"""

from .families import (
    HazardLimit,
    IdentifiabilityCategory,
    IdentifiabilityClass,
    IncubationFamily,
    Kind,
    MixtureModel,
    identifiability_class,
    pdf_f,
    pdf_g,
    pdf_h,
    score_vector,
)
from .likelihood import (
    ConvergenceError,
    DegenerateLikelihoodError,
    DurationSample,
    FitOptions,
    FitResult,
    Provenance,
    fit_full,
    fit_null,
    loglik,
)
from .lrt import (
    AsymptoticConstants,
    ConstantsSource,
    LrtReport,
    asymptotic_constants,
    critical_values,
    local_power,
    lrt_statistic,
    lrt_test,
    numeric_constants,
    p_value,
    p_value_from_draws,
    sample_null_limit,
)
from .gof import GofReport, SampleTooSmallError, gof_test
from .simulate import (
    SimConfig,
    SimTable,
    power_table,
    qq_data,
    replicate_statistics,
    sample_mixture,
    type1_table,
)
from .data import (
    CountsParseError,
    DurationCounts,
    impute_jitter,
    impute_midpoint,
    load_counts,
    replicate_analysis,
)

__all__ = [name for name in dir() if not name.startswith("_")]
