"""Asymmetric bivariate copulas with controllable tail dependence."""

from .construct import (
    AsymmetryParams,
    Asymmetrized,
    FrailtyMixed,
    MixtureParams,
    SurvivalAsymmetrizedClayton,
    asymmetrize,
    asymmetrize_one_sided,
    asymmetrize_survival_clayton,
    frailty_mix,
)
from .core import (
    BoundaryError,
    Clayton,
    ClaytonSurvival,
    CopulaDomainError,
    CopulaModel,
    CopulaNumericError,
    Family,
    GeneratorKind,
    GeneratorSpec,
    Gumbel,
    Independence,
    Plackett,
    clayton_cdf,
    clayton_survival_cdf,
    conditional_cdf,
    density,
    gumbel_cdf,
    plackett_cdf,
)
from .inference import (
    FitResult,
    ModelSpec,
    NestingError,
    bic,
    fit_copula_ml,
    fit_ladder,
    lr_test,
    pseudo_observations,
    tail_estimate,
)
from .margins import MarginFitError, MarginModel, fit_margin, margin_cdf, margin_quantile
from .sampling import (
    SampleSet,
    reproduce_figure1,
    sample,
    sample_conditional,
    sample_frailty,
    sample_gumbel,
    sample_khoudraji,
)
from .tails import (
    NoClosedFormError,
    TailReport,
    kendall_tau_closed,
    kendall_tau_numeric,
    lambda_lower_frailty_gumbel,
    lambda_upper_clayton_survival,
    lambda_upper_gumbel,
    numerical_tail_probe,
    pickands_A_logistic,
)

__version__ = "0.1.0"
