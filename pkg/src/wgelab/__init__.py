"""Optimal linear last layers and worst-group error under Gaussian subpopulations.

Four ways of fitting a last layer are covered: standard risk minimisation
(SRM/ERM), downsampling (DS), upweighting (UW) and intra-class domain
mixup (MU).  Typical use::

    from wgelab import reference_model, optimal_model, wge, DS, SRM

    m = reference_model()
    wge(optimal_model(m, DS), m)    # 0.002594...
    wge(optimal_model(m, SRM), m)   # 0.18578...
"""
from .closed_form import (
    DS,
    MU,
    SRM,
    UW,
    LinearModel,
    Method,
    c_pi0,
    group_error,
    group_errors,
    optimal_ds_uw,
    optimal_model,
    optimal_mu,
    optimal_srm,
    population_moment_fit,
    wge,
    wge_closed_orthogonal,
    wge_srm_general,
)
from .dataset import GROUPS, Dataset, GroupKey, LabeledSample
from .empirical import (
    FitReport,
    MixupConfig,
    downsample,
    empirical_group_error,
    empirical_wge,
    fit,
    fit_ds,
    fit_erm,
    fit_lasso,
    fit_mu,
    fit_uw,
    mixup_dataset,
)
from .errors import *  # noqa: F401,F403
from .model import (
    GaussianGroupModel,
    OrthogonalWgeTerms,
    check_orthogonality,
    delta_bar,
    group_mean,
    mahalanobis_norms,
    reference_model,
    sample_dataset,
)

__version__ = "0.1.0"
