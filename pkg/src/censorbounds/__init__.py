"""Partial-identification bounds for treatment effects under informative censoring.

Estimates lower/upper bounds on conditional average potential outcomes and
treatment effects from right-censored survival data, where censoring may
depend on covariates and treatment and caps how long a subject would have
survived after dropping out.  Provides a naive plug-in learner, a debiased
two-stage learner with cross-fitting, synthetic benchmarks with exact oracles,
subgroup discovery on the effect lower bound, and sensitivity analysis for
hidden confounding.
"""

from . import errors
from .analysis import (
    CurveTable,
    RmseResult,
    SubgroupTree,
    bootstrap_subgroup,
    bound_survival_curves,
    evaluate_learners,
    evaluation_grid,
    fit_cate_pipeline,
    fraction_lb_positive,
    fraction_table,
    pair_table,
    rmse_vs_oracle,
    subgroup_tree,
    width_sweep,
)
from .bounds import (
    BoundPair,
    CapoBoundModel,
    CateBoundModel,
    PluginBoundModel,
    bound_width,
    capo_lower_formula,
    capo_pseudo_outcomes,
    capo_upper_conservative_formula,
    capo_upper_domain_formula,
    cate_bounds,
    cate_pseudo_outcomes,
    continuous_pseudo_outcomes,
    default_second_stage,
    estimate_dose_density,
    fit_plugin,
    fit_survb,
    kernel_weight,
    pseudo_cate,
    pseudo_lower,
    pseudo_upper_conservative,
    pseudo_upper_domain,
    silverman_bandwidth,
)
from .data import (
    ColumnSchema,
    Dataset,
    Subject,
    load_csv,
    save_csv,
    validate_overlap,
)
from .models import LearnerSpec, fit_classifier, fit_regressor, load_model, save_model
from .nuisance import (
    CrossFitPlan,
    KnownPropensity,
    NuisanceSet,
    assign_folds,
    evaluate_nuisances,
    fit_nuisances,
    project_probabilities,
)
from .sensitivity import (
    GmsmSpec,
    SensitivitySpec,
    conservative_gamma,
    constant_gamma,
    covariate_cells,
    eval_gamma,
    gmsm_bound_adjustment,
    gmsm_shift_expectation,
    gmsm_weights,
    load_gamma_table,
    per_arm_gamma,
)
from .simulation import (
    OracleNuisances,
    Scenario,
    family_t_max,
    generate,
    generate_planted_subgroup,
    oracle_bounds,
    oracle_capo,
    oracle_cate,
    oracle_nuisances,
)

__version__ = "0.1.0"
