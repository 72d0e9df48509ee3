"""Identification core: bound formulas, pseudo-outcomes, and the bound learners.

The survival time T is only partially identified under informative censoring;
what is identified is a pair of sharp bounds on the conditional expected
survival time (CAPO) per arm, and by differencing, on the CATE between two
arms.  Two upper-bound cases exist:

* ``domain`` — a domain-knowledge cap gamma(x, a) on the expected survival
  lost after censoring; upper bound = lower + gamma * xi;
* ``conservative`` — no knowledge beyond the support bound t_max; the censored
  stratum's mean is replaced by t_max.

Two learners estimate the bounds from data: a plug-in learner that evaluates
the closed-form formulas at the estimated nuisances, and a debiased two-stage
learner ("SurvB") that regresses efficient-influence-function pseudo-outcomes
on the covariates.  The pseudo-outcomes have the property that their
conditional mean equals the bound whenever either the propensity or the
(nu, xi) pair is correct, which removes first-order nuisance bias.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import Dataset
from .errors import (
    ArmsNotDistinct,
    BandwidthNonPositive,
    EmptyCell,
    GammaOutOfRange,
)
from .models import LearnerSpec, fit_regressor
from .nuisance import NuisanceSet, _derived_seed

CASES = ("lower", "upper_domain", "upper_conservative")
BOUND_CASES = ("domain", "conservative")
EPSILON_DENSITY = 1e-3


class BoundPair(NamedTuple):
    lower: float
    upper: float


@dataclass(frozen=True)
class PseudoOutcomeCase:
    """Which pseudo-outcome is being computed, plus its case-specific input."""

    case: str
    gamma: object = None
    t_max: float | None = None

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError("case must be one of %s, got %r" % (CASES, self.case))
        if (self.case == "upper_domain") != (self.gamma is not None):
            raise ValueError("gamma must be supplied exactly when case='upper_domain'")
        if self.case == "upper_conservative" and self.t_max is None:
            raise ValueError("t_max must be supplied for case='upper_conservative'")


def _check_xi(xi):
    xi = np.asarray(xi)
    if np.any(xi < 0) or np.any(xi >= 1):
        raise ValueError("xi must lie in [0, 1)")


def _check_nonneg(name, v):
    if np.any(np.asarray(v) < 0):
        raise ValueError("%s must be nonnegative" % name)


# ---------------------------------------------------------------------------
# closed-form bound formulas
# ---------------------------------------------------------------------------

def capo_lower_formula(nu0, nu1, xi):
    """Lower bound on the CAPO: nu0*(1-xi) + nu1*xi (= E[observed time | x, a])."""
    _check_xi(xi)
    _check_nonneg("nu0", nu0)
    _check_nonneg("nu1", nu1)
    return nu0 * (1.0 - xi) + nu1 * xi


def capo_upper_domain_formula(nu0, nu1, xi, gamma_val, t_max=None):
    """Domain-knowledge upper bound: lower bound + gamma*xi.

    When ``t_max`` is supplied the validity window gamma + nu1 <= t_max is
    enforced (the censored stratum's true mean cannot exceed the support cap).
    """
    _check_nonneg("gamma", gamma_val)
    if t_max is not None and np.any(np.asarray(gamma_val) + np.asarray(nu1) > t_max + 1e-9):
        raise GammaOutOfRange(
            "gamma + nu1 exceeds t_max=%g; the sensitivity cap is outside its validity window"
            % t_max
        )
    return capo_lower_formula(nu0, nu1, xi) + gamma_val * np.asarray(xi)


def capo_upper_conservative_formula(nu0, xi, t_max):
    """Conservative upper bound: nu0*(1-xi) + t_max*xi."""
    _check_xi(xi)
    _check_nonneg("nu0", nu0)
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    return nu0 * (1.0 - xi) + t_max * np.asarray(xi)


def cate_bounds(capo_a1: BoundPair, capo_a2: BoundPair) -> BoundPair:
    """Bounds on E[T(a1) - T(a2) | x] from the per-arm CAPO bounds."""
    return BoundPair(
        lower=capo_a1.lower - capo_a2.upper,
        upper=capo_a1.upper - capo_a2.lower,
    )


def bound_width(pair: BoundPair):
    """Width upper - lower; gamma*xi for oracle domain CAPO pairs."""
    return pair.upper - pair.lower


# ---------------------------------------------------------------------------
# pseudo-outcomes
# ---------------------------------------------------------------------------

def _phi_core(case, t_tilde, w_arm, delta, nu0, nu1, xi, gamma=None, t_max=None):
    """Shared pseudo-outcome arithmetic.

    ``w_arm`` is the on-arm weight already divided by the propensity (discrete:
    1(A=a)/pi; continuous: K_h(A-a)/f(a|x)).  The censoring indicators enter
    unweighted, exactly as in the influence-function displays.
    """
    d1 = np.asarray(delta, dtype=float)
    d0 = 1.0 - d1
    w0 = w_arm * d0
    w1 = w_arm * d1
    base = (
        w0 * (t_tilde - nu0)
        + nu0 * w_arm * (d0 - (1.0 - xi))
        + nu0 * (1.0 - xi)
    )
    if case == "lower":
        return base + w1 * (t_tilde - nu1) + nu1 * w_arm * (d1 - xi) + nu1 * xi
    if case == "upper_domain":
        lower = base + w1 * (t_tilde - nu1) + nu1 * w_arm * (d1 - xi) + nu1 * xi
        return lower + gamma * w_arm * (d1 - xi) + gamma * xi
    if case == "upper_conservative":
        return base + t_max * w_arm * (d1 - xi) + t_max * xi
    raise ValueError("unknown pseudo-outcome case %r" % case)


def pseudo_lower(subject, nuis, arm):
    """Lower-bound pseudo-outcome for one subject.

    ``nuis`` is the evaluated tuple (nu0, nu1, xi, pi) at the subject's
    covariates for the target ``arm``.  Subjects off the target arm collapse
    to the plug-in value nu0*(1-xi) + nu1*xi.
    """
    nu0, nu1, xi, pi = nuis
    w_arm = float(subject.a == arm) / pi
    return float(_phi_core("lower", subject.t_tilde, w_arm, subject.delta, nu0, nu1, xi))


def pseudo_upper_domain(subject, nuis, arm, gamma_val):
    nu0, nu1, xi, pi = nuis
    w_arm = float(subject.a == arm) / pi
    return float(
        _phi_core("upper_domain", subject.t_tilde, w_arm, subject.delta, nu0, nu1, xi,
                  gamma=gamma_val)
    )


def pseudo_upper_conservative(subject, nuis, arm, t_max):
    nu0, nu1, xi, pi = nuis
    w_arm = float(subject.a == arm) / pi
    return float(
        _phi_core("upper_conservative", subject.t_tilde, w_arm, subject.delta, nu0, nu1, xi,
                  t_max=t_max)
    )


def pseudo_cate(subject, a1, a2, nuis_a1, nuis_a2, case="conservative",
                gamma_a1=None, gamma_a2=None, t_max=None):
    """CATE pseudo-outcome pair (phi_lower, phi_upper) for arms (a1, a2).

    phi_lower = phi_lower(a1) - phi_upper(a2); phi_upper = phi_upper(a1) -
    phi_lower(a2).  A subject off both arms collapses to the plug-in CATE
    bound values.
    """
    if a1 == a2:
        raise ArmsNotDistinct("CATE arms must differ, got %r twice" % (a1,))
    if case == "domain":
        up1 = pseudo_upper_domain(subject, nuis_a1, a1, gamma_a1)
        up2 = pseudo_upper_domain(subject, nuis_a2, a2, gamma_a2)
    elif case == "conservative":
        up1 = pseudo_upper_conservative(subject, nuis_a1, a1, t_max)
        up2 = pseudo_upper_conservative(subject, nuis_a2, a2, t_max)
    else:
        raise ValueError("case must be 'domain' or 'conservative', got %r" % case)
    lo1 = pseudo_lower(subject, nuis_a1, a1)
    lo2 = pseudo_lower(subject, nuis_a2, a2)
    return lo1 - up2, up1 - lo2


# ---------------------------------------------------------------------------
# vectorized pseudo-outcome pipeline
# ---------------------------------------------------------------------------

def _gamma_values(gamma, X, arm, ns):
    """Resolve a gamma argument (constant, per-arm mapping, or spec object)."""
    n = np.atleast_2d(X).shape[0]
    if gamma is None:
        raise ValueError("the domain case requires gamma")
    if hasattr(gamma, "values_at"):
        return np.asarray(gamma.values_at(X, arm, ns), dtype=float)
    if isinstance(gamma, dict):
        return np.full(n, float(gamma[arm]))
    return np.full(n, float(gamma))


def _warn_gamma_window(gamma_arr, nu1, t_max):
    n_bad = int(np.sum(np.asarray(gamma_arr) + np.asarray(nu1) > t_max + 1e-9))
    if n_bad:
        warnings.warn(
            "gamma + nu1 exceeds t_max at %d evaluation point(s); the sensitivity "
            "cap may be outside its validity window" % n_bad,
            stacklevel=3,
        )


def capo_pseudo_outcomes(d: Dataset, ns: NuisanceSet, arm, case="conservative",
                         gamma=None, t_max=None, out_of_fold=True):
    """Per-subject (phi_lower, phi_upper) arrays for one arm.

    Nuisances are evaluated out-of-fold (each subject scored by models that
    never saw it) unless ``out_of_fold=False``.
    """
    if case not in BOUND_CASES:
        raise ValueError("case must be 'domain' or 'conservative', got %r" % case)
    t_max = ns.t_max if t_max is None else float(t_max)
    folds = ns.folds if out_of_fold else None
    nu0, nu1, xi, pi = ns.evaluate(d.x, arm, folds)
    w_arm = (d.a == arm).astype(float) / pi
    phi_l = _phi_core("lower", d.t_tilde, w_arm, d.delta, nu0, nu1, xi)
    if case == "domain":
        if isinstance(ns, NuisanceSet) and not ns.has_nu1(arm):
            raise EmptyCell(
                "domain case needs nu(1) for arm %s but its censored stratum was "
                "skipped (conservative-only fit)" % (arm,)
            )
        g = _gamma_values(gamma, d.x, arm, ns)
        _warn_gamma_window(g, nu1, t_max)
        phi_u = _phi_core("upper_domain", d.t_tilde, w_arm, d.delta, nu0, nu1, xi, gamma=g)
    else:
        phi_u = _phi_core("upper_conservative", d.t_tilde, w_arm, d.delta, nu0, nu1, xi,
                          t_max=t_max)
    return phi_l, phi_u


def cate_pseudo_outcomes(d: Dataset, ns: NuisanceSet, a1, a2, case="conservative",
                         gamma=None, t_max=None, out_of_fold=True):
    if a1 == a2:
        raise ArmsNotDistinct("CATE arms must differ, got %r twice" % (a1,))
    l1, u1 = capo_pseudo_outcomes(d, ns, a1, case, gamma, t_max, out_of_fold)
    l2, u2 = capo_pseudo_outcomes(d, ns, a2, case, gamma, t_max, out_of_fold)
    return l1 - u2, u1 - l2


# ---------------------------------------------------------------------------
# crossing policy and bound models
# ---------------------------------------------------------------------------

def _apply_policy(lower, upper, lo_cap, hi_cap):
    """Clamp into [lo_cap, hi_cap]; crossed pairs are replaced by their midpoint."""
    lower = np.clip(np.asarray(lower, dtype=float), lo_cap, hi_cap)
    upper = np.clip(np.asarray(upper, dtype=float), lo_cap, hi_cap)
    crossed = lower > upper
    if crossed.any():
        mid = 0.5 * (lower + upper)
        lower = np.where(crossed, mid, lower)
        upper = np.where(crossed, mid, upper)
    return lower, upper, crossed


class CapoBoundModel:
    """Second-stage bound model: per-arm regressions of the pseudo-outcomes."""

    def __init__(self, arms, case, t_max, spec, models, train_phi, crossing_count,
                 gamma=None):
        self.arms = tuple(arms)
        self.case = case
        self.t_max = float(t_max)
        self.spec = spec
        self.gamma = gamma
        self._models = models  # (arm, side) -> FittedRegressor
        self.train_phi = train_phi  # arm -> (phi_lower, phi_upper)
        self.crossing_count = int(crossing_count)

    def predict(self, X, arm):
        """Returns (lower, upper, crossed) arrays after the crossing policy."""
        lo = self._models[(arm, "lower")].predict(X)
        up = self._models[(arm, "upper")].predict(X)
        return _apply_policy(lo, up, 0.0, self.t_max)

    def predict_pair(self, x, arm) -> BoundPair:
        lo, up, _ = self.predict(np.atleast_2d(x), arm)
        return BoundPair(float(lo[0]), float(up[0]))


class CateBoundModel:
    """Direct CATE bound model (pseudo-outcome differences regressed on x)."""

    def __init__(self, arm_pair, case, t_max, spec, lower_model, upper_model,
                 train_phi, crossing_count, gamma=None):
        self.arm_pair = tuple(arm_pair)
        self.case = case
        self.t_max = float(t_max)
        self.spec = spec
        self.gamma = gamma
        self._lower = lower_model
        self._upper = upper_model
        self.train_phi = train_phi  # (phi_lower, phi_upper)
        self.crossing_count = int(crossing_count)

    def predict(self, X):
        lo = self._lower.predict(X)
        up = self._upper.predict(X)
        return _apply_policy(lo, up, -self.t_max, self.t_max)

    def predict_pair(self, x) -> BoundPair:
        lo, up, _ = self.predict(np.atleast_2d(x))
        return BoundPair(float(lo[0]), float(up[0]))


class ComposedCateBoundModel:
    """CATE bounds assembled from two fitted CAPO models (difference route)."""

    def __init__(self, capo_model: CapoBoundModel, arm_pair):
        a1, a2 = arm_pair
        if a1 == a2:
            raise ArmsNotDistinct("CATE arms must differ, got %r twice" % (a1,))
        self.capo = capo_model
        self.arm_pair = (a1, a2)
        self.gamma = capo_model.gamma
        self.case = capo_model.case
        self.t_max = capo_model.t_max
        self.crossing_count = capo_model.crossing_count

    def predict(self, X):
        l1, u1, _ = self.capo.predict(X, self.arm_pair[0])
        l2, u2, _ = self.capo.predict(X, self.arm_pair[1])
        return _apply_policy(l1 - u2, u1 - l2, -self.t_max, self.t_max)

    def predict_pair(self, x) -> BoundPair:
        lo, up, _ = self.predict(np.atleast_2d(x))
        return BoundPair(float(lo[0]), float(up[0]))


class PluginBoundModel:
    """Plug-in learner: closed-form bound formulas at estimated nuisances.

    ``evaluator`` is anything with ``evaluate(X, arm, folds=None) ->
    (nu0, nu1, xi, pi)``; a cross-fitted NuisanceSet in normal use, or an
    oracle adapter in validation.
    """

    def __init__(self, evaluator, case, t_max, arms=None, arm_pair=None, gamma=None):
        if case not in BOUND_CASES:
            raise ValueError("case must be 'domain' or 'conservative', got %r" % case)
        self.evaluator = evaluator
        self.case = case
        self.t_max = float(t_max)
        self.arms = tuple(arms) if arms else None
        self.arm_pair = tuple(arm_pair) if arm_pair else None
        if self.arm_pair and self.arm_pair[0] == self.arm_pair[1]:
            raise ArmsNotDistinct("CATE arms must differ, got %r twice" % (self.arm_pair[0],))
        self.gamma = gamma
        self.crossing_count = 0

    def _capo_raw(self, X, arm):
        nu0, nu1, xi, _ = self.evaluator.evaluate(X, arm, None)
        lower = capo_lower_formula(nu0, nu1, xi)
        if self.case == "domain":
            g = _gamma_values(self.gamma, X, arm, self.evaluator)
            _warn_gamma_window(g, nu1, self.t_max)
            upper = capo_lower_formula(nu0, nu1, xi) + g * xi
        else:
            upper = capo_upper_conservative_formula(nu0, xi, self.t_max)
        return lower, upper

    def predict_capo(self, X, arm):
        lower, upper = self._capo_raw(X, arm)
        return _apply_policy(lower, upper, 0.0, self.t_max)

    def predict(self, X):
        if self.arm_pair is None:
            raise ValueError("model was not configured with an arm pair")
        a1, a2 = self.arm_pair
        l1, u1 = self._capo_raw(X, a1)
        l2, u2 = self._capo_raw(X, a2)
        return _apply_policy(l1 - u2, u1 - l2, -self.t_max, self.t_max)

    def predict_pair(self, x, arm=None) -> BoundPair:
        if arm is not None:
            lo, up, _ = self.predict_capo(np.atleast_2d(x), arm)
        else:
            lo, up, _ = self.predict(np.atleast_2d(x))
        return BoundPair(float(lo[0]), float(up[0]))


def default_second_stage(n: int, seed: int = 0) -> LearnerSpec:
    """Default pseudo-outcome regression: forest with an n-adaptive leaf size.

    Pseudo-outcomes carry inverse-propensity indicator terms scaled by gamma
    or t_max, so their conditional spread is an order of magnitude larger
    than the curve being recovered.  A fully grown forest interpolates that
    noise; growing the leaf size with n keeps the regression stable at every
    sample size while still shrinking toward the curve as n grows.
    """
    return LearnerSpec(kind="random_forest",
                       min_samples_leaf=max(2, int(n) // 20), seed=seed)


def fit_survb(d: Dataset, ns: NuisanceSet, case="conservative", arms=None,
              arm_pair=None, gamma=None, t_max=None, second_stage=None,
              compose_capo=False):
    """Two-stage debiased bound learner.

    Stage 1 (already done in ``ns``): cross-fitted nuisances.  Stage 2:
    per-subject pseudo-outcomes from out-of-fold nuisances, regressed on the
    covariates with ``second_stage`` (default: :func:`default_second_stage`).

    ``arm_pair=(a1, a2)`` fits CATE bounds by regressing the CATE
    pseudo-outcomes directly; ``compose_capo=True`` instead fits CAPO bounds
    for both arms and differences them at prediction time.  ``arms`` fits
    per-arm CAPO bound models.
    """
    second_stage = second_stage or default_second_stage(d.n)
    t_max = ns.t_max if t_max is None else float(t_max)
    if arm_pair is not None:
        a1, a2 = arm_pair
        if a1 == a2:
            raise ArmsNotDistinct("CATE arms must differ, got %r twice" % (a1,))
        if compose_capo:
            capo = fit_survb(d, ns, case, arms=(a1, a2), gamma=gamma, t_max=t_max,
                             second_stage=second_stage)
            return ComposedCateBoundModel(capo, (a1, a2))
        phi_l, phi_u = cate_pseudo_outcomes(d, ns, a1, a2, case, gamma, t_max)
        lower_model = fit_regressor(
            second_stage.with_seed(_derived_seed(second_stage.seed, 11, 0)), d.x, phi_l)
        upper_model = fit_regressor(
            second_stage.with_seed(_derived_seed(second_stage.seed, 11, 1)), d.x, phi_u)
        model = CateBoundModel((a1, a2), case, t_max, second_stage,
                               lower_model, upper_model, (phi_l, phi_u), 0,
                               gamma=gamma)
        _, _, crossed = model.predict(d.x)
        model.crossing_count = int(crossed.sum())
        return model

    arms = tuple(arms) if arms is not None else ns.arms
    models = {}
    train_phi = {}
    for ai, arm in enumerate(arms):
        phi_l, phi_u = capo_pseudo_outcomes(d, ns, arm, case, gamma, t_max)
        train_phi[arm] = (phi_l, phi_u)
        models[(arm, "lower")] = fit_regressor(
            second_stage.with_seed(_derived_seed(second_stage.seed, 12, ai, 0)), d.x, phi_l)
        models[(arm, "upper")] = fit_regressor(
            second_stage.with_seed(_derived_seed(second_stage.seed, 12, ai, 1)), d.x, phi_u)
    model = CapoBoundModel(arms, case, t_max, second_stage, models, train_phi, 0,
                           gamma=gamma)
    n_crossed = 0
    for arm in arms:
        _, _, crossed = model.predict(d.x, arm)
        n_crossed += int(crossed.sum())
    model.crossing_count = n_crossed
    return model


def fit_plugin(d: Dataset, ns: NuisanceSet, case="conservative", arms=None,
               arm_pair=None, gamma=None, t_max=None) -> PluginBoundModel:
    """Plug-in bound learner over a fitted (or injected) nuisance evaluator."""
    t_max = ns.t_max if t_max is None else float(t_max)
    if case == "domain" and isinstance(ns, NuisanceSet):
        for arm in (arm_pair or arms or ns.arms):
            if not ns.has_nu1(arm):
                raise EmptyCell(
                    "domain case needs nu(1) for arm %s but its censored stratum "
                    "was skipped (conservative-only fit)" % (arm,)
                )
    arms = tuple(arms) if arms is not None else (None if arm_pair else ns.arms)
    return PluginBoundModel(ns, case, t_max, arms=arms, arm_pair=arm_pair, gamma=gamma)


# ---------------------------------------------------------------------------
# continuous treatments: kernel-weighted pseudo-outcomes
# ---------------------------------------------------------------------------

def _gaussian(u):
    return np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)


def _epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


KERNELS = {"gaussian": _gaussian, "epanechnikov": _epanechnikov}


def kernel_weight(kernel, h, t):
    """K_h(t) = k(t/h)/h for a named second-order kernel."""
    if not h > 0:
        raise BandwidthNonPositive("bandwidth must be positive, got %r" % (h,))
    if kernel not in KERNELS:
        raise ValueError("kernel must be one of %s" % (tuple(KERNELS),))
    return KERNELS[kernel](np.asarray(t, dtype=float) / h) / h


def silverman_bandwidth(doses) -> float:
    """Rule-of-thumb bandwidth 1.06 * std * n^(-1/5)."""
    doses = np.asarray(doses, dtype=float)
    return float(1.06 * doses.std() * doses.size ** (-0.2))


def continuous_pseudo_outcomes(t_tilde, doses, delta, dose, nuis, case,
                               kernel="gaussian", h=None, gamma_val=None,
                               t_max=None, epsilon_density=EPSILON_DENSITY):
    """Vectorized continuous-dose pseudo-outcomes at a target dose.

    ``nuis`` is (nu0, nu1, xi, f) where f is the generalized-propensity
    density estimate f(dose | x) per subject; densities below
    ``epsilon_density`` are floored and counted.

    Returns (phi, n_floor_hits).
    """
    if h is None:
        h = silverman_bandwidth(doses)
    nu0, nu1, xi, f = (np.asarray(v, dtype=float) for v in nuis)
    hits = int(np.sum(f < epsilon_density))
    f_eff = np.maximum(f, epsilon_density)
    w_arm = kernel_weight(kernel, h, np.asarray(doses, dtype=float) - dose) / f_eff
    phi = _phi_core(case, np.asarray(t_tilde, dtype=float), w_arm,
                    np.asarray(delta, dtype=float), nu0, nu1, xi,
                    gamma=gamma_val, t_max=t_max)
    return phi, hits


def pseudo_continuous(subject, dose, nuis, kernel="gaussian", h=1.0,
                      case="lower", gamma_val=None, t_max=None):
    """Single-subject continuous-dose pseudo-outcome (see continuous_pseudo_outcomes)."""
    phi, _ = continuous_pseudo_outcomes(
        np.array([subject.t_tilde]), np.array([subject.a]), np.array([subject.delta]),
        dose, tuple(np.array([v]) for v in nuis), case,
        kernel=kernel, h=h, gamma_val=gamma_val, t_max=t_max,
    )
    return float(phi[0])


class DoseDensityModel:
    """Generalized-propensity density via kernel-weighted forest-leaf frequencies.

    A forest is grown on (x -> dose); the density of a dose at x averages, over
    trees, the kernel weights of the training doses that share x's leaf.
    """

    def __init__(self, forest, train_doses, train_leaves, kernel, h):
        self._forest = forest
        self._doses = np.asarray(train_doses, dtype=float)
        self._train_leaves = train_leaves  # (n_train, n_trees) leaf ids
        self._kernel = kernel
        self._h = float(h)

    def density(self, X, dose) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        leaves = self._forest.apply(X)  # (m, n_trees)
        out = np.zeros(X.shape[0])
        for t in range(leaves.shape[1]):
            tl = self._train_leaves[:, t]
            for i in range(X.shape[0]):
                members = self._doses[tl == leaves[i, t]]
                if members.size:
                    out[i] += kernel_weight(self._kernel, self._h, members - dose).mean()
        return out / leaves.shape[1]


def estimate_dose_density(X, doses, kernel="gaussian", h=None, spec=None) -> DoseDensityModel:
    """Fit a DoseDensityModel on training covariates and doses."""
    from sklearn.ensemble import RandomForestRegressor

    spec = spec or LearnerSpec()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    doses = np.asarray(doses, dtype=float)
    if h is None:
        h = silverman_bandwidth(doses)
    if not h > 0:
        raise BandwidthNonPositive("dose sample has zero spread; bandwidth is 0")
    forest = RandomForestRegressor(
        n_estimators=spec.n_trees,
        max_depth=spec.max_depth,
        min_samples_leaf=max(spec.min_samples_leaf, 5),
        random_state=int(np.random.SeedSequence(spec.seed).generate_state(1)[0]),
        n_jobs=1,
    )
    forest.fit(X, doses)
    return DoseDensityModel(forest, doses, forest.apply(X), kernel, h)
