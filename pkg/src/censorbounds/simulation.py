"""Synthetic survival benchmark with informative censoring, plus oracles.

The benchmark draws a scalar covariate x ~ U[10, 100], a binary treatment
(randomized at 1/2 or covariate-tilted), and a survival time built from a
family-specific treated uplift on top of a shared wiggly baseline.  Censoring
is informative: its probability follows a logistic curve in x centered so a
target overall strength is approximately met, and a censored subject reveals
only a uniform fraction lambda ~ U[0.7, 0.95] of their survival time.  By
construction the censoring indicator is independent of the survival time given
(x, a), so the post-censoring mean is exactly E[lambda] = 0.825 times the
survival mean — a closed-form cross-check used by the tests.

Oracles (true nuisances, true bound surfaces, true CATE) come from cached
Monte Carlo integration over a fixed x grid with frozen seeds, so every
scenario object sees identical oracle values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import PluginBoundModel
from .data import Dataset
from .errors import InvalidXiTarget

FAMILIES = ("exponential", "sin", "logistic_sin")
FAMILY_ALIASES = {"exp": "exponential", "logsin": "logistic_sin",
                  "logistic-sin": "logistic_sin"}
DESIGNS = ("rct", "obs")

X_LOW, X_HIGH = 10.0, 100.0
LAMBDA_LOW, LAMBDA_HIGH = 0.7, 0.95
CENSOR_PROB_CLIP = (0.001, 0.999)
_ORACLE_GRID_SIZE = 512
_ORACLE_POOL = 100_000
_NU_SEED_BASE = 20240
_TMAX_SEED_BASE = 20249
_TMAX_DRAWS = 200_000

_STREAM_GENERATE = 1


def canonical_family(name: str) -> str:
    name = FAMILY_ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ValueError("unknown scenario family %r (choose from %s or aliases %s)"
                         % (name, FAMILIES, tuple(FAMILY_ALIASES)))
    return name


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def treated_uplift(family: str, x):
    """Mean survival gain of treatment over control, by family."""
    x = np.asarray(x, dtype=float)
    family = canonical_family(family)
    if family == "exponential":
        return 20.0 * np.exp(1.0 + 0.01 * x)
    if family == "sin":
        return (np.sin((x - 10.0) / 90.0 * 2.0 * np.pi) + 1.2) * 10.0 + x
    return 30.0 / (1.0 + np.exp(-0.1 * (x - 50.0))) + 5.0 * np.sin(0.2 * x) + 10.0


def baseline_survival(x):
    """Control-arm mean survival: rising trend with high-frequency wiggle."""
    x = np.asarray(x, dtype=float)
    return (np.sin(12.0 * x) + x) / 3.0 + np.cos(20.0 * x) / 60.0


def propensity_treated(x, design: str):
    """P(A=1 | x): one half under rct, a logistic tilt under obs."""
    x = np.asarray(x, dtype=float)
    if design == "rct":
        return np.full(x.shape, 0.5)
    if design == "obs":
        return _sigmoid((x - 45.0) / 45.0)
    raise ValueError("design must be one of %s, got %r" % (DESIGNS, design))


def censor_probability(x, a, xi_target: float):
    """P(censored | x, a), clipped to [0.001, 0.999].

    Logistic in x, centered via the logit of the target strength, with a small
    arm offset (+0.05 treated, -0.05 control).  Returns (clipped, raw).
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if not 0.0 < xi_target < 1.0:
        raise InvalidXiTarget("xi_target must lie in (0, 1), got %r" % (xi_target,))
    raw = (_sigmoid((x - 45.0) / 45.0 + math.log(xi_target / (1.0 - xi_target)))
           + 0.05 * a - 0.05 * (1.0 - a))
    return np.clip(raw, *CENSOR_PROB_CLIP), raw


@dataclass(frozen=True)
class Scenario:
    """One benchmark configuration; every random draw derives from ``seed``."""

    family: str = "sin"
    design: str = "rct"
    xi_target: float = 0.4
    n: int = 2000
    seed: int = 0
    noise_sd: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "family", canonical_family(self.family))
        if self.design not in DESIGNS:
            raise ValueError("design must be one of %s, got %r" % (DESIGNS, self.design))
        if not 0.0 < self.xi_target < 1.0:
            raise InvalidXiTarget(
                "xi_target must lie strictly in (0, 1), got %r" % (self.xi_target,))
        if self.n < 1:
            raise ValueError("n must be at least 1, got %r" % (self.n,))

    @property
    def t_max(self) -> float:
        return family_t_max(self.family, self.noise_sd)


@dataclass
class LatentTable:
    """Per-subject ground truth kept alongside a generated dataset."""

    t_true: np.ndarray
    c_true: np.ndarray
    p_censor: np.ndarray
    lam: np.ndarray
    clip_rate: float
    scenario: Scenario


def generate(s: Scenario) -> tuple[Dataset, LatentTable]:
    """Draw one dataset plus its latent table.

    Draw order (fixed for reproducibility): x, treatment, treated noise,
    shared noise, censoring indicator, lambda.
    """
    rng = np.random.default_rng(np.random.SeedSequence([s.seed, _STREAM_GENERATE]))
    x = rng.uniform(X_LOW, X_HIGH, s.n)
    a = rng.binomial(1, propensity_treated(x, s.design)).astype(float)
    eps_treated = rng.normal(0.0, s.noise_sd, s.n)
    eps_shared = rng.normal(0.0, s.noise_sd, s.n)
    t_true = (treated_uplift(s.family, x) + eps_treated) * a \
        + baseline_survival(x) + eps_shared
    p, raw = censor_probability(x, a, s.xi_target)
    clip_rate = float(np.mean(p != raw))
    delta = rng.binomial(1, p)
    lam = rng.uniform(LAMBDA_LOW, LAMBDA_HIGH, s.n)
    c_true = lam * t_true
    t_tilde = np.where(delta == 1, c_true, t_true)
    d = Dataset(
        x=x.reshape(-1, 1),
        a=a,
        t_tilde=t_tilde,
        delta=delta.astype(int),
        t_max=s.t_max,
        covariate_names=("x1",),
    )
    return d, LatentTable(t_true, c_true, p, lam, clip_rate, s)


# ---------------------------------------------------------------------------
# Monte Carlo oracles (cached per family; frozen seeds)
# ---------------------------------------------------------------------------

_NU_CACHE: dict = {}
_TMAX_CACHE: dict = {}


def _deterministic_mean(family, x, arm):
    base = baseline_survival(x)
    return base + treated_uplift(family, x) * arm if arm else base


def _nu_tables(family: str, noise_sd: float):
    """Cached oracle tables on a fixed x grid: nu0 and nu1 per arm.

    The survival time splits into a deterministic part in x plus additive
    noise shared across grid points, so one frozen noise pool serves the whole
    grid and the pool average collapses to its moments:
    mean_i(det + eps_i) = det + mean(eps), and for the post-censoring mean
    mean_i((det + eps_i) * lam_i) = det * mean(lam) + mean(eps * lam)
    (censoring is outcome-independent here, lambda an independent pool).
    """
    key = (family, round(noise_sd, 12))
    if key in _NU_CACHE:
        return _NU_CACHE[key]
    rng = np.random.default_rng(
        np.random.SeedSequence([_NU_SEED_BASE, FAMILIES.index(family)]))
    eps_treated = rng.normal(0.0, noise_sd, _ORACLE_POOL)
    eps_shared = rng.normal(0.0, noise_sd, _ORACLE_POOL)
    lam = rng.uniform(LAMBDA_LOW, LAMBDA_HIGH, _ORACLE_POOL)
    grid = np.linspace(X_LOW, X_HIGH, _ORACLE_GRID_SIZE)
    nu0 = np.empty((2, grid.size))
    nu1 = np.empty((2, grid.size))
    for arm in (0, 1):
        det = _deterministic_mean(family, grid, arm)
        noise = eps_shared + (eps_treated if arm else 0.0)
        nu0[arm] = det + noise.mean()
        nu1[arm] = det * lam.mean() + (noise * lam).mean()
    tables = {"grid": grid, "nu0": nu0, "nu1": nu1,
              "cate": nu0[1] - nu0[0]}
    _NU_CACHE[key] = tables
    return tables


def family_t_max(family: str, noise_sd: float = 0.1) -> float:
    """Frozen per-family horizon: 1.1 times the 99.9th pooled-arm percentile."""
    family = canonical_family(family)
    key = (family, round(noise_sd, 12))
    if key in _TMAX_CACHE:
        return _TMAX_CACHE[key]
    rng = np.random.default_rng(
        np.random.SeedSequence([_TMAX_SEED_BASE, FAMILIES.index(family)]))
    x = rng.uniform(X_LOW, X_HIGH, _TMAX_DRAWS)
    t0 = _deterministic_mean(family, x, 0) + rng.normal(0.0, noise_sd, _TMAX_DRAWS)
    t1 = (_deterministic_mean(family, x, 1)
          + rng.normal(0.0, noise_sd, _TMAX_DRAWS)
          + rng.normal(0.0, noise_sd, _TMAX_DRAWS))
    value = float(1.1 * np.quantile(np.concatenate([t0, t1]), 0.999))
    _TMAX_CACHE[key] = value
    return value


def oracle_nuisances(s: Scenario, x, arm):
    """True (nu0, nu1, xi, pi) at covariate values x for one arm."""
    x = np.asarray(x, dtype=float).ravel()
    tables = _nu_tables(s.family, s.noise_sd)
    nu0 = np.interp(x, tables["grid"], tables["nu0"][int(arm)])
    nu1 = np.interp(x, tables["grid"], tables["nu1"][int(arm)])
    xi, _ = censor_probability(x, np.full(x.shape, float(arm)), s.xi_target)
    p_treat = propensity_treated(x, s.design)
    pi = p_treat if int(arm) == 1 else 1.0 - p_treat
    return nu0, nu1, xi, pi


class OracleNuisances:
    """Drop-in nuisance evaluator backed by the scenario's oracles."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.arms = (0, 1)
        self.t_max = scenario.t_max

    def evaluate(self, X, arm, folds=None):
        x = np.atleast_2d(np.asarray(X, dtype=float))[:, 0]
        return oracle_nuisances(self.scenario, x, arm)


def oracle_bound_model(s: Scenario, case="conservative", arms=None, arm_pair=None,
                       gamma=None, t_max=None) -> PluginBoundModel:
    """Bound surfaces from closed-form formulas at the true nuisances."""
    ev = OracleNuisances(s)
    if arms is None and arm_pair is None:
        arms = ev.arms
    return PluginBoundModel(ev, case, ev.t_max if t_max is None else float(t_max),
                            arms=arms, arm_pair=arm_pair, gamma=gamma)


def oracle_bounds(s: Scenario, x, case="conservative", arm=None, arm_pair=None,
                  gamma=None, t_max=None):
    """(lower, upper) oracle bound arrays at covariate values x.

    Give ``arm`` for CAPO bounds or ``arm_pair`` for CATE bounds.
    """
    x = np.asarray(x, dtype=float)
    X = x.reshape(-1, 1) if x.ndim == 1 else x
    model = oracle_bound_model(s, case, arm_pair=arm_pair, gamma=gamma, t_max=t_max)
    if arm_pair is not None:
        lo, up, _ = model.predict(X)
    elif arm is not None:
        lo, up, _ = model.predict_capo(X, arm)
    else:
        raise ValueError("give either arm or arm_pair")
    return lo, up


def oracle_capo(s: Scenario, x, arm):
    """True conditional mean survival E[T | x, arm]."""
    x = np.asarray(x, dtype=float).ravel()
    tables = _nu_tables(s.family, s.noise_sd)
    return np.interp(x, tables["grid"], tables["nu0"][int(arm)])


def oracle_cate(s: Scenario, x):
    """True CATE surface (treated minus control mean survival)."""
    x = np.asarray(x, dtype=float).ravel()
    tables = _nu_tables(s.family, s.noise_sd)
    return np.interp(x, tables["grid"], tables["cate"])


# ---------------------------------------------------------------------------
# planted benefit subgroup (threshold-recovery benchmark)
# ---------------------------------------------------------------------------

PLANTED_T_MAX = 100.0
PLANTED_XI = 0.2
_PLANTED_SLOPE = 0.6
_PLANTED_CUTOFF = 70.0


def planted_oracle_lower(x):
    """Oracle conservative CATE lower bound of the planted scenario: 0.6(x-70)."""
    return _PLANTED_SLOPE * (np.asarray(x, dtype=float) - _PLANTED_CUTOFF)


@dataclass
class PlantedInfo:
    t_max: float
    xi: float
    cutoff: float
    oracle_lower: Callable = field(default=planted_oracle_lower)


def generate_planted_subgroup(n: int = 2000, seed: int = 0,
                              noise_sd: float = 0.1) -> tuple[Dataset, PlantedInfo]:
    """Benchmark with a known benefit region x > 70.

    Control survival is 30 + x/3; the treated uplift is linear in x and tuned
    so that, with constant censoring strength 0.2 and horizon 100, the oracle
    conservative CATE lower bound equals 0.6 * (x - 70) exactly — positive
    precisely above the planted cutoff.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, _STREAM_GENERATE, 7]))
    x = rng.uniform(X_LOW, X_HIGH, n)
    a = rng.binomial(1, 0.5, n).astype(float)
    eps = rng.normal(0.0, noise_sd, n)
    base = 30.0 + x / 3.0
    lam_mean = (LAMBDA_LOW + LAMBDA_HIGH) / 2.0
    xi = PLANTED_XI
    # Censoring is outcome-independent here, so the oracle lower bound on arm 1
    # is k*(base + u) with k = 1 - xi + xi*E[lambda], and the oracle
    # conservative upper bound on arm 0 is (1-xi)*base + xi*t_max.  Solve
    # l1 - u0 = slope*(x - cutoff) for the uplift u(x):
    k = 1.0 - xi + xi * lam_mean
    u = (_PLANTED_SLOPE * (x - _PLANTED_CUTOFF)
         + xi * (PLANTED_T_MAX - lam_mean * base)) / k
    t_true = base + u * a + eps
    delta = rng.binomial(1, xi, n)
    lam = rng.uniform(LAMBDA_LOW, LAMBDA_HIGH, n)
    t_tilde = np.where(delta == 1, lam * t_true, t_true)
    d = Dataset(
        x=x.reshape(-1, 1),
        a=a,
        t_tilde=t_tilde,
        delta=delta.astype(int),
        t_max=PLANTED_T_MAX,
        covariate_names=("x1",),
    )
    return d, PlantedInfo(PLANTED_T_MAX, xi, _PLANTED_CUTOFF)
