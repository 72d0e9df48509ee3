"""Evaluation and reporting on top of fitted bound models.

Covers: RMSE of estimated bound surfaces against the simulation oracles,
multi-seed learner benchmarks, interval-width sweeps over censoring strength,
a small greedy tree that hunts for subgroups whose CATE lower bound is
positive, bootstrap uncertainty for subgroup means, and exceedance curves
(bound-valued survival-curve analogues).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bounds import (
    _gamma_values,
    capo_lower_formula,
    capo_upper_conservative_formula,
    default_second_stage,
    fit_plugin,
    fit_survb,
)
from .data import Dataset
from .errors import (
    EmptySelection,
    EmptySubgroup,
    GridEmpty,
    NonFiniteInput,
    TooFewSubjects,
)
from .models import LearnerSpec
from .nuisance import _derived_seed, assign_folds, fit_nuisances
from .simulation import (
    X_HIGH,
    X_LOW,
    OracleNuisances,
    Scenario,
    _nu_tables,
    censor_probability,
    family_t_max,
    generate,
    oracle_bounds,
)

DEFAULT_GRID_SIZE = 200

# sub-stream codes for seeds derived from a run seed
_SEED_FOLDS = 21
_SEED_NUISANCE = 22
_SEED_STAGE2 = 23
_SEED_BOOTSTRAP = 24


def evaluation_grid(size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Equally spaced covariate grid spanning the benchmark support."""
    return np.linspace(X_LOW, X_HIGH, size)


class RmseResult(NamedTuple):
    lower: float
    upper: float
    joint: float


def rmse_vs_oracle(model, s: Scenario, grid=None, arm=None) -> RmseResult:
    """Root-mean-squared error of a bound model against the scenario oracle.

    Compares on an x grid (default 200 equally spaced points over the
    support).  With ``arm`` the model is read as a CAPO bound model; otherwise
    its ``arm_pair`` selects the CATE oracle.  The oracle is evaluated with
    the model's own case, gamma and horizon, so the comparison is
    like-for-like.
    """
    grid = evaluation_grid() if grid is None else np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise GridEmpty("evaluation grid has no points")
    X = grid.reshape(-1, 1)
    if arm is not None:
        if hasattr(model, "predict_capo"):
            lo, up, _ = model.predict_capo(X, arm)
        else:
            lo, up, _ = model.predict(X, arm)
        olo, oup = oracle_bounds(s, grid, case=model.case, arm=arm,
                                 gamma=model.gamma, t_max=model.t_max)
    else:
        lo, up, _ = model.predict(X)
        olo, oup = oracle_bounds(s, grid, case=model.case, arm_pair=model.arm_pair,
                                 gamma=model.gamma, t_max=model.t_max)
    rl = float(np.sqrt(np.mean((lo - olo) ** 2)))
    ru = float(np.sqrt(np.mean((up - oup) ** 2)))
    rj = float(np.sqrt(np.mean(np.concatenate([(lo - olo) ** 2, (up - oup) ** 2]))))
    return RmseResult(rl, ru, rj)


def _auto_propensity(design: str):
    """Known one-half under rct; estimated under obs."""
    return {0: 0.5, 1: 0.5} if design == "rct" else "estimate"


def fit_cate_pipeline(d: Dataset, seed: int = 0, case="conservative", learner="survb",
                      gamma=None, t_max=None, propensity="estimate", folds: int = 3,
                      arm_pair=(1, 0), nuisance_spec=None, second_stage=None,
                      compose_capo=False):
    """One-call benchmark pipeline: folds, nuisances, then a CATE bound model.

    All internal seeds derive from ``seed``, so rerunning with the same inputs
    reproduces the model bit for bit.
    """
    plan = assign_folds(d, folds, seed=_derived_seed(seed, _SEED_FOLDS))
    nspec = (nuisance_spec or LearnerSpec()).with_seed(_derived_seed(seed, _SEED_NUISANCE))
    ns = fit_nuisances(d, plan, nspec, propensity=propensity)
    if learner == "plugin":
        return fit_plugin(d, ns, case, arm_pair=arm_pair, gamma=gamma, t_max=t_max)
    if learner != "survb":
        raise ValueError("learner must be 'survb' or 'plugin', got %r" % (learner,))
    s2 = (second_stage or default_second_stage(d.n)).with_seed(
        _derived_seed(seed, _SEED_STAGE2))
    return fit_survb(d, ns, case, arm_pair=arm_pair, gamma=gamma, t_max=t_max,
                     second_stage=s2, compose_capo=compose_capo)


def _fit_cell_models(d, run_seed, cases, learners, gamma, propensity, folds,
                     nuisance_spec, second_stage, arm_pair=(1, 0)):
    """Fit every (case, learner) combination over one shared nuisance set."""
    plan = assign_folds(d, folds, seed=_derived_seed(run_seed, _SEED_FOLDS))
    nspec = (nuisance_spec or LearnerSpec()).with_seed(
        _derived_seed(run_seed, _SEED_NUISANCE))
    ns = fit_nuisances(d, plan, nspec, propensity=propensity)
    models = {}
    for ci, case in enumerate(cases):
        g = gamma if case == "domain" else None
        for learner in learners:
            if learner == "survb":
                s2 = (second_stage or default_second_stage(d.n)).with_seed(
                    _derived_seed(run_seed, _SEED_STAGE2, ci))
                models[(case, learner)] = fit_survb(
                    d, ns, case, arm_pair=arm_pair, gamma=g, second_stage=s2)
            elif learner == "plugin":
                models[(case, learner)] = fit_plugin(
                    d, ns, case, arm_pair=arm_pair, gamma=g)
            else:
                raise ValueError("unknown learner %r" % (learner,))
    return models, ns


def evaluate_learners(families=("sin",), xi_values=(0.2, 0.4, 0.6),
                      cases=("domain", "conservative"),
                      learners=("survb", "plugin"), n=2000, seeds=(1, 2, 3, 4, 5),
                      design="rct", gamma=3.0, grid_size=DEFAULT_GRID_SIZE,
                      folds=3, propensity=None, nuisance_spec=None,
                      second_stage=None) -> dict:
    """Multi-seed oracle-RMSE benchmark, one cell per (family, xi, case, learner).

    Returns a JSON-ready nested report; each cell carries the per-seed joint
    RMSEs plus their mean and standard deviation.  Nuisances are fitted once
    per (family, xi, seed) and shared by every case and learner in that cell.
    """
    grid = evaluation_grid(grid_size)
    report = {
        "design": design,
        "n": int(n),
        "gamma": gamma if isinstance(gamma, (int, float)) else str(gamma),
        "seeds": [int(s) for s in seeds],
        "grid_size": int(grid_size),
        "cells": {},
    }
    for family in families:
        fam_cells = report["cells"].setdefault(family, {})
        for xi in xi_values:
            cell = {case: {learner: {"per_seed": []} for learner in learners}
                    for case in cases}
            for seed in seeds:
                s = Scenario(family=family, design=design, xi_target=xi,
                             n=n, seed=seed)
                d, _ = generate(s)
                prop = _auto_propensity(design) if propensity is None else propensity
                models, _ = _fit_cell_models(d, seed, cases, learners, gamma, prop,
                                             folds, nuisance_spec, second_stage)
                for (case, learner), model in models.items():
                    r = rmse_vs_oracle(model, s, grid)
                    cell[case][learner]["per_seed"].append(
                        {"seed": int(seed), "rmse_lower": r.lower,
                         "rmse_upper": r.upper, "rmse_joint": r.joint})
            for case in cases:
                for learner in learners:
                    joints = np.array([row["rmse_joint"]
                                       for row in cell[case][learner]["per_seed"]])
                    cell[case][learner]["rmse_joint_mean"] = float(joints.mean())
                    cell[case][learner]["rmse_joint_sd"] = (
                        float(joints.std(ddof=1)) if joints.size > 1 else 0.0)
            fam_cells["%g" % xi] = cell
    return report


def _oracle_width_at(family, design, xi_value, case, gamma, grid, noise_sd=0.1):
    """Mean oracle CATE interval width on a grid, straight from the formulas.

    ``xi_value`` may be 0 (the no-censoring limit, where both cases collapse
    to a width of zero) even though no data can be generated there.
    """
    tables = _nu_tables(family, noise_sd)
    t_max = family_t_max(family, noise_sd)
    X = grid.reshape(-1, 1)
    ref = Scenario(family=family, design=design, xi_target=0.5, n=1, seed=0,
                   noise_sd=noise_sd)
    total = np.zeros(grid.size)
    for arm in (1, 0):
        nu0 = np.interp(grid, tables["grid"], tables["nu0"][arm])
        nu1 = np.interp(grid, tables["grid"], tables["nu1"][arm])
        if xi_value == 0:
            xi = np.zeros(grid.size)
        else:
            xi, _ = censor_probability(grid, np.full(grid.size, float(arm)), xi_value)
        lower = capo_lower_formula(nu0, nu1, xi)
        if case == "domain":
            g = _gamma_values(gamma, X, arm, OracleNuisances(ref))
            upper = lower + g * xi
        else:
            upper = capo_upper_conservative_formula(nu0, xi, t_max)
        total += upper - lower
    return float(total.mean())


def width_sweep(case="conservative", xi_values=(0.1, 0.2, 0.4, 0.6), family="sin",
                design="rct", n=2000, seeds=(1, 2, 3, 4, 5), gamma=None,
                grid_size=DEFAULT_GRID_SIZE, folds=3, learner="survb",
                include_zero=True, propensity=None, nuisance_spec=None,
                second_stage=None) -> list[dict]:
    """Mean CATE interval width versus censoring strength.

    One row per xi: the oracle width plus the grid-mean width of the fitted
    model, averaged over seeds.  ``include_zero`` prepends the xi -> 0 limit,
    where the oracle width is identically zero (nothing is censored, so the
    interval closes); no model is fitted there.
    """
    grid = evaluation_grid(grid_size)
    rows = []
    if include_zero:
        rows.append({"xi": 0.0,
                     "oracle_width": _oracle_width_at(family, design, 0.0, case,
                                                      gamma, grid),
                     "estimated_width_mean": None, "estimated_width_sd": None,
                     "per_seed": []})
    for xi in xi_values:
        per_seed = []
        for seed in seeds:
            s = Scenario(family=family, design=design, xi_target=xi, n=n, seed=seed)
            d, _ = generate(s)
            prop = _auto_propensity(design) if propensity is None else propensity
            models, _ = _fit_cell_models(d, seed, (case,), (learner,), gamma, prop,
                                         folds, nuisance_spec, second_stage)
            lo, up, _ = models[(case, learner)].predict(grid.reshape(-1, 1))
            per_seed.append(float(np.mean(up - lo)))
        widths = np.asarray(per_seed)
        rows.append({
            "xi": float(xi),
            "oracle_width": _oracle_width_at(family, design, xi, case, gamma, grid),
            "estimated_width_mean": float(widths.mean()),
            "estimated_width_sd": float(widths.std(ddof=1)) if widths.size > 1 else 0.0,
            "per_seed": per_seed,
        })
    return rows


# ---------------------------------------------------------------------------
# subgroup discovery on the CATE lower bound
# ---------------------------------------------------------------------------

@dataclass
class SubgroupNode:
    n: int
    positive_fraction: float
    depth: int
    split: dict | None = None
    children: tuple = ()
    indices: tuple | None = None  # leaf only

    def to_dict(self) -> dict:
        out = {"n": self.n, "positive_fraction": self.positive_fraction,
               "depth": self.depth}
        if self.split is not None:
            out["split"] = dict(self.split)
            out["children"] = [c.to_dict() for c in self.children]
        else:
            out["indices"] = list(self.indices)
        return out


@dataclass
class SubgroupTree:
    root: SubgroupNode
    max_depth: int
    min_leaf: int

    def to_dict(self) -> dict:
        return {"max_depth": self.max_depth, "min_leaf": self.min_leaf,
                "root": self.root.to_dict()}

    def leaves(self) -> list[SubgroupNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.split is None:
                out.append(node)
            else:
                stack.extend(reversed(node.children))
        return out

    def best_leaf(self) -> SubgroupNode:
        return max(self.leaves(), key=lambda nd: (nd.positive_fraction, nd.n))


def subgroup_tree(lb, d: Dataset, max_depth: int = 2, min_leaf: int = 2) -> SubgroupTree:
    """Greedy tree over covariates maximizing the best child's positive share.

    Each candidate split is scored by the larger of the two children's
    fractions of strictly positive CATE lower bounds; a node splits only when
    that score strictly beats its own fraction.  Ties prefer the split whose
    winning child is larger, then the lower covariate index, then the smaller
    threshold.  Thresholds are midpoints between consecutive distinct sorted
    values, so the tree is invariant to monotone covariate rescaling.
    """
    lb = np.asarray(lb, dtype=float).ravel()
    if lb.size != d.n:
        raise ValueError("lower-bound vector length %d does not match n=%d"
                         % (lb.size, d.n))
    if not np.all(np.isfinite(lb)):
        raise NonFiniteInput("lower bounds must be finite")
    if d.n < min_leaf:
        raise TooFewSubjects("need at least min_leaf=%d subjects, got %d"
                             % (min_leaf, d.n))
    names = d.covariate_names or tuple("x%d" % (j + 1) for j in range(d.p))
    pos = lb > 0

    def build(idx: np.ndarray, depth: int) -> SubgroupNode:
        n = idx.size
        frac = float(pos[idx].mean())
        if depth < max_depth and n >= 2 * min_leaf:
            best_key, best = None, None
            for j in range(d.p):
                v = d.x[idx, j]
                order = np.argsort(v, kind="stable")
                sv = v[order]
                sp = pos[idx][order].astype(float)
                cum = np.cumsum(sp)
                total = cum[-1]
                left_n = np.arange(1, n)
                ok = (sv[1:] > sv[:-1]) & (left_n >= min_leaf) \
                    & ((n - left_n) >= min_leaf)
                if not ok.any():
                    continue
                ln = left_n[ok]
                rn = n - ln
                pl = cum[:-1][ok] / ln
                pr = (total - cum[:-1][ok]) / rn
                gain = np.maximum(pl, pr)
                winner_n = np.where(pl > pr, ln, np.where(pr > pl, rn,
                                                          np.maximum(ln, rn)))
                thr = (sv[:-1][ok] + sv[1:][ok]) / 2.0
                pick = np.lexsort((thr, -winner_n, -gain))[0]
                key = (gain[pick], winner_n[pick], -j, -thr[pick])
                if best_key is None or key > best_key:
                    best_key = key
                    best = (j, float(thr[pick]), float(gain[pick]))
            if best is not None and best[2] > frac:
                j, thr, _ = best
                left = d.x[idx, j] <= thr
                children = (build(idx[left], depth + 1),
                            build(idx[~left], depth + 1))
                return SubgroupNode(n, frac, depth,
                                    split={"covariate": j, "name": names[j],
                                           "threshold": thr},
                                    children=children)
        return SubgroupNode(n, frac, depth,
                            indices=tuple(int(i) for i in np.sort(idx)))

    return SubgroupTree(build(np.arange(d.n), 0), max_depth, min_leaf)


def fraction_lb_positive(lb, mask=None) -> float:
    """Percentage of subjects whose CATE lower bound is strictly positive."""
    lb = np.asarray(lb, dtype=float).ravel()
    if mask is not None:
        lb = lb[np.asarray(mask, dtype=bool).ravel()]
    if lb.size == 0:
        raise EmptySelection("no subjects selected")
    return float(100.0 * np.mean(lb > 0))


def fraction_table(d: Dataset, lb) -> list[dict]:
    """Positive-lower-bound share by covariate level (binary or median split)."""
    lb = np.asarray(lb, dtype=float).ravel()
    names = d.covariate_names or tuple("x%d" % (j + 1) for j in range(d.p))
    rows = []
    for j, name in enumerate(names):
        col = d.x[:, j]
        if np.isin(col, (0.0, 1.0)).all():
            levels = (("=0", col == 0), ("=1", col == 1))
        else:
            med = float(np.median(col))
            levels = (("<=%g" % med, col <= med), (">%g" % med, col > med))
        for label, m in levels:
            cnt = int(m.sum())
            rows.append({
                "covariate": name, "level": label, "n": cnt,
                "percent_positive": float(100.0 * np.mean(lb[m] > 0)) if cnt else None,
            })
    return rows


def pair_table(d: Dataset, lb) -> list[dict]:
    """Positive share within joint level =1 of every binary covariate pair.

    Cells with no subjects stay blank (None) rather than being dropped.
    """
    lb = np.asarray(lb, dtype=float).ravel()
    names = d.covariate_names or tuple("x%d" % (j + 1) for j in range(d.p))
    binary = [j for j in range(d.p) if np.isin(d.x[:, j], (0.0, 1.0)).all()]
    rows = []
    for ai in range(len(binary)):
        for bi in range(ai + 1, len(binary)):
            ja, jb = binary[ai], binary[bi]
            m = (d.x[:, ja] == 1) & (d.x[:, jb] == 1)
            cnt = int(m.sum())
            rows.append({
                "covariate_a": names[ja], "covariate_b": names[jb], "n": cnt,
                "percent_positive": float(100.0 * np.mean(lb[m] > 0)) if cnt else None,
            })
    return rows


def bootstrap_subgroup(lb, d: Dataset, mask, B: int = 2000, seed: int = 0,
                       refit: bool = False, pipeline=None) -> tuple[float, float]:
    """Bootstrap mean and sd of the subgroup-average CATE lower bound.

    Default mode holds the fitted model fixed and resamples subjects within
    the subgroup, so the sd reflects subgroup-composition noise only.  With
    ``refit=True`` (and a ``pipeline(dataset) -> lb`` callable) the whole
    dataset is resampled and the estimator rerun per replicate — far slower,
    and off by default.  ``B=1`` is allowed but flagged: a single replicate
    has no spread, so sd degenerates to zero.
    """
    lb = np.asarray(lb, dtype=float).ravel()
    mask = np.asarray(mask, dtype=bool).ravel()
    if lb.size != d.n or mask.size != d.n:
        raise ValueError("lb and mask must both have length n=%d" % (d.n,))
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise EmptySubgroup("subgroup mask selects no subjects")
    if B < 1:
        raise ValueError("B must be at least 1, got %r" % (B,))
    if B == 1:
        warnings.warn("B=1 gives a degenerate bootstrap sd of 0", stacklevel=2)
    rng = np.random.default_rng(np.random.SeedSequence([seed, _SEED_BOOTSTRAP]))
    if refit:
        if pipeline is None:
            raise ValueError("refit=True needs a pipeline(dataset) -> lb callable")
        reps = []
        for _ in range(B):
            draw = rng.integers(0, d.n, d.n)
            db = Dataset(x=d.x[draw], a=d.a[draw], t_tilde=d.t_tilde[draw],
                         delta=d.delta[draw], t_max=d.t_max,
                         covariate_names=d.covariate_names,
                         treatment_mode=d.treatment_mode)
            lb_b = np.asarray(pipeline(db), dtype=float).ravel()
            in_sub = np.isin(draw, idx)
            if in_sub.any():
                reps.append(float(lb_b[in_sub].mean()))
        if not reps:
            raise EmptySubgroup("no bootstrap replicate contained subgroup members")
        reps = np.asarray(reps)
    else:
        sub = lb[idx]
        m = idx.size
        reps = np.empty(B)
        chunk = max(1, int(4_000_000 // m))
        for start in range(0, B, chunk):
            stop = min(start + chunk, B)
            draws = rng.integers(0, m, (stop - start, m))
            reps[start:stop] = sub[draws].mean(axis=1)
    sd = float(reps.std(ddof=1)) if reps.size > 1 else 0.0
    return float(reps.mean()), sd


# ---------------------------------------------------------------------------
# exceedance curves
# ---------------------------------------------------------------------------

@dataclass
class CurveTable:
    """Exceedance fractions over a time grid for lower/mid/upper bounds."""

    t: np.ndarray
    lower: np.ndarray
    mid: np.ndarray
    upper: np.ndarray

    def rows(self) -> list[dict]:
        return [{"t": float(t), "p_lower": float(lo), "p_mid": float(md),
                 "p_upper": float(up)}
                for t, lo, md, up in zip(self.t, self.lower, self.mid, self.upper)]


def bound_survival_curves(lower_bounds, upper_bounds, grid) -> CurveTable:
    """Population exceedance curves induced by per-subject bound estimates.

    For each grid time t the curves report the fraction of subjects whose
    estimated bound strictly exceeds t; the lower curve uses the lower bound,
    the upper curve the upper bound, and mid their midpoint.  Each curve is
    non-increasing in t and the three never cross (lower <= mid <= upper
    pointwise) because the per-subject bounds are ordered.
    """
    lb = np.asarray(lower_bounds, dtype=float).ravel()
    ub = np.asarray(upper_bounds, dtype=float).ravel()
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise GridEmpty("time grid has no points")
    if lb.size == 0 or lb.size != ub.size:
        raise ValueError("need matching non-empty lower/upper bound vectors")
    if not (np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))
            and np.all(np.isfinite(grid))):
        raise NonFiniteInput("curve inputs must be finite")
    if np.any(np.diff(grid) < 0):
        raise ValueError("time grid must be sorted ascending")
    mid = (lb + ub) / 2.0
    p_lo = np.mean(lb[None, :] > grid[:, None], axis=1)
    p_md = np.mean(mid[None, :] > grid[:, None], axis=1)
    p_up = np.mean(ub[None, :] > grid[:, None], axis=1)
    return CurveTable(grid, p_lo, p_md, p_up)
