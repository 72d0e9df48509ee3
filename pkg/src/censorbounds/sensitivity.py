"""Sensitivity inputs: the post-dropout cap gamma and the hidden-confounding shift.

Two separate sensitivity notions live here:

* ``SensitivitySpec`` — the domain-knowledge function gamma(x, a) bounding the
  expected survival time lost after censoring, in months.  Forms: a constant, a
  per-arm table, a covariate-binned table, or "conservative" (resolved to
  t_max - nu(1, x, a) at evaluation, the largest value its validity window
  allows).
* ``GmsmSpec`` — a marginal sensitivity model for hidden confounding with
  strength Gamma >= 1.  The observational distribution of any outcome W within
  a covariate cell can differ from the interventional one by a density ratio
  bounded via Gamma; the extreme members of that family reweight the empirical
  distribution piecewise around a quantile cut, giving the stochastically
  largest (plus) and smallest (minus) candidates.  Applied here to widen
  cell-level plug-in bounds.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bounds import BoundPair, _gamma_values
from .errors import (
    BinNotCovered,
    CellTooSmall,
    DegenerateSample,
    GammaBelowOne,
    UnknownArm,
)

GAMMA_FORMS = ("constant", "per_arm", "table", "conservative")


@dataclass(frozen=True)
class SensitivitySpec:
    """Post-dropout cap gamma(x, a), in months."""

    form: str = "constant"
    constant: float | None = None
    per_arm: dict | None = None
    table: tuple | None = None  # rows (bin_low, bin_high, arm, gamma)
    covariate: int = 0  # covariate index the table bins refer to

    def __post_init__(self):
        if self.form not in GAMMA_FORMS:
            raise ValueError("form must be one of %s, got %r" % (GAMMA_FORMS, self.form))
        if self.form == "constant":
            if self.constant is None or self.constant < 0:
                raise ValueError("constant form needs a gamma value >= 0")
        elif self.form == "per_arm":
            if not self.per_arm or any(v < 0 for v in self.per_arm.values()):
                raise ValueError("per_arm form needs a mapping arm -> gamma >= 0")
        elif self.form == "table":
            if not self.table:
                raise ValueError("table form needs at least one row")
            for row in self.table:
                if len(row) != 4 or row[3] < 0:
                    raise ValueError("table rows are (bin_low, bin_high, arm, gamma>=0)")

    def values_at(self, X, arm, ns=None) -> np.ndarray:
        """Evaluate gamma at covariate rows X for one arm (vectorized)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        if self.form == "constant":
            return np.full(n, float(self.constant))
        if self.form == "per_arm":
            if arm not in self.per_arm:
                raise UnknownArm("no gamma declared for arm %r" % (arm,))
            return np.full(n, float(self.per_arm[arm]))
        if self.form == "table":
            v = X[:, self.covariate]
            out = np.full(n, np.nan)
            for lo, hi, row_arm, g in self.table:
                if row_arm != arm:
                    continue
                hit = (v >= lo) & (v < hi)
                out[hit] = g
            if np.any(np.isnan(out)):
                bad = float(v[np.isnan(out)][0])
                raise BinNotCovered(
                    "covariate value %g (arm %r) falls outside every declared gamma bin"
                    % (bad, arm)
                )
            return out
        # conservative: t_max - nu(1, x, a), floored at zero
        if ns is None:
            raise ValueError("conservative gamma needs a fitted nuisance set")
        nu1 = ns.evaluate(X, arm, None)[1]
        g = ns.t_max - nu1
        n_neg = int(np.sum(g < 0))
        if n_neg:
            warnings.warn(
                "conservative gamma floored at 0 for %d point(s) where nu(1) "
                "exceeds t_max" % n_neg,
                stacklevel=2,
            )
            g = np.maximum(g, 0.0)
        return g


def constant_gamma(value: float) -> SensitivitySpec:
    return SensitivitySpec(form="constant", constant=float(value))


def per_arm_gamma(values: dict) -> SensitivitySpec:
    return SensitivitySpec(form="per_arm", per_arm=dict(values))


def conservative_gamma() -> SensitivitySpec:
    return SensitivitySpec(form="conservative")


def load_gamma_table(path, covariate: int = 0) -> SensitivitySpec:
    """Read a gamma table CSV with columns bin_low, bin_high, arm, gamma."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                (float(rec["bin_low"]), float(rec["bin_high"]),
                 int(float(rec["arm"])), float(rec["gamma"]))
            )
    return SensitivitySpec(form="table", table=tuple(rows), covariate=covariate)


def eval_gamma(spec: SensitivitySpec, x, arm, ns=None) -> float:
    """Scalar gamma(x, arm)."""
    return float(spec.values_at(np.asarray(x, dtype=float).reshape(1, -1), arm, ns)[0])


# ---------------------------------------------------------------------------
# GMSM: piecewise quantile reweighting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GmsmSpec:
    """Hidden-confounding strength; Gamma = 1 means none."""

    Gamma: float = 1.0

    def __post_init__(self):
        if not self.Gamma >= 1.0:
            raise GammaBelowOne("Gamma must be >= 1, got %r" % (self.Gamma,))


class GmsmWeights(NamedTuple):
    s_minus: float
    s_plus: float
    c_plus: float

    @property
    def degenerate(self) -> bool:
        return not self.s_plus > self.s_minus


def gmsm_weights(Gamma: float, pi_obs: float) -> GmsmWeights:
    """Density-ratio extremes (s_minus, s_plus) and the plus-cut c_plus.

    s_minus = 1/((1-Gamma)*pi + Gamma), s_plus = 1/((1-1/Gamma)*pi + 1/Gamma);
    s_minus <= 1 <= s_plus with equality iff Gamma = 1, in which case the cut
    is undefined (returned as nan, flagged via ``degenerate``).
    """
    if not Gamma >= 1.0:
        raise GammaBelowOne("Gamma must be >= 1, got %r" % (Gamma,))
    if not 0.0 < pi_obs < 1.0:
        raise ValueError("pi_obs must lie strictly inside (0, 1), got %r" % (pi_obs,))
    s_minus = 1.0 / ((1.0 - Gamma) * pi_obs + Gamma)
    s_plus = 1.0 / ((1.0 - 1.0 / Gamma) * pi_obs + 1.0 / Gamma)
    if s_plus > s_minus:
        c_plus = (1.0 - s_minus) * s_plus / (s_plus - s_minus)
    else:
        c_plus = float("nan")
    return GmsmWeights(s_minus, s_plus, c_plus)


def gmsm_shift_masses(values, s_minus, s_plus, direction="plus", weights=None):
    """Shifted probability masses over the sorted sample.

    Returns (sorted_values, shifted_masses).  Mass below the c-quantile cut is
    scaled by 1/s_plus in the plus direction (and 1/s_minus above), and
    vice-versa for minus; an atom straddling the cut is split proportionally,
    so the shifted masses sum to one exactly.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise DegenerateSample("cannot shift an empty sample")
    if weights is None:
        weights = np.ones_like(values)
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.shape != values.shape:
        raise DegenerateSample("weights and values must align")
    if np.any(weights < 0) or not weights.sum() > 0:
        raise DegenerateSample("weights must be nonnegative with positive total")
    if not (s_minus <= 1.0 + 1e-12 and s_plus >= 1.0 - 1e-12):
        raise ValueError("need s_minus <= 1 <= s_plus")
    order = np.argsort(values, kind="stable")
    v = values[order]
    m = weights[order] / weights.sum()
    if not s_plus > s_minus:  # Gamma = 1: identity reweighting
        return v, m
    if direction == "plus":
        cut = (1.0 - s_minus) * s_plus / (s_plus - s_minus)
        w_below, w_above = 1.0 / s_plus, 1.0 / s_minus
    elif direction == "minus":
        cut = (s_plus - 1.0) * s_minus / (s_plus - s_minus)
        w_below, w_above = 1.0 / s_minus, 1.0 / s_plus
    else:
        raise ValueError("direction must be 'plus' or 'minus', got %r" % (direction,))
    cum_before = np.concatenate(([0.0], np.cumsum(m)[:-1]))
    below = np.clip(cut - cum_before, 0.0, m)
    above = m - below
    return v, below * w_below + above * w_above


def gmsm_shift_expectation(values, s_minus, s_plus, direction="plus", weights=None) -> float:
    """Expectation of the sample under the extreme shifted distribution."""
    v, m = gmsm_shift_masses(values, s_minus, s_plus, direction, weights)
    return float(np.sum(m * v) / np.sum(m))


@dataclass
class GmsmCellResult:
    """Cell-level plug-in bounds before and after the confounding shift."""

    arm: object
    n: int
    Gamma: float
    pi_obs: float
    input: BoundPair
    adjusted: BoundPair
    metadata: dict = field(default_factory=dict)


def gmsm_bound_adjustment(d, cell_mask, arm, gmsm: GmsmSpec, ns, case="conservative",
                          gamma=None, t_max=None, min_cell: int = 10) -> GmsmCellResult:
    """Widen the cell-level plug-in bounds for hidden confounding of strength Gamma.

    Within the cell, the plug-in bounds reduce to means of per-subject
    integrands over the cell's arm-``arm`` subjects: the observed time for the
    lower bound, and the observed time plus the censoring penalty
    (gamma * delta for the domain case, swap-in of t_max for the conservative
    case) for the upper bound.  The shift reweights the empirical distribution
    of each integrand: minus direction on the lower integrand, plus direction
    on the upper one.  Stochastic ordering of the shifted distributions makes
    the output contain the input and nest monotonically in Gamma.

    The shift is applied to the within-cell marginal of the observed data (see
    result metadata); cells with fewer than ``min_cell`` subjects on the arm
    raise CellTooSmall.
    """
    cell_mask = np.asarray(cell_mask, dtype=bool)
    sel = cell_mask & (d.a == arm)
    n_arm = int(sel.sum())
    if n_arm < min_cell:
        raise CellTooSmall(
            "cell has %d subject(s) on arm %s; need at least %d" % (n_arm, arm, min_cell)
        )
    t_max = ns.t_max if t_max is None else float(t_max)
    t = d.t_tilde[sel]
    delta = d.delta[sel].astype(float)
    if case == "domain":
        g = _gamma_values(gamma, d.x[sel], arm, ns)
        upper_integrand = t + g * delta
    elif case == "conservative":
        upper_integrand = t * (1.0 - delta) + t_max * delta
    else:
        raise ValueError("case must be 'domain' or 'conservative', got %r" % (case,))
    pi_obs = float(np.mean(ns.evaluate(d.x[cell_mask], arm, None)[3]))
    w = gmsm_weights(gmsm.Gamma, pi_obs)
    input_pair = BoundPair(
        gmsm_shift_expectation(t, 1.0, 1.0, "minus"),
        gmsm_shift_expectation(upper_integrand, 1.0, 1.0, "plus"),
    )
    if w.degenerate:
        adjusted = input_pair
    else:
        adjusted = BoundPair(
            gmsm_shift_expectation(t, w.s_minus, w.s_plus, "minus"),
            gmsm_shift_expectation(upper_integrand, w.s_minus, w.s_plus, "plus"),
        )
    return GmsmCellResult(
        arm=arm,
        n=n_arm,
        Gamma=gmsm.Gamma,
        pi_obs=pi_obs,
        input=input_pair,
        adjusted=adjusted,
        metadata={
            "interpretation": (
                "shift applied to the within-cell marginal distribution of the "
                "observed-time bound integrand, per arm"
            ),
            "case": case,
        },
    )


def covariate_cells(d, covariate: int = 0, edges=None, n_bins: int | None = None):
    """Partition subjects into cells by binning one covariate.

    Returns a list of (label, mask).  ``edges`` gives explicit bin edges;
    otherwise ``n_bins`` equal-width bins span the observed range.  Bins are
    half-open [low, high) with the final bin closed.
    """
    v = d.x[:, covariate]
    if edges is None:
        if not n_bins or n_bins < 1:
            raise ValueError("need explicit edges or n_bins >= 1")
        edges = np.linspace(v.min(), v.max(), n_bins + 1)
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly increasing with at least two entries")
    cells = []
    for i in range(edges.size - 1):
        lo, hi = edges[i], edges[i + 1]
        mask = (v >= lo) & ((v < hi) | ((i == edges.size - 2) & (v <= hi)))
        cells.append(("[%g, %g%s" % (lo, hi, "]" if i == edges.size - 2 else ")"), mask))
    return cells
