"""Stage-1 machinery: cross-fitted nuisance estimation.

Three nuisance functions are estimated per treatment arm with K-fold
cross-fitting, stratified on (arm, censoring status):

* ``nu(delta, x, a)`` — expected observed time within a censoring stratum,
  one regressor per (delta, arm) pair, targets are observed t_tilde;
* ``xi(x, a)`` — censoring probability, one classifier per arm;
* ``pi_a(x)`` — propensity, either known constants or one multiclass
  classifier over arms.

Evaluation clips propensities into [eps, 1-eps] (joint renormalization so the
arm probabilities still sum to one), caps the censoring probability at
1 - eps_xi, and clamps nu into [0, t_max].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import EmptyCell, TooFewSubjects, UnknownArm
from .models import FittedClassifier, FittedRegressor, LearnerSpec, fit_classifier, fit_regressor

DEFAULT_EPSILON = 0.01
DEFAULT_EPSILON_XI = 0.01

# role codes for deriving independent learner seeds
_ROLE_NU = 1
_ROLE_XI = 2
_ROLE_PI = 3


def _derived_seed(base_seed: int, *key) -> int:
    words = [int(base_seed) & 0xFFFFFFFF] + [int(k) & 0xFFFFFFFF for k in key]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


@dataclass(frozen=True)
class CrossFitPlan:
    """Fold assignment for cross-fitting, stratified on (arm, delta)."""

    K: int
    seed: int
    folds: np.ndarray  # (n,) fold index per subject

    def __post_init__(self):
        f = np.asarray(self.folds, dtype=int)
        f.setflags(write=False)
        object.__setattr__(self, "folds", f)


def assign_folds(d: Dataset, K: int = 3, seed: int = 0) -> CrossFitPlan:
    """Assign each subject to one of K folds.

    Subjects are shuffled within each (arm, delta) cell and dealt round-robin
    into folds with a pointer that runs on across cells, so fold sizes differ
    by at most one globally while each cell is spread as evenly as possible.

    Raises
    ------
    TooFewSubjects
        If n < K.
    EmptyCell
        If some (arm, delta) cell present in the data would be missing from a
        fold's training complement (cells with a single subject always are).
    """
    if K < 2:
        raise ValueError("K must be >= 2, got %d" % K)
    if d.n < K:
        raise TooFewSubjects("n=%d smaller than K=%d" % (d.n, K))
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 0xF01D]))
    folds = np.empty(d.n, dtype=int)
    ptr = 0
    for arm in d.arms:
        for delta in (0, 1):
            members = np.flatnonzero((d.a == arm) & (d.delta == delta))
            if members.size == 0:
                continue
            members = rng.permutation(members)
            for idx in members:
                folds[idx] = ptr % K
                ptr += 1
    # coverage check: every present cell must appear in >= 2 folds, otherwise
    # some training complement would lack it entirely
    for arm in d.arms:
        for delta in (0, 1):
            cell = folds[(d.a == arm) & (d.delta == delta)]
            if cell.size and np.unique(cell).size < 2:
                raise EmptyCell(
                    "cell (arm=%s, delta=%d) has %d subject(s); it cannot be "
                    "present in every fold's training complement with K=%d"
                    % (arm, delta, cell.size, K)
                )
    return CrossFitPlan(K=K, seed=int(seed), folds=folds)


@dataclass(frozen=True)
class KnownPropensity:
    """Arm -> constant propensity, used when the assignment mechanism is known."""

    values: dict

    def vector(self, arms) -> np.ndarray:
        missing = [a for a in arms if a not in self.values]
        if missing:
            raise UnknownArm("no known propensity for arm(s) %s" % (missing,))
        return np.array([float(self.values[a]) for a in arms])


def project_probabilities(raw: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Map rows of nonnegative weights onto the simplex slice {sum=1, lo<=p<=hi}.

    Solves, per row, clip(m * raw, lo, hi) summing to one via bisection on m;
    this keeps entries proportional to the raw weights wherever no bound binds.
    Rows that are entirely zero become uniform.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    n, K = raw.shape
    if K * lo > 1 + 1e-9 or K * hi < 1 - 1e-9:
        raise ValueError("box [%g, %g] with %d entries cannot sum to 1" % (lo, hi, K))
    raw = np.clip(raw, 0.0, None)
    zero_rows = raw.sum(axis=1) <= 0
    if zero_rows.any():
        raw = raw.copy()
        raw[zero_rows] = 1.0
    # normalize rows so the bisection scale stays O(1) even for tiny weights
    raw = raw / raw.sum(axis=1, keepdims=True)

    def total(m):
        return np.clip(raw * m[:, None], lo, hi).sum(axis=1)

    m_lo = np.zeros(n)
    m_hi = np.ones(n)
    for _ in range(70):
        need = total(m_hi) < 1.0
        if not need.any():
            break
        m_hi[need] *= 2.0
    for _ in range(100):
        mid = 0.5 * (m_lo + m_hi)
        high = total(mid) >= 1.0
        m_hi = np.where(high, mid, m_hi)
        m_lo = np.where(high, m_lo, mid)
    return np.clip(raw * m_hi[:, None], lo, hi)


@dataclass
class NuisanceSet:
    """Cross-fitted nuisance models plus evaluation bookkeeping.

    ``nu[(delta, arm)]`` holds one regressor per fold (``None`` when the
    stratum is empty and conservative-only mode allowed skipping it);
    ``xi[arm]`` one classifier per fold; ``pi`` is a KnownPropensity or a list
    of per-fold multiclass classifiers.
    """

    K: int
    arms: tuple
    folds: np.ndarray
    t_max: float
    nu: dict = field(default_factory=dict)
    xi: dict = field(default_factory=dict)
    pi: object = None
    epsilon_clip: float = DEFAULT_EPSILON
    epsilon_clip_xi: float = DEFAULT_EPSILON_XI
    conservative_only: bool = False

    def has_nu1(self, arm) -> bool:
        models = self.nu.get((1, arm))
        return models is not None and all(m is not None for m in models)

    # -- internal prediction helpers ------------------------------------

    def _predict_fold_models(self, models, X, folds):
        """Evaluate per-fold models: out-of-fold when folds given, else ensemble mean."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        if models is None or all(m is None for m in models):
            return out  # absent stratum: contributes nothing downstream
        if folds is None:
            preds = [m.predict(X) for m in models if m is not None]
            return np.mean(preds, axis=0)
        folds = np.asarray(folds, dtype=int)
        for f in range(self.K):
            mask = folds == f
            if mask.any() and models[f] is not None:
                out[mask] = models[f].predict(X[mask])
        return out

    def _xi_raw(self, arm, X, folds):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        models = self.xi[arm]
        if folds is None:
            return np.mean([m.prob_of(1, X) for m in models], axis=0)
        folds = np.asarray(folds, dtype=int)
        out = np.zeros(X.shape[0])
        for f in range(self.K):
            mask = folds == f
            if mask.any():
                out[mask] = models[f].prob_of(1, X[mask])
        return out

    def _pi_matrix_raw(self, X, folds):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if isinstance(self.pi, KnownPropensity):
            return np.tile(self.pi.vector(self.arms), (X.shape[0], 1))
        mats = []
        if folds is None:
            per_fold = [
                np.column_stack([m.prob_of(arm, X) for arm in self.arms]) for m in self.pi
            ]
            return np.mean(per_fold, axis=0)
        folds = np.asarray(folds, dtype=int)
        out = np.zeros((X.shape[0], len(self.arms)))
        for f in range(self.K):
            mask = folds == f
            if mask.any():
                out[mask] = np.column_stack(
                    [self.pi[f].prob_of(arm, X[mask]) for arm in self.arms]
                )
        return out

    # -- public evaluation ----------------------------------------------

    def propensity_matrix(self, X, folds=None) -> np.ndarray:
        """Clipped, renormalized propensities; one column per arm."""
        raw = self._pi_matrix_raw(X, folds)
        return project_probabilities(raw, self.epsilon_clip, 1.0 - self.epsilon_clip)

    def evaluate(self, X, arm, folds=None):
        """Return (nu0, nu1, xi, pi) arrays for covariates X under ``arm``.

        ``folds=None`` averages all fold models (new data); an integer array
        selects each row's own fold so that predictions come from models that
        never saw that subject.
        """
        if arm not in self.arms:
            raise UnknownArm("arm %r not in %s" % (arm, self.arms))
        X = np.atleast_2d(np.asarray(X, dtype=float))
        nu0 = np.clip(self._predict_fold_models(self.nu[(0, arm)], X, folds), 0.0, self.t_max)
        nu1 = np.clip(self._predict_fold_models(self.nu.get((1, arm)), X, folds), 0.0, self.t_max)
        xi = np.clip(self._xi_raw(arm, X, folds), 0.0, 1.0 - self.epsilon_clip_xi)
        pi = self.propensity_matrix(X, folds)[:, self.arms.index(arm)]
        return nu0, nu1, xi, pi


def evaluate_nuisances(ns: NuisanceSet, x, arm, fold=None):
    """Functional wrapper around :meth:`NuisanceSet.evaluate` for a single point."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    folds = None if fold is None else np.array([fold])
    nu0, nu1, xi, pi = ns.evaluate(x, arm, folds)
    return float(nu0[0]), float(nu1[0]), float(xi[0]), float(pi[0])


def fit_nuisances(
    d: Dataset,
    plan: CrossFitPlan,
    spec: LearnerSpec | None = None,
    propensity="estimate",
    conservative_only: bool = False,
    epsilon_clip: float = DEFAULT_EPSILON,
    epsilon_clip_xi: float = DEFAULT_EPSILON_XI,
) -> NuisanceSet:
    """Fit all stage-1 nuisance models under a cross-fitting plan.

    For every fold f, models are trained only on subjects outside f.  ``nu``
    regressors are fitted per (delta, arm) stratum on observed t_tilde; in
    particular the censored-stratum regressor targets the observed (censored)
    times.  ``propensity`` is either the string ``"estimate"`` or a mapping
    arm -> known constant.

    With ``conservative_only=True`` an arm with no censored subjects at all is
    tolerated: its nu(1) regressor is skipped (the conservative upper bound
    never uses it, and the matching censoring probability is estimated as 0).
    """
    spec = spec or LearnerSpec()
    arms = d.arms
    known = None
    if isinstance(propensity, KnownPropensity):
        known = propensity
    elif isinstance(propensity, dict):
        known = KnownPropensity(propensity)
    elif propensity != "estimate":
        raise ValueError("propensity must be 'estimate' or a mapping arm -> probability")

    ns = NuisanceSet(
        K=plan.K,
        arms=arms,
        folds=plan.folds,
        t_max=d.t_max,
        epsilon_clip=epsilon_clip,
        epsilon_clip_xi=epsilon_clip_xi,
        conservative_only=conservative_only,
    )

    for ai, arm in enumerate(arms):
        arm_mask = d.a == arm
        for delta in (0, 1):
            cell_mask = arm_mask & (d.delta == delta)
            models = []
            for f in range(plan.K):
                train = cell_mask & (plan.folds != f)
                if not train.any():
                    if delta == 1 and conservative_only and not cell_mask.any():
                        models.append(None)
                        continue
                    raise EmptyCell(
                        "no training subjects for (arm=%s, delta=%d) outside fold %d"
                        % (arm, delta, f)
                    )
                sub_spec = spec.with_seed(_derived_seed(spec.seed, _ROLE_NU, f, ai, delta))
                models.append(fit_regressor(sub_spec, d.x[train], d.t_tilde[train]))
            ns.nu[(delta, arm)] = models

        xi_models = []
        for f in range(plan.K):
            train = arm_mask & (plan.folds != f)
            if not train.any():
                raise EmptyCell("no training subjects for arm %s outside fold %d" % (arm, f))
            sub_spec = spec.with_seed(_derived_seed(spec.seed, _ROLE_XI, f, ai))
            xi_models.append(fit_classifier(sub_spec, d.x[train], d.delta[train]))
        ns.xi[arm] = xi_models

    if known is not None:
        known.vector(arms)  # validate coverage upfront
        ns.pi = known
    else:
        pi_models = []
        labels = d.a.astype(int)
        for f in range(plan.K):
            train = plan.folds != f
            sub_spec = spec.with_seed(_derived_seed(spec.seed, _ROLE_PI, f))
            pi_models.append(fit_classifier(sub_spec, d.x[train], labels[train]))
        ns.pi = pi_models
    return ns
