"""Cross-fitting plan, probability projection, and nuisance evaluation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from censorbounds.data import Dataset
from censorbounds.errors import EmptyCell, TooFewSubjects, UnknownArm
from censorbounds.models import LearnerSpec, fit_classifier, fit_regressor
from censorbounds.nuisance import (
    CrossFitPlan,
    KnownPropensity,
    NuisanceSet,
    _derived_seed,
    assign_folds,
    evaluate_nuisances,
    fit_nuisances,
    project_probabilities,
)

from conftest import make_dataset


# ---------------------------------------------------------------------------
# fold assignment
# ---------------------------------------------------------------------------

def test_fold_sizes_differ_by_at_most_one():
    d = make_dataset(n=101, seed=3)
    plan = assign_folds(d, K=3, seed=0)
    counts = np.bincount(plan.folds, minlength=3)
    assert counts.sum() == 101
    assert counts.max() - counts.min() <= 1


def test_folds_spread_each_stratum_evenly():
    d = make_dataset(n=120, seed=4)
    plan = assign_folds(d, K=3, seed=1)
    for arm in d.arms:
        for delta in (0, 1):
            cell = plan.folds[(d.a == arm) & (d.delta == delta)]
            if cell.size:
                per_fold = np.bincount(cell, minlength=3)
                assert per_fold.max() - per_fold.min() <= 1


def test_fold_assignment_is_deterministic_and_seed_sensitive():
    d = make_dataset(n=60, seed=5)
    a = assign_folds(d, K=3, seed=42).folds
    b = assign_folds(d, K=3, seed=42).folds
    c = assign_folds(d, K=3, seed=43).folds
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_too_few_subjects_rejected():
    d = make_dataset(n=2)
    with pytest.raises(TooFewSubjects):
        assign_folds(d, K=3)


def test_k_below_two_rejected():
    with pytest.raises(ValueError):
        assign_folds(make_dataset(n=10), K=1)


def test_single_subject_stratum_rejected():
    # one lone censored subject in arm 1 cannot appear in every training complement
    d = Dataset(x=np.arange(12, dtype=float).reshape(-1, 1),
                a=np.array([0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1.0]),
                t_tilde=np.ones(12),
                delta=np.array([0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 1]),
                t_max=5.0)
    with pytest.raises(EmptyCell):
        assign_folds(d, K=3, seed=0)


# ---------------------------------------------------------------------------
# probability projection
# ---------------------------------------------------------------------------

def test_projection_identity_when_no_bound_binds():
    out = project_probabilities(np.array([[0.3, 0.7]]), 0.01, 0.99)
    assert out[0] == pytest.approx([0.3, 0.7], abs=1e-9)


def test_projection_clips_and_renormalizes():
    out = project_probabilities(np.array([[0.999, 0.001]]), 0.01, 0.99)
    assert out[0] == pytest.approx([0.99, 0.01], abs=1e-9)


def test_projection_zero_row_becomes_uniform():
    out = project_probabilities(np.array([[0.0, 0.0, 0.0]]), 0.01, 0.99)
    assert out[0] == pytest.approx([1 / 3] * 3, abs=1e-9)


def test_projection_infeasible_box_rejected():
    with pytest.raises(ValueError):
        project_probabilities(np.array([[0.5, 0.5]]), 0.6, 0.9)


@given(st.lists(st.floats(min_value=0, max_value=1e6), min_size=2, max_size=5))
@settings(max_examples=60, deadline=None)
def test_projection_always_lands_on_the_clipped_simplex(row):
    out = project_probabilities(np.array([row]), 0.01, 0.99)
    assert out.sum() == pytest.approx(1.0, abs=1e-6)
    assert out.min() >= 0.01 - 1e-9 and out.max() <= 0.99 + 1e-9


def test_known_propensity_missing_arm_rejected():
    with pytest.raises(UnknownArm):
        KnownPropensity({0: 0.5}).vector((0, 1))


# ---------------------------------------------------------------------------
# evaluation clipping and fold routing
# ---------------------------------------------------------------------------

def _stub_set(nu0_consts, t_max=120.0, xi_labels=(0, 1), K=2):
    """NuisanceSet with constant per-fold regressors and a fixed classifier."""
    X1 = np.zeros((4, 1))
    nu_models = [fit_regressor(LearnerSpec(kind="constant"), X1, np.full(4, c))
                 for c in nu0_consts]
    clf = fit_classifier(LearnerSpec(kind="constant"), X1, np.array(xi_labels * 2))
    return NuisanceSet(
        K=K, arms=(0, 1), folds=np.zeros(4, dtype=int), t_max=t_max,
        nu={(0, 0): nu_models, (1, 0): nu_models,
            (0, 1): nu_models, (1, 1): nu_models},
        xi={0: [clf] * K, 1: [clf] * K},
        pi=KnownPropensity({0: 0.5, 1: 0.5}),
    )


def test_nu_predictions_clamped_to_t_max():
    ns = _stub_set([140.0, 140.0], t_max=120.0)
    nu0, nu1, _, _ = ns.evaluate(np.zeros((3, 1)), 0)
    assert np.all(nu0 == 120.0) and np.all(nu1 == 120.0)


def test_xi_raw_one_is_capped():
    ns = _stub_set([5.0, 5.0], xi_labels=(1, 1))   # classifier always says censored
    _, _, xi, _ = ns.evaluate(np.zeros((2, 1)), 0)
    assert np.all(xi == 0.99)


def test_out_of_fold_routing_uses_each_subjects_fold_model():
    ns = _stub_set([5.0, 9.0])
    X = np.zeros((3, 1))
    nu0, _, _, _ = ns.evaluate(X, 0, folds=np.array([0, 1, 0]))
    assert list(nu0) == [5.0, 9.0, 5.0]
    nu0_avg, _, _, _ = ns.evaluate(X, 0)   # new data: ensemble mean
    assert nu0_avg == pytest.approx([7.0, 7.0, 7.0])


def test_unknown_arm_rejected():
    ns = _stub_set([5.0, 5.0])
    with pytest.raises(UnknownArm):
        ns.evaluate(np.zeros((1, 1)), 2)


# ---------------------------------------------------------------------------
# full fitting path
# ---------------------------------------------------------------------------

def test_fitted_nuisances_respect_all_clip_invariants(fitted_nuisances, small_dataset):
    ns = fitted_nuisances
    X = small_dataset.x
    for arm in ns.arms:
        nu0, nu1, xi, pi = ns.evaluate(X, arm, folds=ns.folds)
        assert np.all((nu0 >= 0) & (nu0 <= ns.t_max))
        assert np.all((nu1 >= 0) & (nu1 <= ns.t_max))
        assert np.all((xi >= 0) & (xi <= 0.99))
        assert np.all((pi >= 0.01) & (pi <= 0.99))
    mat = ns.propensity_matrix(X)
    assert mat.sum(axis=1) == pytest.approx(np.ones(len(X)), abs=1e-9)


def test_known_propensity_is_used_verbatim(fitted_nuisances, small_dataset):
    _, _, _, pi = fitted_nuisances.evaluate(small_dataset.x, 1)
    assert np.all(pi == 0.5)


def test_estimated_propensity_tracks_a_strong_design():
    rng = np.random.default_rng(17)
    n = 600
    x = rng.uniform(0, 10, size=(n, 1))
    p1 = 1 / (1 + np.exp(-(x[:, 0] - 5)))
    a = (rng.uniform(size=n) < p1).astype(float)
    t = 1.0 + x[:, 0] + rng.exponential(1.0, n)
    delta = rng.integers(0, 2, n)
    d = Dataset(x=x, a=a, t_tilde=t, delta=delta, t_max=40.0)
    ns = fit_nuisances(d, assign_folds(d, 3, seed=1),
                       LearnerSpec(n_trees=30, seed=2), propensity="estimate")
    _, _, _, pi1 = ns.evaluate(x, 1, folds=ns.folds)
    # crude but directional: high-x subjects should look much more treated
    assert pi1[x[:, 0] > 8].mean() > pi1[x[:, 0] < 2].mean() + 0.3


def test_single_point_wrapper_matches_vector_path(fitted_nuisances, small_dataset):
    x0 = small_dataset.x[0]
    got = evaluate_nuisances(fitted_nuisances, x0, 1)
    vec = fitted_nuisances.evaluate(x0.reshape(1, -1), 1)
    assert got == tuple(float(v[0]) for v in vec)


def test_conservative_only_tolerates_a_censoring_free_arm():
    # arm 0 has censored subjects, arm 1 has none at all
    rng = np.random.default_rng(9)
    n = 60
    x = rng.uniform(0, 10, size=(n, 1))
    a = np.repeat([0.0, 1.0], n // 2)
    delta = np.where(a == 0, rng.integers(0, 2, n), 0)
    t = 1.0 + x[:, 0]
    d = Dataset(x=x, a=a, t_tilde=t, delta=delta, t_max=40.0)
    plan = assign_folds(d, 3, seed=2)
    ns = fit_nuisances(d, plan, LearnerSpec(n_trees=10, seed=3),
                       propensity={0: 0.5, 1: 0.5}, conservative_only=True)
    assert ns.has_nu1(0) and not ns.has_nu1(1)
    nu1 = ns.evaluate(d.x[:4], 1)[1]
    assert np.all(nu1 == 0.0)      # absent stratum contributes nothing
    xi1 = ns.evaluate(d.x[:4], 1)[2]
    assert np.all(xi1 == 0.0)      # and its censoring probability is zero
    with pytest.raises(EmptyCell):
        fit_nuisances(d, plan, LearnerSpec(n_trees=10, seed=3),
                      propensity={0: 0.5, 1: 0.5})


# ---------------------------------------------------------------------------
# derived seeds
# ---------------------------------------------------------------------------

def test_derived_seeds_are_stable_and_distinct():
    assert _derived_seed(7, 1) == _derived_seed(7, 1)
    seen = {_derived_seed(7, k) for k in range(20)}
    assert len(seen) == 20
    assert _derived_seed(7, 1) != _derived_seed(8, 1)
