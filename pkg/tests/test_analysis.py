"""Tests for benchmarking, subgroup discovery, and exceedance curves."""

import numpy as np
import pytest

from censorbounds.analysis import (
    bootstrap_subgroup,
    bound_survival_curves,
    evaluate_learners,
    evaluation_grid,
    fraction_lb_positive,
    fraction_table,
    pair_table,
    rmse_vs_oracle,
    subgroup_tree,
    width_sweep,
)
from censorbounds.data import Dataset
from censorbounds.errors import (
    EmptySelection,
    EmptySubgroup,
    GridEmpty,
    NonFiniteInput,
    TooFewSubjects,
)
from censorbounds.models import LearnerSpec
from censorbounds.simulation import Scenario, oracle_bound_model

FAST_NUIS = LearnerSpec(n_trees=15)


def _toy_dataset(x, names=None):
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    return Dataset(x=x, a=np.zeros(n), t_tilde=np.ones(n),
                   delta=np.zeros(n, dtype=int), t_max=10.0,
                   covariate_names=names or ())


# ---------------------------------------------------------------------------
# oracle RMSE
# ---------------------------------------------------------------------------


def test_evaluation_grid_spans_support():
    g = evaluation_grid()
    assert g.size == 200 and g[0] == 10.0 and g[-1] == 100.0
    assert evaluation_grid(17).size == 17


def test_rmse_of_oracle_model_is_exactly_zero():
    s = Scenario(family="sin")
    model = oracle_bound_model(s, case="conservative", arm_pair=(1, 0))
    r = rmse_vs_oracle(model, s)
    assert r.lower == 0.0 and r.upper == 0.0 and r.joint == 0.0


def test_rmse_capo_oracle_zero_and_domain_case():
    s = Scenario(family="exponential")
    model = oracle_bound_model(s, case="domain", gamma=3.0, arms=(0, 1))
    r = rmse_vs_oracle(model, s, arm=1)
    assert r.joint == 0.0


def test_rmse_sees_a_known_offset():
    s = Scenario(family="sin")
    base = oracle_bound_model(s, case="conservative", arm_pair=(1, 0))

    class Shifted:
        case = base.case
        gamma = base.gamma
        t_max = base.t_max
        arm_pair = base.arm_pair

        def predict(self, X):
            lo, up, mid = base.predict(X)
            return lo - 1.0, up + 2.0, mid

    r = rmse_vs_oracle(Shifted(), s)
    assert r.lower == pytest.approx(1.0)
    assert r.upper == pytest.approx(2.0)
    assert r.joint == pytest.approx(np.sqrt((1.0 + 4.0) / 2.0))


def test_rmse_rejects_empty_grid():
    s = Scenario()
    model = oracle_bound_model(s, arm_pair=(1, 0))
    with pytest.raises(GridEmpty):
        rmse_vs_oracle(model, s, grid=np.array([]))


# ---------------------------------------------------------------------------
# subgroup tree
# ---------------------------------------------------------------------------


def test_tree_finds_the_obvious_threshold():
    d = _toy_dataset([[1.0], [2.0], [3.0], [4.0]])
    tree = subgroup_tree([1.0, 1.0, -1.0, -1.0], d, max_depth=2, min_leaf=2)
    root = tree.root
    assert root.split == {"covariate": 0, "name": "x1", "threshold": 2.5}
    left, right = root.children
    assert left.positive_fraction == 1.0 and left.n == 2
    assert right.positive_fraction == 0.0 and right.n == 2
    assert tree.best_leaf() is left and left.indices == (0, 1)


def _brute_force_best_gain(x, pos, min_leaf):
    """Reference: best larger-child positive fraction over all legal splits."""
    order = np.argsort(x)
    sx, sp = x[order], pos[order]
    best = None
    n = x.size
    for i in range(1, n):
        if sx[i] == sx[i - 1] or i < min_leaf or n - i < min_leaf:
            continue
        g = max(sp[:i].mean(), sp[i:].mean())
        if best is None or g > best:
            best = g
    return best


@pytest.mark.parametrize("pattern", range(16))
def test_tree_depth_one_is_optimal_on_every_sign_pattern(pattern):
    signs = np.array([1.0 if pattern & (1 << k) else -1.0 for k in range(4)])
    d = _toy_dataset([[1.0], [2.0], [3.0], [4.0]])
    tree = subgroup_tree(signs, d, max_depth=1, min_leaf=1)
    root = tree.root
    best = _brute_force_best_gain(d.x[:, 0], signs > 0, 1)
    if root.split is None:
        # splitting must not beat staying put
        assert best is None or best <= root.positive_fraction
    else:
        thr = root.split["threshold"]
        left = signs[d.x[:, 0] <= thr] > 0
        right = signs[d.x[:, 0] > thr] > 0
        assert max(left.mean(), right.mean()) == best > root.positive_fraction


def test_tree_tie_prefers_larger_winning_child():
    d = _toy_dataset([[float(v)] for v in range(1, 7)])
    lb = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0]
    tree = subgroup_tree(lb, d, max_depth=1, min_leaf=1)
    # gains of 1.0 occur at 1.5, 2.5 and 3.5; the last has the biggest child
    assert tree.root.split["threshold"] == 3.5


def test_tree_tie_prefers_smaller_threshold():
    d = _toy_dataset([[1.0], [2.0], [3.0], [4.0]])
    tree = subgroup_tree([1.0, -1.0, -1.0, 1.0], d, max_depth=1, min_leaf=1)
    # single-positive children at both ends tie at fraction 1, size 1
    assert tree.root.split["threshold"] == 1.5


def test_tree_tie_prefers_lower_covariate_index():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    d = _toy_dataset(x, names=("left", "right"))
    tree = subgroup_tree([1.0, 1.0, -1.0, -1.0], d, max_depth=1, min_leaf=1)
    assert tree.root.split["covariate"] == 0
    assert tree.root.split["name"] == "left"


def test_tree_does_not_split_saturated_nodes():
    d = _toy_dataset([[1.0], [2.0], [3.0], [4.0]])
    assert subgroup_tree([1.0, 2.0, 3.0, 4.0], d).root.split is None
    assert subgroup_tree([-1.0, -2.0, -3.0, 0.0], d).root.split is None


def test_tree_respects_min_leaf_and_size_checks():
    d = _toy_dataset([[1.0], [2.0], [3.0]])
    assert subgroup_tree([1.0, -1.0, 1.0], d, min_leaf=2).root.split is None
    with pytest.raises(TooFewSubjects):
        subgroup_tree([1.0], _toy_dataset([[1.0]]), min_leaf=2)
    with pytest.raises(NonFiniteInput):
        subgroup_tree([1.0, np.nan, 1.0], d)
    with pytest.raises(ValueError):
        subgroup_tree([1.0, 2.0], d)


def test_tree_invariant_to_monotone_rescaling():
    rng = np.random.default_rng(3)
    x = rng.uniform(0.0, 5.0, (40, 2))
    lb = np.where(x[:, 0] > 2.5, 1.0, -1.0) + rng.normal(0, 0.2, 40)
    d1 = _toy_dataset(x)
    d2 = _toy_dataset(np.column_stack([np.exp(x[:, 0]), x[:, 1] ** 3]))
    t1 = subgroup_tree(lb, d1, max_depth=2, min_leaf=3)
    t2 = subgroup_tree(lb, d2, max_depth=2, min_leaf=3)
    leaves1 = sorted(leaf.indices for leaf in t1.leaves())
    leaves2 = sorted(leaf.indices for leaf in t2.leaves())
    assert leaves1 == leaves2
    assert t1.root.split["covariate"] == t2.root.split["covariate"]


def test_tree_serialization_round_trips_structure():
    d = _toy_dataset([[1.0], [2.0], [3.0], [4.0]])
    tree = subgroup_tree([1.0, 1.0, -1.0, -1.0], d, min_leaf=2)
    blob = tree.to_dict()
    assert blob["max_depth"] == 2 and blob["min_leaf"] == 2
    assert blob["root"]["split"]["threshold"] == 2.5
    assert [c["n"] for c in blob["root"]["children"]] == [2, 2]


# ---------------------------------------------------------------------------
# share tables
# ---------------------------------------------------------------------------


def test_fraction_positive_is_strict():
    assert fraction_lb_positive([1.0, -1.0, 0.0, 2.0]) == 50.0
    assert fraction_lb_positive([0.0, 0.0]) == 0.0
    assert fraction_lb_positive([1.0, -1.0, 0.0, 2.0],
                                mask=[True, True, False, False]) == 50.0
    with pytest.raises(EmptySelection):
        fraction_lb_positive([1.0, 2.0], mask=[False, False])


def test_fraction_table_binary_and_median_levels():
    x = np.array([[0.0, 1.0], [0.0, 2.0], [1.0, 3.0], [1.0, 4.0]])
    d = _toy_dataset(x, names=("flag", "score"))
    rows = fraction_table(d, [1.0, -1.0, 1.0, 1.0])
    by = {(r["covariate"], r["level"]): r for r in rows}
    assert by[("flag", "=0")]["percent_positive"] == 50.0
    assert by[("flag", "=1")]["percent_positive"] == 100.0
    assert by[("score", "<=2.5")]["n"] == 2
    assert by[("score", ">2.5")]["percent_positive"] == 100.0


def test_fraction_table_blank_for_empty_level():
    d = _toy_dataset([[1.0], [1.0]], names=("always",))
    rows = fraction_table(d, [1.0, -1.0])
    by = {r["level"]: r for r in rows}
    assert by["=0"]["n"] == 0 and by["=0"]["percent_positive"] is None
    assert by["=1"]["percent_positive"] == 50.0


def test_pair_table_joint_ones():
    x = np.array([
        [1.0, 1.0, 0.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
    ])
    d = _toy_dataset(x, names=("a", "b", "c"))
    rows = pair_table(d, [1.0, -1.0, 1.0, 1.0])
    by = {(r["covariate_a"], r["covariate_b"]): r for r in rows}
    assert len(rows) == 3
    assert by[("a", "b")]["n"] == 2
    assert by[("a", "b")]["percent_positive"] == 50.0
    # nobody has both a=1 and c=1: blank cell, row still present
    assert by[("a", "c")]["n"] == 0 and by[("a", "c")]["percent_positive"] is None


# ---------------------------------------------------------------------------
# bootstrap
# ---------------------------------------------------------------------------


def test_bootstrap_constant_group_has_zero_spread():
    d = _toy_dataset(np.arange(20.0).reshape(-1, 1))
    mean, sd = bootstrap_subgroup(np.full(20, 3.5), d, np.ones(20, dtype=bool),
                                  B=50, seed=0)
    assert mean == 3.5 and sd == 0.0


def test_bootstrap_single_replicate_warns():
    d = _toy_dataset(np.arange(5.0).reshape(-1, 1))
    with pytest.warns(UserWarning, match="B=1"):
        _, sd = bootstrap_subgroup(np.arange(5.0), d, np.ones(5, dtype=bool), B=1)
    assert sd == 0.0


def test_bootstrap_is_seeded():
    d = _toy_dataset(np.arange(30.0).reshape(-1, 1))
    lb = np.arange(30.0)
    mask = lb >= 10
    r1 = bootstrap_subgroup(lb, d, mask, B=200, seed=4)
    r2 = bootstrap_subgroup(lb, d, mask, B=200, seed=4)
    r3 = bootstrap_subgroup(lb, d, mask, B=200, seed=5)
    assert r1 == r2 and r1 != r3


def test_bootstrap_spread_matches_sampling_theory():
    rng = np.random.default_rng(7)
    lb = rng.normal(2.0, 1.0, 100)
    d = _toy_dataset(np.arange(100.0).reshape(-1, 1))
    mean, sd = bootstrap_subgroup(lb, d, np.ones(100, dtype=bool), B=2000, seed=1)
    assert mean == pytest.approx(lb.mean(), abs=0.05)
    # sd of a resampled mean of m values is about sample_sd / sqrt(m)
    assert sd == pytest.approx(lb.std(ddof=1) / 10.0, rel=0.25)


def test_bootstrap_refit_mode_runs_the_pipeline():
    d = _toy_dataset(np.arange(12.0).reshape(-1, 1))
    lb = np.arange(12.0)
    mask = lb > 5
    mean, sd = bootstrap_subgroup(lb, d, mask, B=20, seed=2, refit=True,
                                  pipeline=lambda db: np.full(db.n, 1.5))
    assert mean == 1.5 and sd == 0.0
    with pytest.raises(ValueError, match="pipeline"):
        bootstrap_subgroup(lb, d, mask, B=5, refit=True)


def test_bootstrap_input_checks():
    d = _toy_dataset(np.arange(8.0).reshape(-1, 1))
    with pytest.raises(EmptySubgroup):
        bootstrap_subgroup(np.ones(8), d, np.zeros(8, dtype=bool))
    with pytest.raises(ValueError):
        bootstrap_subgroup(np.ones(5), d, np.ones(8, dtype=bool))
    with pytest.raises(ValueError):
        bootstrap_subgroup(np.ones(8), d, np.ones(8, dtype=bool), B=0)


# ---------------------------------------------------------------------------
# exceedance curves
# ---------------------------------------------------------------------------


def test_curves_count_strict_exceedance():
    tab = bound_survival_curves([2.0, 5.0, 7.0], [2.0, 5.0, 7.0], [4.0])
    assert tab.lower[0] == tab.mid[0] == tab.upper[0] == pytest.approx(2.0 / 3.0)
    # a bound exactly at the grid time does not count as exceeding it
    tab = bound_survival_curves([4.0], [4.0], [4.0])
    assert tab.lower[0] == 0.0


def test_curves_are_ordered_and_monotone():
    rng = np.random.default_rng(11)
    lb = rng.uniform(0.0, 10.0, 200)
    ub = lb + rng.uniform(0.0, 5.0, 200)
    grid = np.linspace(0.0, 16.0, 40)
    tab = bound_survival_curves(lb, ub, grid)
    for curve in (tab.lower, tab.mid, tab.upper):
        assert np.all(np.diff(curve) <= 0)
        assert np.all((curve >= 0.0) & (curve <= 1.0))
    assert np.all(tab.lower <= tab.mid + 1e-12)
    assert np.all(tab.mid <= tab.upper + 1e-12)
    rows = tab.rows()
    assert len(rows) == 40 and rows[0]["t"] == 0.0


def test_curves_input_checks():
    with pytest.raises(GridEmpty):
        bound_survival_curves([1.0], [2.0], [])
    with pytest.raises(ValueError):
        bound_survival_curves([1.0], [2.0, 3.0], [0.0])
    with pytest.raises(ValueError):
        bound_survival_curves([1.0], [2.0], [1.0, 0.5])
    with pytest.raises(NonFiniteInput):
        bound_survival_curves([np.inf], [np.inf], [0.0])


# ---------------------------------------------------------------------------
# sweeps (small configurations; accuracy is covered by the acceptance tests)
# ---------------------------------------------------------------------------


def test_width_sweep_oracle_widths_grow_with_censoring():
    rows = width_sweep(case="conservative", xi_values=(0.2, 0.4), family="sin",
                       n=250, seeds=(1,), learner="plugin",
                       nuisance_spec=FAST_NUIS)
    widths = [r["oracle_width"] for r in rows]
    assert rows[0]["xi"] == 0.0 and widths[0] == 0.0
    assert rows[0]["estimated_width_mean"] is None
    assert np.all(np.diff(widths) > 0)
    for r in rows[1:]:
        assert r["estimated_width_mean"] > 0
        assert len(r["per_seed"]) == 1 and r["estimated_width_sd"] == 0.0


def test_evaluate_learners_report_shape():
    rep = evaluate_learners(families=("sin",), xi_values=(0.4,), n=250,
                            seeds=(1,), nuisance_spec=FAST_NUIS)
    assert rep["design"] == "rct" and rep["n"] == 250 and rep["seeds"] == [1]
    cell = rep["cells"]["sin"]["0.4"]
    for case in ("domain", "conservative"):
        for learner in ("survb", "plugin"):
            entry = cell[case][learner]
            assert len(entry["per_seed"]) == 1
            assert entry["rmse_joint_mean"] == entry["per_seed"][0]["rmse_joint"]
            assert entry["rmse_joint_sd"] == 0.0
            assert entry["rmse_joint_mean"] > 0
