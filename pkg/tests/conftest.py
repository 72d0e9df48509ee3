"""Shared fixtures: tiny hand-checkable datasets and fitted nuisance sets."""

import numpy as np
import pytest

from censorbounds.data import Dataset
from censorbounds.models import LearnerSpec
from censorbounds.nuisance import NuisanceSet, KnownPropensity, assign_folds, fit_nuisances


def make_dataset(n=40, seed=0, t_max=30.0, p=1, xi=0.3):
    """Small two-arm dataset with uniform covariates and exponential-ish times."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 10.0, size=(n, p))
    a = rng.integers(0, 2, size=n).astype(float)
    t = 1.0 + x[:, 0] + 2.0 * a + rng.exponential(1.0, size=n)
    delta = (rng.uniform(size=n) < xi).astype(int)
    t_tilde = np.where(delta == 1, 0.8 * t, t)
    t_tilde = np.minimum(t_tilde, t_max)
    names = tuple("x%d" % (j + 1) for j in range(p))
    return Dataset(x=x, a=a, t_tilde=t_tilde, delta=delta, t_max=t_max,
                   covariate_names=names)


@pytest.fixture
def small_dataset():
    return make_dataset()


@pytest.fixture
def fitted_nuisances(small_dataset):
    plan = assign_folds(small_dataset, K=3, seed=1)
    spec = LearnerSpec(kind="random_forest", n_trees=20, seed=2)
    return fit_nuisances(small_dataset, plan, spec, propensity={0.0: 0.5, 1.0: 0.5})


def constant_nuisance_set(d, nu0, nu1, xi, pi=0.5, t_max=None):
    """NuisanceSet stub whose every evaluation returns fixed values."""
    t_max = d.t_max if t_max is None else t_max
    arms = tuple(sorted(set(d.a.tolist())))

    class _Const:
        def __init__(self):
            self.K = 1
            self.arms = arms
            self.folds = np.zeros(d.n, dtype=int)
            self.t_max = t_max
            self.epsilon_clip = 0.01
            self.epsilon_clip_xi = 0.01

        def evaluate(self, X, arm, folds=None):
            m = np.atleast_2d(X).shape[0]
            return (np.full(m, float(nu0)), np.full(m, float(nu1)),
                    np.full(m, float(xi)), np.full(m, float(pi)))

        def has_nu1(self, arm):
            return True

    return _Const()


# --- acceptance-suite reporting ------------------------------------------

_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion_log(request):
    """Record one PASS/FAIL line per release criterion for the run summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def log(num, ok, detail):
        line = "criterion %02d %s: %s" % (num, "PASS" if ok else "FAIL", detail)
        print(line)
        store.append(line)
        return line

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
