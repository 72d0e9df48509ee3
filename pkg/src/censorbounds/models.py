"""Supervised-learning layer: a uniform learner contract over concrete estimators.

Regressors and classifiers here are deliberately boring — random forests with
fixed defaults, k-nearest-neighbours, ridge/logistic, and a constant fallback —
wrapped so that everything downstream sees the same fit/predict surface, is
deterministic given a seed, and validates input dimensions.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass, replace

import numpy as np
from sklearn.ensemble import RandomForestClassifier, RandomForestRegressor
from sklearn.linear_model import LogisticRegression, Ridge
from sklearn.neighbors import KNeighborsClassifier, KNeighborsRegressor

from .errors import DimensionMismatch, EmptyTrainingSet, NonFiniteInput

KINDS = ("random_forest", "knn", "ridge", "constant")


@dataclass(frozen=True)
class LearnerSpec:
    """Configuration for one learner.

    Forest defaults follow common practice for this estimator class:
    100 trees, unbounded depth, min leaf size 2, ceil(p/3) candidate features
    per split for regression and ceil(sqrt(p)) for classification.
    ``bootstrap`` exists as a test hook; disabling it makes forest predictions
    invariant to training-row permutation.
    """

    kind: str = "random_forest"
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 2
    features_per_split: int | None = None
    k: int = 5
    ridge_penalty: float = 1.0
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unknown learner kind %r (choose from %s)" % (self.kind, KINDS))
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.ridge_penalty < 0:
            raise ValueError("ridge_penalty must be >= 0")

    def with_seed(self, seed: int) -> "LearnerSpec":
        return replace(self, seed=int(seed))


def _check_training(features, targets):
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets)
    if features.ndim != 2:
        raise DimensionMismatch("features must be 2-d, got shape %s" % (features.shape,))
    if features.shape[0] == 0:
        raise EmptyTrainingSet("no training rows")
    if targets.shape[0] != features.shape[0]:
        raise DimensionMismatch(
            "features have %d rows, targets %d" % (features.shape[0], targets.shape[0])
        )
    if not np.all(np.isfinite(features)) or not np.all(np.isfinite(targets.astype(float))):
        raise NonFiniteInput("training data contains non-finite values")
    return features, targets


def _forest_features(spec: LearnerSpec, p: int, classification: bool) -> int:
    if spec.features_per_split is not None:
        return max(1, min(p, spec.features_per_split))
    if classification:
        return max(1, int(np.ceil(np.sqrt(p))))
    return max(1, int(np.ceil(p / 3)))


class FittedRegressor:
    """Fitted regression model; immutable and reentrant for prediction."""

    def __init__(self, spec: LearnerSpec, p: int, estimator=None, constant=None):
        self.spec = spec
        self.p = p
        self._est = estimator
        self._const = constant

    def predict(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(1, -1)
        if features.shape[1] != self.p:
            raise DimensionMismatch(
                "model expects %d features, got %d" % (self.p, features.shape[1])
            )
        if self._const is not None:
            return np.full(features.shape[0], self._const, dtype=float)
        return np.asarray(self._est.predict(features), dtype=float)


class FittedClassifier:
    """Fitted classifier; exposes per-class probabilities over its class inventory."""

    def __init__(self, spec: LearnerSpec, p: int, classes, estimator=None, priors=None):
        self.spec = spec
        self.p = p
        self.classes = tuple(classes)
        self._est = estimator
        self._priors = priors  # constant learner: class frequencies

    def _check(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(1, -1)
        if features.shape[1] != self.p:
            raise DimensionMismatch(
                "model expects %d features, got %d" % (self.p, features.shape[1])
            )
        return features

    def predict_proba(self, features) -> np.ndarray:
        """Probability matrix with one column per entry of ``self.classes``."""
        features = self._check(features)
        if self._priors is not None:
            return np.tile(self._priors, (features.shape[0], 1))
        proba = np.asarray(self._est.predict_proba(features), dtype=float)
        # guard against tiny negative / drifted rows from float accumulation
        proba = np.clip(proba, 0.0, 1.0)
        proba /= proba.sum(axis=1, keepdims=True)
        return proba

    def prob_of(self, cls, features) -> np.ndarray:
        """P(label == cls | x); zero when cls is outside the class inventory."""
        features = self._check(features)
        if cls not in self.classes:
            return np.zeros(features.shape[0])
        j = self.classes.index(cls)
        return self.predict_proba(features)[:, j]


def _seed_int(seed) -> int:
    return int(np.random.SeedSequence(int(seed)).generate_state(1)[0])


def fit_regressor(spec: LearnerSpec, features, targets) -> FittedRegressor:
    """Fit one regressor according to ``spec``; deterministic given spec.seed."""
    features, targets = _check_training(features, np.asarray(targets, dtype=float))
    n, p = features.shape
    if spec.kind == "constant":
        return FittedRegressor(spec, p, constant=float(np.mean(targets)))
    if spec.kind == "random_forest":
        if n < spec.min_samples_leaf:
            raise EmptyTrainingSet(
                "forest needs at least min_samples_leaf=%d rows, got %d"
                % (spec.min_samples_leaf, n)
            )
        est = RandomForestRegressor(
            n_estimators=spec.n_trees,
            max_depth=spec.max_depth,
            min_samples_leaf=spec.min_samples_leaf,
            max_features=_forest_features(spec, p, classification=False),
            bootstrap=spec.bootstrap,
            random_state=_seed_int(spec.seed),
            n_jobs=1,
        )
    elif spec.kind == "knn":
        est = KNeighborsRegressor(n_neighbors=min(spec.k, n))
    elif spec.kind == "ridge":
        est = Ridge(alpha=spec.ridge_penalty, random_state=_seed_int(spec.seed))
    est.fit(features, targets)
    return FittedRegressor(spec, p, estimator=est)


def fit_classifier(spec: LearnerSpec, features, labels) -> FittedClassifier:
    """Fit one classifier; forest leaves store class frequencies."""
    labels = np.asarray(labels).astype(int)
    features, labels = _check_training(features, labels)
    n, p = features.shape
    classes = tuple(int(c) for c in np.unique(labels))
    if spec.kind == "constant" or len(classes) == 1:
        priors = np.array([np.mean(labels == c) for c in classes])
        return FittedClassifier(spec, p, classes, priors=priors)
    if spec.kind == "random_forest":
        est = RandomForestClassifier(
            n_estimators=spec.n_trees,
            max_depth=spec.max_depth,
            min_samples_leaf=spec.min_samples_leaf,
            max_features=_forest_features(spec, p, classification=True),
            bootstrap=spec.bootstrap,
            random_state=_seed_int(spec.seed),
            n_jobs=1,
        )
    elif spec.kind == "knn":
        est = KNeighborsClassifier(n_neighbors=min(spec.k, n))
    elif spec.kind == "ridge":
        # classification analogue: L2-penalized logistic regression
        C = 1.0 / spec.ridge_penalty if spec.ridge_penalty > 0 else 1e12
        est = LogisticRegression(C=C, random_state=_seed_int(spec.seed), max_iter=1000)
    est.fit(features, labels)
    return FittedClassifier(spec, p, classes, estimator=est)


# --- serialization: small self-describing binary container ---

_MAGIC = b"CBND"
_VERSION = 1


def save_model(obj, path) -> None:
    """Serialize a fitted model (or any package object) with a version header."""
    payload = pickle.dumps(obj, protocol=4)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_VERSION.to_bytes(2, "big"))
        fh.write(payload)


def load_model(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError("%s is not a model container (bad magic %r)" % (path, magic))
        version = int.from_bytes(fh.read(2), "big")
        if version != _VERSION:
            raise ValueError("unsupported model container version %d" % version)
        return pickle.load(fh)
