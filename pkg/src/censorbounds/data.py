"""Dataset model, CSV ingestion, and validation for censored survival data.

Internal convention: ``delta = 1`` means the observation is censored.  CSV files
may encode the indicator either way; the schema declares which convention the
file uses and the loader normalizes to the internal one.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    IndicatorOutOfRange,
    MissingColumn,
    NonNumericCell,
    NonPositiveTime,
)


class Subject(NamedTuple):
    """One observation: covariates, treatment code, observed time, censoring flag."""

    x: np.ndarray
    a: float
    t_tilde: float
    delta: int


@dataclass(frozen=True)
class ColumnSchema:
    """Maps CSV column names onto subject roles.

    ``indicator_convention`` is ``"censored"`` (column value 1 = censored, used
    directly) or ``"event"`` (column value 1 = event observed, complemented on
    load).  Covariates default to every column not mapped to another role.
    """

    treatment: str = "a"
    time: str = "t_obs"
    indicator: str = "censored"
    indicator_convention: str = "censored"
    covariates: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.indicator_convention not in ("censored", "event"):
            raise ValueError(
                "indicator_convention must be 'censored' or 'event', got %r"
                % (self.indicator_convention,)
            )


@dataclass(frozen=True)
class Dataset:
    """Immutable sample of right-censored survival observations.

    Attributes
    ----------
    x : ndarray, shape (n, p)
        Covariate matrix.
    a : ndarray, shape (n,)
        Treatment codes (integer arm ids in discrete mode, doses in continuous mode).
    t_tilde : ndarray, shape (n,)
        Observed survival times (months), positive, bounded by ``t_max``.
    delta : ndarray, shape (n,)
        Censoring indicators; 1 = censored.
    t_max : float
        Known upper bound of the survival-time support.
    covariate_names : tuple of str
    treatment_mode : str
        ``"discrete"`` or ``"continuous"``.
    """

    x: np.ndarray
    a: np.ndarray
    t_tilde: np.ndarray
    delta: np.ndarray
    t_max: float
    covariate_names: tuple[str, ...] = ()
    treatment_mode: str = "discrete"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise DimensionMismatch("covariate matrix must be 2-d, got shape %s" % (x.shape,))
        n, p = x.shape
        a = np.asarray(self.a, dtype=float).reshape(-1)
        t = np.asarray(self.t_tilde, dtype=float).reshape(-1)
        d = np.asarray(self.delta, dtype=int).reshape(-1)
        if n == 0:
            raise EmptyDataset("dataset has no subjects")
        if not (len(a) == len(t) == len(d) == n):
            raise DimensionMismatch(
                "inconsistent lengths: x %d, a %d, t_tilde %d, delta %d"
                % (n, len(a), len(t), len(d))
            )
        if not np.all(np.isfinite(x)):
            bad = np.argwhere(~np.isfinite(x))[0]
            raise NonNumericCell("non-finite covariate at row %d, column %d" % (bad[0], bad[1]))
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(t)):
            raise NonNumericCell("non-finite treatment or time value")
        if np.any(t <= 0):
            row = int(np.argmax(t <= 0))
            raise NonPositiveTime("t_tilde must be > 0; row %d has %r" % (row, t[row]))
        if not np.all(np.isin(d, (0, 1))):
            row = int(np.argmax(~np.isin(d, (0, 1))))
            raise IndicatorOutOfRange("delta must be 0 or 1; row %d has %r" % (row, d[row]))
        if not (self.t_max > 0) or not math.isfinite(self.t_max):
            raise NonPositiveTime("t_max must be a positive finite number, got %r" % (self.t_max,))
        if t.max() > self.t_max * (1 + 1e-12):
            raise NonPositiveTime(
                "observed time %g exceeds t_max=%g" % (t.max(), self.t_max)
            )
        names = tuple(self.covariate_names) or tuple("x%d" % (j + 1) for j in range(p))
        if len(names) != p:
            raise DimensionMismatch(
                "covariate_names has %d entries for p=%d" % (len(names), p)
            )
        if self.treatment_mode not in ("discrete", "continuous"):
            raise ValueError("treatment_mode must be 'discrete' or 'continuous'")
        for arr in (x, a, t, d):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "t_tilde", t)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "covariate_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def arms(self) -> tuple:
        """Sorted distinct treatment codes (discrete mode)."""
        vals = np.unique(self.a)
        return tuple(int(v) if float(v).is_integer() else float(v) for v in vals)

    def subject(self, i: int) -> Subject:
        return Subject(self.x[i], float(self.a[i]), float(self.t_tilde[i]), int(self.delta[i]))

    def __iter__(self):
        return (self.subject(i) for i in range(self.n))


@dataclass
class OverlapReport:
    arm_counts: dict = field(default_factory=dict)  # arm -> (n_uncensored, n_censored)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings


def load_csv(path, schema: ColumnSchema | None = None, t_max: float | None = None) -> Dataset:
    """Read a survival dataset from a CSV file.

    Parameters
    ----------
    path : str or Path
        UTF-8 CSV with a header row, comma delimiter, ``.`` decimal point.
    schema : ColumnSchema, optional
        Column-role mapping; defaults map ``a``/``t_obs``/``censored``.
    t_max : float, optional
        Known support bound.  When omitted it defaults to the maximum observed
        time and a warning is emitted, since downstream conservative bounds
        depend on it.

    Returns
    -------
    Dataset
    """
    schema = schema or ColumnSchema()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset("%s is empty" % (path,))
        header = [h.strip() for h in header]
        rows = [row for row in reader if row]

    for col in (schema.treatment, schema.time, schema.indicator):
        if col not in header:
            raise MissingColumn("column %r not found in %s (header: %s)" % (col, path, header))
    if schema.covariates is not None:
        for col in schema.covariates:
            if col not in header:
                raise MissingColumn("covariate column %r not found in %s" % (col, path))
        cov_names = list(schema.covariates)
    else:
        reserved = {schema.treatment, schema.time, schema.indicator}
        cov_names = [h for h in header if h not in reserved]

    if not rows:
        raise EmptyDataset("%s contains a header but no data rows" % (path,))

    idx = {name: header.index(name) for name in header}

    def cell(row_i, row, col):
        raw = row[idx[col]].strip()
        try:
            return float(raw)
        except ValueError:
            raise NonNumericCell(
                "non-numeric value %r at row %d, column %r" % (raw, row_i, col)
            )

    n = len(rows)
    x = np.empty((n, len(cov_names)))
    a = np.empty(n)
    t = np.empty(n)
    d = np.empty(n, dtype=int)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise NonNumericCell(
                "row %d has %d cells, expected %d" % (i, len(row), len(header))
            )
        for j, cname in enumerate(cov_names):
            x[i, j] = cell(i, row, cname)
        a[i] = cell(i, row, schema.treatment)
        ti = cell(i, row, schema.time)
        if ti <= 0:
            raise NonPositiveTime("t must be > 0; row %d has %g" % (i, ti))
        t[i] = ti
        ind = cell(i, row, schema.indicator)
        if ind not in (0.0, 1.0):
            raise IndicatorOutOfRange(
                "indicator must be 0 or 1; row %d has %r" % (i, ind)
            )
        d[i] = int(ind) if schema.indicator_convention == "censored" else 1 - int(ind)

    if t_max is None:
        t_max = float(t.max())
        warnings.warn(
            "t_max not supplied; defaulting to max observed time %g" % t_max,
            stacklevel=2,
        )
    return Dataset(x=x, a=a, t_tilde=t, delta=d, t_max=float(t_max),
                   covariate_names=tuple(cov_names))


def save_csv(d: Dataset, path, schema: ColumnSchema | None = None) -> None:
    """Write a Dataset back to CSV (inverse of load_csv up to float round-trip)."""
    schema = schema or ColumnSchema()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.covariate_names) + [schema.treatment, schema.time, schema.indicator])
        for i in range(d.n):
            ind = d.delta[i] if schema.indicator_convention == "censored" else 1 - d.delta[i]
            writer.writerow(
                [repr(float(v)) for v in d.x[i]]
                + [repr(float(d.a[i])), repr(float(d.t_tilde[i])), str(int(ind))]
            )


def validate_overlap(d: Dataset, epsilon: float = 0.01) -> OverlapReport:
    """Check censoring and treatment overlap; advisory only, never raises.

    Flags arms with zero uncensored subjects (censoring probability near 1
    breaks identification of the uncensored stratum) and arms whose empirical
    frequency falls below ``epsilon``.
    """
    report = OverlapReport()
    n = d.n
    for arm in d.arms:
        mask = d.a == arm
        n_arm = int(mask.sum())
        n_cens = int((d.delta[mask] == 1).sum())
        n_unc = n_arm - n_cens
        report.arm_counts[arm] = (n_unc, n_cens)
        if n_unc == 0:
            report.warnings.append(
                "arm %s has no uncensored subjects (censoring overlap violated)" % (arm,)
            )
        if n_arm / n < epsilon:
            report.warnings.append(
                "arm %s frequency %.4f below epsilon %.4f (treatment overlap risk)"
                % (arm, n_arm / n, epsilon)
            )
    return report
