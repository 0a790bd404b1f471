"""Least-squares analysis of order-of-addition response data.

Fits the constrained ordering model to observed (order, response) pairs by
ordinary least squares, reports the usual t-based inference per term, and
turns a fitted model into an order recommendation by scanning the feasible
set for the extreme fitted mean.

The bundled survey dataset (66 participants answering six questions in
randomized feasible orders, response = number of correct answers) ships
with the package; see :func:`load_survey`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

import numpy as np
from scipy.special import betainc

from .model import ModelSpec, model_matrix
from .orders import ConstraintSystem, FeasibleSet, Order


@dataclass(frozen=True)
class Observation:
    id: str
    order: Order
    response: float | None
    duration_seconds: float

    def __post_init__(self):
        if self.duration_seconds < 0:
            raise ValueError(f"negative duration for row {self.id}")


@dataclass(frozen=True)
class Dataset:
    rows: tuple[Observation, ...]

    def __post_init__(self):
        if self.rows:
            m = len(self.rows[0].order)
            if any(len(r.order) != m for r in self.rows):
                raise ValueError("orders of mixed lengths in one dataset")
        ids = [r.id for r in self.rows]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate row ids")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        if not self.rows:
            raise ValueError("empty dataset")
        return len(self.rows[0].order)


@dataclass(frozen=True)
class CleanResult:
    data: Dataset
    removed_slow: tuple[str, ...]
    removed_missing: tuple[str, ...]


def clean(
    raw: Dataset, max_duration_s: float = 7200.0, drop_missing: bool = False
) -> CleanResult:
    """Drop over-long sessions (and, optionally, missing responses).

    Rows whose duration strictly exceeds ``max_duration_s`` (default two
    hours) are treated as outliers and removed. The removal report lists
    the ids that went.
    """
    kept: list[Observation] = []
    slow: list[str] = []
    missing: list[str] = []
    for row in raw.rows:
        if row.duration_seconds > max_duration_s:
            slow.append(row.id)
        elif drop_missing and row.response is None:
            missing.append(row.id)
        else:
            kept.append(row)
    if not kept:
        raise ValueError("cleaning removed every row")
    return CleanResult(Dataset(tuple(kept)), tuple(slow), tuple(missing))


@dataclass(frozen=True)
class FitResult:
    """OLS estimates with t statistics and two-sided p-values per term."""

    spec: ModelSpec
    estimates: tuple[float, ...]
    std_errors: tuple[float, ...]
    t_values: tuple[float, ...]
    p_values: tuple[float, ...]
    sigma2: float
    residuals: tuple[float, ...]
    n_used: int

    @property
    def p(self) -> int:
        return self.spec.p

    @property
    def df(self) -> int:
        return self.n_used - self.spec.p

    def _index(self, term: tuple[int, int] | str) -> int:
        if term == "intercept":
            return 0
        i, j = term  # type: ignore[misc]
        return 1 + self.spec.terms.index((min(i, j), max(i, j)))

    def coefficient(self, term: tuple[int, int] | str) -> float:
        return self.estimates[self._index(term)]

    def p_value(self, term: tuple[int, int] | str) -> float:
        return self.p_values[self._index(term)]

    def table(self) -> str:
        header = f"{'term':>10} {'Estimate':>10} {'SE':>8} {'t':>8} {'p':>8}"
        lines = [header]
        for label, b, se, t, pv in zip(
            self.spec.labels, self.estimates, self.std_errors, self.t_values, self.p_values
        ):
            lines.append(f"{label:>10} {b:>10.3f} {se:>8.3f} {t:>8.3f} {pv:>8.3f}")
        return "\n".join(lines)


def student_t_sf2(t: float, df: int) -> float:
    """Two-sided tail probability P(|T_df| >= |t|).

    Uses the regularized incomplete beta identity
    P(|T| >= t) = I_{df/(df+t^2)}(df/2, 1/2); exactly 1 at t = 0.
    """
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def ols_fit(
    data: Dataset, spec: ModelSpec, system: ConstraintSystem | None = None
) -> FitResult:
    """Least-squares fit of the ordering model to the dataset.

    Rows with missing responses are skipped. Requires a full-column-rank
    model matrix over the used rows and more rows than parameters; rank
    failures name the first redundant term.
    """
    used = [r for r in data.rows if r.response is not None]
    n, p = len(used), spec.p
    if n <= p:
        raise ValueError(f"{n} usable rows cannot support {p} parameters")
    x = model_matrix((r.order for r in used), spec, system).astype(float)
    rank = np.linalg.matrix_rank(x)
    if rank < p:
        running = 0
        for j in range(p):
            if np.linalg.matrix_rank(x[:, : j + 1]) == running:
                raise ValueError(f"model term {spec.labels[j]} is confounded in this dataset")
            running += 1
    y = np.array([float(r.response) for r in used])
    xtx_inv = np.linalg.inv(x.T @ x)
    beta = xtx_inv @ (x.T @ y)
    resid = y - x @ beta
    df = n - p
    sigma2 = float(resid @ resid) / df
    se = np.sqrt(sigma2 * np.diag(xtx_inv))
    t = np.zeros(p)
    for k in range(p):
        if se[k] > 0:
            t[k] = beta[k] / se[k]
        elif beta[k] != 0:
            t[k] = math.copysign(math.inf, beta[k])  # exact fit, nonzero effect
    pv = np.array([student_t_sf2(float(tt), df) for tt in t])
    return FitResult(
        spec=spec,
        estimates=tuple(float(b) for b in beta),
        std_errors=tuple(float(s) for s in se),
        t_values=tuple(float(v) for v in t),
        p_values=tuple(float(v) for v in pv),
        sigma2=sigma2,
        residuals=tuple(float(r) for r in resid),
        n_used=n,
    )


def predict_best_order(
    fit: FitResult, feasible: FeasibleSet | Sequence[Order], direction: str = "max"
) -> Order:
    """The feasible order with the extreme fitted mean.

    Scans the feasible set in its canonical (lexicographic) order and keeps
    strict improvements only, so ties resolve to the lexicographically
    smallest order.
    """
    if direction not in ("max", "min"):
        raise ValueError("direction must be 'max' or 'min'")
    orders = feasible.orders if isinstance(feasible, FeasibleSet) else tuple(map(tuple, feasible))
    x = model_matrix(orders, fit.spec).astype(float)
    fitted = x @ np.array(fit.estimates)
    best = int(np.argmin(fitted)) if direction == "min" else int(np.argmax(fitted))
    return orders[best]


# ---------------------------------------------------------------------------
# dataset I/O


def dataset_from_rows(rows: Iterable[tuple[str, float | None, float, Sequence[int]]]) -> Dataset:
    return Dataset(
        tuple(Observation(str(i), tuple(order), score, float(dur)) for i, score, dur, order in rows)
    )


def parse_dataset(text: str) -> Dataset:
    """Parse the normalized CSV form: id,score,duration_seconds,pi1,...,pim.

    A literal ``NA`` marks a missing score.
    """
    reader = csv.reader(text.strip().splitlines())
    header = next(reader)
    if header[:3] != ["id", "score", "duration_seconds"] or not header[3:]:
        raise ValueError("dataset header must be id,score,duration_seconds,pi1,...,pim")
    m = len(header) - 3
    rows = []
    for rec in reader:
        if not rec:
            continue
        if len(rec) != 3 + m:
            raise ValueError(f"row {rec!r} does not have {3 + m} fields")
        score = None if rec[1].strip() == "NA" else float(rec[1])
        order = tuple(int(v) for v in rec[3:])
        rows.append(Observation(rec[0].strip(), order, score, float(rec[2])))
    return Dataset(tuple(rows))


def format_dataset(data: Dataset) -> str:
    m = data.m
    lines = ["id,score,duration_seconds," + ",".join(f"pi{k}" for k in range(1, m + 1))]
    for r in data.rows:
        score = "NA" if r.response is None else _trim(r.response)
        lines.append(f"{r.id},{score},{_trim(r.duration_seconds)}," + ",".join(map(str, r.order)))
    return "\n".join(lines) + "\n"


def _trim(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def load_survey() -> Dataset:
    """The bundled six-question survey dataset (66 participants)."""
    text = resources.files("oacod.data").joinpath("survey.csv").read_text()
    return parse_dataset(text)
