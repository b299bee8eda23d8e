"""Datasets and covariance summaries."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Row-major samples with named columns."""

    columns: tuple[str, ...]
    values: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} columns, got shape {values.shape}")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate column names")
        if not np.all(np.isfinite(values)):
            raise DegenerateDataError("dataset contains non-finite values")
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def select(self, names: Iterable[str]) -> "Dataset":
        names = list(names)
        idx = [self.columns.index(v) for v in names]
        return Dataset(tuple(names), self.values[:, idx], self.seed)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.values:
            buf.write(",".join("%.17g" % x for x in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty CSV")
        header, body = rows[0], [r for r in rows[1:] if r]
        values = np.array([[float(x) for x in r] for r in body], dtype=float)
        return cls(tuple(header), values.reshape(len(body), len(header)))


@dataclass(frozen=True)
class CovMatrix:
    """Named symmetric matrix; `n` is None for population matrices.

    `se` optionally holds entrywise Monte-Carlo standard errors.
    """

    names: tuple[str, ...]
    matrix: np.ndarray
    n: Optional[int] = None
    se: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (len(self.names), len(self.names)):
            raise ValueError("matrix shape does not match names")
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        if not np.allclose(m, m.T, rtol=0, atol=1e-12 * scale):
            raise ValueError("covariance matrix is not symmetric")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "matrix", m)

    def index(self, names: Sequence[str]) -> list[int]:
        try:
            return [self.names.index(v) for v in names]
        except ValueError as exc:
            raise KeyError(str(exc)) from None

    def sub(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        return self.matrix[np.ix_(self.index(rows), self.index(cols))]

    def sub_se(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        if self.se is None:
            raise ValueError("no standard errors attached")
        return self.se[np.ix_(self.index(rows), self.index(cols))]

    def restrict(self, names: Sequence[str]) -> "CovMatrix":
        idx = self.index(names)
        se = None if self.se is None else self.se[np.ix_(idx, idx)]
        return CovMatrix(tuple(names), self.matrix[np.ix_(idx, idx)], self.n, se)

    def to_correlation(self) -> "CovMatrix":
        d = np.sqrt(np.diag(self.matrix))
        if np.any(d <= 0):
            raise DegenerateDataError("zero variance on the diagonal")
        corr = self.matrix / np.outer(d, d)
        np.fill_diagonal(corr, 1.0)
        return CovMatrix(self.names, corr, self.n)
