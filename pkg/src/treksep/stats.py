"""Sample moments and tests of rank constraints.

All tests are two-sided normal approximations for a point null on a
determinant.  The tetrad variance is the classical Wishart form; larger
minors use the delta method with normal-theory covariances of sample
covariances, or a bootstrap variance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from .data import CovMatrix, Dataset, DegenerateDataError
from .rng import make_rng


class TestInputError(ValueError):
    __test__ = False


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    statistic: float
    p_value: float
    method: str
    variance: Optional[float] = None
    df: Optional[int] = None
    vars: tuple = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {"method": self.method, "vars": [list(v) if isinstance(v, tuple) else v
                                                for v in self.vars],
                "statistic": self.statistic, "p": self.p_value}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# -- moments -----------------------------------------------------------------

def sample_cov(data: Dataset) -> CovMatrix:
    """Unbiased sample covariance (divisor n - 1)."""
    if data.n < 2:
        raise DegenerateDataError("need at least two rows")
    x = data.values - data.values.mean(axis=0)
    s = x.T @ x / (data.n - 1)
    return CovMatrix(data.columns, (s + s.T) / 2, data.n)


def sample_cov_with_se(data: Dataset, chunk: int = 200_000) -> CovMatrix:
    """Sample covariance plus entrywise standard errors.

    The standard error of entry (a, b) is the standard deviation of the
    centred products x_a * x_b divided by sqrt(n).  Rows are processed in
    chunks to bound memory.
    """
    n, p = data.values.shape
    if n < 2:
        raise DegenerateDataError("need at least two rows")
    mean = data.values.mean(axis=0)
    m2 = np.zeros((p, p))
    m4 = np.zeros((p, p))
    for start in range(0, n, chunk):
        x = data.values[start:start + chunk] - mean
        m2 += x.T @ x
        x2 = x * x
        m4 += x2.T @ x2
    m2 /= n
    m4 /= n
    var_prod = np.maximum(m4 - m2 * m2, 0.0)
    s = m2 * n / (n - 1)
    return CovMatrix(data.columns, (s + s.T) / 2, n, np.sqrt(var_prod / n))


def sample_corr(data: Dataset) -> CovMatrix:
    cov = sample_cov(data)
    sd = np.sqrt(np.diag(cov.matrix))
    scale = np.maximum(np.abs(data.values).max(axis=0), 1.0)
    bad = [c for c, s, m in zip(data.columns, sd, scale) if s <= 1e-12 * m]
    if bad:
        raise DegenerateDataError(f"constant column(s): {bad}")
    return cov.to_correlation()


def numerical_rank(m, tol: float, atol: float = 0.0) -> int:
    """Number of singular values with sigma_i / sigma_1 >= tol.

    Singular values at or below `atol` are treated as zero; pass a floor
    relative to the full covariance when a block may be pure round-off.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] <= atol or sv[0] == 0.0:
        return 0
    return int(np.sum((sv / sv[0] >= tol) & (sv > atol)))


def _two_sided(z):
    return np.clip(2.0 * sps.norm.sf(np.abs(z)), 0.0, 1.0)


# -- tetrads -----------------------------------------------------------------

def tetrad_stats(s: np.ndarray, n: int, i, j, k, l):
    """Vectorised Wishart tetrad statistic, variance and p-value.

    `i, j` index the rows and `k, l` the columns of each tetrad
    ``s[i,k] s[j,l] - s[i,l] s[j,k]``.
    """
    i, j, k, l = (np.asarray(a) for a in (i, j, k, l))
    tau = s[i, k] * s[j, l] - s[i, l] * s[j, k]
    d_ij = s[i, i] * s[j, j] - s[i, j] ** 2
    d_kl = s[k, k] * s[l, l] - s[k, l] ** 2
    quad = np.stack([i, j, k, l], axis=-1)
    sub = s[quad[..., :, None], quad[..., None, :]]
    det4 = np.linalg.det(sub)
    var = d_ij * d_kl * (n + 1) / ((n - 1) * (n - 2)) - det4 / (n - 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(var > 0, tau / np.sqrt(np.where(var > 0, var, 1.0)), np.inf)
    z = np.where(tau == 0, 0.0, z)
    return tau, var, _two_sided(z), d_ij, d_kl


def wishart_tetrad_test(cov: CovMatrix, rows: Sequence[str], cols: Sequence[str]) -> TestResult:
    """Test the vanishing tetrad ``s_ik s_jl - s_il s_jk = 0``.

    Parameters
    ----------
    cov : CovMatrix
        Sample covariance (or correlation) with its sample size.
    rows, cols : pairs of variable names
        The 2x2 cross-covariance block under test.
    """
    if cov.n is None or cov.n <= 4:
        raise TestInputError("Wishart tetrad test needs sample size n > 4")
    rows, cols = tuple(rows), tuple(cols)
    if len(rows) != 2 or len(cols) != 2 or len(set(rows + cols)) != 4:
        raise TestInputError("need two row and two column variables, all distinct")
    i, j, k, l = cov.index(rows + cols)
    tau, var, p, d_ij, d_kl = tetrad_stats(cov.matrix, cov.n, i, j, k, l)
    if d_ij <= 0 or d_kl <= 0:
        raise DegenerateDataError("singular 2x2 marginal covariance")
    return TestResult(float(tau), float(p), "wishart-tetrad", float(var), None, (rows, cols))


# -- general minors ----------------------------------------------------------

def _cofactors(m: np.ndarray) -> np.ndarray:
    k = m.shape[0]
    if k == 1:
        return np.ones((1, 1))
    out = np.empty_like(m)
    for a in range(k):
        for b in range(k):
            minor = np.delete(np.delete(m, a, axis=0), b, axis=1)
            out[a, b] = (-1) ** (a + b) * np.linalg.det(minor)
    return out


def determinant_rank_test(cov: CovMatrix, rows: Sequence[str], cols: Sequence[str],
                          method: str = "delta", data: Optional[Dataset] = None,
                          n_boot: int = 500, seed: Optional[int] = None) -> TestResult:
    """Test rank(cov(rows, cols)) <= m - 1 through det(cov(rows, cols)) = 0.

    ``method="delta"`` uses the cofactor gradient and normal-theory
    covariances Cov(s_ab, s_cd) = (s_ac s_bd + s_ad s_bc) / n.
    ``method="bootstrap"`` resamples rows of `data` `n_boot` times.
    """
    rows, cols = tuple(rows), tuple(cols)
    m = len(rows)
    if m != len(cols) or m == 0:
        raise TestInputError("determinant test needs a square block")
    if set(rows) & set(cols):
        raise TestInputError("row and column variables must be distinct")
    if cov.n is None or cov.n <= m * m:
        raise TestInputError(f"need sample size n > {m * m}")
    s_ab = cov.sub(rows, cols)
    stat = float(np.linalg.det(s_ab))

    if method == "delta":
        g = _cofactors(s_ab)
        s_aa, s_bb, s_ba = cov.sub(rows, rows), cov.sub(cols, cols), cov.sub(cols, rows)
        var = float(np.sum(g * (s_aa @ g @ s_bb)) + np.sum(s_ab * (g @ s_ba @ g))) / cov.n
    elif method == "bootstrap":
        if data is None or seed is None:
            raise TestInputError("bootstrap needs the raw data and an explicit seed")
        x = data.select(rows + cols).values
        rng = make_rng(seed)
        dets = np.empty(n_boot)
        for b in range(n_boot):
            xb = x[rng.integers(0, x.shape[0], x.shape[0])]
            c = np.cov(xb, rowvar=False)
            dets[b] = np.linalg.det(c[:m, m:])
        var = float(np.var(dets, ddof=1))
    else:
        raise TestInputError(f"unknown method {method!r}")

    if var <= 0:
        p = 1.0 if stat == 0 else 0.0
    else:
        p = float(_two_sided(stat / np.sqrt(var)))
    return TestResult(stat, p, f"determinant-{method}", var, None, (rows, cols))


# -- non-linearity and screening --------------------------------------------

def white_pair_test(x, y) -> TestResult:
    """White's test on the regression of `y` on `x`.

    Squared OLS residuals are regressed on (1, x, x^2); n R^2 is referred
    to chi-square with 2 degrees of freedom.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if n <= 10 or y.shape[0] != n:
        raise TestInputError("White test needs more than 10 paired observations")
    if np.ptp(x) <= 1e-12 * max(1.0, np.abs(x).max()):
        raise DegenerateDataError("constant regressor")
    design = np.column_stack([np.ones(n), x])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    yc = y - y.mean()
    if resid @ resid <= 1e-24 * max(yc @ yc, 1e-300):
        return TestResult(0.0, 1.0, "white", None, 2)
    u = resid ** 2
    aux = np.column_stack([np.ones(n), x, x * x])
    gamma, *_ = np.linalg.lstsq(aux, u, rcond=None)
    uc = u - u.mean()
    sst = uc @ uc
    if sst <= 0:
        return TestResult(0.0, 1.0, "white", None, 2)
    e = u - aux @ gamma
    r2 = max(0.0, 1.0 - (e @ e) / sst)
    stat = n * r2
    return TestResult(float(stat), float(sps.chi2.sf(stat, 2)), "white", None, 2)


def pairwise_white_pvalues(data: Dataset) -> np.ndarray:
    """White p-values for every unordered column pair (regressing later on earlier)."""
    p = data.values.shape[1]
    out = []
    for a in range(p):
        for b in range(a + 1, p):
            out.append(white_pair_test(data.values[:, a], data.values[:, b]).p_value)
    return np.array(out)


@dataclass(frozen=True)
class ScreenResult:
    accepted: bool
    offenders: tuple = ()

    def to_dict(self) -> dict:
        return {"accepted": self.accepted,
                "offenders": [{"a": a, "b": b, "rho": r} for a, b, r in self.offenders]}


def screen_correlations(corr: CovMatrix, lo: float = 0.09, hi: float = 0.9) -> ScreenResult:
    """Reject when any off-diagonal |rho| < lo or |rho| > hi."""
    r = corr.matrix
    offenders = []
    for a in range(len(corr.names)):
        for b in range(a + 1, len(corr.names)):
            v = abs(r[a, b])
            if v < lo or v > hi:
                offenders.append((corr.names[a], corr.names[b], float(r[a, b])))
    return ScreenResult(not offenders, tuple(offenders))
