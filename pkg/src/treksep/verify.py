"""Numerical checks of the rank bound implied by a choke pair.

Given a model, a choke pair (C_A; C_B) and sets A, B, the checks are

* ``t_separation``: the pair trek-separates A from B in the graph;
* ``la_below``: the model is linear and acyclic below the pair;
* ``residual``: the residuals r_A = A - L_A C_A and r_B = B - L_B C_B of the
  reductions below each choke set are uncorrelated, entrywise within
  `z` Monte-Carlo standard errors (with C_B empty this is
  cov(A, B) = L_A cov(C_A, B));
* ``rank``: the numerical rank of the simulated cov(A, B) is at most
  #C_A + #C_B.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .data import Dataset
from .graph import ChokePair, t_separates
from .sem import SemModel, reduce_below_choke, simulate, validate_LA_below
from .stats import numerical_rank, sample_cov_with_se


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _residuals(model: SemModel, choke, sides, data: Dataset) -> np.ndarray:
    sides = list(sides)
    if not choke:
        return data.select(sides).values
    red = reduce_below_choke(model, choke, sides)
    lam = red.matrix()
    return data.select(red.rows).values - data.select(red.choke).values @ lam.T


def residual_cross_cov(model: SemModel, pair: ChokePair, a: Iterable[str],
                       b: Iterable[str], data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Sample cov(r_A, r_B) and its entrywise standard errors.

    Rows follow the canonical order of `a`, columns that of `b`.
    """
    g = model.graph
    a, b = g.sort(a), g.sort(b)
    ra = _residuals(model, g.sort(pair.ca), a, data)
    rb = _residuals(model, g.sort(pair.cb), b, data)
    names = [f"a{k}" for k in range(len(a))] + [f"b{k}" for k in range(len(b))]
    cov = sample_cov_with_se(Dataset(tuple(names), np.hstack([ra, rb])))
    p = len(a)
    return cov.matrix[:p, p:], cov.se[:p, p:]


def verify_choke_pair(model: SemModel, pair: ChokePair, a: Iterable[str], b: Iterable[str],
                      n: int, seed: int, tol: float = 1e-2, z: float = 3.0) -> list[CheckResult]:
    """Run every check; numerical ones are skipped when the structure fails."""
    g = model.graph
    a, b = g.sort(a), g.sort(b)
    out = []
    sep = t_separates(g, pair, a, b)
    detail = "" if sep else f"unblocked trek {sep.witness.p1} ; {sep.witness.p2}"
    out.append(CheckResult("t_separation", sep.separated, detail))
    violations = validate_LA_below(model, pair, a, b)
    out.append(CheckResult("la_below", not violations, "; ".join(map(str, violations))))
    if not (sep and not violations):
        out.append(CheckResult("residual", False, "skipped: structural check failed"))
        out.append(CheckResult("rank", False, "skipped: structural check failed"))
        return out

    data = simulate(model, n, seed)
    cross, se = residual_cross_cov(model, pair, a, b, data)
    with np.errstate(divide="ignore", invalid="ignore"):
        zs = np.where(se > 0, np.abs(cross) / se, np.where(cross == 0, 0.0, np.inf))
    worst = float(zs.max())
    out.append(CheckResult("residual", bool(worst <= z), f"max |cov|/se = {worst:.3g}"))

    cab = np.cov(data.select(a + b).values, rowvar=False)[:len(a), len(a):]
    rank = numerical_rank(cab, tol)
    bound = pair.size
    out.append(CheckResult("rank", rank <= bound, f"numerical rank {rank}, bound {bound}"))
    return out
