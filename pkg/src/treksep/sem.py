"""Structural equation models with linear and polynomial terms.

Each vertex V has the equation

    V = sum_p a_{V,p} p + sum_t c_t prod_p p^{e_{t,p}} + eps_V,  eps_V ~ N(0, sd_V^2)

where every p is a graph parent of V.  Error variables are never graph
vertices; where they need a name (residual ancestry) they are tagged
``eps_<vertex>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .data import CovMatrix, Dataset
from .graph import (ChokePair, PathDiagram, directed_region, parse_path_diagram,
                    strongly_connected_blocks, vertices_on_cycles)
from .rng import make_rng
from .stats import sample_cov_with_se


class SemError(ValueError):
    pass


def error_tag(v: str) -> str:
    return f"eps_{v}"


@dataclass(frozen=True)
class PolyTerm:
    coef: float
    monomial: tuple[tuple[str, int], ...]

    def __init__(self, coef: float, monomial: Mapping[str, int]):
        items = tuple(sorted((str(k), int(e)) for k, e in dict(monomial).items()))
        if not items:
            raise SemError("empty monomial")
        if any(e < 1 for _, e in items):
            raise SemError("monomial exponents must be >= 1")
        object.__setattr__(self, "coef", float(coef))
        object.__setattr__(self, "monomial", items)

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.monomial)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.monomial)

    def evaluate(self, cols: Mapping[str, np.ndarray]) -> np.ndarray:
        out = self.coef
        for v, e in self.monomial:
            out = out * cols[v] ** e
        return out


@dataclass(frozen=True)
class EquationSpec:
    variable: str
    linear: Mapping[str, float] = field(default_factory=dict)
    poly: tuple[PolyTerm, ...] = ()
    error_sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "linear", {str(k): float(v) for k, v in self.linear.items()})
        object.__setattr__(self, "poly", tuple(self.poly))
        if not self.error_sd > 0:
            raise SemError(f"error sd for {self.variable} must be positive")

    @property
    def parents(self) -> set[str]:
        out = set(self.linear)
        for t in self.poly:
            out.update(t.variables)
        return out

    def linear_coef(self, parent: str) -> float:
        """Coefficient of `parent` in the linear part (degree-one monomials included)."""
        c = self.linear.get(parent, 0.0)
        for t in self.poly:
            if t.monomial == ((parent, 1),):
                c = c + t.coef
        return c

    @property
    def nonlinear_parents(self) -> set[str]:
        out = set()
        for t in self.poly:
            if t.degree >= 2:
                out.update(t.variables)
        return out

    @property
    def is_linear(self) -> bool:
        return not self.nonlinear_parents


class SemModel:
    """Fixed-parameter SEM over a path diagram."""

    def __init__(self, graph: PathDiagram, equations: Mapping[str, EquationSpec]):
        self.graph = graph
        eqs = dict(equations)
        missing = [v for v in graph.vertices if v not in eqs]
        extra = [v for v in eqs if v not in graph]
        if missing:
            raise SemError(f"no equation for {missing}")
        if extra:
            raise SemError(f"equations for unknown vertices {extra}")
        for v in graph.vertices:
            eq = eqs[v]
            if eq.variable != v:
                raise SemError(f"equation keyed {v!r} is for {eq.variable!r}")
            if eq.parents != set(graph.parents(v)):
                raise SemError(f"parents of {v} in equation {sorted(eq.parents)} do not match "
                               f"graph parents {list(graph.parents(v))}")
        self.equations = {v: eqs[v] for v in graph.vertices}
        self._blocks = strongly_connected_blocks(graph)
        for block in self._blocks:
            if len(block) > 1:
                members = set(block)
                for v in block:
                    bad = self.equations[v].nonlinear_parents & members
                    if bad:
                        raise SemError(f"non-linear cycle: {v} is non-linear in {sorted(bad)}")
                b = self._block_matrix(block)
                if abs(np.linalg.det(np.eye(len(block)) - b)) < 1e-12:
                    raise SemError(f"singular cyclic block {list(block)}")

    @property
    def is_linear(self) -> bool:
        return all(eq.is_linear for eq in self.equations.values())

    def _block_matrix(self, block: Sequence[str]) -> np.ndarray:
        return np.array([[self.equations[v].linear_coef(u) for u in block] for v in block])

    def coefficient_matrix(self) -> np.ndarray:
        """B with B[i, j] the linear coefficient of vertex j in vertex i's equation."""
        vs = self.graph.vertices
        return np.array([[self.equations[v].linear_coef(u) for u in vs] for v in vs])

    def error_sds(self) -> np.ndarray:
        return np.array([self.equations[v].error_sd for v in self.graph.vertices])

    def to_dict(self) -> dict:
        eqs = {}
        for v, eq in self.equations.items():
            eqs[v] = {
                "linear": dict(eq.linear),
                "poly": [{"coef": t.coef, "monomial": dict(t.monomial)} for t in eq.poly],
                "error": {"dist": "gaussian", "sd": eq.error_sd},
            }
        return {"graph": self.graph.to_text(), "equations": eqs}


def linear_model(graph: PathDiagram, coefs: Optional[Mapping[tuple[str, str], float]] = None,
                 error_sd: Union[float, Mapping[str, float]] = 1.0) -> SemModel:
    """Linear SEM; coefficients default to those stored on the graph edges."""
    eqs = {}
    for v in graph.vertices:
        lin = {}
        for p in graph.parents(v):
            c = coefs.get((p, v)) if coefs is not None else None
            if c is None:
                c = graph.coefficient(p, v)
            if c is None:
                raise SemError(f"no coefficient for edge {p} -> {v}")
            lin[p] = c
        sd = error_sd[v] if isinstance(error_sd, Mapping) else error_sd
        eqs[v] = EquationSpec(v, lin, (), sd)
    return SemModel(graph, eqs)


# -- model files -------------------------------------------------------------

def model_from_dict(doc: Mapping, base_dir: Optional[Path] = None) -> SemModel:
    gsrc = doc["graph"]
    candidate = Path(base_dir or ".") / gsrc if "\n" not in gsrc else None
    if candidate is not None and candidate.is_file():
        graph = parse_path_diagram(candidate.read_text(encoding="utf-8"))
    else:
        graph = parse_path_diagram(gsrc)
    eqs = {}
    for v, spec in doc.get("equations", {}).items():
        err = spec.get("error", {"dist": "gaussian", "sd": 1.0})
        if err.get("dist", "gaussian") != "gaussian":
            raise SemError(f"unsupported error distribution {err.get('dist')!r}")
        poly = tuple(PolyTerm(t["coef"], t["monomial"]) for t in spec.get("poly", []))
        eqs[v] = EquationSpec(v, spec.get("linear", {}), poly, float(err.get("sd", 1.0)))
    for v in graph.vertices:
        if v not in eqs and not graph.parents(v):
            eqs[v] = EquationSpec(v)
    return SemModel(graph, eqs)


def load_model(path: Union[str, Path]) -> SemModel:
    path = Path(path)
    return model_from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


# -- free models -------------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    """Coefficient drawn as ``scale * U(low, high)``."""

    low: float
    high: float
    scale: float = 1.0

    def __post_init__(self):
        if self.low > self.high:
            raise SemError(f"empty range [{self.low}, {self.high}]")

    def draw(self, rng: np.random.Generator) -> float:
        return self.scale * float(rng.uniform(self.low, self.high))


Coef = Union[float, Uniform]


@dataclass(frozen=True)
class FreeEquation:
    linear: Mapping[str, Coef] = field(default_factory=dict)
    poly: tuple[tuple[Coef, Mapping[str, int]], ...] = ()
    error_sd: float = 1.0


@dataclass(frozen=True)
class FreeSemModel:
    graph: PathDiagram
    equations: Mapping[str, FreeEquation]


def _realise(c: Coef, rng: np.random.Generator) -> float:
    return c.draw(rng) if isinstance(c, Uniform) else float(c)


def draw_model(free: FreeSemModel, seed: int) -> SemModel:
    """Instantiate every ranged coefficient; fixed values never consume draws."""
    rng = make_rng(seed)
    g = free.graph
    eqs = {}
    for v in g.vertices:
        fe = free.equations.get(v, FreeEquation())
        lin = {p: _realise(fe.linear[p], rng) for p in g.sort(fe.linear)}
        poly = tuple(PolyTerm(_realise(c, rng), mono) for c, mono in fe.poly)
        eqs[v] = EquationSpec(v, lin, poly, fe.error_sd)
    return SemModel(g, eqs)


def five_latent_graph() -> PathDiagram:
    """Five latents with five indicators each, L2..L5 children of L1, four impurities."""
    latents = [f"L{i}" for i in range(1, 6)]
    measured = [f"X{k}" for k in range(1, 26)]
    edges = [("L1", f"L{i}") for i in range(2, 6)]
    for k in range(1, 26):
        edges.append((f"L{(k - 1) // 5 + 1}", f"X{k}"))
    edges += [("X1", "X6"), ("X15", "X19"), ("L3", "X10"), ("L4", "X21")]
    return PathDiagram.from_lists(latents, measured, edges)


def five_latent_model(b: float, d: float) -> FreeSemModel:
    """Free simulation model with latent cubic weight `b` and indicator cubic weight `d`.

    L_i = a L1 + b c L1^3 + eps for i = 2..5, a ~ U(0.25, 1), c ~ U(0.5, 2);
    X = (1 - d) e L + d f L^3 + eps with e, f ~ U(0.5, 2) for the indicator's
    own latent L.  Impurity edges get linear U(0.5, 2) coefficients.  Cubic
    terms are omitted when their weight is zero.
    """
    g = five_latent_graph()
    eqs: dict[str, FreeEquation] = {"L1": FreeEquation()}
    for i in range(2, 6):
        poly = ((Uniform(0.5, 2.0, b), {"L1": 3}),) if b != 0 else ()
        eqs[f"L{i}"] = FreeEquation({"L1": Uniform(0.25, 1.0)}, poly)
    for k in range(1, 26):
        x, own = f"X{k}", f"L{(k - 1) // 5 + 1}"
        lin: dict[str, Coef] = {own: Uniform(0.5, 2.0, 1.0 - d)}
        for p in g.parents(x):
            if p != own:
                lin[p] = Uniform(0.5, 2.0)
        poly = ((Uniform(0.5, 2.0, d), {own: 3}),) if d != 0 else ()
        eqs[x] = FreeEquation(lin, poly)
    return FreeSemModel(g, eqs)


# -- linear-acyclic-below checks and reduction --------------------------------

@dataclass(frozen=True)
class Violation:
    vertex: str
    kind: str          # "cycle" or "nonlinear"
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.vertex}: {self.kind}" + (f" ({self.detail})" if self.detail else "")


def validate_LA_below(model: SemModel, pair: ChokePair, a: Iterable[str],
                      b: Iterable[str]) -> list[Violation]:
    """Violations of linear acyclicity below ``(pair.ca; pair.cb)``; empty means ok."""
    g = model.graph
    a, b = set(a), set(b)
    g.check(a | b | pair.ca | pair.cb)
    d_a = directed_region(g, pair.ca, a)
    d_b = directed_region(g, pair.cb, b)
    out = []
    on_cycle = vertices_on_cycles(g)
    for v in g.sort((d_a | d_b) & on_cycle):
        out.append(Violation(v, "cycle", "member of the region below a choke set lies on a cycle"))
    for region, choke, side in ((d_a, pair.ca, "row"), (d_b, pair.cb, "column")):
        inside = region | set(choke)
        for v in g.sort(region):
            bad = model.equations[v].nonlinear_parents & inside
            if bad:
                out.append(Violation(v, "nonlinear",
                                     f"{side} side, non-linear in {', '.join(g.sort(bad))}"))
    return out


@dataclass(frozen=True)
class ReductionResult:
    """Each row variable as sum_V coef[(A_i, V)] V + f_i(residual[A_i])."""

    rows: tuple[str, ...]
    choke: tuple[str, ...]
    coefficients: Mapping[tuple[str, str], float]
    residual_ancestry: Mapping[str, frozenset]

    def matrix(self) -> np.ndarray:
        return np.array([[self.coefficients[(r, c)] for c in self.choke] for r in self.rows])

    def to_dict(self) -> dict:
        return {
            "rows": list(self.rows),
            "choke": list(self.choke),
            "coefficients": {r: {c: self.coefficients[(r, c)] for c in self.choke}
                             for r in self.rows},
            "residual": {r: sorted(self.residual_ancestry[r]) for r in self.rows},
        }


def reduce_below_choke(model: SemModel, c: Iterable[str], a: Iterable[str]) -> ReductionResult:
    """Write each member of `a` as a linear function of `c` plus a residual.

    Equations of region members are substituted one at a time, always
    expanding the pending region member whose longest directed path to the
    target is shortest, so every vertex is expanded after all of its
    descendants in the expression and exactly once.
    """
    g = model.graph
    c, rows = g.sort(c), g.sort(a)
    violations = validate_LA_below(model, ChokePair(c, ()), rows, ())
    if violations:
        raise SemError("not linear-acyclic below the choke set: "
                       + "; ".join(str(v) for v in violations))
    region = directed_region(g, c, rows)
    inside = region | set(c)

    coefs: dict[tuple[str, str], float] = {}
    residual: dict[str, frozenset] = {}
    for target in rows:
        if target in c:
            for v in c:
                coefs[(target, v)] = 1.0 if v == target else 0.0
            residual[target] = frozenset()
            continue
        own = directed_region(g, c, [target])
        if not own:
            for v in c:
                coefs[(target, v)] = 0.0
            residual[target] = frozenset([target])
            continue

        depth: dict[str, int] = {}

        def longest(v: str) -> int:
            if v not in depth:
                down = [longest(ch) for ch in g.children(v) if ch in own]
                depth[v] = 0 if v == target else 1 + max(down)
            return depth[v]

        expr: dict[str, float] = {target: 1.0}
        ancestry: set[str] = set()
        while True:
            pending = [v for v in expr if v in own]
            if not pending:
                break
            x = min(pending, key=lambda v: (longest(v), g.index(v)))
            weight = expr.pop(x)
            eq = model.equations[x]
            for p in g.parents(x):
                if p in inside:
                    expr[p] = expr.get(p, 0.0) + weight * eq.linear_coef(p)
                else:
                    ancestry.add(p)
            ancestry.add(error_tag(x))
        for v in c:
            coefs[(target, v)] = expr.get(v, 0.0)
        residual[target] = frozenset(ancestry)
    return ReductionResult(rows, c, coefs, residual)


# -- simulation and covariance ---------------------------------------------

def simulate(model: SemModel, n: int, seed: int) -> Dataset:
    """Draw `n` rows of every vertex, in canonical column order."""
    if n < 1:
        raise SemError("sample count must be positive")
    g = model.graph
    vs = g.vertices
    pos = {v: k for k, v in enumerate(vs)}
    rng = make_rng(seed)
    x = rng.standard_normal((n, len(vs)))
    x *= model.error_sds()
    cols = {v: x[:, pos[v]] for v in vs}
    for block in model._blocks:
        members = set(block)
        rhs = np.zeros((n, len(block)))
        for r, v in enumerate(block):
            eq = model.equations[v]
            acc = cols[v].copy()
            for p, coef in eq.linear.items():
                if p not in members:
                    acc += coef * cols[p]
            for t in eq.poly:
                # degree-one terms in block members belong to the linear solve
                if t.degree >= 2 or not set(t.variables) & members or len(block) == 1:
                    acc += t.evaluate(cols)
            rhs[:, r] = acc
        if len(block) == 1:
            x[:, pos[block[0]]] = rhs[:, 0]
        else:
            inner = model._block_matrix(block)
            sol = np.linalg.solve(np.eye(len(block)) - inner, rhs.T).T
            for r, v in enumerate(block):
                x[:, pos[v]] = sol[:, r]
    return Dataset(vs, x, seed)


def population_cov(model: SemModel, method: str = "analytic", n: int = 1_000_000,
                   seed: Optional[int] = None) -> CovMatrix:
    """Covariance over all vertices.

    ``analytic`` returns (I - B)^-1 diag(sd^2) (I - B)^-T for linear models;
    ``montecarlo`` returns the sample covariance of a fresh simulation with
    entrywise standard errors in ``.se``.
    """
    if method == "analytic":
        if not model.is_linear:
            raise SemError("analytic covariance needs a fully linear model")
        b = model.coefficient_matrix()
        eye = np.eye(len(b))
        if abs(np.linalg.det(eye - b)) < 1e-12:
            raise SemError("I - B is singular")
        inv = np.linalg.inv(eye - b)
        sigma = inv @ np.diag(model.error_sds() ** 2) @ inv.T
        return CovMatrix(model.graph.vertices, (sigma + sigma.T) / 2)
    if method == "montecarlo":
        if seed is None:
            raise SemError("Monte-Carlo covariance needs an explicit seed")
        cov = sample_cov_with_se(simulate(model, n, seed))
        return cov
    raise SemError(f"unknown method {method!r}")
