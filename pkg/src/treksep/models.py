"""Small named models used by the tests and the command-line examples.

The edge list of the impure two-factor model is a reconstruction: only its
impurities (X1 -> X6 and L1 -> X10) are pinned down by its description.
"""

from __future__ import annotations

from .graph import PathDiagram
from .rng import make_rng
from .sem import (EquationSpec, FreeEquation, FreeSemModel, PolyTerm, SemModel, Uniform)


def two_latent_graph() -> PathDiagram:
    """L1 and L2 both point to X1 and X2."""
    return PathDiagram.from_lists(
        ["L1", "L2"], ["X1", "X2"],
        [("L1", "X1"), ("L1", "X2"), ("L2", "X1"), ("L2", "X2")])


def shared_latents_graph() -> PathDiagram:
    """Two latents, each a parent of X1..X5 and X10."""
    xs = ["X1", "X2", "X3", "X4", "X5", "X10"]
    return PathDiagram.from_lists(
        ["L1", "L2"], xs, [(lat, x) for lat in ("L1", "L2") for x in xs])


def single_factor_graph(names=("X", "Y", "Z", "W")) -> PathDiagram:
    return PathDiagram.from_lists(["L"], list(names), [("L", v) for v in names])


def impure_two_factor_graph() -> PathDiagram:
    """Impure two-factor model: X1 -> X6 and L1 -> X10 break purity."""
    xs = [f"X{k}" for k in range(1, 11)]
    edges = [("L1", "L2")]
    edges += [("L1", f"X{k}") for k in range(1, 6)]
    edges += [("L2", f"X{k}") for k in range(6, 11)]
    edges += [("X1", "X6"), ("L1", "X10")]
    return PathDiagram.from_lists(["L1", "L2"], xs, edges)


def impure_two_factor_model() -> FreeSemModel:
    g = impure_two_factor_graph()
    eqs = {}
    for v in g.vertices:
        parents = g.parents(v)
        rng_ = Uniform(0.25, 1.0) if v == "L2" else Uniform(0.5, 2.0)
        eqs[v] = FreeEquation({p: rng_ for p in parents})
    return FreeSemModel(g, eqs)


def chain_graph() -> PathDiagram:
    return PathDiagram.from_lists(
        ["L1"], ["X1", "X2", "X3", "X4", "X5", "X6"],
        [("L1", "X1"), ("X1", "X2"), ("X6", "X2"), ("L1", "X3"), ("L1", "X4"),
         ("L1", "X5")])


def chain_model(x1_cubic: float = 0.0) -> SemModel:
    """X2 = 3 X1 + f2(eps2, X6) with f2 = 0.5 X6 + 0.4 X6^2; X1 = 2 L1 + eps1.

    A non-zero `x1_cubic` adds ``x1_cubic * L1^3`` to X1, which breaks
    linearity below {L1}.
    """
    g = chain_graph()
    x1_poly = (PolyTerm(x1_cubic, {"L1": 3}),) if x1_cubic else ()
    eqs = {
        "L1": EquationSpec("L1"),
        "X6": EquationSpec("X6"),
        "X1": EquationSpec("X1", {"L1": 2.0}, x1_poly),
        "X2": EquationSpec("X2", {"X1": 3.0},
                           (PolyTerm(0.5, {"X6": 1}), PolyTerm(0.4, {"X6": 2}))),
        "X3": EquationSpec("X3", {"L1": 0.8}),
        "X4": EquationSpec("X4", {"L1": 0.6}),
        "X5": EquationSpec("X5", {"L1": 0.9}),
    }
    return SemModel(g, eqs)


def random_la_below_model(seed: int) -> tuple[SemModel, tuple[str, ...], tuple[str, ...],
                                              tuple[str, ...]]:
    """Random model that is linear-acyclic below a latent choke set.

    Above the choke set C there is a cyclic pair U1 <-> U2 and cubic
    effects; the column variables B are non-linear in C and U1.  Below C
    every relation is linear and acyclic, except that each row variable may
    be non-linear in a private parent N_i with no path to B.

    Returns
    -------
    model, c, a, b
    """
    rng = make_rng(seed)
    u = lambda lo=0.5, hi=1.5: float(rng.uniform(lo, hi))  # noqa: E731
    nc = int(rng.integers(1, 3))
    na = int(rng.integers(nc + 1, 4))
    nb = int(rng.integers(nc + 1, 4))
    c = [f"C{k}" for k in range(1, nc + 1)]
    a = [f"A{k}" for k in range(1, na + 1)]
    b = [f"B{k}" for k in range(1, nb + 1)]
    priv = [f"N{k}" for k in range(1, na + 1)]
    latents = ["U1", "U2", "U3"] + c + ["M"]
    measured = a + b + priv

    edges = [("U1", "U2"), ("U2", "U1"), ("U3", "U1")]
    eqs = {
        "U3": EquationSpec("U3"),
        "U1": EquationSpec("U1", {"U2": u(0.2, 0.5)}, (PolyTerm(u(0.2, 0.5), {"U3": 2}),)),
        "U2": EquationSpec("U2", {"U1": u(0.2, 0.5)}),
    }
    for v in c:
        edges += [("U1", v), ("U3", v)]
        eqs[v] = EquationSpec(v, {"U1": u()}, (PolyTerm(u(0.1, 0.3), {"U3": 3}),))
    edges.append((c[0], "M"))
    eqs["M"] = EquationSpec("M", {c[0]: u()})
    for k, v in enumerate(a):
        lin = {}
        for cv in c:
            if rng.uniform() < 0.7 or k < nc and cv == c[k]:
                lin[cv] = u()
        if rng.uniform() < 0.5:
            lin["M"] = u()
        if k > 0 and rng.uniform() < 0.3:
            lin[a[k - 1]] = u(0.2, 0.6)
        if not lin:
            lin[c[0]] = u()
        n_v = priv[k]
        edges += [(p, v) for p in lin] + [(n_v, v)]
        eqs[n_v] = EquationSpec(n_v)
        eqs[v] = EquationSpec(v, lin, (PolyTerm(u(), {n_v: 1}), PolyTerm(u(0.2, 0.5), {n_v: 2})))
    for v in b:
        lin = {cv: u() for cv in c}
        lin["U1"] = u()
        edges += [(p, v) for p in lin]
        eqs[v] = EquationSpec(v, lin, (PolyTerm(u(0.1, 0.3), {c[0]: 3}),))
    g = PathDiagram.from_lists(latents, measured, edges)
    return SemModel(g, eqs), tuple(c), tuple(a), tuple(b)
