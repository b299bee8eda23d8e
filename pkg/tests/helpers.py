"""Shared generators for the test-suite."""

import numpy as np

from treksep.graph import PathDiagram
from treksep.rng import make_rng


def random_graph(rng: np.random.Generator, n: int, p: float = 0.3, cyclic: bool = False,
                 ensure_cycle: bool = False) -> PathDiagram:
    """Erdos-Renyi digraph on V0..V{n-1}; DAG edges only go forward."""
    names = [f"V{k}" for k in range(n)]
    edges = []
    for a in range(n):
        for b in range(n):
            if a == b or (not cyclic and a > b):
                continue
            if rng.uniform() < p:
                edges.append((a, b))
    if ensure_cycle and not any((b, a) in edges for a, b in edges if a < b):
        a, b = sorted(rng.choice(n, 2, replace=False))
        for e in ((a, b), (b, a)):
            if e not in edges:
                edges.append(e)
    kinds = ["latent" if rng.uniform() < 0.3 else "measured" for _ in names]
    return PathDiagram(list(zip(names, kinds)), [(names[a], names[b]) for a, b in edges])


def random_sides(rng, g: PathDiagram, size: int = 2):
    pick = rng.choice(len(g), 2 * size, replace=False)
    vs = g.vertices
    return [vs[k] for k in pick[:size]], [vs[k] for k in pick[size:]]


def oracle_cases(seed: int = 2024, dags: int = 200, cyclic: int = 50):
    """The graph/side pairs used for choke-size oracle equivalence."""
    rng = make_rng(seed)
    cases = []
    for k in range(dags + cyclic):
        is_cyclic = k >= dags
        n = int(rng.integers(4, 8))
        g = random_graph(rng, n, 0.3, cyclic=is_cyclic, ensure_cycle=is_cyclic)
        a, b = random_sides(rng, g)
        cases.append((g, a, b))
    return cases
