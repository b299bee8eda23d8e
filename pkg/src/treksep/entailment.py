"""Minimal choke pairs and the rank constraints they entail.

The smallest t-separating pair for (A, B) is a minimum vertex cut in a
doubled network: every vertex v appears once on the climbing leg, (v, L),
and once on the descending leg, (v, R).  A trek from a in A to b in B is
exactly a walk

    source -> (a, L) -> ... up ... -> (top, L) -> (top, R) -> ... down ... -> (b, R) -> sink

so cutting (v, L) means v is in C_A and cutting (v, R) means v is in C_B.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .graph import ChokePair, PathDiagram, t_separates

_INF = 1 << 40


class EntailmentError(ValueError):
    pass


@dataclass(frozen=True)
class RankConstraint:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    bound: int
    witness: ChokePair

    def to_dict(self, g: PathDiagram) -> dict:
        return {
            "rows": list(self.rows),
            "cols": list(self.cols),
            "bound": self.bound,
            "chokeA": list(g.sort(self.witness.ca)),
            "chokeB": list(g.sort(self.witness.cb)),
        }


def constraints_to_json(g: PathDiagram, constraints: Iterable[RankConstraint]) -> str:
    return json.dumps([c.to_dict(g) for c in constraints])


# -- max flow ----------------------------------------------------------------

class _FlowNet:
    """Edmonds-Karp on a small integer-capacity network."""

    def __init__(self, n: int):
        self.adj: list[list[list]] = [[] for _ in range(n)]

    def add(self, u: int, v: int, cap: int) -> None:
        fwd = [v, cap, None]
        bwd = [u, 0, fwd]
        fwd[2] = bwd
        self.adj[u].append(fwd)
        self.adj[v].append(bwd)

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while True:
            pred: dict[int, list] = {s: None}
            queue = deque([s])
            while queue and t not in pred:
                u = queue.popleft()
                for arc in self.adj[u]:
                    if arc[1] > 0 and arc[0] not in pred:
                        pred[arc[0]] = arc
                        queue.append(arc[0])
            if t not in pred:
                return total
            push = _INF
            v = t
            while v != s:
                arc = pred[v]
                push = min(push, arc[1])
                v = arc[2][0]
            v = t
            while v != s:
                arc = pred[v]
                arc[1] -= push
                arc[2][1] += push
                v = arc[2][0]
            total += push
            if total >= _INF:
                return total


class _TrekNetwork:
    """Doubled network restricted to ancestors of A and B."""

    def __init__(self, g: PathDiagram, a: Sequence[str], b: Sequence[str]):
        self.g = g
        self.a, self.b = a, b
        self.anc_a = g.ancestors(a)
        self.anc_b = g.ancestors(b)
        self.verts = g.sort(self.anc_a | self.anc_b)
        self.pos = {v: k for k, v in enumerate(self.verts)}
        # cut weights: size first, then number of row-side members
        self.w_r = 2 * len(self.verts) + 1
        self.w_l = self.w_r + 1

    def candidates(self) -> list[tuple[str, int]]:
        """Cut nodes in tie-break order: all row-side nodes, then column-side."""
        return ([(v, 0) for v in self.verts if v in self.anc_a]
                + [(v, 1) for v in self.verts if v in self.anc_b])

    def flow(self, weighted: bool, forced_in=frozenset(), forced_out=frozenset()) -> int:
        m = len(self.verts)
        net = _FlowNet(4 * m + 2)
        s, t = 4 * m, 4 * m + 1
        w = (self.w_l, self.w_r) if weighted else (1, 1)
        for v, k in self.pos.items():
            for side in (0, 1):
                node = (v, side)
                if node in forced_in:
                    continue
                cap = _INF if node in forced_out else w[side]
                net.add(4 * k + 2 * side, 4 * k + 2 * side + 1, cap)
            net.add(4 * k + 1, 4 * k + 2, _INF)  # switch legs at the top
            for p in self.g.parents(v):
                if p in self.pos:
                    kp = self.pos[p]
                    net.add(4 * k + 1, 4 * kp, _INF)          # climb v -> p
                    net.add(4 * kp + 3, 4 * k + 2, _INF)      # descend p -> v
        for v in self.a:
            net.add(s, 4 * self.pos[v], _INF)
        for v in self.b:
            net.add(4 * self.pos[v] + 3, t, _INF)
        return net.max_flow(s, t)

    def weight(self, nodes) -> int:
        return sum(self.w_l if side == 0 else self.w_r for _, side in nodes)


def _check_sides(g: PathDiagram, a: Iterable[str], b: Iterable[str]):
    a, b = list(a), list(b)
    g.check(a + b)
    if not a or not b:
        raise EntailmentError("row and column sets must be nonempty")
    if set(a) & set(b):
        raise EntailmentError(f"row and column sets overlap: {sorted(set(a) & set(b))}")
    return g.sort(a), g.sort(b)


def min_choke_size(g: PathDiagram, a: Iterable[str], b: Iterable[str]) -> int:
    """Size of the smallest t-separating pair (single max-flow)."""
    a, b = _check_sides(g, a, b)
    return _TrekNetwork(g, a, b).flow(weighted=False)


def min_choke(g: PathDiagram, a: Iterable[str], b: Iterable[str]) -> tuple[ChokePair, int]:
    """Smallest t-separating pair for `a` and `b`.

    Ties go to the pair with fewer row-side members, then to the
    lexicographically least (C_A, C_B) under canonical vertex order.
    """
    a, b = _check_sides(g, a, b)
    net = _TrekNetwork(g, a, b)
    opt = net.flow(weighted=True)
    size = opt // net.w_r
    if size == 0:
        return ChokePair(), 0

    chosen: set = set()
    excluded: set = set()
    for node in net.candidates():
        if net.weight(chosen) == opt:
            break
        trial = chosen | {node}
        if net.weight(trial) + net.flow(True, trial, excluded) == opt:
            chosen = trial
        else:
            excluded.add(node)
    pair = ChokePair([v for v, s in chosen if s == 0], [v for v, s in chosen if s == 1])
    return pair, size


def brute_force_min_choke(g: PathDiagram, a: Iterable[str], b: Iterable[str],
                          max_vertices: int = 12) -> tuple[ChokePair, int]:
    """Exhaustive oracle for :func:`min_choke`, same tie-breaking."""
    a, b = _check_sides(g, a, b)
    if len(g) > max_vertices:
        raise EntailmentError(
            f"brute force limited to {max_vertices} vertices, graph has {len(g)}")
    verts = g.vertices
    for total in range(min(len(a), len(b)) + 1):
        for na in range(total + 1):
            for ca in combinations(verts, na):
                for cb in combinations(verts, total - na):
                    pair = ChokePair(ca, cb)
                    if t_separates(g, pair, a, b):
                        return pair, total
    raise AssertionError("trivial choke pair failed to separate")  # pragma: no cover


def entailed_rank_bound(g: PathDiagram, a: Iterable[str], b: Iterable[str]) -> int:
    return min_choke_size(g, a, b)


def enumerate_constraints(g: PathDiagram, measured: Optional[Iterable[str]] = None,
                          p: int = 2, q: int = 2, allow_large: bool = False,
                          witnesses: bool = True) -> list[RankConstraint]:
    """Rank constraints ``rank cov(A, B) <= r`` with r < min(p, q).

    Every disjoint (A, B) with ``#A = p`` and ``#B = q`` drawn from
    `measured` is checked once; for p == q the swapped pair is skipped.
    """
    pool = g.sort(g.measured if measured is None else measured)
    rank = {v: i for i, v in enumerate(pool)}
    if p < 2 or q < 2:
        raise EntailmentError("row and column sizes must be at least 2")
    if p + q > len(pool):
        raise EntailmentError(f"p + q = {p + q} exceeds the {len(pool)} available variables")
    if not allow_large and (p > 3 or q > 3):
        raise EntailmentError("sizes above 3 need allow_large=True")

    out = []
    limit = min(p, q)
    for rows in combinations(pool, p):
        rest = [v for v in pool if v not in rows]
        for cols in combinations(rest, q):
            if p == q and [rank[v] for v in cols] < [rank[v] for v in rows]:
                continue
            if witnesses:
                pair, bound = min_choke(g, rows, cols)
            else:
                bound = min_choke_size(g, rows, cols)
                pair = None
            if bound < limit:
                out.append(RankConstraint(rows, cols, bound, pair))
    out.sort(key=lambda c: ([g.index(v) for v in c.rows], [g.index(v) for v in c.cols]))
    return out
