"""Path diagrams, treks and trek separation.

A path diagram is a directed graph (cycles allowed, self-loops not) whose
vertices are tagged latent or measured.  Error variables are never vertices.
Vertex declaration order is the canonical ordering used for every
set-valued output.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

LATENT = "latent"
MEASURED = "measured"

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class GraphError(ValueError):
    """Invalid graph construction or query."""


class GraphFormatError(GraphError):
    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class UnknownVertexError(GraphError):
    pass


class PathDiagram:
    """Immutable directed graph over latent and measured vertices.

    Parameters
    ----------
    vertices : sequence of (name, kind)
        Declaration order is kept as the canonical ordering.
    edges : sequence of (tail, head) or (tail, head, coefficient)
    """

    __slots__ = ("_vertices", "_kinds", "_index", "_edges", "_coefs",
                 "_parents", "_children")

    def __init__(self, vertices: Sequence[tuple[str, str]],
                 edges: Iterable[tuple] = ()):
        names: list[str] = []
        kinds: dict[str, str] = {}
        for name, kind in vertices:
            if kind not in (LATENT, MEASURED):
                raise GraphError(f"unknown vertex kind {kind!r}")
            if not _NAME.match(name):
                raise GraphError(f"invalid vertex name {name!r}")
            if name in kinds:
                raise GraphError(f"duplicate vertex {name!r}")
            names.append(name)
            kinds[name] = kind
        self._vertices = tuple(names)
        self._kinds = kinds
        self._index = {v: i for i, v in enumerate(names)}

        edge_list: list[tuple[str, str]] = []
        coefs: dict[tuple[str, str], float] = {}
        for e in edges:
            tail, head = e[0], e[1]
            for v in (tail, head):
                if v not in kinds:
                    raise UnknownVertexError(f"edge endpoint {v!r} is not a declared vertex")
            if tail == head:
                raise GraphError(f"self-loop on {tail!r}")
            if (tail, head) in coefs or (tail, head) in edge_list:
                raise GraphError(f"duplicate edge {tail} -> {head}")
            edge_list.append((tail, head))
            if len(e) > 2 and e[2] is not None:
                coefs[(tail, head)] = float(e[2])
        self._edges = tuple(edge_list)
        self._coefs = coefs

        parents: dict[str, list[str]] = {v: [] for v in names}
        children: dict[str, list[str]] = {v: [] for v in names}
        for tail, head in edge_list:
            parents[head].append(tail)
            children[tail].append(head)
        self._parents = {v: self.sort(p) for v, p in parents.items()}
        self._children = {v: self.sort(c) for v, c in children.items()}

    @classmethod
    def from_lists(cls, latent: Iterable[str] = (), measured: Iterable[str] = (),
                   edges: Iterable[tuple] = ()) -> "PathDiagram":
        verts = [(v, LATENT) for v in latent] + [(v, MEASURED) for v in measured]
        return cls(verts, edges)

    # -- basic accessors -------------------------------------------------

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return self._edges

    @property
    def latent(self) -> tuple[str, ...]:
        return tuple(v for v in self._vertices if self._kinds[v] == LATENT)

    @property
    def measured(self) -> tuple[str, ...]:
        return tuple(v for v in self._vertices if self._kinds[v] == MEASURED)

    def kind(self, v: str) -> str:
        self.check([v])
        return self._kinds[v]

    def coefficient(self, tail: str, head: str) -> Optional[float]:
        return self._coefs.get((tail, head))

    def has_edge(self, tail: str, head: str) -> bool:
        return head in self._children.get(tail, ())

    def parents(self, v: str) -> tuple[str, ...]:
        self.check([v])
        return self._parents[v]

    def children(self, v: str) -> tuple[str, ...]:
        self.check([v])
        return self._children[v]

    def index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownVertexError(f"unknown vertex {v!r}") from None

    def __contains__(self, v) -> bool:
        return v in self._index

    def __len__(self) -> int:
        return len(self._vertices)

    def check(self, vs: Iterable[str]) -> None:
        for v in vs:
            if v not in self._index:
                raise UnknownVertexError(f"unknown vertex {v!r}")

    def sort(self, vs: Iterable[str]) -> tuple[str, ...]:
        """Return `vs` as a tuple in canonical (declaration) order."""
        vs = set(vs)
        self.check(vs)
        return tuple(sorted(vs, key=self._index.__getitem__))

    def with_edge(self, tail: str, head: str, coef: Optional[float] = None) -> "PathDiagram":
        edges = [(t, h, self._coefs.get((t, h))) for t, h in self._edges]
        edges.append((tail, head, coef))
        return PathDiagram([(v, self._kinds[v]) for v in self._vertices], edges)

    def subgraph_kinds(self) -> list[tuple[str, str]]:
        return [(v, self._kinds[v]) for v in self._vertices]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PathDiagram):
            return NotImplemented
        return (self._vertices == other._vertices and self._kinds == other._kinds
                and self._edges == other._edges and self._coefs == other._coefs)

    def __hash__(self):
        return hash((self._vertices, self._edges))

    def __repr__(self) -> str:
        return f"PathDiagram({len(self._vertices)} vertices, {len(self._edges)} edges)"

    # -- reachability ----------------------------------------------------

    def descendants(self, sources: Iterable[str]) -> set[str]:
        """Vertices reachable from `sources` by directed paths, sources included."""
        return self._reach(sources, self._children)

    def ancestors(self, sinks: Iterable[str]) -> set[str]:
        """Vertices with a directed path into `sinks`, sinks included."""
        return self._reach(sinks, self._parents)

    def _reach(self, start: Iterable[str], nbrs) -> set[str]:
        start = list(start)
        self.check(start)
        seen = set(start)
        stack = list(start)
        while stack:
            v = stack.pop()
            for w in nbrs[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def to_text(self) -> str:
        return emit_path_diagram(self)


# -- file format -------------------------------------------------------------

def parse_path_diagram(text: str) -> PathDiagram:
    """Parse the line-oriented graph format.

    ::

        # comment
        latent L1 L2
        measured X1 X2
        edge L1 -> X1 0.5
    """
    verts: list[tuple[str, str]] = []
    declared: dict[str, int] = {}
    edges: list[tuple[str, str, Optional[float]]] = []
    edge_lines: list[int] = []
    seen_edges: set[tuple[str, str]] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        head = tokens[0]
        if head in (LATENT, MEASURED):
            if len(tokens) < 2:
                raise GraphFormatError(lineno, f"'{head}' needs at least one name")
            for name in tokens[1:]:
                if not _NAME.match(name):
                    raise GraphFormatError(lineno, f"invalid vertex name {name!r}")
                if name in declared:
                    raise GraphFormatError(
                        lineno, f"duplicate vertex {name!r} (first declared on line {declared[name]})")
                declared[name] = lineno
                verts.append((name, head))
        elif head == "edge":
            if len(tokens) not in (4, 5) or tokens[2] != "->":
                raise GraphFormatError(lineno, "expected 'edge <tail> -> <head> [<coef>]'")
            tail, dst = tokens[1], tokens[3]
            for name in (tail, dst):
                if not _NAME.match(name):
                    raise GraphFormatError(lineno, f"invalid vertex name {name!r}")
            if tail == dst:
                raise GraphFormatError(lineno, f"self-loop on {tail!r}")
            if (tail, dst) in seen_edges:
                raise GraphFormatError(lineno, f"duplicate edge {tail} -> {dst}")
            coef = None
            if len(tokens) == 5:
                try:
                    coef = float(tokens[4])
                except ValueError:
                    raise GraphFormatError(lineno, f"bad coefficient {tokens[4]!r}") from None
            seen_edges.add((tail, dst))
            edges.append((tail, dst, coef))
            edge_lines.append(lineno)
        else:
            raise GraphFormatError(lineno, f"unrecognised directive {head!r}")

    for (tail, dst, _), lineno in zip(edges, edge_lines):
        for name in (tail, dst):
            if name not in declared:
                raise GraphFormatError(lineno, f"undeclared endpoint {name!r}")
    return PathDiagram(verts, edges)


def emit_path_diagram(g: PathDiagram) -> str:
    """Canonical text form; ``parse_path_diagram`` of the result returns `g`."""
    lines = []
    run_kind, run = None, []
    for v in g.vertices:
        k = g.kind(v)
        if k != run_kind and run:
            lines.append(" ".join([run_kind] + run))
            run = []
        run_kind = k
        run.append(v)
    if run:
        lines.append(" ".join([run_kind] + run))
    for tail, head in g.edges:
        c = g.coefficient(tail, head)
        lines.append(f"edge {tail} -> {head}" + ("" if c is None else f" {c!r}"))
    return "\n".join(lines) + "\n"


# -- treks -------------------------------------------------------------------

@dataclass(frozen=True)
class Trek:
    """Pair of directed paths from a common top; `p1` ends on the row side."""

    p1: tuple[str, ...]
    p2: tuple[str, ...]

    def __post_init__(self):
        if not self.p1 or not self.p2 or self.p1[0] != self.p2[0]:
            raise ValueError("trek paths must share their source")

    @property
    def top(self) -> str:
        return self.p1[0]

    @property
    def is_simple(self) -> bool:
        return set(self.p1) & set(self.p2) == {self.top}

    def reversed(self) -> "Trek":
        return Trek(self.p2, self.p1)

    def __str__(self) -> str:
        return f"(<{', '.join(self.p1)}>; <{', '.join(self.p2)}>)"


@dataclass(frozen=True)
class ChokePair:
    ca: frozenset
    cb: frozenset

    def __init__(self, ca: Iterable[str] = (), cb: Iterable[str] = ()):
        object.__setattr__(self, "ca", frozenset(ca))
        object.__setattr__(self, "cb", frozenset(cb))

    @property
    def size(self) -> int:
        return len(self.ca) + len(self.cb)

    def swapped(self) -> "ChokePair":
        return ChokePair(self.cb, self.ca)


def simple_paths_into(g: PathDiagram, sink: str) -> dict[str, list[tuple[str, ...]]]:
    """All simple directed paths ending at `sink`, grouped by source."""
    g.check([sink])
    out: dict[str, list[tuple[str, ...]]] = {}

    def walk(path: list[str]):
        # path is stored sink-first while walking upward
        out.setdefault(path[-1], []).append(tuple(reversed(path)))
        for p in g.parents(path[-1]):
            if p not in path:
                path.append(p)
                walk(path)
                path.pop()

    walk([sink])
    return out


def _path_key(g: PathDiagram, path: Sequence[str]) -> tuple[int, ...]:
    return tuple(g.index(v) for v in path)


def simple_treks(g: PathDiagram, i: str, j: str) -> list[Trek]:
    """Simple treks from `i` to `j`, sorted canonically."""
    g.check([i, j])
    into_i = simple_paths_into(g, i)
    into_j = simple_paths_into(g, j)
    treks = []
    for top in set(into_i) & set(into_j):
        for p1 in into_i[top]:
            s1 = set(p1)
            for p2 in into_j[top]:
                if s1 & set(p2) == {top}:
                    treks.append(Trek(p1, p2))
    treks.sort(key=lambda t: (_path_key(g, t.p1), _path_key(g, t.p2)))
    return treks


@dataclass(frozen=True)
class Separation:
    separated: bool
    witness: Optional[Trek] = None

    def __bool__(self) -> bool:
        return self.separated


def t_separates(g: PathDiagram, pair: ChokePair, a: Iterable[str],
                b: Iterable[str]) -> Separation:
    """Decide whether ``(pair.ca; pair.cb)`` trek-separates `a` from `b`.

    Searches the trek walks breadth-first; a shortest unblocked walk visits
    each vertex at most once per side, so the witness has individually
    simple legs.
    """
    a, b = g.sort(a), g.sort(b)
    ca, cb = set(pair.ca), set(pair.cb)
    g.check(ca | cb)
    targets = set(b)

    # state: (vertex, side); side 0 = climbing the row leg, 1 = descending
    prev: dict[tuple[str, int], Optional[tuple[str, int]]] = {}
    queue: deque = deque()
    for v in a:
        if v not in ca:
            prev[(v, 0)] = None
            queue.append((v, 0))
    end = None
    while queue:
        state = queue.popleft()
        v, side = state
        if side == 0:
            nxt = [(p, 0) for p in g.parents(v) if p not in ca]
            if v not in cb:
                nxt.insert(0, (v, 1))
        else:
            if v in targets:
                end = state
                break
            nxt = [(c, 1) for c in g.children(v) if c not in cb]
        for s in nxt:
            if s not in prev:
                prev[s] = state
                queue.append(s)
    if end is None:
        return Separation(True)

    chain = []
    s = end
    while s is not None:
        chain.append(s)
        s = prev[s]
    chain.reverse()  # starts at the row sink, climbs, then descends
    up = [v for v, side in chain if side == 0]
    down = [v for v, side in chain if side == 1]
    return Separation(False, Trek(tuple(reversed(up)), tuple(down)))


def directed_region(g: PathDiagram, c: Iterable[str], s: Iterable[str]) -> set[str]:
    """Vertices on directed paths from `c` to `s`, excluding members of `c`."""
    c, s = set(c), set(s)
    g.check(c | s)
    if not c or not s:
        return set()
    return (g.descendants(c) & g.ancestors(s)) - c


def vertices_on_cycles(g: PathDiagram) -> set[str]:
    """Vertices lying on a directed cycle of length at least two."""
    return {v for v in g.vertices
            if g.children(v) and v in g.descendants(g.children(v))}


def strongly_connected_blocks(g: PathDiagram) -> list[tuple[str, ...]]:
    """Strong components in a topological order of the condensation.

    Ties between independent components are broken by canonical order, so
    the result is deterministic.
    """
    reach = {v: g.descendants([v]) for v in g.vertices}
    comp_of: dict[str, int] = {}
    comps: list[tuple[str, ...]] = []
    for v in g.vertices:
        if v in comp_of:
            continue
        members = g.sort(u for u in reach[v] if v in reach[u])
        for u in members:
            comp_of[u] = len(comps)
        comps.append(members)
    indeg = [0] * len(comps)
    succ: list[set[int]] = [set() for _ in comps]
    for tail, head in g.edges:
        ct, ch = comp_of[tail], comp_of[head]
        if ct != ch and ch not in succ[ct]:
            succ[ct].add(ch)
            indeg[ch] += 1
    order = []
    ready = [i for i, d in enumerate(indeg) if d == 0]
    while ready:
        ready.sort()
        i = ready.pop(0)
        order.append(comps[i])
        for j in sorted(succ[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    return order
