"""Tetrad-vote clustering of measured indicators and its evaluation metrics.

This is a deliberately small relative of BuildPureClusters.  Two indicators
i, j are voted into the same cluster when the tetrads with rows {i, j} and
columns {k, l} are retained for (nearly) every other pair k, l: if i and j
share a single latent parent L, ({L}; {}) separates {i, j} from anything,
so all of those tetrads vanish, while indicators of different latents fail
most of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Optional, Union

import numpy as np

from .data import CovMatrix, Dataset
from .graph import LATENT, PathDiagram
from .sem import SemModel
from .stats import sample_cov, tetrad_stats


class ClusterError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterResult:
    clusters: tuple[tuple[str, ...], ...]
    discarded: tuple[str, ...]
    alpha: float
    votes: np.ndarray = field(repr=False, compare=False)
    names: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"clusters": [list(c) for c in self.clusters],
                "discarded": list(self.discarded), "alpha": self.alpha}


@lru_cache(maxsize=8)
def _quads(p: int):
    """Index arrays (pair, i, j, k, l) for every row pair and disjoint column pair."""
    pairs = list(combinations(range(p), 2))
    pid, ii, jj, kk, ll = [], [], [], [], []
    for n, (i, j) in enumerate(pairs):
        others = [v for v in range(p) if v != i and v != j]
        for k, l in combinations(others, 2):
            pid.append(n)
            ii.append(i)
            jj.append(j)
            kk.append(k)
            ll.append(l)
    return pairs, tuple(np.array(a) for a in (pid, ii, jj, kk, ll))


def tetrad_votes(cov: CovMatrix, alpha: float = 0.01, method: str = "wishart",
                 exact_tol: float = 1e-9) -> np.ndarray:
    """Symmetric matrix of retained-tetrad fractions for each variable pair.

    ``method="exact"`` retains a tetrad iff it vanishes up to `exact_tol`
    relative to its two products (an oracle for population matrices).
    """
    p = len(cov.names)
    pairs, (pid, i, j, k, l) = _quads(p)
    s = cov.matrix
    if method == "wishart":
        if cov.n is None:
            raise ClusterError("Wishart votes need a sample covariance with n")
        _, _, pval, _, _ = tetrad_stats(s, cov.n, i, j, k, l)
        kept = pval > alpha
    elif method == "exact":
        a, b = s[i, k] * s[j, l], s[i, l] * s[j, k]
        kept = np.abs(a - b) <= exact_tol * np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
    else:
        raise ClusterError(f"unknown method {method!r}")
    frac = np.bincount(pid, weights=kept.astype(float), minlength=len(pairs))
    frac /= np.bincount(pid, minlength=len(pairs))
    votes = np.zeros((p, p))
    for n, (a, b) in enumerate(pairs):
        votes[a, b] = votes[b, a] = frac[n]
    np.fill_diagonal(votes, 1.0)
    return votes


def _components(alive: list[int], adj: np.ndarray) -> list[list[int]]:
    left = set(alive)
    comps = []
    for v in alive:
        if v not in left:
            continue
        comp, stack = [], [v]
        left.discard(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in sorted(left):
                if adj[u, w]:
                    left.discard(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def clusters_from_votes(votes: np.ndarray, threshold: float,
                        min_link: float = 0.5) -> tuple[list[list[int]], list[int]]:
    """Connected components of the co-cluster relation after pruning.

    A member of a component is inconsistent when it co-clusters with fewer
    than ``min_link`` of the other members.  Inconsistent members are
    discarded one at a time (fewest partners first, latest index on ties)
    and components recomputed, so a variable bridging two groups is removed
    while a single failed vote inside a group is tolerated.  Components
    below three members are discarded.
    """
    p = votes.shape[0]
    adj = votes >= threshold
    np.fill_diagonal(adj, False)
    alive = list(range(p))
    while True:
        comps = _components(alive, adj)
        worst = None
        for comp in comps:
            deg = {v: int(adj[v, comp].sum()) for v in comp}
            bad = [v for v in comp if deg[v] < min_link * (len(comp) - 1)]
            if bad:
                worst = min(bad, key=lambda v: (deg[v], -v))
                break
        if worst is None:
            break
        alive.remove(worst)
    clusters = [c for c in comps if len(c) >= 3]
    kept = {v for c in clusters for v in c}
    return clusters, sorted(v for v in range(p) if v not in kept)


def find_pure_clusters(data: Union[Dataset, CovMatrix], alpha: float = 0.01,
                       vote_threshold: float = 0.95, method: str = "wishart") -> ClusterResult:
    """Cluster measured variables by tetrad votes.

    Parameters
    ----------
    data : Dataset or CovMatrix
        Measured variables only.  A CovMatrix without ``n`` needs
        ``method="exact"``.
    alpha : float
        Tetrads with p-value above `alpha` are retained.
    vote_threshold : float
        Fraction of retained tetrads needed to co-cluster a pair.
    """
    cov = sample_cov(data) if isinstance(data, Dataset) else data
    names = cov.names
    if len(names) < 4:
        return ClusterResult((), tuple(names), alpha, np.eye(len(names)), tuple(names))
    votes = tetrad_votes(cov, alpha, method)
    clusters, discarded = clusters_from_votes(votes, vote_threshold)
    return ClusterResult(tuple(tuple(names[v] for v in c) for c in clusters),
                         tuple(names[v] for v in discarded), alpha, votes, tuple(names))


# -- evaluation against a known generating graph -----------------------------

def _truth_graph(truth: Union[SemModel, PathDiagram]) -> PathDiagram:
    return truth.graph if isinstance(truth, SemModel) else truth


def _single_latent(g: PathDiagram, v: str) -> Optional[str]:
    lat = [p for p in g.parents(v) if g.kind(p) == LATENT]
    return lat[0] if len(lat) == 1 else None


def _max_independent(g: PathDiagram, members: list[str], required=()) -> int:
    """Largest subset of `members` containing `required` with no edges inside."""
    members = list(members)
    linked = [v for v in members
              if any(g.has_edge(v, u) or g.has_edge(u, v) for u in members if u != v)]
    free = len(members) - len(linked)
    required = set(required)
    best = -1
    for r in range(len(linked), -1, -1):
        for sub in combinations(linked, r):
            s = set(sub)
            if not required & set(linked) <= s:
                continue
            if any(g.has_edge(u, v) for u in sub for v in sub if u != v):
                continue
            best = r
            break
        if best >= 0:
            break
    return free + max(best, 0)


def largest_pure_subcluster(cluster, truth) -> int:
    """Size of the largest pure subset of `cluster`.

    A pure subset has members sharing one latent parent and no other latent
    parent, with no directed edges between members.
    """
    g = _truth_graph(truth)
    cluster = list(cluster)
    g.check(cluster)
    groups: dict[str, list[str]] = {}
    for v in cluster:
        lat = _single_latent(g, v)
        if lat is not None:
            groups.setdefault(lat, []).append(v)
    return max((_max_independent(g, m) for m in groups.values()), default=0)


def purity(cluster, truth) -> float:
    cluster = list(cluster)
    if not cluster:
        raise ClusterError("empty cluster")
    return largest_pure_subcluster(cluster, truth) / len(cluster)


def fraction_size(cluster, truth) -> Optional[float]:
    """|cluster| / size of the largest true pure subcluster containing it.

    Returns None when no pure subcluster contains `cluster`.
    """
    g = _truth_graph(truth)
    cluster = list(cluster)
    if not cluster:
        raise ClusterError("empty cluster")
    g.check(cluster)
    lats = {_single_latent(g, v) for v in cluster}
    if len(lats) != 1 or None in lats:
        return None
    (lat,) = lats
    if any(g.has_edge(u, v) for u in cluster for v in cluster if u != v):
        return None
    pool = [v for v in g.measured if _single_latent(g, v) == lat]
    return len(cluster) / _max_independent(g, pool, required=cluster)
