"""Transition graphs, canonical paths, spanning trees and fill weights.

Each Dirichlet block induces a graph on its basis pairs: two vertices are
linked when the + eigenvalue of their link matrix is nonzero.  The nu = 0
graph carries the classical transition structure used by the canonical-path
bounds; the nu > 0 graphs are reduced to spanning trees (one edge removed per
independent cycle) for the tree factorization.

Edges are kept whenever lam_plus > 0 exactly: a vanishing coupling product
yields an exact floating-point zero, so no tolerance is needed, and genuinely
weak edges (e.g. deep thermal suppression) are never lost.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .blocks import DirichletBlock
from .errors import Disconnected, VertexNotInTree


@dataclass(eq=False)
class TransitionGraph:
    """Graph on the basis pairs of one Dirichlet block.

    For nu = 0 the vertices are the energy labels themselves and `classical`
    holds the edge weights P(n,m) sigma_m (= lam_plus / 2 for that block).
    """

    nu: float
    n: int
    basis: np.ndarray
    edges: list  # canonical (i, j), i < j
    weight_plus: dict
    weight_minus: dict
    theta: dict
    classical: dict = None
    adjacency: list = field(default=None, repr=False)

    def neighbors(self, v: int):
        return self.adjacency[v]


def build_graph(db: DirichletBlock) -> TransitionGraph:
    """Edges where the + link eigenvalue is nonzero."""
    n = db.size
    iu, ju = np.triu_indices(n, 1)
    mask = db.lam_plus[iu, ju] > 0.0
    edges = list(zip(iu[mask].tolist(), ju[mask].tolist()))
    wplus = {e: float(db.lam_plus[e]) for e in edges}
    wminus = {e: float(db.lam_minus[e]) for e in edges}
    theta = {e: float(db.theta[e]) for e in edges}
    classical = None
    if db.nu == 0.0:
        classical = {e: 0.5 * wplus[e] for e in edges}
    adjacency = [[] for _ in range(n)]
    for i, j in edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    for lst in adjacency:
        lst.sort()
    return TransitionGraph(
        nu=db.nu,
        n=n,
        basis=db.basis,
        edges=edges,
        weight_plus=wplus,
        weight_minus=wminus,
        theta=theta,
        classical=classical,
        adjacency=adjacency,
    )


def _bfs_dist(g: TransitionGraph, source: int) -> np.ndarray:
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    queue = [source]
    head = 0
    while head < len(queue):
        v = queue[head]
        head += 1
        for u in g.adjacency[v]:
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


@dataclass(eq=False)
class CanonicalPaths:
    """Minimum-hop path for every unordered vertex pair of the complete graph.

    Ties are broken by the lexicographically smallest vertex sequence, making
    the choice deterministic.  paths[(a, b)] with a < b is the vertex sequence
    from a to b.
    """

    n: int
    paths: dict

    def length(self, a: int, b: int) -> int:
        a, b = (a, b) if a < b else (b, a)
        return len(self.paths[(a, b)]) - 1

    def steps(self, a: int, b: int):
        """Directed steps (u, v) along the stored a -> b path."""
        a, b = (a, b) if a < b else (b, a)
        p = self.paths[(a, b)]
        return list(zip(p[:-1], p[1:]))


def canonical_paths(g: TransitionGraph) -> CanonicalPaths:
    """Hop-minimal, lexicographically smallest paths on a connected graph."""
    dist_to = [None] * g.n
    for b in range(g.n):
        dist_to[b] = _bfs_dist(g, b)
    if any(int(dist_to[0][v]) < 0 for v in range(g.n)):
        raise Disconnected("transition graph is not connected")
    paths = {}
    for a in range(g.n):
        for b in range(a + 1, g.n):
            db = dist_to[b]
            seq = [a]
            cur = a
            while cur != b:
                nxt = next(u for u in g.adjacency[cur] if db[u] == db[cur] - 1)
                seq.append(nxt)
                cur = nxt
            paths[(a, b)] = seq
    return CanonicalPaths(n=g.n, paths=paths)


class _DSU:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


@dataclass(eq=False)
class SpanningTree:
    """Maximum-lam_plus spanning forest of a block graph.

    removed holds the edges deleted to break cycles (one per independent
    cycle).  Phases psi are propagated from each component root r (the
    lexicographically smallest vertex) by psi_b = e^{i theta_e} psi_a along a
    canonical edge (a < b); the tree factorization for a column rooted at m
    uses the ratios psi_l / psi_m.
    """

    n: int
    edges: list
    removed: list
    roots: list
    comp_id: np.ndarray
    parent: np.ndarray
    order: np.ndarray  # BFS preorder, roots first
    psi: np.ndarray  # complex units
    tin: np.ndarray
    tout: np.ndarray
    adjacency: list = field(repr=False, default=None)

    def in_subtree(self, x: int, m: int) -> bool:
        """Is m inside the subtree hanging below x (relative to the root)?"""
        return bool(self.tin[x] <= self.tin[m] < self.tout[x])

    def component_edges(self, comp: int):
        return [e for e in self.edges if self.comp_id[e[0]] == comp]


def spanning_tree(g: TransitionGraph) -> SpanningTree:
    """Greedy maximum spanning forest; ties broken by lexicographic edge id."""
    order = sorted(g.edges, key=lambda e: (-g.weight_plus[e], e))
    dsu = _DSU(g.n)
    tree_edges, removed = [], []
    for e in order:
        if dsu.union(e[0], e[1]):
            tree_edges.append(e)
        else:
            removed.append(e)
    tree_edges.sort()
    removed.sort()

    adjacency = [[] for _ in range(g.n)]
    for i, j in tree_edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    for lst in adjacency:
        lst.sort()

    comp_id = np.full(g.n, -1, dtype=np.int64)
    parent = np.full(g.n, -1, dtype=np.int64)
    psi = np.ones(g.n, dtype=complex)
    order_list = []
    roots = []
    for v in range(g.n):
        if comp_id[v] >= 0:
            continue
        roots.append(v)
        comp = len(roots) - 1
        comp_id[v] = comp
        queue = [v]
        head = 0
        while head < len(queue):
            x = queue[head]
            head += 1
            order_list.append(x)
            for u in adjacency[x]:
                if comp_id[u] < 0:
                    comp_id[u] = comp
                    parent[u] = x
                    a, b = (x, u) if x < u else (u, x)
                    th = g.theta[(a, b)]
                    # rule: psi_b = e^{i theta} psi_a for the canonical edge (a, b)
                    if u == b:
                        psi[u] = psi[x] * cmath.exp(1j * th)
                    else:
                        psi[u] = psi[x] * cmath.exp(-1j * th)
                    queue.append(u)

    # Euler intervals for subtree membership, per component rooting
    tin = np.zeros(g.n, dtype=np.int64)
    tout = np.zeros(g.n, dtype=np.int64)
    children = [[] for _ in range(g.n)]
    for v in range(g.n):
        if parent[v] >= 0:
            children[parent[v]].append(v)
    clock = 0
    for r in roots:
        stack = [(r, False)]
        while stack:
            x, done = stack.pop()
            if done:
                tout[x] = clock
                continue
            tin[x] = clock
            clock += 1
            stack.append((x, True))
            for c in reversed(children[x]):
                stack.append((c, False))

    return SpanningTree(
        n=g.n,
        edges=tree_edges,
        removed=removed,
        roots=roots,
        comp_id=comp_id,
        parent=parent,
        order=np.array(order_list, dtype=np.int64),
        psi=psi,
        tin=tin,
        tout=tout,
        adjacency=adjacency,
    )


def _subtree_sums(t: SpanningTree, vertex_vals: np.ndarray, edge_val) -> tuple:
    """Per-vertex sums over the hanging subtree.

    Returns (sub_v, sub_e): sub_v[x] sums vertex_vals over subtree(x);
    sub_e[x] sums edge_val over edges strictly inside subtree(x).
    """
    sub_v = np.array(vertex_vals, dtype=float).copy()
    sub_e = np.zeros(t.n)
    for x in t.order[::-1]:
        p = t.parent[x]
        if p >= 0:
            sub_v[p] += sub_v[x]
            sub_e[p] += sub_e[x] + edge_val(min(p, x), max(p, x))
    return sub_v, sub_e


def fill_weights(t: SpanningTree, db: DirichletBlock, m: int) -> dict:
    """Fill weight omega_m for every tree edge of m's component.

    For the edge e below vertex x (towards the root), the far side relative to
    m collects lam_minus(e) + sum of phi over its vertices + twice lam_minus
    over its internal edges; equivalently the recursion

        omega_m(l, n) = phi_n + lam_minus(l, n)
                        + sum_{r ~ n, r != l} (omega_m(n, r) + lam_minus(n, r))

    unrolled from the leaves.
    """
    if not 0 <= m < t.n:
        raise VertexNotInTree(f"vertex {m} not in tree of size {t.n}")
    lam = lambda i, j: float(db.lam_minus[i, j])
    sub_phi, sub_lam = _subtree_sums(t, db.phi, lam)
    comp = t.comp_id[m]
    members = [v for v in range(t.n) if t.comp_id[v] == comp]
    comp_phi = float(sum(db.phi[v] for v in members))
    comp_lam = float(
        sum(lam(*e) for e in t.edges if t.comp_id[e[0]] == comp)
    )
    out = {}
    for i, j in t.edges:
        if t.comp_id[i] != comp:
            continue
        x = j if t.parent[j] == i else i  # child endpoint
        le = lam(i, j)
        if t.in_subtree(x, m):
            out[(i, j)] = le + (comp_phi - sub_phi[x]) + 2.0 * (
                comp_lam - sub_lam[x] - le
            )
        else:
            out[(i, j)] = le + sub_phi[x] + 2.0 * sub_lam[x]
    return out
