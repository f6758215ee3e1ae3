"""Centrality measures, entropy-weighted TOPSIS and caching-centre election."""
from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError

MEASURES = ("IC", "OC", "CC", "cc", "BC", "EC")
# floor on a node's total shortest-path cost when computing closeness; the
# min-max normalisation gives the cheapest link exactly zero weight
MIN_PATH_COST = 1e-9


def _arrays(graph):
    """Accept a DeviceGraph or an ``(adjacency, weights)`` pair."""
    if isinstance(graph, tuple):
        adj, w = graph
    else:
        adj, w = graph.adjacency, graph.weights
    adj = np.asarray(adj, dtype=bool)
    return adj, np.where(adj, np.asarray(w, dtype=float), 0.0)


def in_out_degree(graph) -> tuple[np.ndarray, np.ndarray]:
    adj, _ = _arrays(graph)
    n = len(adj)
    if n < 2:
        raise DomainError("degree centrality needs at least two devices")
    return adj.sum(axis=0) / (n - 1), adj.sum(axis=1) / (n - 1)


def clustering_coefficient(graph) -> np.ndarray:
    adj, w = _arrays(graph)
    c = np.cbrt(w)
    triangles = np.einsum("ik,kl,li->i", c, c, c)
    deg = adj.sum(axis=0) + adj.sum(axis=1)
    out = np.zeros(len(adj))
    ok = deg >= 2
    out[ok] = triangles[ok] / (deg[ok] * (deg[ok] - 1))
    return out


def shortest_paths(graph, source: int):
    """Dijkstra from ``source``.

    Returns ``(cost, count, order, preds)``: shortest cost to every node (inf if
    unreachable), number of distinct shortest paths, settle order and the
    shortest-path predecessor lists.  Relaxations into already settled nodes are
    skipped so zero-weight edges cannot loop.
    """
    adj, w = _arrays(graph)
    n = len(adj)
    cost = np.full(n, np.inf)
    count = np.zeros(n)
    preds: list[list[int]] = [[] for _ in range(n)]
    settled = np.zeros(n, dtype=bool)
    cost[source] = 0.0
    count[source] = 1.0
    heap = [(0.0, source)]
    order = []
    nbrs = [np.nonzero(adj[u])[0] for u in range(n)]
    while heap:
        d, u = heapq.heappop(heap)
        if settled[u] or d > cost[u]:
            continue
        settled[u] = True
        order.append(u)
        for v in nbrs[u]:
            if settled[v]:
                continue
            nd = d + w[u, v]
            if nd < cost[v]:
                cost[v] = nd
                count[v] = count[u]
                preds[v] = [u]
                heapq.heappush(heap, (nd, v))
            elif nd == cost[v]:
                count[v] += count[u]
                preds[v].append(u)
    return cost, count, order, preds


def closeness_betweenness(graph) -> tuple[np.ndarray, np.ndarray]:
    """Closeness over reachable targets and unnormalised directed betweenness."""
    adj, _ = _arrays(graph)
    n = len(adj)
    cc = np.zeros(n)
    bc = np.zeros(n)
    for s in range(n):
        cost, sigma, order, preds = shortest_paths(graph, s)
        reach = np.isfinite(cost)
        reach[s] = False
        if reach.any():
            cc[s] = (n - 1) / max(float(cost[reach].sum()), MIN_PATH_COST)
        delta = np.zeros(n)
        for v in reversed(order):
            for u in preds[v]:
                delta[u] += sigma[u] / sigma[v] * (1.0 + delta[v])
            if v != s:
                bc[v] += delta[v]
    return cc, bc


def _has_cycle(adj: np.ndarray) -> bool:
    """Kahn's algorithm: a directed graph is acyclic iff every node can be peeled."""
    indeg = adj.sum(axis=0).astype(int)
    stack = [i for i in range(len(adj)) if indeg[i] == 0]
    peeled = 0
    while stack:
        u = stack.pop()
        peeled += 1
        for v in np.nonzero(adj[u])[0]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return peeled < len(adj)


def eigenvector_centrality(graph, tol: float = 1e-10, max_iter: int = 20_000,
                           accept: float = 1e-4) -> np.ndarray:
    """Adjacency-weighted Perron vector of ``W`` scaled by its reciprocal eigenvalue.

    Power iteration runs on ``W + I`` so periodic graphs still converge.  Graphs
    without a positive-weight cycle have a zero dominant eigenvalue and score
    zero everywhere.  A defective dominant eigenvalue converges only
    algebraically, so an iterate whose eigen-residual is below ``accept`` is
    used when ``max_iter`` runs out.
    """
    adj, w = _arrays(graph)
    n = len(adj)
    if n == 0 or not _has_cycle(w > 0):
        return np.zeros(n)
    shifted = w + np.eye(n)
    e = np.ones(n) / n
    for _ in range(max_iter):
        nxt = shifted @ e
        nxt /= nxt.max()
        if np.abs(nxt - e).max() < tol:
            e = nxt
            break
        e = nxt
    else:
        we = w @ e
        lam = float(we.max())
        residual = float(np.abs(we - lam * e).max() / lam) if lam > 0 else math.inf
        if residual > accept:
            raise ConvergenceError("eigenvector centrality did not converge", residual)
    lam = float((w @ e).max())
    if lam <= tol:
        return np.zeros(n)
    return (adj.astype(float) @ e) / lam


def centrality_table(graph) -> np.ndarray:
    """``n x 6`` matrix with columns in ``MEASURES`` order."""
    adj, _ = _arrays(graph)
    n = len(adj)
    if n == 1:
        return np.zeros((1, 6))
    ic, oc = in_out_degree(graph)
    cc, bc = closeness_betweenness(graph)
    return np.column_stack([ic, oc, clustering_coefficient(graph), cc, bc, eigenvector_centrality(graph)])


@dataclass(frozen=True)
class TopsisResult:
    matrix: np.ndarray = field(repr=False)
    normalized: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    weighted: np.ndarray = field(repr=False)
    ideal: np.ndarray = field(repr=False)
    anti_ideal: np.ndarray = field(repr=False)
    d_plus: np.ndarray = field(repr=False)
    d_minus: np.ndarray = field(repr=False)
    scores: np.ndarray
    elected: int


def entropy_weights(normalized: np.ndarray) -> np.ndarray:
    m = normalized.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        xlogx = np.where(normalized > 0, normalized * np.log(np.where(normalized > 0, normalized, 1.0)), 0.0)
    d = 1.0 + xlogx.sum(axis=0) / math.log(m)
    denom = math.sqrt(abs(float(d.sum())))
    if denom == 0.0:
        return np.zeros_like(d)
    return d / denom


def topsis_elect(matrix) -> TopsisResult:
    """Rank rows of an ``m x 6`` evaluation matrix and elect the best one."""
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DomainError("evaluation matrix needs at least one row")
    m = x.shape[0]
    if m == 1:
        one = np.ones(1)
        return TopsisResult(x, x.copy(), np.zeros(x.shape[1]), x.copy(), x[0].copy(), x[0].copy(),
                            np.zeros(1), np.zeros(1), one, 0)
    col = x.sum(axis=0)
    root = np.sqrt(np.where(col > 0, col, 1.0))
    xn = np.where(col > 0, x / root, 0.0)
    omega = entropy_weights(xn)
    y = xn * omega
    s_plus, s_minus = y.max(axis=0), y.min(axis=0)
    d_plus = np.sqrt(((s_plus - y) ** 2).sum(axis=1))
    d_minus = np.sqrt(((s_minus - y) ** 2).sum(axis=1))
    tot = d_plus + d_minus
    scores = np.where(tot > 0, d_minus / np.where(tot > 0, tot, 1.0), 0.5)
    return TopsisResult(x, xn, omega, y, s_plus, s_minus, d_plus, d_minus, scores, int(np.argmax(scores)))


@dataclass(frozen=True)
class Election:
    tdccs: tuple[int, ...]
    centralities: np.ndarray = field(repr=False)
    scores: np.ndarray = field(repr=False)
    routes: dict = field(repr=False, default_factory=dict)


def _route(preds, target_path_end: int, source: int) -> list[int]:
    path = [target_path_end]
    while path[-1] != source:
        path.append(min(preds[path[-1]]))
    return path[::-1]


def elect_tdccs(graph, partition) -> Election:
    """One caching centre per community, ranked on the community subgraph.

    Routes map each member to its lowest-index shortest path toward the
    centre (member indices in graph order), or ``None`` when unreachable.
    """
    adj, w = _arrays(graph)
    n = len(adj)
    table = np.zeros((n, 6))
    scores = np.zeros(n)
    tdccs = []
    routes = {}
    for members in partition.communities:
        idx = np.asarray(members)
        sub = (adj[np.ix_(idx, idx)], w[np.ix_(idx, idx)])
        cent = centrality_table(sub)
        res = topsis_elect(cent)
        table[idx] = cent
        scores[idx] = res.scores
        head = int(idx[res.elected])
        tdccs.append(head)
        for local, member in enumerate(idx):
            cost, _, _, preds = shortest_paths(sub, local)
            if not np.isfinite(cost[res.elected]):
                routes[int(member)] = None
            else:
                routes[int(member)] = [int(idx[k]) for k in _route(preds, res.elected, local)]
    return Election(tuple(tdccs), table, scores, routes)


def write_centrality_csv(path, graph, election: Election) -> None:
    heads = set(election.tdccs)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["device", *MEASURES, "score", "is_tdcc"])
        for i, d in enumerate(graph.devices):
            writer.writerow([d.id, *[repr(float(v)) for v in election.centralities[i]],
                             repr(float(election.scores[i])), int(i in heads)])
