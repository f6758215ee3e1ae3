"""Weighted directed modularity and recursive spectral bisection."""
from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .d2dnet import DeviceGraph, update_topology
from .errors import ConvergenceError, DomainError
from .radio import RadioParams

# splits with a gain at or below this are rejected as numerical noise
SPLIT_TOLERANCE = 1e-12
ZERO_COMPONENT = 1e-12


@dataclass(frozen=True)
class Partition:
    labels: np.ndarray = field(repr=False)
    modularity: float
    history: tuple[float, ...] = ()
    splits: tuple[float, ...] = ()

    @property
    def communities(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for i, c in enumerate(self.labels):
            groups.setdefault(int(c), []).append(i)
        return [groups[c] for c in sorted(groups)]

    @property
    def count(self) -> int:
        return len(set(int(c) for c in self.labels))


def _weights(graph_or_matrix) -> np.ndarray:
    if isinstance(graph_or_matrix, DeviceGraph):
        return np.where(graph_or_matrix.adjacency, graph_or_matrix.weights, 0.0)
    return np.asarray(graph_or_matrix, dtype=float)


def modularity_matrix(w: np.ndarray) -> tuple[np.ndarray, float]:
    """``B[i, k] = w[i, k] - in_i * out_k / W`` and the total weight ``W``."""
    total = float(w.sum())
    if total <= 0:
        raise DomainError("modularity is undefined for a graph with zero total weight")
    w_in = w.sum(axis=0)
    w_out = w.sum(axis=1)
    return w - np.outer(w_in, w_out) / total, total


def modularity(graph, labels) -> float:
    """Directed weighted modularity normalised by ``1/W`` (not ``1/2W``)."""
    b, total = modularity_matrix(_weights(graph))
    lab = np.asarray(labels)
    same = lab[:, None] == lab[None, :]
    return float(b[same].sum() / total)


def canonical_labels(labels) -> np.ndarray:
    """Renumber communities in order of their smallest member."""
    mapping: dict = {}
    out = np.empty(len(labels), dtype=int)
    for i, c in enumerate(labels):
        out[i] = mapping.setdefault(c, len(mapping))
    return out


def split_matrix(b: np.ndarray, members) -> np.ndarray:
    """Symmetrised generalised modularity matrix of a sub-community.

    Subtracting the row sums from the diagonal makes ``s' S s / 4W`` the exact
    change in modularity when the sub-community is split by ``s``.
    """
    idx = np.asarray(members, dtype=int)
    sub = b[np.ix_(idx, idx)]
    sym = sub + sub.T
    return sym - np.diag(sym.sum(axis=1))


def split_gain(s_matrix: np.ndarray, s: np.ndarray, total: float) -> float:
    s = np.asarray(s, dtype=float)
    return float(s @ s_matrix @ s / (4.0 * total))


def _orient(vec: np.ndarray) -> np.ndarray:
    # largest-magnitude component positive; argmax picks the lowest index on ties
    return -vec if vec[int(np.argmax(np.abs(vec)))] < 0 else vec


def eigenpairs(sym: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix, eigenvalues in decreasing order."""
    try:
        values, vectors = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigen-decomposition failed: {exc}") from exc
    residual = float(np.linalg.norm(sym @ vectors - vectors * values))
    if not np.isfinite(residual) or residual > 1e-6 * max(1.0, float(np.abs(values).max(initial=0.0))):
        raise ConvergenceError("eigenvectors not resolved", residual)
    return values[::-1], vectors[:, ::-1]


def leading_eigenpair(sym: np.ndarray) -> tuple[float, np.ndarray]:
    values, vectors = eigenpairs(sym)
    return float(values[0]), _orient(vectors[:, 0].copy())


def refine_split(s_matrix: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Vertex-move refinement of a bisection (Kernighan-Lin style passes).

    Each pass moves every vertex once, always taking the best available move,
    and keeps the best state seen.  Passes repeat until one fails to improve.
    """
    s = s.astype(float).copy()
    off = s_matrix - np.diag(np.diag(s_matrix))
    n = len(s)
    while True:
        current = s.copy()
        moved = np.zeros(n, dtype=bool)
        score = 0.0
        best_score, best_state = 0.0, s.copy()
        for _ in range(n):
            gains = -4.0 * current * (off @ current)
            gains[moved] = -np.inf
            v = int(np.argmax(gains))
            score += gains[v]
            current[v] = -current[v]
            moved[v] = True
            if score > best_score + 1e-13:
                best_score, best_state = score, current.copy()
        if best_score <= 1e-13:
            return s
        s = best_state


def spectral_split(graph, members, refine: bool = True):
    """Bisect ``members`` by the sign of the leading eigenvector.

    Returns ``(s, gain)`` with ``s`` in {-1, +1} aligned to ``members`` and
    ``gain`` the resulting modularity change.
    """
    members = list(members)
    if len(members) < 2:
        raise DomainError("a split needs at least two members")
    b, total = modularity_matrix(_weights(graph))
    sm = split_matrix(b, members)
    values, vectors = eigenpairs(sm)
    lead = _orient(vectors[:, 0])
    s = np.where(lead >= -ZERO_COMPONENT, 1.0, -1.0)
    if refine:
        # the leading split is refined first; sign splits of the other
        # positive-eigenvalue vectors only replace it when strictly better
        best_s = refine_split(sm, s)
        best_gain = split_gain(sm, best_s, total)
        for k in range(1, len(values)):
            if values[k] <= 0:
                break
            vec = _orient(vectors[:, k])
            cand = refine_split(sm, np.where(vec >= -ZERO_COMPONENT, 1.0, -1.0))
            gain = split_gain(sm, cand, total)
            if gain > best_gain + 1e-13:
                best_s, best_gain = cand, gain
        s = best_s
        if s[int(np.argmax(np.abs(lead)))] < 0:
            s = -s
    return s.astype(int), split_gain(sm, s, total)


def _components(adjacency: np.ndarray) -> np.ndarray:
    n = len(adjacency)
    und = adjacency | adjacency.T
    labels = -np.ones(n, dtype=int)
    nxt = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = nxt
        stack = [start]
        while stack:
            u = stack.pop()
            for v in np.nonzero(und[u])[0]:
                if labels[v] < 0:
                    labels[v] = nxt
                    stack.append(v)
        nxt += 1
    return labels


def divide(graph: DeviceGraph, refine: bool = True) -> Partition:
    """Recursive bisection with a FIFO work queue.

    Devices without links start as singletons.  When links exist but carry no
    weight, modularity is undefined; the weakly connected components are
    returned with ``Q = 0``.
    """
    n = graph.n
    if n == 0:
        return Partition(np.zeros(0, dtype=int), 0.0)
    adj = graph.adjacency
    w = _weights(graph)
    if w.sum() <= 0:
        return Partition(canonical_labels(_components(adj)), 0.0)
    linked = adj.any(axis=0) | adj.any(axis=1)
    labels = np.empty(n, dtype=int)
    next_label = 0
    for i in np.nonzero(~linked)[0]:
        labels[i] = next_label
        next_label += 1
    queue = deque([list(np.nonzero(linked)[0])])
    gains = []
    while queue:
        group = queue.popleft()
        if len(group) >= 2:
            s, gain = spectral_split(w, group, refine=refine)
            if gain > SPLIT_TOLERANCE and abs(int(s.sum())) < len(group):
                queue.append([g for g, si in zip(group, s) if si > 0])
                queue.append([g for g, si in zip(group, s) if si < 0])
                gains.append(gain)
                continue
        for g in group:
            labels[g] = next_label
        next_label += 1
    labels = canonical_labels(labels)
    return Partition(labels, modularity(w, labels), splits=tuple(gains))


def optimal_network_partition(graph: DeviceGraph, params: RadioParams, max_iter: int = 20,
                              tolerance: float = 1e-6, refine: bool = True):
    """Alternate topology update and community division until Q settles.

    Returns ``(graph, partition)``; ``partition.history`` holds Q after every
    executed iteration.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    q_prev = divide(graph, refine).modularity if graph.total_weight > 0 else 0.0
    history = []
    part = None
    for _ in range(max_iter):
        graph = update_topology(graph, params)
        part = divide(graph, refine)
        history.append(part.modularity)
        if abs(q_prev - part.modularity) <= tolerance:
            break
        q_prev = part.modularity
    return graph, Partition(part.labels, part.modularity, tuple(history), part.splits)


def partition_to_json(partition: Partition, graph: DeviceGraph | None = None) -> dict:
    ids = [d.id for d in graph.devices] if graph is not None else list(range(len(partition.labels)))
    return {"labels": {str(i): int(c) for i, c in zip(ids, partition.labels)},
            "modularity": partition.modularity,
            "q_history": list(partition.history),
            "community_count": partition.count}


def write_partition(partition: Partition, graph: DeviceGraph, json_path, csv_path) -> None:
    Path(json_path).write_text(json.dumps(partition_to_json(partition, graph), indent=1, sort_keys=True))
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["device", "x", "y", "z", "community"])
        for d, c in zip(graph.devices, partition.labels):
            writer.writerow([d.id, repr(d.position[0]), repr(d.position[1]), repr(d.position[2]), int(c)])
