"""Directed communication graphs for the consensus network.

Agents are indexed 0..n-1 internally (configuration files and printed labels
use 1-based craft numbers). An edge (i, j) means agent i's state is sent to
agent j, so graph reachability follows the direction of information flow.

The adjacency matrix is row-stochastic: row j holds the weights agent j
applies to its in-neighbors and sums to 1. The Laplacian is L = I - A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class TopologyError(ValueError):
    """Graph construction or validation failure."""


@dataclass(frozen=True)
class DelayedEdge:
    """One communication link with its delay envelope.

    h is the delay upper bound in seconds, d the bound on |d tau/dt|.
    profile selects the delay waveform ("constant" or "sinusoidal"); the
    waveform itself lives in the simulator module.
    """

    src: int
    dst: int
    h: float
    d: float
    profile: str = "sinusoidal"

    def __post_init__(self):
        if self.src == self.dst:
            raise TopologyError(f"self-delay edge ({self.src}, {self.dst})")
        if self.h <= 0.0:
            raise TopologyError(f"edge ({self.src}, {self.dst}): h must be > 0")
        if self.d < 0.0:
            raise TopologyError(f"edge ({self.src}, {self.dst}): d must be >= 0")
        if self.profile not in ("constant", "sinusoidal"):
            raise TopologyError(f"unknown delay profile '{self.profile}'")


@dataclass(frozen=True)
class Topology:
    n: int
    edges: tuple
    adjacency: np.ndarray
    laplacian: np.ndarray

    def in_neighbors(self, j: int) -> tuple:
        return tuple(i for (i, k) in self.edges if k == j)


def build_topology(n: int, edges, weights=None) -> Topology:
    """Build a Topology from a directed edge list.

    weights, if given, maps (src, dst) to the receiver's weight for that link;
    per receiver the weights must sum to 1. Default is uniform 1/in-degree.
    Every agent needs at least one in-neighbor because the control law applies
    unit self-feedback (the Laplacian diagonal is identically 1).
    """
    if n < 1:
        raise TopologyError(f"agent count must be >= 1, got {n}")
    edge_list = []
    seen = set()
    for (i, j) in edges:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise TopologyError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise TopologyError(f"self-loop edge ({i}, {j}) not allowed")
        if (i, j) in seen:
            raise TopologyError(f"duplicate edge ({i}, {j})")
        seen.add((i, j))
        edge_list.append((i, j))
    edge_list.sort()

    indeg = [0] * n
    for (_, j) in edge_list:
        indeg[j] += 1
    for j in range(n):
        if indeg[j] == 0:
            raise TopologyError(
                f"agent {j} has no in-neighbor; the control law assumes unit "
                f"self-feedback on every agent"
            )

    A = np.zeros((n, n))
    if weights is None:
        for (i, j) in edge_list:
            A[j, i] = 1.0 / indeg[j]
    else:
        for (i, j) in edge_list:
            if (i, j) not in weights:
                raise TopologyError(f"missing weight for edge ({i}, {j})")
            w = float(weights[(i, j)])
            if w <= 0.0:
                raise TopologyError(f"edge ({i}, {j}): weight must be > 0")
            A[j, i] = w
        extra = set(weights) - seen
        if extra:
            raise TopologyError(f"weights given for non-edges: {sorted(extra)}")
        rowsum = A.sum(axis=1)
        for j in range(n):
            if abs(rowsum[j] - 1.0) > 1e-9:
                raise TopologyError(
                    f"weights into agent {j} sum to {rowsum[j]!r}, expected 1"
                )

    L = np.eye(n) - A
    return Topology(n=n, edges=tuple(edge_list), adjacency=A, laplacian=L)


def build_delay_gain_matrices(topology_or_laplacian) -> dict:
    """Per-edge gain matrices K[(i, j)] (n x n, before Kronecker expansion).

    For each communication edge i -> j, K[(i, j)] carries the single entry
    (j, i) = l_ji of the Laplacian, zeros elsewhere. Accepts either a
    Topology or a raw Laplacian array (edges inferred from nonzero
    off-diagonal entries); the raw form permits demonstration Laplacians
    with zero rows that build_topology rejects.
    """
    if isinstance(topology_or_laplacian, Topology):
        L = topology_or_laplacian.laplacian
        edge_list = topology_or_laplacian.edges
    else:
        L = np.asarray(topology_or_laplacian, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise TopologyError(f"Laplacian must be square, got {L.shape}")
        n = L.shape[0]
        edge_list = tuple((i, j) for j in range(n) for i in range(n)
                          if i != j and L[j, i] != 0.0)
        edge_list = tuple(sorted(edge_list))
    n = L.shape[0]
    K = {}
    for (i, j) in edge_list:
        M = np.zeros((n, n))
        M[j, i] = L[j, i]
        K[(i, j)] = M
    return K


def _reachable_from(n: int, out_edges, root: int) -> set:
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for v in out_edges[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _out_edge_lists(t: Topology):
    out = [[] for _ in range(t.n)]
    for (i, j) in t.edges:
        out[i].append(j)
    return out


def has_rooted_spanning_tree(t: Topology) -> bool:
    """True iff some agent reaches every other along information flow."""
    out = _out_edge_lists(t)
    return any(len(_reachable_from(t.n, out, r)) == t.n for r in range(t.n))


def is_strongly_connected(t: Topology) -> bool:
    """True iff every agent reaches every other along information flow."""
    out = _out_edge_lists(t)
    return all(len(_reachable_from(t.n, out, r)) == t.n for r in range(t.n))
