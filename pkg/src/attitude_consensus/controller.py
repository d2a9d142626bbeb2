"""Delayed consensus control law and its stacked closed-loop matrices.

The network state is x = [x1; x2] with x1 the stacked attitudes and x2 the
stacked attitude rates (3N each). The control law applies unit self-feedback
plus delayed neighbor feedback through the per-edge gain matrices K, and the
closed loop becomes a linear differential equation with one delayed term per
communication edge:

    x_dot(t) = A0 x(t) + sum_edges Aij x(t - tau_ij(t))
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Topology, build_delay_gain_matrices

_I3 = np.eye(3)


def expand3(M) -> np.ndarray:
    """Kronecker-expand a per-agent coupling matrix to act on 3-vectors."""
    return np.kron(np.asarray(M, dtype=float), _I3)


@dataclass(frozen=True)
class StackedState:
    """Stacked linearized coordinates; agent i occupies slots 3i..3i+3."""

    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=float).reshape(-1)
        x2 = np.asarray(self.x2, dtype=float).reshape(-1)
        if x1.shape != x2.shape or x1.size % 3 != 0:
            raise ValueError(f"bad stacked shapes {x1.shape}, {x2.shape}")
        if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
            raise ValueError("stacked state has non-finite entries")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def n(self) -> int:
        return self.x1.size // 3

    def concat(self) -> np.ndarray:
        return np.concatenate([self.x1, self.x2])


@dataclass(frozen=True)
class ClosedLoopMatrices:
    """A0, per-edge Aij, and their sum Agamma, all 6N x 6N."""

    A0: np.ndarray
    Aij: dict
    Agamma: np.ndarray
    gamma: float

    @property
    def n(self) -> int:
        return self.A0.shape[0] // 6


@dataclass(frozen=True)
class ConsensusErrorOperator:
    """E maps [x1; x2] to the stacked differences against agent 0.

    E x = 0 exactly when all agents share identical (sigma, sigma_dot).
    """

    E: np.ndarray

    @property
    def n(self) -> int:
        return self.E.shape[1] // 6


def build_consensus_operator(n: int) -> ConsensusErrorOperator:
    """E = blockdiag([1 -I], [1 -I]) Kronecker-expanded by 3; 6(n-1) x 6n."""
    if n < 2:
        raise ValueError(f"consensus error needs n >= 2 agents, got {n}")
    diff = np.hstack([np.ones((n - 1, 1)), -np.eye(n - 1)])
    two = np.zeros((2 * (n - 1), 2 * n))
    two[: n - 1, :n] = diff
    two[n - 1 :, n:] = diff
    return ConsensusErrorOperator(E=expand3(two))


def consensus_error(x: StackedState, op: ConsensusErrorOperator):
    """(y, norm) with y = E [x1; x2]; zero iff the agents agree."""
    if op.E.shape[1] != 2 * x.x1.size:
        raise ValueError(
            f"operator expects 6n={op.E.shape[1]}, state has {2 * x.x1.size}"
        )
    y = op.E @ x.concat()
    return y, float(np.linalg.norm(y))


def control_input(current: StackedState, delayed: dict, gamma: float, K: dict) -> np.ndarray:
    """Delayed consensus law evaluated at one instant.

    u(t) = -x1(t) - gamma x2(t) - sum_e K_e x1(t - tau_e)
                                - gamma sum_e K_e x2(t - tau_e)

    delayed maps each communication edge (i, j) to the neighbor snapshot
    x(t - tau_ij); every edge in K must be present.
    """
    u = -current.x1 - gamma * current.x2
    for edge, Ke in K.items():
        if edge not in delayed:
            raise ValueError(f"missing delayed state for edge {edge}")
        xd = delayed[edge]
        K3 = expand3(Ke)
        u = u - K3 @ xd.x1 - gamma * (K3 @ xd.x2)
    return u


def assemble_closed_loop(topology: Topology, gamma: float) -> ClosedLoopMatrices:
    """Stacked matrices of the delayed closed loop for a topology and gain.

    A0 carries the undelayed self-feedback, each Aij one edge's delayed
    feedback; their sum Agamma = [[0, 0], [A, gamma A]] (Kronecker-expanded)
    holds entry-exactly because distinct edges write distinct entries.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    n = topology.n
    Z = np.zeros((n, n))
    I = np.eye(n)
    A0 = expand3(np.block([[Z, I], [-I, -gamma * I]]))
    Aij = {}
    for edge, Ke in build_delay_gain_matrices(topology).items():
        Aij[edge] = expand3(np.block([[Z, Z], [-Ke, -gamma * Ke]]))
    adj = topology.adjacency
    Agamma = expand3(np.block([[Z, Z], [adj, gamma * adj]]))
    return ClosedLoopMatrices(A0=A0, Aij=Aij, Agamma=Agamma, gamma=float(gamma))
