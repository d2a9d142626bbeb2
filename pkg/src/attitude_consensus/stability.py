"""Frequency-domain stability criteria for the delayed consensus loop.

Three analyses over the network Laplacian L (eigenvalues mu of -L):

  * gamma_lower_bound: the smallest damping gain for which the undelayed
    consensus law is stable, max over nonzero mu of
    sqrt(2 / (|mu| cos(pi/2 - atan(-Re mu / |Im mu|)))), with the real-mu
    limit sqrt(2 / |mu|) taken explicitly.
  * closed_loop_eigenvalues: lambda = (gamma mu +/- sqrt(gamma^2 mu^2
    + 4 mu)) / 2, each with Kronecker multiplicity 3.
  * small_gain_delay_bound: infimum over a frequency grid of
    tau0(omega) = 1 / (omega (1+gamma) max_lambda sum_k |(j omega -
    lambda)^-k|), a sufficient bound on the tolerable delay.

Zero eigenvalues (the consensus modes) are excluded from the delay-bound
maximization; the zero-frequency direction is what consensus converges along
and is treated separately by the underlying theory. Multiplicities are those
of the 2n root list before Kronecker expansion: coincident roots pool into a
single lambda whose p counts the coincidences, which errs on the conservative
side for defective cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matcore import ComplexEigenSet, eigenvalues
from .topology import Topology

ZERO_EIG_TOL = 1e-9
ROOT_MERGE_TOL = 1e-8


class StabilityError(ValueError):
    """Analysis precondition failed (topology or gain unsuitable)."""


def _laplacian_of(laplacian_or_topology) -> np.ndarray:
    if isinstance(laplacian_or_topology, Topology):
        return laplacian_or_topology.laplacian
    L = np.asarray(laplacian_or_topology, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise StabilityError(f"Laplacian must be square, got {L.shape}")
    return L


def _has_rooted_tree(L: np.ndarray) -> bool:
    # edge i -> j wherever L[j, i] != 0 off the diagonal
    n = L.shape[0]
    out = [[j for j in range(n) if j != i and L[j, i] != 0.0] for i in range(n)]
    for root in range(n):
        seen = {root}
        stack = [root]
        while stack:
            u = stack.pop()
            for v in out[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) == n:
            return True
    return False


@dataclass(frozen=True)
class GammaBoundReport:
    """Lower bound on the damping gain, with per-eigenvalue candidates."""

    bound: float
    contributions: tuple  # of (mu, candidate_bound)


@dataclass(frozen=True)
class DelayBoundReport:
    """Grid infimum of the sufficient delay bound tau0(omega)."""

    tau0_bound: float
    argmin_omega: float
    omega_grid: np.ndarray
    tau0_values: np.ndarray
    gamma: float
    asymptote: float  # large-omega limit 1 / (1 + gamma)
    asymptote_ok: bool  # tau0_bound <= asymptote * 1.001
    reference_bound: float | None = None
    reference_matches: bool | None = None


def gamma_lower_bound(laplacian_or_topology) -> GammaBoundReport:
    """Smallest stable damping gain for the undelayed consensus law.

    Requires a rooted directed spanning tree. Any eigenvalue of -L with
    positive real part means the topology data is unusable and raises.
    """
    L = _laplacian_of(laplacian_or_topology)
    if not _has_rooted_tree(L):
        raise StabilityError(
            "topology has no rooted directed spanning tree; the gain bound "
            "is undefined")
    mus = eigenvalues(-L).as_array()
    contributions = []
    for mu in mus:
        if abs(mu) < ZERO_EIG_TOL:
            continue
        if mu.real > ZERO_EIG_TOL:
            raise StabilityError(
                f"eigenvalue {mu} of -L has positive real part")
        if abs(mu.imag) < 1e-12:
            cand = math.sqrt(2.0 / abs(mu))
        else:
            angle = 0.5 * math.pi - math.atan(-mu.real / abs(mu.imag))
            cand = math.sqrt(2.0 / (abs(mu) * math.cos(angle)))
        contributions.append((complex(mu), cand))
    if not contributions:
        raise StabilityError("no nonzero eigenvalues; gain bound undefined")
    return GammaBoundReport(
        bound=max(c for _, c in contributions),
        contributions=tuple(contributions),
    )


def closed_loop_eigenvalues(laplacian_or_topology, gamma: float) -> ComplexEigenSet:
    """Eigenvalues of the undelayed stacked closed loop A0 + Agamma.

    For each eigenvalue mu of -L the quadratic lambda^2 - gamma mu lambda
    - mu = 0 contributes both roots, and the Kronecker expansion repeats
    every root three times.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    L = _laplacian_of(laplacian_or_topology)
    mus = eigenvalues(-L).as_array()
    lams = []
    for mu in mus:
        disc = np.sqrt(complex(gamma * gamma * mu * mu + 4.0 * mu))
        for lam in ((gamma * mu + disc) / 2.0, (gamma * mu - disc) / 2.0):
            lams.extend([complex(lam)] * 3)
    arr = np.array(lams)
    order = np.lexsort((arr.imag, arr.real))
    return ComplexEigenSet(values=tuple(arr[order]), tolerance=1e-9)


def _merged_roots(L: np.ndarray, gamma: float):
    """Distinct nonzero closed-loop roots (Kron-free) with multiplicities."""
    mus = eigenvalues(-L).as_array()
    roots = []
    for mu in mus:
        if abs(mu) < ZERO_EIG_TOL:
            continue
        disc = np.sqrt(complex(gamma * gamma * mu * mu + 4.0 * mu))
        roots.append(complex((gamma * mu + disc) / 2.0))
        roots.append(complex((gamma * mu - disc) / 2.0))
    roots.sort(key=lambda z: (z.real, z.imag))
    merged = []
    for lam in roots:
        if merged and abs(lam - merged[-1][0]) <= ROOT_MERGE_TOL:
            prev, p = merged[-1]
            merged[-1] = (prev, p + 1)
        else:
            merged.append((lam, 1))
    return merged


def _tau0_on(omegas: np.ndarray, lam_mult, gamma: float) -> np.ndarray:
    """Evaluate tau0(omega) vectorized over a frequency grid."""
    best = np.zeros_like(omegas)
    for lam, p in lam_mult:
        inv = 1.0 / np.abs(1j * omegas - lam)
        term = inv.copy()
        acc = inv.copy()
        for _ in range(1, p):
            acc *= inv
            term += acc
        np.maximum(best, term, out=best)
    return 1.0 / (omegas * (1.0 + gamma) * best)


def default_omega_grid(omega_min: float = 1e-3, omega_max: float = 1e3,
                       points: int = 20000) -> np.ndarray:
    if not (0.0 < omega_min < omega_max) or points < 2:
        raise ValueError("need 0 < omega_min < omega_max and points >= 2")
    return np.logspace(math.log10(omega_min), math.log10(omega_max), points)


def small_gain_delay_bound(laplacian_or_topology, gamma: float,
                           omega_grid=None, refine_rounds: int = 3,
                           reference_bound: float | None = None) -> DelayBoundReport:
    """Grid infimum of the sufficient delay bound, with local refinement.

    gamma must lie strictly above gamma_lower_bound. Refinement subdivides
    around the running arg-min; the reported infimum is the minimum over
    every evaluated point, so refining can only lower it. If a reference
    value is supplied the report records whether the computed infimum is
    within 1 percent of it.
    """
    L = _laplacian_of(laplacian_or_topology)
    gb = gamma_lower_bound(L)  # also enforces the spanning-tree condition
    if gamma <= gb.bound:
        raise StabilityError(
            f"gamma {gamma} is not above the gain lower bound {gb.bound:.6f}")
    if omega_grid is None:
        omegas = default_omega_grid()
    else:
        omegas = np.asarray(omega_grid, dtype=float).reshape(-1)
        if omegas.size < 2 or np.any(omegas <= 0.0):
            raise ValueError("omega grid must hold at least 2 positive values")
        omegas = np.sort(omegas)

    lam_mult = _merged_roots(L, gamma)
    values = _tau0_on(omegas, lam_mult, gamma)

    best_val = float(np.min(values))
    best_omega = float(omegas[int(np.argmin(values))])
    lo_grid, hi_grid = omegas, values
    for _ in range(max(refine_rounds, 0)):
        i = int(np.argmin(hi_grid))
        lo = lo_grid[max(i - 1, 0)]
        hi = lo_grid[min(i + 1, lo_grid.size - 1)]
        if hi <= lo:
            break
        fine = np.linspace(lo, hi, 2001)
        fine_vals = _tau0_on(fine, lam_mult, gamma)
        j = int(np.argmin(fine_vals))
        if fine_vals[j] < best_val:
            best_val = float(fine_vals[j])
            best_omega = float(fine[j])
        lo_grid, hi_grid = fine, fine_vals

    asymptote = 1.0 / (1.0 + gamma)
    report = DelayBoundReport(
        tau0_bound=best_val,
        argmin_omega=best_omega,
        omega_grid=omegas,
        tau0_values=values,
        gamma=float(gamma),
        asymptote=asymptote,
        asymptote_ok=bool(best_val <= asymptote * 1.001),
        reference_bound=reference_bound,
        reference_matches=(
            None if reference_bound is None
            else bool(abs(best_val - reference_bound) <= 0.01 * reference_bound)
        ),
    )
    return report
