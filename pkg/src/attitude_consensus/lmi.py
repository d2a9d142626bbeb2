"""Construction and verification of the delay-dependent consensus LMIs.

For a network of n agents with m delayed edges, the augmented variable is
X = [x(t); x(t - tau_e1); ...; x(t - tau_em)] (blocks of size 6n, edges in
lexicographic order). The module assembles:

  * Psi1: the bordered matrix of the quadratic form 2 x' E'E (A0 x +
    sum_e Ae x_e), blocks E'E A0 + A0' E'E on the diagonal head and
    E'E Ae on the borders.
  * Psi2: blockdiag(sum_e E'Qe E, -E'Qe1 E, ..., -E'Qem E). As printed its
    leading block is positive semidefinite for positive definite Qe, so
    Psi2 < 0 is unsatisfiable; the verifier reports this honestly instead
    of guessing a repair.
  * Omega: blocks Omega_ab = Ba' E' W E Bb + D_ab with W = sum_e he Se,
    B0 = A0, Bk = Aek, D carrying the (1 - de)/he difference couplings
    produced by the Jensen bound.
  * Psi3: the Schur-complement form [[D, Z], [Z', -W^-1]] with Z_a = Ba' E',
    whose reduction D + Z W Z' reproduces Omega exactly.

The head block of D carries a negative sign (-sum_e (1-de)/he E'Se E); the
positive sign sometimes quoted for that block is inconsistent with the
Schur reduction to Omega and is not used.

Candidate Q/S matrices load from a plain-text file of labeled sections, and
verify_candidate reports the definiteness of each assembled matrix plus the
combined form Psi1 + Psi2 + Omega.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .controller import assemble_closed_loop, build_consensus_operator
from .matcore import require_symmetric, symmetric_eigenvalues
from .topology import Topology


class LmiError(ValueError):
    """LMI problem or candidate is malformed or inconsistent."""


def build_E(n: int) -> np.ndarray:
    """Consensus-difference operator, 6(n-1) x 6n, rank 6(n-1)."""
    try:
        return build_consensus_operator(n).E
    except ValueError as exc:
        raise LmiError(str(exc)) from exc


@dataclass(frozen=True)
class LmiProblem:
    """Everything the matrix assembly needs, with a fixed edge order."""

    n: int
    A0: np.ndarray
    Aij: dict  # edge (i, j) -> 6n x 6n matrix
    E: np.ndarray
    h: dict  # edge -> delay upper bound, seconds
    d: dict  # edge -> delay rate bound
    edge_order: tuple

    def __post_init__(self):
        s = 6 * self.n
        if self.A0.shape != (s, s):
            raise LmiError(f"A0 must be {s}x{s}, got {self.A0.shape}")
        if self.E.shape != (6 * (self.n - 1), s):
            raise LmiError(
                f"E must be {6 * (self.n - 1)}x{s}, got {self.E.shape}")
        if set(self.edge_order) != set(self.Aij):
            raise LmiError("edge_order and Aij keys disagree")
        if tuple(sorted(self.edge_order)) != tuple(self.edge_order):
            raise LmiError("edge_order must be lexicographic")
        for e in self.edge_order:
            if self.Aij[e].shape != (s, s):
                raise LmiError(f"Aij[{e}] must be {s}x{s}")
            if e not in self.h or e not in self.d:
                raise LmiError(f"edge {e} missing h or d")
            if self.h[e] <= 0.0:
                raise LmiError(f"edge {e}: h must be > 0")
            if self.d[e] < 0.0:
                raise LmiError(f"edge {e}: d must be >= 0")

    @property
    def m(self) -> int:
        return len(self.edge_order)


def build_problem(topology: Topology, gamma: float, delayed_edges) -> LmiProblem:
    """Assemble an LmiProblem from a topology, gain, and delay envelopes."""
    cl = assemble_closed_loop(topology, gamma)
    h = {(e.src, e.dst): e.h for e in delayed_edges}
    d = {(e.src, e.dst): e.d for e in delayed_edges}
    if set(h) != set(cl.Aij):
        raise LmiError(
            f"delay edges {sorted(h)} do not match topology edges "
            f"{sorted(cl.Aij)}")
    return LmiProblem(
        n=topology.n, A0=cl.A0, Aij=cl.Aij, E=build_E(topology.n),
        h=h, d=d, edge_order=tuple(sorted(cl.Aij)),
    )


@dataclass(frozen=True)
class LmiCandidate:
    """Per-edge symmetric positive definite matrices Q and S, 6(n-1) square."""

    Q: dict
    S: dict

    def __post_init__(self):
        if set(self.Q) != set(self.S):
            raise LmiError("candidate Q and S must cover the same edges")
        for name, group in (("Q", self.Q), ("S", self.S)):
            for e, M in group.items():
                M = np.asarray(M, dtype=float)
                try:
                    require_symmetric(M, 1e-9, name=f"{name}[{e}]")
                except ValueError as exc:
                    raise LmiError(str(exc)) from exc
                if symmetric_eigenvalues(M)[0] <= 0.0:
                    raise LmiError(
                        f"candidate {name}[{e}] must be positive definite")
                group[e] = M


def identity_candidate(problem: LmiProblem) -> LmiCandidate:
    k = 6 * (problem.n - 1)
    return LmiCandidate(
        Q={e: np.eye(k) for e in problem.edge_order},
        S={e: np.eye(k) for e in problem.edge_order},
    )


def _check_candidate_dims(problem: LmiProblem, candidate: LmiCandidate):
    k = 6 * (problem.n - 1)
    if set(candidate.Q) != set(problem.edge_order):
        raise LmiError(
            f"candidate edges {sorted(candidate.Q)} do not match problem "
            f"edges {sorted(problem.edge_order)}")
    for group in (candidate.Q, candidate.S):
        for e, M in group.items():
            if M.shape != (k, k):
                raise LmiError(f"candidate matrix for edge {e} must be {k}x{k}")


def build_psi_matrices(problem: LmiProblem, candidate: LmiCandidate):
    """Assemble (Psi1, Psi2, Psi3, Omega); all outputs symmetrized.

    Requires W = sum_e he Se positive definite (Psi3 embeds -W^-1).
    """
    _check_candidate_dims(problem, candidate)
    if problem.m < 1:
        raise LmiError("at least one delayed edge is required")
    n, m = problem.n, problem.m
    s = 6 * n
    tot = (m + 1) * s
    E = problem.E
    edges = problem.edge_order
    B = [problem.A0] + [problem.Aij[e] for e in edges]

    EtE = E.T @ E
    psi1 = np.zeros((tot, tot))
    psi1[:s, :s] = EtE @ problem.A0 + problem.A0.T @ EtE
    for k, e in enumerate(edges, start=1):
        blk = EtE @ problem.Aij[e]
        psi1[:s, k * s : (k + 1) * s] = blk
        psi1[k * s : (k + 1) * s, :s] = blk.T
    psi1 = 0.5 * (psi1 + psi1.T)

    psi2 = np.zeros((tot, tot))
    head = np.zeros((s, s))
    for k, e in enumerate(edges, start=1):
        EQE = E.T @ candidate.Q[e] @ E
        head += EQE
        psi2[k * s : (k + 1) * s, k * s : (k + 1) * s] = -EQE
    psi2[:s, :s] = head
    psi2 = 0.5 * (psi2 + psi2.T)

    W = sum(problem.h[e] * candidate.S[e] for e in edges)
    W = 0.5 * (W + W.T)
    if np.linalg.eigvalsh(W)[0] <= 1e-12:
        raise LmiError(
            "sum of h-weighted S matrices must be positive definite")

    # difference couplings from the Jensen bound
    D = np.zeros((tot, tot))
    for k, e in enumerate(edges, start=1):
        c = (1.0 - problem.d[e]) / problem.h[e]
        ESE = c * (E.T @ candidate.S[e] @ E)
        D[:s, :s] -= ESE
        D[:s, k * s : (k + 1) * s] = ESE
        D[k * s : (k + 1) * s, :s] = ESE.T
        D[k * s : (k + 1) * s, k * s : (k + 1) * s] = -ESE
    D = 0.5 * (D + D.T)

    G = E.T @ W @ E
    omega = D.copy()
    for a in range(m + 1):
        for b in range(m + 1):
            omega[a * s : (a + 1) * s, b * s : (b + 1) * s] += B[a].T @ G @ B[b]
    omega = 0.5 * (omega + omega.T)

    w = W.shape[0]
    psi3 = np.zeros((tot + w, tot + w))
    psi3[:tot, :tot] = D
    for a in range(m + 1):
        psi3[a * s : (a + 1) * s, tot:] = B[a].T @ E.T
    psi3[tot:, :tot] = psi3[:tot, tot:].T
    psi3[tot:, tot:] = -np.linalg.inv(W)
    psi3 = 0.5 * (psi3 + psi3.T)

    return psi1, psi2, psi3, omega


@dataclass(frozen=True)
class VerificationReport:
    """Definiteness verdicts and eigenvalue extremes for one candidate."""

    psi1_nd: bool
    psi2_nd: bool
    psi3_nd: bool
    combined_nd: bool
    extremes: dict  # matrix name -> (min eigenvalue, max eigenvalue)


def verify_candidate(problem: LmiProblem, candidate: LmiCandidate,
                     tol: float = 1e-9) -> VerificationReport:
    """Check negative definiteness of Psi1/Psi2/Psi3 and of Psi1+Psi2+Omega.

    The combined form is the quantity the stability argument actually
    bounds; the individual verdicts document the printed conditions.
    """
    psi1, psi2, psi3, omega = build_psi_matrices(problem, candidate)
    combined = psi1 + psi2 + omega
    extremes = {}
    verdicts = {}
    for name, M in (("psi1", psi1), ("psi2", psi2), ("psi3", psi3),
                    ("combined", combined)):
        eigs = symmetric_eigenvalues(M, tol)
        extremes[name] = (float(eigs[0]), float(eigs[-1]))
        verdicts[name] = bool(eigs[-1] < -tol)
    return VerificationReport(
        psi1_nd=verdicts["psi1"], psi2_nd=verdicts["psi2"],
        psi3_nd=verdicts["psi3"], combined_nd=verdicts["combined"],
        extremes=extremes,
    )


def schur_reduce(M, k: int) -> np.ndarray:
    """Schur complement of the trailing block: A - B D^-1 B' for
    M = [[A, B], [B', D]] split after row/column k."""
    M = np.asarray(M, dtype=float)
    A = M[:k, :k]
    Bm = M[:k, k:]
    Dm = M[k:, k:]
    try:
        Dinv = np.linalg.inv(Dm)
    except np.linalg.LinAlgError as exc:
        raise LmiError(f"trailing block is singular: {exc}") from exc
    return A - Bm @ Dinv @ Bm.T


def discrete_jensen_gap(P, samples) -> float:
    """m * sum_i w_i' P w_i - (sum_i w_i)' P (sum_i w_i); nonnegative for
    positive semidefinite P (the discrete form of the Jensen bound)."""
    P = np.asarray(P, dtype=float)
    ws = np.asarray(samples, dtype=float)
    if ws.ndim != 2:
        raise ValueError("samples must be a 2-d array (m, dim)")
    m = ws.shape[0]
    total = ws.sum(axis=0)
    quad = float(np.einsum("mi,ij,mj->", ws, P, ws))
    return m * quad - float(total @ P @ total)


_SECTION = re.compile(r"^\[\s*([QS])\s+(\d+)\s*->\s*(\d+)\s*\]$")


def write_candidate(path, problem: LmiProblem, candidate: LmiCandidate):
    """Write a candidate to the labeled plain-text format (1-based ids)."""
    _check_candidate_dims(problem, candidate)
    lines = ["# LMI candidate matrices; sections are [Q i->j] / [S i->j]",
             "# with 1-based craft indices; rows are whitespace-separated."]
    for e in problem.edge_order:
        for name, group in (("Q", candidate.Q), ("S", candidate.S)):
            lines.append(f"[{name} {e[0] + 1}->{e[1] + 1}]")
            for row in group[e]:
                lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_candidate(path, problem: LmiProblem) -> LmiCandidate:
    """Parse the labeled plain-text candidate format against a problem."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw_lines = fh.readlines()
    except OSError as exc:
        raise LmiError(f"cannot read candidate file {path}: {exc}") from exc
    sections = {}
    current = None
    for lineno, line in enumerate(raw_lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        match = _SECTION.match(text)
        if match:
            name = match.group(1)
            edge = (int(match.group(2)) - 1, int(match.group(3)) - 1)
            current = (name, edge)
            if current in sections:
                raise LmiError(f"line {lineno}: duplicate section {text}")
            sections[current] = []
            continue
        if current is None:
            raise LmiError(f"line {lineno}: matrix row outside any section")
        try:
            sections[current].append([float(v) for v in text.split()])
        except ValueError as exc:
            raise LmiError(f"line {lineno}: {exc}") from exc

    k = 6 * (problem.n - 1)
    Q, S = {}, {}
    for (name, edge), rows in sections.items():
        M = np.array(rows, dtype=float)
        if M.shape != (k, k):
            raise LmiError(
                f"section [{name} {edge[0] + 1}->{edge[1] + 1}] is "
                f"{M.shape}, expected {k}x{k}")
        (Q if name == "Q" else S)[edge] = M
    missing = [e for e in problem.edge_order if e not in Q or e not in S]
    if missing:
        raise LmiError(f"candidate missing Q or S sections for edges "
                       f"{[(i + 1, j + 1) for i, j in missing]}")
    extra = (set(Q) | set(S)) - set(problem.edge_order)
    if extra:
        raise LmiError(f"candidate has sections for non-edges "
                       f"{[(i + 1, j + 1) for i, j in sorted(extra)]}")
    candidate = LmiCandidate(Q=Q, S=S)
    _check_candidate_dims(problem, candidate)
    return candidate
