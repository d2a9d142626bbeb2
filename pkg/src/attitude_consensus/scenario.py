"""Scenario definition and JSON loading for simulation and analysis runs.

A scenario bundles everything a run needs: per-craft inertia and initial
conditions, the delayed communication edges, the damping gain gamma, and the
integration grid. Config files are JSON with a versioned "schema" field;
craft and edge indices in files are 1-based, internal indices 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .topology import DelayedEdge, Topology, build_topology

SCHEMA = "attitude-consensus/1"


class ScenarioError(ValueError):
    """Configuration file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class Scenario:
    name: str
    inertias: np.ndarray  # (N, 3, 3)
    sigma0: np.ndarray  # (N, 3)
    omega0: np.ndarray  # (N, 3)
    edges: tuple
    gamma: float
    dt: float = 0.01
    t_final: float = 200.0
    weights: dict | None = None
    reference_delay_bound: float | None = None

    @property
    def n(self) -> int:
        return self.sigma0.shape[0]

    def build_topology(self) -> Topology:
        return build_topology(
            self.n, [(e.src, e.dst) for e in self.edges], self.weights
        )

    def validate(self) -> "Scenario":
        if self.n < 1:
            raise ScenarioError("scenario needs at least one spacecraft")
        if self.sigma0.ndim != 2 or self.sigma0.shape[1] != 3:
            raise ScenarioError(f"sigma0 shape {self.sigma0.shape} != (N, 3)")
        if self.inertias.shape != (self.n, 3, 3):
            raise ScenarioError(
                f"inertias shape {self.inertias.shape} != ({self.n}, 3, 3)"
            )
        if self.omega0.shape != (self.n, 3):
            raise ScenarioError("omega0 shape mismatch")
        for name, arr in (("inertias", self.inertias), ("sigma0", self.sigma0),
                          ("omega0", self.omega0)):
            if not np.all(np.isfinite(arr)):
                raise ScenarioError(f"{name} has non-finite entries")
        for J in self.inertias:
            if np.max(np.abs(J - J.T)) > 1e-9:
                raise ScenarioError("inertia matrix must be symmetric")
            if np.linalg.eigvalsh(0.5 * (J + J.T))[0] <= 0.0:
                raise ScenarioError("inertia matrix must be positive definite")
        if self.gamma is None:
            raise ScenarioError("gamma required")
        if self.dt <= 0.0:
            raise ScenarioError(f"dt must be > 0, got {self.dt}")
        if self.t_final <= 0.0:
            raise ScenarioError(f"t_final must be > 0, got {self.t_final}")
        if self.edges:
            hmax = max(e.h for e in self.edges)
            if self.t_final <= hmax:
                raise ScenarioError(
                    f"t_final {self.t_final} must exceed the largest delay "
                    f"bound {hmax}"
                )
        try:
            self.build_topology()
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
        return self


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        if key == "gamma":
            raise ScenarioError("gamma required")
        raise ScenarioError(f"missing field '{key}' in {where}")
    return obj[key]


def _inertia_from(entry, where: str) -> np.ndarray:
    J = np.asarray(entry, dtype=float)
    if J.shape == ():
        return float(J) * np.eye(3)
    if J.shape == (3,):
        return np.diag(J)
    if J.shape == (3, 3):
        return J
    raise ScenarioError(f"{where}: inertia must be scalar, diag-3, or 3x3")


def scenario_from_dict(cfg: dict, name: str = "scenario") -> Scenario:
    if not isinstance(cfg, dict):
        raise ScenarioError("config root must be a JSON object")
    schema = _require(cfg, "schema", "config")
    if schema != SCHEMA:
        raise ScenarioError(f"unsupported schema '{schema}', expected '{SCHEMA}'")
    craft = _require(cfg, "spacecraft", "config")
    if not isinstance(craft, list) or not craft:
        raise ScenarioError("'spacecraft' must be a non-empty list")
    inertias, sigma0, omega0 = [], [], []
    for k, entry in enumerate(craft):
        where = f"spacecraft[{k}]"
        inertias.append(_inertia_from(_require(entry, "inertia", where), where))
        s = np.asarray(_require(entry, "sigma0", where), dtype=float)
        w = np.asarray(_require(entry, "omega0", where), dtype=float)
        if s.shape != (3,) or w.shape != (3,):
            raise ScenarioError(f"{where}: sigma0 and omega0 must be 3-vectors")
        sigma0.append(s)
        omega0.append(w)
    n = len(craft)

    edges_cfg = _require(cfg, "edges", "config")
    edges, weights = [], {}
    for k, entry in enumerate(edges_cfg):
        where = f"edges[{k}]"
        src = int(_require(entry, "from", where)) - 1
        dst = int(_require(entry, "to", where)) - 1
        if not (0 <= src < n and 0 <= dst < n):
            raise ScenarioError(f"{where}: craft index out of range 1..{n}")
        try:
            edge = DelayedEdge(
                src=src,
                dst=dst,
                h=float(_require(entry, "h", where)),
                d=float(entry.get("d", 0.0)),
                profile=str(entry.get("profile", "sinusoidal")),
            )
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
        edges.append(edge)
        if "weight" in entry:
            weights[(src, dst)] = float(entry["weight"])
    if weights and len(weights) != len(edges):
        raise ScenarioError("either give every edge a weight or none")

    gamma = _require(cfg, "gamma", "config")
    try:
        gamma = float(gamma)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"gamma must be a number, got {gamma!r}") from exc

    scenario = Scenario(
        name=str(cfg.get("name", name)),
        inertias=np.array(inertias),
        sigma0=np.array(sigma0),
        omega0=np.array(omega0),
        edges=tuple(edges),
        gamma=gamma,
        dt=float(cfg.get("dt", 0.01)),
        t_final=float(cfg.get("t_final", 200.0)),
        weights=weights or None,
        reference_delay_bound=(
            float(cfg["reference_delay_bound"])
            if "reference_delay_bound" in cfg else None
        ),
    )
    return scenario.validate()


def load_scenario(path) -> Scenario:
    """Load and validate a scenario JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc}") from exc
    return scenario_from_dict(cfg, name=str(path))


def default_scenario() -> Scenario:
    """The bundled four-spacecraft benchmark scenario."""
    text = resources.files("attitude_consensus.data").joinpath(
        "default_scenario.json").read_text(encoding="utf-8")
    return scenario_from_dict(json.loads(text), name="default")


def default_scenario_path() -> str:
    """Filesystem path of the bundled benchmark configuration."""
    return str(resources.files("attitude_consensus.data").joinpath(
        "default_scenario.json"))
