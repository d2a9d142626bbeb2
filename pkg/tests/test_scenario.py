"""Scenario config loading, validation, and the bundled benchmark."""

import json

import numpy as np
import pytest

from attitude_consensus.scenario import (
    SCHEMA,
    Scenario,
    ScenarioError,
    default_scenario,
    default_scenario_path,
    load_scenario,
    scenario_from_dict,
)
from attitude_consensus.topology import DelayedEdge


def minimal_config(**overrides):
    cfg = {
        "schema": SCHEMA,
        "name": "pair",
        "spacecraft": [
            {"inertia": 10.0, "sigma0": [0.1, 0.0, 0.0], "omega0": [0.0, 0.0, 0.0]},
            {"inertia": 12.0, "sigma0": [-0.1, 0.0, 0.0], "omega0": [0.0, 0.0, 0.0]},
        ],
        "edges": [
            {"from": 1, "to": 2, "h": 0.5, "d": 1.0},
            {"from": 2, "to": 1, "h": 0.5, "d": 1.0},
        ],
        "gamma": 3.0,
        "dt": 0.01,
        "t_final": 10.0,
    }
    cfg.update(overrides)
    return cfg


def test_default_scenario_benchmark_values():
    sc = default_scenario()
    assert sc.n == 4
    assert sc.gamma == 5.0
    assert sc.dt == 0.01
    assert sc.t_final == 200.0
    assert sc.reference_delay_bound == 9.6346

    for k, principal in enumerate([20.0, 30.0, 40.0, 50.0]):
        assert np.array_equal(sc.inertias[k], principal * np.eye(3))

    expected_sigma = np.array([
        [0.8, 0.8, 0.8],
        [0.4, 0.4, 0.4],
        [-0.6, -0.6, -0.6],
        [-0.8, -0.8, -0.8],
    ])
    assert np.array_equal(sc.sigma0, expected_sigma)

    expected_omega = np.array([
        [0.06849, 0.06849, 0.06849],
        [0.0, 0.0, 0.0],
        [-0.09615, -0.09615, -0.09615],
        [0.06849, 0.06849, 0.06849],
    ])
    assert np.array_equal(sc.omega0, expected_omega)

    got = {(e.src, e.dst): (e.h, e.d, e.profile) for e in sc.edges}
    assert got == {
        (0, 1): (5.0, 1.0, "sinusoidal"),
        (1, 2): (6.0, 2.0, "sinusoidal"),
        (2, 0): (7.0, 0.5, "sinusoidal"),
        (1, 3): (5.0, 1.0, "sinusoidal"),
    }


def test_default_scenario_path_loads_identically():
    path = default_scenario_path()
    sc = load_scenario(path)
    ref = default_scenario()
    assert sc.gamma == ref.gamma
    assert np.array_equal(sc.sigma0, ref.sigma0)
    assert sc.edges == ref.edges


def test_minimal_config_round_trip(tmp_path):
    cfg = minimal_config()
    sc = scenario_from_dict(cfg)
    assert sc.n == 2
    assert sc.name == "pair"
    p = tmp_path / "pair.json"
    p.write_text(json.dumps(cfg))
    sc2 = load_scenario(p)
    assert np.array_equal(sc2.sigma0, sc.sigma0)
    assert sc2.edges == sc.edges


def test_inertia_forms():
    cfg = minimal_config()
    cfg["spacecraft"][0]["inertia"] = [1.0, 2.0, 3.0]
    cfg["spacecraft"][1]["inertia"] = [[4.0, 0.1, 0.0], [0.1, 5.0, 0.0], [0.0, 0.0, 6.0]]
    sc = scenario_from_dict(cfg)
    assert np.array_equal(sc.inertias[0], np.diag([1.0, 2.0, 3.0]))
    assert sc.inertias[1][0, 1] == 0.1
    cfg["spacecraft"][0]["inertia"] = [1.0, 2.0]
    with pytest.raises(ScenarioError, match="inertia"):
        scenario_from_dict(cfg)


def test_gamma_required():
    cfg = minimal_config()
    del cfg["gamma"]
    with pytest.raises(ScenarioError, match="gamma required"):
        scenario_from_dict(cfg)
    with pytest.raises(ScenarioError):
        scenario_from_dict(minimal_config(gamma="fast"))


def test_dt_and_horizon_validation():
    with pytest.raises(ScenarioError, match="dt"):
        scenario_from_dict(minimal_config(dt=0.0))
    with pytest.raises(ScenarioError, match="dt"):
        scenario_from_dict(minimal_config(dt=-0.5))
    # horizon must clear the largest delay bound
    with pytest.raises(ScenarioError, match="t_final"):
        scenario_from_dict(minimal_config(t_final=0.5))


def test_schema_gate():
    with pytest.raises(ScenarioError, match="schema"):
        scenario_from_dict(minimal_config(schema="attitude-consensus/99"))
    cfg = minimal_config()
    del cfg["schema"]
    with pytest.raises(ScenarioError, match="schema"):
        scenario_from_dict(cfg)


def test_edge_index_range_is_one_based():
    cfg = minimal_config()
    cfg["edges"][0]["from"] = 0
    with pytest.raises(ScenarioError, match="out of range"):
        scenario_from_dict(cfg)
    cfg = minimal_config()
    cfg["edges"][0]["to"] = 3
    with pytest.raises(ScenarioError, match="out of range"):
        scenario_from_dict(cfg)


def test_edge_delay_validation_surfaces():
    cfg = minimal_config()
    cfg["edges"][0]["h"] = 0.0
    with pytest.raises(ScenarioError, match="h must be > 0"):
        scenario_from_dict(cfg)
    cfg = minimal_config()
    cfg["edges"][0]["profile"] = "ramp"
    with pytest.raises(ScenarioError, match="profile"):
        scenario_from_dict(cfg)


def test_weights_all_or_none():
    cfg = minimal_config()
    cfg["edges"][0]["weight"] = 1.0
    with pytest.raises(ScenarioError, match="weight"):
        scenario_from_dict(cfg)
    cfg["edges"][1]["weight"] = 1.0
    sc = scenario_from_dict(cfg)
    assert sc.weights == {(0, 1): 1.0, (1, 0): 1.0}


def test_missing_spacecraft_fields_are_named():
    cfg = minimal_config()
    del cfg["spacecraft"][1]["omega0"]
    with pytest.raises(ScenarioError, match=r"spacecraft\[1\]"):
        scenario_from_dict(cfg)


def test_validate_rejects_bad_inertia():
    sc = default_scenario()
    bad = Scenario(
        name="bad",
        inertias=np.stack([np.diag([1.0, 1.0, -1.0])] * 4),
        sigma0=sc.sigma0,
        omega0=sc.omega0,
        edges=sc.edges,
        gamma=sc.gamma,
    )
    with pytest.raises(ScenarioError, match="positive definite"):
        bad.validate()


def test_validate_rejects_topology_errors():
    sc = default_scenario()
    # dropping the 3 -> 1 link leaves craft 1 without an in-neighbor
    edges = tuple(e for e in sc.edges if (e.src, e.dst) != (2, 0))
    bad = Scenario(name="cut", inertias=sc.inertias, sigma0=sc.sigma0,
                   omega0=sc.omega0, edges=edges, gamma=sc.gamma)
    with pytest.raises(ScenarioError, match="in-neighbor"):
        bad.validate()


def test_validate_rejects_nonfinite_state():
    sc = default_scenario()
    sigma0 = sc.sigma0.copy()
    sigma0[2, 1] = np.nan
    bad = Scenario(name="nan", inertias=sc.inertias, sigma0=sigma0,
                   omega0=sc.omega0, edges=sc.edges, gamma=sc.gamma)
    with pytest.raises(ScenarioError, match="non-finite"):
        bad.validate()


def test_build_topology_matches_edges():
    sc = default_scenario()
    t = sc.build_topology()
    assert t.edges == ((0, 1), (1, 2), (1, 3), (2, 0))
    assert np.array_equal(np.diag(t.laplacian), np.ones(4))


def test_delayed_edge_reuse_in_scenario():
    e = DelayedEdge(src=0, dst=1, h=2.0, d=0.0, profile="constant")
    sc = Scenario(
        name="tiny",
        inertias=np.stack([np.eye(3)] * 2),
        sigma0=np.zeros((2, 3)),
        omega0=np.zeros((2, 3)),
        edges=(e, DelayedEdge(src=1, dst=0, h=2.0, d=0.0, profile="constant")),
        gamma=1.0,
        t_final=10.0,
    )
    sc.validate()
