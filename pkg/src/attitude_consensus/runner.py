"""Scenario runner: simulations, analyses, and file artifacts.

run() drives a scenario through simulation and/or analysis and optionally
writes artifacts into an output directory:

    trace.csv                 full trace (t, per-craft sigma, sigma_dot,
                              omega, torque, then consensus error)
    attitudes.csv             per-figure CSV slices of the trace
    attitude_rates.csv
    angular_velocities.csv
    torques.csv
    consensus_error.csv
    *.svg                     the matching rendered figures
    report.json               the RunReport, machine readable
    analysis.txt              gain and delay-bound report, human readable
    analysis.json             the same, machine readable
    delay_sweep.csv           omega grid and tau0 values
    delay_sweep.svg
    lmi_problem.txt           dimensions and matrices of the assembled LMIs

Numbers in CSV files are emitted with repr, which round-trips exactly, so
re-running a scenario produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from . import lmi, plots
from .ddesim import Trace, simulate
from .scenario import Scenario
from .stability import (DelayBoundReport, GammaBoundReport, StabilityError,
                        gamma_lower_bound, small_gain_delay_bound)

CONSENSUS_THRESHOLD = 1e-3  # relative to the initial consensus error

MODES = ("simulate", "analyze", "both")


@dataclass(frozen=True)
class RunReport:
    """Outcome summary of one scenario run."""

    scenario_name: str
    mode: str
    gamma: float
    consensus_achieved: bool
    initial_error: float
    final_error: float
    time_to_threshold: float | None
    diverged: bool
    divergence_reason: str | None
    simulated_time: float | None
    gamma_bound: float
    delay_bound: float | None
    delay_argmin_omega: float | None
    delay_asymptote: float | None
    delay_asymptote_ok: bool | None
    delay_bound_reference: float | None
    delay_reference_matches: bool | None
    delay_note: str | None

    def as_dict(self) -> dict:
        return asdict(self)


def consensus_verdict(trace: Trace):
    """(achieved, initial, final, time_to_threshold) for a trace."""
    initial = float(trace.error[0])
    final = float(trace.error[-1])
    if initial <= 0.0:
        return True, initial, final, 0.0
    threshold = CONSENSUS_THRESHOLD * initial
    below = np.nonzero(trace.error < threshold)[0]
    t_hit = float(trace.t[below[0]]) if below.size else None
    return final < threshold, initial, final, t_hit


def analyze_scenario(scenario: Scenario, omega_grid=None):
    """(gamma report, delay report or None, note) for a scenario.

    The delay bound requires gamma above the gain bound; when the scenario
    gain does not qualify the note says so and the delay report is None.
    """
    topo = scenario.build_topology()
    gb = gamma_lower_bound(topo)
    try:
        db = small_gain_delay_bound(
            topo, scenario.gamma, omega_grid=omega_grid,
            reference_bound=scenario.reference_delay_bound)
        note = None
    except StabilityError as exc:
        db = None
        note = str(exc)
    return gb, db, note


def _build_report(scenario: Scenario, mode: str, trace: Trace | None,
                  gb: GammaBoundReport, db: DelayBoundReport | None,
                  note: str | None) -> RunReport:
    if trace is not None:
        achieved, initial, final, t_hit = consensus_verdict(trace)
        diverged = trace.diverged
        reason = trace.divergence_reason
        sim_time = trace.final_time
    else:
        achieved, initial, final, t_hit = False, float("nan"), float("nan"), None
        diverged, reason, sim_time = False, None, None
    return RunReport(
        scenario_name=scenario.name,
        mode=mode,
        gamma=scenario.gamma,
        consensus_achieved=achieved,
        initial_error=initial,
        final_error=final,
        time_to_threshold=t_hit,
        diverged=diverged,
        divergence_reason=reason,
        simulated_time=sim_time,
        gamma_bound=gb.bound,
        delay_bound=None if db is None else db.tau0_bound,
        delay_argmin_omega=None if db is None else db.argmin_omega,
        delay_asymptote=None if db is None else db.asymptote,
        delay_asymptote_ok=None if db is None else db.asymptote_ok,
        delay_bound_reference=scenario.reference_delay_bound,
        delay_reference_matches=None if db is None else db.reference_matches,
        delay_note=note,
    )


def _write_csv(path: str, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value: float) -> str:
    return repr(float(value))


def write_trace_csv(trace: Trace, path: str):
    """Full trace: t, per craft sigma/sigma_dot/omega/torque xyz, error."""
    header = ["t"]
    for i in range(trace.n):
        c = i + 1
        for quantity in ("sigma", "sigmadot", "omega", "tau"):
            for axis in ("x", "y", "z"):
                header.append(f"{quantity}{c}_{axis}")
    header.append("consensus_error")
    rows = []
    for k in range(trace.t.size):
        row = [_fmt(trace.t[k])]
        for i in range(trace.n):
            row.extend(_fmt(v) for v in trace.sigma[k, i])
            row.extend(_fmt(v) for v in trace.sigma_dot[k, i])
            row.extend(_fmt(v) for v in trace.omega[k, i])
            row.extend(_fmt(v) for v in trace.torque[k, i])
        row.append(_fmt(trace.error[k]))
        rows.append(row)
    _write_csv(path, header, rows)


def read_trace_csv(path: str):
    """Parse a trace CSV back into arrays: (t, sigma, sigma_dot, omega,
    torque, error); shapes as in Trace."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    n = (len(header) - 2) // 12
    t = data[:, 0]
    blocks = data[:, 1:-1].reshape(data.shape[0], n, 4, 3)
    return (t, blocks[:, :, 0], blocks[:, :, 1], blocks[:, :, 2],
            blocks[:, :, 3], data[:, -1])


def _write_slice_csvs(trace: Trace, out_dir: str):
    groups = [
        ("attitudes", "sigma", trace.sigma),
        ("attitude_rates", "sigmadot", trace.sigma_dot),
        ("angular_velocities", "omega", trace.omega),
        ("torques", "tau", trace.torque),
    ]
    for stem, quantity, data in groups:
        header = ["t"] + [
            f"{quantity}{i + 1}_{axis}"
            for i in range(trace.n) for axis in ("x", "y", "z")
        ]
        rows = [
            [_fmt(trace.t[k])] + [_fmt(v) for v in data[k].ravel()]
            for k in range(trace.t.size)
        ]
        _write_csv(os.path.join(out_dir, f"{stem}.csv"), header, rows)
    _write_csv(
        os.path.join(out_dir, "consensus_error.csv"),
        ["t", "consensus_error"],
        [[_fmt(trace.t[k]), _fmt(trace.error[k])] for k in range(trace.t.size)],
    )


def format_analysis_text(scenario: Scenario, gb: GammaBoundReport,
                         db: DelayBoundReport | None, note: str | None) -> str:
    lines = [
        f"analysis report for scenario '{scenario.name}'",
        f"gamma in use: {scenario.gamma}",
        "",
        "gain lower bound (undelayed consensus law)",
        f"  bound: {gb.bound:.6f}",
        "  per-eigenvalue candidates (mu of -L -> bound):",
    ]
    for mu, cand in gb.contributions:
        lines.append(f"    {mu.real:+.6f}{mu.imag:+.6f}j -> {cand:.6f}")
    lines.append("")
    lines.append("small-gain delay bound")
    if db is None:
        lines.append(f"  not evaluated: {note}")
    else:
        lines.append(f"  computed infimum: {db.tau0_bound:.6f} s "
                     f"at omega = {db.argmin_omega:.6f} rad/s")
        lines.append(f"  large-omega limit 1/(1+gamma): {db.asymptote:.6f} s")
        lines.append(f"  infimum <= limit * 1.001 (self-check): "
                     f"{'pass' if db.asymptote_ok else 'FAIL'}")
        if db.reference_bound is not None:
            lines.append(f"  reference value: {db.reference_bound:.6f} s")
            if db.reference_matches:
                lines.append("  computed infimum matches the reference "
                             "within 1%.")
            else:
                lines.append(
                    "  NOTE: computed infimum and reference value disagree; "
                    "the reference is reported for comparison only and is "
                    "not asserted.")
    return "\n".join(lines) + "\n"


def _analysis_json(scenario: Scenario, gb: GammaBoundReport,
                   db: DelayBoundReport | None, note: str | None) -> dict:
    payload = {
        "scenario": scenario.name,
        "gamma": scenario.gamma,
        "gamma_bound": gb.bound,
        "gamma_bound_contributions": [
            {"mu_re": mu.real, "mu_im": mu.imag, "bound": cand}
            for mu, cand in gb.contributions
        ],
        "delay_bound": None,
        "delay_note": note,
    }
    if db is not None:
        payload["delay_bound"] = {
            "computed_infimum": db.tau0_bound,
            "argmin_omega": db.argmin_omega,
            "asymptote": db.asymptote,
            "asymptote_ok": db.asymptote_ok,
            "reference": db.reference_bound,
            "reference_matches": db.reference_matches,
        }
    return payload


def _write_lmi_dump(scenario: Scenario, path: str):
    topo = scenario.build_topology()
    problem = lmi.build_problem(topo, scenario.gamma, scenario.edges)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"LMI problem for scenario '{scenario.name}'\n")
        fh.write(f"agents: {problem.n}; edges: {problem.m}; "
                 f"gamma: {scenario.gamma}\n")
        fh.write("edge order (1-based), h, d:\n")
        for e in problem.edge_order:
            fh.write(f"  {e[0] + 1}->{e[1] + 1}  h={problem.h[e]}  "
                     f"d={problem.d[e]}\n")
        for name, M in ([("A0", problem.A0)]
                        + [(f"A_{e[0] + 1}->{e[1] + 1}", problem.Aij[e])
                           for e in problem.edge_order]
                        + [("E", problem.E)]):
            fh.write(f"\n{name} ({M.shape[0]}x{M.shape[1]}):\n")
            for row in M:
                fh.write("  " + " ".join(f"{v: .6g}" for v in row) + "\n")


def run(scenario: Scenario, mode: str = "both", out_dir: str | None = None,
        omega_grid=None) -> RunReport:
    """Run a scenario and optionally write artifacts.

    mode selects simulation, analysis, or both. Divergence of the simulated
    dynamics is a valid outcome recorded in the report, not an error.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    scenario.validate()
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    trace = simulate(scenario) if mode in ("simulate", "both") else None
    gb, db, note = analyze_scenario(scenario, omega_grid=omega_grid)
    report = _build_report(scenario, mode, trace, gb, db, note)

    if out_dir is not None:
        if trace is not None:
            write_trace_csv(trace, os.path.join(out_dir, "trace.csv"))
            _write_slice_csvs(trace, out_dir)
            plots.trace_figures(trace, out_dir)
        with open(os.path.join(out_dir, "report.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2)
            fh.write("\n")
        if mode in ("analyze", "both"):
            with open(os.path.join(out_dir, "analysis.txt"), "w",
                      encoding="utf-8") as fh:
                fh.write(format_analysis_text(scenario, gb, db, note))
            with open(os.path.join(out_dir, "analysis.json"), "w",
                      encoding="utf-8") as fh:
                json.dump(_analysis_json(scenario, gb, db, note), fh, indent=2)
                fh.write("\n")
            if db is not None:
                _write_csv(
                    os.path.join(out_dir, "delay_sweep.csv"),
                    ["omega", "tau0"],
                    [[_fmt(w), _fmt(v)] for w, v in
                     zip(db.omega_grid, db.tau0_values)],
                )
                plots.delay_sweep_figure(
                    db, os.path.join(out_dir, "delay_sweep.svg"))
            _write_lmi_dump(scenario, os.path.join(out_dir, "lmi_problem.txt"))
    return report
