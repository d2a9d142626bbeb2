"""Command-line entry point.

Subcommands:
    simulate      integrate a scenario and write trace CSVs and figures
    analyze       gain bound, delay bound, and LMI problem dump
    verify-lmi    check a candidate Q/S file against the assembled LMIs
    calibrate-dde run the scalar integrator oracle xdot = -x(t-1)

Completed runs exit 0 even when the simulated dynamics diverge (divergence
is a reported result); nonzero exit codes mean configuration or tool errors.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .ddesim import calibrate_scalar_dde
from .lmi import LmiError, build_problem, load_candidate, verify_candidate
from .runner import run
from .scenario import ScenarioError, load_scenario
from .stability import StabilityError, default_omega_grid
from .topology import TopologyError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attitude-consensus",
        description="Simulation and stability analysis of multi-spacecraft "
                    "attitude consensus under time-varying communication "
                    "delays.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate a scenario and write "
                                            "trace artifacts")
    p_sim.add_argument("--config", required=True, help="scenario JSON file")
    p_sim.add_argument("--out", required=True, help="output directory")

    p_an = sub.add_parser("analyze", help="gain and delay-bound analysis")
    p_an.add_argument("--config", required=True, help="scenario JSON file")
    p_an.add_argument("--omega-min", type=float, default=1e-3,
                      help="lowest frequency of the sweep grid [rad/s]")
    p_an.add_argument("--omega-max", type=float, default=1e3,
                      help="highest frequency of the sweep grid [rad/s]")
    p_an.add_argument("--omega-points", type=int, default=20000,
                      help="number of grid points")
    p_an.add_argument("--out", default=None,
                      help="optional output directory for report files")

    p_lmi = sub.add_parser("verify-lmi", help="verify a candidate Q/S file")
    p_lmi.add_argument("--config", required=True, help="scenario JSON file")
    p_lmi.add_argument("--candidate", required=True,
                       help="plain-text candidate matrix file")

    p_cal = sub.add_parser("calibrate-dde", help="scalar delayed-integrator "
                                                 "oracle")
    p_cal.add_argument("--dt", type=float, default=0.01)
    p_cal.add_argument("--t-final", type=float, default=3.0)
    return parser


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.config)
    report = run(scenario, mode="simulate", out_dir=args.out)
    print(f"scenario: {report.scenario_name}")
    print(f"simulated {report.simulated_time:.2f} s at gamma = {report.gamma}")
    if report.diverged:
        print(f"diverged: yes ({report.divergence_reason})")
    else:
        print("diverged: no")
    print(f"initial consensus error: {report.initial_error:.6e}")
    print(f"final consensus error:   {report.final_error:.6e}")
    print(f"consensus achieved: {'yes' if report.consensus_achieved else 'no'}")
    if report.time_to_threshold is not None:
        print(f"time to threshold: {report.time_to_threshold:.2f} s")
    print(f"artifacts written to {args.out}")
    return 0


def _cmd_analyze(args) -> int:
    scenario = load_scenario(args.config)
    grid = default_omega_grid(args.omega_min, args.omega_max,
                              args.omega_points)
    report = run(scenario, mode="analyze", out_dir=args.out, omega_grid=grid)
    print(f"scenario: {report.scenario_name}")
    print(f"gamma in use: {report.gamma}")
    print(f"gain lower bound: {report.gamma_bound:.6f}")
    if report.delay_bound is None:
        print(f"delay bound not evaluated: {report.delay_note}")
    else:
        print(f"delay bound (computed infimum): {report.delay_bound:.6f} s "
              f"at omega = {report.delay_argmin_omega:.6f} rad/s")
        print(f"large-omega limit 1/(1+gamma): {report.delay_asymptote:.6f} s")
        print(f"asymptotic self-check: "
              f"{'pass' if report.delay_asymptote_ok else 'FAIL'}")
        if report.delay_bound_reference is not None:
            print(f"reference delay bound: "
                  f"{report.delay_bound_reference:.6f} s"
                  + ("" if report.delay_reference_matches
                     else " (differs from the computed infimum; reported "
                          "for comparison, not asserted)"))
    if args.out:
        print(f"artifacts written to {args.out}")
    return 0


def _cmd_verify_lmi(args) -> int:
    scenario = load_scenario(args.config)
    problem = build_problem(scenario.build_topology(), scenario.gamma,
                            scenario.edges)
    candidate = load_candidate(args.candidate, problem)
    report = verify_candidate(problem, candidate)
    print(f"LMI verification for scenario '{scenario.name}' "
          f"({problem.n} agents, {problem.m} edges)")
    rows = (("psi1", "psi1", report.psi1_nd),
            ("psi2", "psi2", report.psi2_nd),
            ("psi3", "psi3", report.psi3_nd),
            ("combined (psi1+psi2+omega)", "combined", report.combined_nd))
    for label, key, verdict in rows:
        lo, hi = report.extremes[key]
        print(f"  {label}: negative definite = {'yes' if verdict else 'no'} "
              f"(eigenvalues in [{lo:.6e}, {hi:.6e}])")
    if not report.psi2_nd:
        print("  note: psi2's leading block is a sum of E'QE terms and is "
              "positive semidefinite for any positive definite Q, so psi2 "
              "cannot be negative definite as printed.")
    return 0


def _cmd_calibrate(args) -> int:
    times, values = calibrate_scalar_dde(dt=args.dt, t_final=args.t_final)
    print("scalar calibration problem: xdot = -x(t - 1), x(s) = 1 for s <= 0")
    print(f"dt = {args.dt}, t_final = {args.t_final}")
    closed_form = {1.0: 0.0, 2.0: -0.5, 3.0: -1.0 / 6.0}
    for target, expected in closed_form.items():
        if target > times[-1] + 1e-12:
            continue
        idx = int(round(target / args.dt))
        if abs(times[idx] - target) > 1e-9:
            continue
        got = values[idx]
        print(f"x({target:.0f}) = {got: .9f}   closed form {expected: .9f}   "
              f"|difference| = {abs(got - expected):.3e}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "analyze": _cmd_analyze,
        "verify-lmi": _cmd_verify_lmi,
        "calibrate-dde": _cmd_calibrate,
    }
    try:
        return handlers[args.command](args)
    except (ScenarioError, TopologyError, LmiError, StabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
