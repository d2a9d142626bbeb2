"""Attitude consensus of networked spacecraft under communication delays.

Simulation of N rigid bodies exchanging attitude state over a directed graph
with bounded time-varying per-edge delays, plus the matching stability
analyses: a gain lower bound, closed-loop eigenvalues, a small-gain delay
bound, and the delay-dependent LMI construction with candidate verification.
"""

__version__ = "0.1.0"

from .attitude import (LinearizedState, Mrp, MrpSingularityError,
                       RigidBodyParams, SpacecraftState, euler_dynamics,
                       feedback_linearize, from_linearized, kinematics_matrix,
                       to_linearized)
from .controller import (ClosedLoopMatrices, ConsensusErrorOperator,
                         StackedState, assemble_closed_loop,
                         build_consensus_operator, consensus_error,
                         control_input)
from .ddesim import (DelayProfile, HistoryBuffer, Trace, calibrate_scalar_dde,
                     delay_at, simulate, simulate_linear)
from .lmi import (LmiCandidate, LmiError, LmiProblem, build_E, build_problem,
                  build_psi_matrices, identity_candidate, load_candidate,
                  verify_candidate, write_candidate)
from .matcore import (ComplexEigenSet, EigenvalueConvergenceError, eigenvalues,
                      is_negative_definite, is_positive_definite, kron, skew)
from .runner import RunReport, run
from .scenario import (Scenario, ScenarioError, default_scenario,
                       default_scenario_path, load_scenario)
from .stability import (DelayBoundReport, GammaBoundReport, StabilityError,
                        closed_loop_eigenvalues, gamma_lower_bound,
                        small_gain_delay_bound)
from .topology import (DelayedEdge, Topology, TopologyError,
                       build_delay_gain_matrices, build_topology,
                       has_rooted_spanning_tree, is_strongly_connected)
