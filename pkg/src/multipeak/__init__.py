"""Multi-peak periodic solutions of −Δu + u − u₊^p = 0 on a periodic strip.

Modules
-------
groundstate
    Radial ground state by shooting, with exponential tail constants.
domain
    Periodic-strip discretization, Helmholtz operator, inner products.
ansatz
    Multi-peak configurations, the periodized ansatz, and its residual.
spectrum
    Weighted eigenproblem of the linearization and the near-kernel basis.
reduction
    Lyapunov–Schmidt correction, projection coefficients, equilibration.
dancer
    Newton continuation to the periodic solution and its structural probes.
asymptotics
    Interaction-integral and Taylor-remainder oracles.
weighted
    Exponentially weighted a priori estimates for constrained solves.
cli
    Subcommand front end with reproducible JSON summaries.
"""

from .groundstate import GroundStateProfile, solve_ground_state
from .domain import GridField, StripGrid
from .ansatz import AnsatzBundle, PeakConfiguration, build_ansatz

__all__ = [
    "AnsatzBundle",
    "GridField",
    "GroundStateProfile",
    "PeakConfiguration",
    "StripGrid",
    "build_ansatz",
    "solve_ground_state",
]

__version__ = "0.1.0"
