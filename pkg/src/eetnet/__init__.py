"""Excitation energy transport on small quantum networks.

Single-excitation Lindblad dynamics of N two-level sites coupled by coherent
hopping, with an absorbing sink, optional dephasing and dissipation, plus the
dark-state analysis that predicts when transport stalls.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DarkBlockNotDegenerate,
    EETError,
    InvariantViolation,
    NotHermitianError,
    StepSizeUnderflow,
)
from .evolve import IntegratorConfig, Trajectory, find_steady_state, integrate, propagate_exact  # noqa: E402
from .hamiltonian import (  # noqa: E402
    accessible_dark_dimension,
    build_hamiltonian,
    dark_projector,
    expand_initial_state,
    predicted_efficiency,
    predicted_residual_populations,
)
from .lindblad import LindbladModel, NoiseConfig, apply_rhs, build_liouvillian, build_model  # noqa: E402
from .network import (  # noqa: E402
    DisorderConfig,
    NetworkSpec,
    apply_disorder,
    complete_network,
    delete_edge,
    enumerate_topologies,
    set_hopping,
)
from .observables import NotReached, efficiency, localization_report, saturation_time  # noqa: E402
