"""Entropic uncertainty constants and strong-subadditivity audits for channels
between finite-dimensional matrix algebras."""

__version__ = "0.1.0"

from .algebra import (
    AlgElement,
    Algebra,
    PositivityError,
    diagonal_algebra,
    full_algebra,
    make_algebra,
    partial_trace,
    trivial_algebra,
)
from .channels import (
    Channel,
    Povm,
    adjoint,
    channel_from_kraus,
    choi_matrix,
    compose,
    id_tensor,
    partial_trace_channel,
    povm_channel,
    random_channel,
    random_povm,
    random_state,
    random_unitary,
    tensor,
    trace_channel,
    unitary_channel,
)
from .constants import (
    bsw_constant,
    cb_constant,
    frank_lieb_overlap,
    overlap_constant,
    state_dependent_constant,
)
from .entropy import (
    conditional_entropy,
    relative_entropy,
    sandwiched_renyi_relative,
    von_neumann_entropy,
)
from .inclusions import (
    Inclusion,
    InclusionError,
    cond_expectation,
    conjugate_inclusion,
    diagonal_inclusion,
    nested_inclusion,
    tensor_factor_inclusion,
    trivial_inclusion,
)
from .kappa import StateExpectation, c_of_t, factor_expectation, kappa, trivial_expectation
from .norms import (
    amalgamated_L1p_norm,
    l1_inf_norm,
    linf_1_norm,
    sandwiched_renyi_conditional,
    weighted_amalgamated_L1p,
)
from .sdp import expectation_constrained_max, solve_lmi
from .verify import (
    InequalityReport,
    check_theorem_A,
    check_theorem_B,
    check_theorem_C,
    detect_commuting_square,
    gcmi,
    minimize_gcmi,
)
