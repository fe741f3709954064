"""Numerics for classical-classical-quantum multiple-access channels:
transmission and identification codes, the random transformator
construction, finite-blocklength rate regions and converse checks."""

from .config import Tolerances, get_tolerances, override, set_tolerances
from .dist import Distribution
from .linalg import POVM, DimensionError, InvalidStateError, hermitian_eig, partial_trace, von_neumann_entropy
from .channels import (
    FIX_AVERAGE_X,
    FIX_AVERAGE_Y,
    CCQChannel,
    ChannelState,
    ClassicalChannel,
    CQChannel,
    channel_state,
    extend_memoryless,
    fix_sender,
    induce_classical,
    marginal_cq,
)
from .coding import (
    CQCode,
    IDCode,
    SimultaneousStructure,
    TransmissionCode,
    acceptance_matrix,
    avg_error,
    check_simultaneous,
    common_refinement,
    id_error_1,
    id_error_2,
    id_error_2_cross,
    max_error,
    transmission_as_id_code,
)

__version__ = "0.1.0"
