"""Qudit simulation around the generalized XOR gate: Bell states,
teleportation and post-selected state purification."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ATOL,
    CapacityError,
    DensityMatrix,
    ImpossibleOutcomeError,
    PureState,
    UnitaryOp,
    apply_unitary,
    dft_unitary,
    fidelity,
    mod_sub,
    partial_trace,
    post_select,
    tensor,
    truncated_dft_unitary,
)
from .gates import (  # noqa: E402
    BellLabel,
    bell_measurement,
    bell_state,
    correction_unitary,
    gxor_add_unitary,
    gxor_unitary,
    kerr_gxor_images,
)
from .purify import (  # noqa: E402
    PurifyConfig,
    nonlinear_map,
    nonlinear_map_oracle,
    run_purification,
    separability_threshold,
    sweep,
    werner_state,
)
from .teleport import teleport, teleport_demo, verify_teleport_identity  # noqa: E402
