"""Dispersive space-time norms, sharpness packets, and block-norm estimation."""
from .blocks import (
    COHERENT,
    GENERIC,
    HIGH_PARALLEL,
    PLUS_PLUS_PLUS,
    BlockLattice,
    DyadicBlockSpec,
    block_bound,
    block_multiplier,
    check_block_bounds,
    resonance_h,
    sample_block_specs,
)
from .knapp import (
    KnappConfig,
    KnappSweepResult,
    knapp_grid,
    knapp_sweep,
    knapp_triple,
    trilinear_output_spectrum,
    trilinear_ratio,
)
from .multipliers import (
    Gamma3Multiplier,
    estimate_2Z_norm,
    estimate_3Z_norm,
    gamma2_matrix,
    norm_2Z,
    one_slot_pair,
    ttstar_pair,
)
from .spacetime import (
    SpaceTimeField,
    SpaceTimeGrid,
    free_solution_field,
    to_fourier3,
    to_physical3,
    xsb_norm,
)

__all__ = [
    "BlockLattice",
    "COHERENT",
    "DyadicBlockSpec",
    "GENERIC",
    "Gamma3Multiplier",
    "HIGH_PARALLEL",
    "KnappConfig",
    "KnappSweepResult",
    "PLUS_PLUS_PLUS",
    "SpaceTimeField",
    "SpaceTimeGrid",
    "block_bound",
    "block_multiplier",
    "check_block_bounds",
    "estimate_2Z_norm",
    "estimate_3Z_norm",
    "free_solution_field",
    "gamma2_matrix",
    "knapp_grid",
    "knapp_sweep",
    "knapp_triple",
    "norm_2Z",
    "one_slot_pair",
    "resonance_h",
    "sample_block_specs",
    "to_fourier3",
    "to_physical3",
    "trilinear_output_spectrum",
    "trilinear_ratio",
    "ttstar_pair",
    "xsb_norm",
]
