"""Block renormalization group for the spin-1/2 XXZ chain with DM interaction.

Three-site Kadanoff blocks, the renormalized coupling flow, two-qubit
entanglement of the block ground state and finite-size scaling of its
derivatives near the critical line ``Delta_c = sqrt(1 + D^2)``.
"""

from .block_rg import (
    BlockGroundDoublet,
    Couplings,
    FlowTrace,
    block_hamiltonian,
    critical_delta,
    critical_dm,
    flow,
    ground_doublet,
    mapped_anisotropy,
    rg_step,
)
from .config import TOL, Tolerances
from .entanglement import (
    ConcurrenceResult,
    TwoQubitDensity,
    concurrence,
    concurrence_at_step,
    dC_dD,
    dC_dDelta,
    entanglement_of_formation,
    reduced_density,
    spin_flipped,
)
from .errors import (
    AmbiguousGroundSpace,
    DegenerateFit,
    DMQRGError,
    MalformedResultFile,
    NoMinimumBracketed,
    NonHermitianInput,
    NotPositiveSemidefinite,
    StepTooLarge,
)
from .scaling import (
    ScalingFit,
    ScalingReport,
    SweepResult,
    find_derivative_minimum,
    fit_divergence_scaling,
    fit_position_scaling,
    scaling_analysis,
    singularity_surface,
    sweep,
)

__version__ = "0.1.0"
