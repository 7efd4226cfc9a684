"""Numerical tolerances shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12  # flagged-Hermitian matrices, density invariants
    hermitian_input: float = 1e-10  # accepted asymmetry at eigensolver entry
    eig_residual: float = 1e-10
    degeneracy: float = 1e-10
    psd_clamp: float = 1e-12  # eigenvalues in [-psd_clamp, 0) are set to 0 silently
    psd_error: float = 1e-8  # below -psd_error a matrix is rejected
    sqrt_residual: float = 1e-9
    density_rank_cut: float = 1e-15  # weights dropped when factorizing rho = W W^dagger
    delta_cap: float = 1e12  # Delta saturation in the Neel basin
    max_steps: int = 64
    fd_rel_step: float = 1e-5
    richardson_rel: float = 1e-6
    golden_tol: float = 1e-6


TOL = Tolerances()
