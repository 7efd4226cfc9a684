"""Two-qubit entanglement of the block ground state.

Concurrence follows Wootters: ``C = max(l1 - l2 - l3 - l4, 0)`` where the
``l_k`` are the square roots, in descending order, of the eigenvalues of
``rho * rho_tilde`` with ``rho_tilde = (sy x sy) rho^* (sy x sy)``.

The ``l_k`` are obtained as singular values of ``tau = W^T (sy x sy) W`` for
any factorization ``rho = W W^dagger``.  This has the same spectrum as
``sqrt(rho) rho_tilde sqrt(rho)`` but does not take square roots of
eigenvalues that are zero up to round-off, which would otherwise leave
~1e-9 noise in C and ruin finite differences.  The sandwich route is kept
as ``method="sandwich"`` for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .block_rg import Couplings, flow, ground_doublet
from .config import TOL
from .errors import NotPositiveSemidefinite, StepTooLarge
from .spin_core import hermitian_eigensystem, kron, matrix_sqrt_psd, pair_factor, pauli

PAIRS = {"sites_12": (1, 2), "sites_13": (1, 3)}
_SYSY = kron(pauli("y"), pauli("y"))


@dataclass(frozen=True)
class TwoQubitDensity:
    """4x4 density matrix of a site pair in the basis {uu, ud, du, dd}.

    ``factor`` optionally holds ``W`` with ``matrix = W W^dagger``; densities
    reduced from a pure state carry it so concurrence never has to
    re-factorize a rank-deficient matrix.
    """

    matrix: np.ndarray
    pair_label: Optional[str] = None
    factor: Optional[np.ndarray] = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"two-qubit density must be 4x4, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > TOL.hermitian:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > TOL.hermitian:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} != 1")
        if self.pair_label is not None and self.pair_label not in PAIRS:
            raise ValueError(f"unknown pair label {self.pair_label!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_state(cls, state: np.ndarray, pair: str | tuple[int, int]) -> "TwoQubitDensity":
        label = pair if isinstance(pair, str) else None
        sites = PAIRS[pair] if isinstance(pair, str) else tuple(pair)
        w = pair_factor(state, sites)
        rho = w @ w.conj().T
        return cls(0.5 * (rho + rho.conj().T), label, w)


@dataclass(frozen=True)
class ConcurrenceResult:
    lambdas: tuple[float, float, float, float]
    concurrence: float
    eof: float


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def entanglement_of_formation(c: float) -> float:
    """``h(1/2 + sqrt(1 - C^2)/2)`` with h the binary entropy."""
    c = min(max(c, 0.0), 1.0)
    return binary_entropy(0.5 + 0.5 * math.sqrt(1.0 - c * c))


def reduced_density(c: Couplings, pair: str = "sites_13") -> TwoQubitDensity:
    """Pair density of the block ground state psi0.

    ``sites_13`` traces out the middle site, ``sites_12`` the third one.
    """
    if pair not in PAIRS:
        raise ValueError(f"pair must be one of {sorted(PAIRS)}, got {pair!r}")
    return TwoQubitDensity.from_state(ground_doublet(c).psi0, pair)


def spin_flipped(rho: TwoQubitDensity | np.ndarray) -> np.ndarray:
    m = rho.matrix if isinstance(rho, TwoQubitDensity) else np.asarray(rho, dtype=complex)
    return _SYSY @ m.conj() @ _SYSY


def _factor(m: np.ndarray) -> np.ndarray:
    w, v = hermitian_eigensystem(m)
    if w[0] < -TOL.psd_error:
        raise NotPositiveSemidefinite(f"smallest eigenvalue {w[0]:.3e}")
    keep = w > TOL.density_rank_cut
    return v[:, keep] * np.sqrt(w[keep])


def _lambdas_factor(rho: TwoQubitDensity | np.ndarray) -> np.ndarray:
    if isinstance(rho, TwoQubitDensity) and rho.factor is not None:
        w = rho.factor
    else:
        m = rho.matrix if isinstance(rho, TwoQubitDensity) else np.asarray(rho, dtype=complex)
        w = _factor(m)
    if w.shape[1] == 0:
        return np.zeros(4)
    tau = w.T @ _SYSY @ w
    s = np.linalg.svd(tau, compute_uv=False)
    out = np.zeros(4)
    k = min(4, s.size)
    out[:k] = np.sort(s)[::-1][:k]
    return out


def _lambdas_sandwich(rho: TwoQubitDensity | np.ndarray) -> np.ndarray:
    m = rho.matrix if isinstance(rho, TwoQubitDensity) else np.asarray(rho, dtype=complex)
    s = matrix_sqrt_psd(m)
    r = s @ spin_flipped(m) @ s
    ev, _ = hermitian_eigensystem(0.5 * (r + r.conj().T))
    if ev[0] < -TOL.psd_error:
        raise NotPositiveSemidefinite(f"sandwich eigenvalue {ev[0]:.3e}")
    return np.sqrt(np.clip(ev, 0.0, None))[::-1]


def concurrence(rho: TwoQubitDensity | np.ndarray, method: str = "factor") -> ConcurrenceResult:
    """Wootters concurrence and entanglement of formation of a two-qubit density."""
    if method == "factor":
        lam = _lambdas_factor(rho)
    elif method == "sandwich":
        lam = _lambdas_sandwich(rho)
    else:
        raise ValueError(f"unknown method {method!r}")
    lam = tuple(float(x) for x in lam)
    c = max(lam[0] - lam[1] - lam[2] - lam[3], 0.0)
    c = min(c, 1.0)
    return ConcurrenceResult(lambdas=lam, concurrence=c, eof=entanglement_of_formation(c))


def _value(c: Couplings, pair: str, quantity: str) -> float:
    res = concurrence(reduced_density(c, pair))
    if quantity == "concurrence":
        return res.concurrence
    if quantity == "eof":
        return res.eof
    raise ValueError(f"unknown quantity {quantity!r}")


def _at_step(c: Couplings, n: int, pair: str, quantity: str) -> tuple[float, bool]:
    tr = flow(c, n)
    if tr.saturated[-1]:
        # Neel product-state limit
        return 0.0, True
    return _value(tr.final, pair, quantity), False


def concurrence_at_step(c: Couplings, n: int, pair: str = "sites_13") -> float:
    """Concurrence of ``pair`` after ``n`` renormalization steps of ``c``."""
    return _at_step(c, n, pair, "concurrence")[0]


def eof_at_step(c: Couplings, n: int, pair: str = "sites_13") -> float:
    return _at_step(c, n, pair, "eof")[0]


def default_step(x: float) -> float:
    return TOL.fd_rel_step * max(1.0, abs(x))


def _derivative(c: Couplings, n: int, pair: str, wrt: str, h: Optional[float], quantity: str) -> float:
    x = getattr(c, wrt)
    h = default_step(x) if h is None else float(h)
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    if x < h:
        raise ValueError(f"{wrt}={x} is closer than one step h={h} to the domain edge")
    hi, sat_hi = _at_step(c.with_(**{wrt: x + h}), n, pair, quantity)
    lo, sat_lo = _at_step(c.with_(**{wrt: x - h}), n, pair, quantity)
    if sat_hi != sat_lo:
        raise StepTooLarge(f"saturation changes between {wrt}={x - h} and {wrt}={x + h} at n={n}")
    return (hi - lo) / (2.0 * h)


def dC_dDelta(
    c: Couplings, n: int = 0, pair: str = "sites_13", h: Optional[float] = None, quantity: str = "concurrence"
) -> float:
    """Central difference of the step-``n`` concurrence in the bare anisotropy.

    The whole flow is recomputed at Delta +- h, so the result includes the
    amplification dDelta_n/dDelta_0 that makes it diverge at criticality.
    """
    return _derivative(c, n, pair, "Delta", h, quantity)


def dC_dD(
    c: Couplings, n: int = 0, pair: str = "sites_13", h: Optional[float] = None, quantity: str = "concurrence"
) -> float:
    """Central difference of the step-``n`` concurrence in the bare DM strength."""
    return _derivative(c, n, pair, "D", h, quantity)


def richardson_check(c: Couplings, n: int, pair: str = "sites_13", wrt: str = "Delta", h: Optional[float] = None):
    """Return ``(d_h, d_h/2, extrapolated, relative gap)`` for the central difference."""
    deriv = dC_dDelta if wrt == "Delta" else dC_dD
    h = default_step(getattr(c, wrt)) if h is None else h
    d1 = deriv(c, n, pair, h)
    d2 = deriv(c, n, pair, h / 2)
    extrap = (4.0 * d2 - d1) / 3.0
    rel = abs(d1 - extrap) / max(abs(extrap), 1e-300)
    return d1, d2, extrap, rel
