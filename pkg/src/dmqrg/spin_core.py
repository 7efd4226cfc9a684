"""Dense qubit algebra: Pauli matrices, tensor products, Hermitian spectra.

Basis convention used everywhere in the package: a single qubit is ordered
(up, down), i.e. ``|0> = |up>`` is the +1 eigenvector of sigma^z, and site 1
is the most significant factor of a tensor product.  ``|down down up>`` on
three sites is therefore basis index ``0b110 = 6``.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .config import TOL
from .errors import NonHermitianInput, NotPositiveSemidefinite

UP, DOWN = 0, 1

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in _PAULI.values():
    _m.setflags(write=False)


def pauli(axis: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``axis`` in {"x", "y", "z"} (a copy)."""
    try:
        return _PAULI[axis.lower()].copy()
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, ops)


def site_operator(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Embed a single-site operator on ``site`` (1-based) of an ``n_sites`` chain."""
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} outside 1..{n_sites}")
    eye = np.eye(2, dtype=complex)
    return kron(*[op if k == site else eye for k in range(1, n_sites + 1)])


def is_hermitian(m: np.ndarray, tol: float = TOL.hermitian) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def hermitian_eigensystem(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian matrix.

    Raises NonHermitianInput when ``m`` deviates from its adjoint by more than
    ``TOL.hermitian_input`` in any entry.
    """
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, TOL.hermitian_input):
        raise NonHermitianInput("matrix is not Hermitian within tolerance")
    # symmetrize so LAPACK sees exactly Hermitian data regardless of which triangle it reads
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return w, v


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues down to ``-TOL.psd_error`` are treated as round-off and
    clamped to zero; anything more negative raises NotPositiveSemidefinite.
    """
    w, v = hermitian_eigensystem(m)
    if w.size and w[0] < -TOL.psd_error:
        raise NotPositiveSemidefinite(f"smallest eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)) @ v.conj().T
    return 0.5 * (s + s.conj().T)


def normalize(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    norm = np.linalg.norm(state)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return state / norm


def n_qubits(state: np.ndarray) -> int:
    dim = np.asarray(state).shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"state dimension {dim} is not a power of two")
    return n


def pair_factor(state: np.ndarray, keep: tuple[int, int]) -> np.ndarray:
    """Matrix ``W`` (4 x 2^(n-2)) with ``W W^dagger`` the reduced density of ``keep``.

    Rows follow the two kept sites in ascending order, ``{uu, ud, du, dd}``;
    columns enumerate the traced environment.
    """
    state = np.asarray(state, dtype=complex)
    n = n_qubits(state)
    a, b = sorted(keep)
    if a == b or not (1 <= a and b <= n):
        raise ValueError(f"invalid site pair {keep} for {n} qubits")
    rest = [k for k in range(n) if k not in (a - 1, b - 1)]
    t = state.reshape((2,) * n).transpose([a - 1, b - 1, *rest])
    return t.reshape(4, -1)


def pair_density(state: np.ndarray, keep: tuple[int, int]) -> np.ndarray:
    """Reduced density matrix of two sites of a pure ``n``-qubit state."""
    w = pair_factor(state, keep)
    rho = w @ w.conj().T
    return 0.5 * (rho + rho.conj().T)


def partial_trace(state: np.ndarray, traced_site: int) -> np.ndarray:
    """Trace one site out of a normalized 3-qubit pure state.

    Returns the 4x4 density of the remaining two sites in ascending site
    order, basis ``{uu, ud, du, dd}``.
    """
    if n_qubits(state) != 3:
        raise ValueError("partial_trace expects a 3-qubit state")
    if traced_site not in (1, 2, 3):
        raise ValueError(f"traced_site must be 1, 2 or 3, got {traced_site}")
    keep = tuple(k for k in (1, 2, 3) if k != traced_site)
    return pair_density(state, keep)


def total_sz(n_sites: int) -> np.ndarray:
    """Diagonal of total sigma^z (sum of +-1) in the computational basis."""
    idx = np.arange(1 << n_sites)
    downs = np.array([bin(i).count("1") for i in idx])
    return (n_sites - 2 * downs).astype(float)
