"""Brute-force exact diagonalization of short XXZ+DM chains.

Independent of :mod:`dmqrg.block_rg`: the Hamiltonian is filled from
matrix elements on computational basis states instead of Kronecker
products, and pair concurrences come from reduced densities computed here
with the closed form for X-shaped densities (general densities fall back
to the textbook eigenvalues of rho * rho_tilde).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .block_rg import Couplings
from .config import TOL
from .errors import AmbiguousGroundSpace

MAX_SITES = 12


@dataclass(frozen=True)
class ChainSpec:
    n_sites: int
    couplings: Couplings
    boundary: str = "open"

    def __post_init__(self):
        if not 2 <= self.n_sites <= MAX_SITES:
            raise ValueError(f"n_sites must be in [2, {MAX_SITES}], got {self.n_sites}")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")

    def bonds(self) -> list[tuple[int, int]]:
        b = [(i, i + 1) for i in range(self.n_sites - 1)]
        if self.boundary == "periodic" and self.n_sites > 2:
            b.append((self.n_sites - 1, 0))
        return b


def _bit(state: int, site: int, n: int) -> int:
    # site 0 is the most significant bit; 1 means down
    return (state >> (n - 1 - site)) & 1


def chain_hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Dense Hamiltonian of the chain, assembled element by element.

    Per bond (i, j), with s = +1 for up and -1 for down:
      diagonal        (J/4) Delta s_i s_j
      |ud> -> |du>    (J/4) (2 - 2iD)
      |du> -> |ud>    (J/4) (2 + 2iD)
    """
    n = spec.n_sites
    c = spec.couplings
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=complex)
    quarter = c.J / 4.0
    for s in range(dim):
        for i, j in spec.bonds():
            bi, bj = _bit(s, i, n), _bit(s, j, n)
            h[s, s] += quarter * c.Delta * (1 - 2 * bi) * (1 - 2 * bj)
            if bi != bj:
                t = s ^ (1 << (n - 1 - i)) ^ (1 << (n - 1 - j))
                # bi == 0: site i up, j down; the target has i down, j up
                h[t, s] += quarter * (2 - 2j * c.D) if bi == 0 else quarter * (2 + 2j * c.D)
    return h


def total_sz_diag(n: int) -> np.ndarray:
    return np.array([n - 2 * bin(s).count("1") for s in range(1 << n)], dtype=float)


def ground_state_ed(spec: ChainSpec) -> tuple[float, np.ndarray]:
    """Ground energy and an orthonormal basis (columns) of the ground space.

    Degenerate ground spaces are rotated so each basis vector has definite
    total S^z, which fixes them up to a phase whenever every S^z sector is
    non-degenerate.
    """
    h = chain_hamiltonian(spec)
    w, v = np.linalg.eigh(h)
    e0 = w[0]
    states = v[:, np.abs(w - e0) <= TOL.degeneracy]
    if states.shape[1] > 1:
        sz = total_sz_diag(spec.n_sites)
        proj = states.conj().T @ (sz[:, None] * states)
        _, u = np.linalg.eigh(0.5 * (proj + proj.conj().T))
        states = states @ u
    return float(e0), states


def reduce_pair(state: np.ndarray, a: int, b: int) -> np.ndarray:
    """Pair density by explicit summation over environment configurations (1-based a < b)."""
    n = state.shape[0].bit_length() - 1
    a0, b0 = a - 1, b - 1
    pair_bits = (1 << (n - 1 - a0)) | (1 << (n - 1 - b0))
    env: dict[int, np.ndarray] = {}
    for s in range(1 << n):
        amp = state[s]
        if amp == 0:
            continue
        vec = env.setdefault(s & ~pair_bits, np.zeros(4, dtype=complex))
        vec[2 * _bit(s, a0, n) + _bit(s, b0, n)] += amp
    rho = np.zeros((4, 4), dtype=complex)
    for vec in env.values():
        rho += np.outer(vec, vec.conj())
    return rho


def is_x_state(rho: np.ndarray, tol: float = 1e-13) -> bool:
    mask = np.ones((4, 4), dtype=bool)
    for k in range(4):
        mask[k, k] = mask[k, 3 - k] = False
    return bool(np.max(np.abs(rho[mask])) <= tol)


def x_state_concurrence(rho: np.ndarray) -> float:
    """Closed-form concurrence of a density with only diagonal and anti-diagonal entries."""
    r = np.asarray(rho)
    p = np.clip(np.real(np.diag(r)), 0.0, None)
    c1 = abs(r[1, 2]) - np.sqrt(p[0] * p[3])
    c2 = abs(r[0, 3]) - np.sqrt(p[1] * p[2])
    return float(max(0.0, 2.0 * c1, 2.0 * c2))


def wootters_eigvals(rho: np.ndarray) -> float:
    """Concurrence from the non-Hermitian product rho * rho_tilde."""
    sy = np.array([[0, -1j], [1j, 0]])
    yy = np.kron(sy, sy)
    r = rho @ yy @ rho.conj() @ yy
    ev = np.sort(np.sqrt(np.clip(np.real(np.linalg.eigvals(r)), 0.0, None)))[::-1]
    return float(max(0.0, ev[0] - ev[1] - ev[2] - ev[3]))


def state_pair_concurrence(state: np.ndarray, a: int, b: int) -> float:
    rho = reduce_pair(state, a, b)
    return x_state_concurrence(rho) if is_x_state(rho) else wootters_eigvals(rho)


@dataclass(frozen=True)
class PairConcurrence:
    sites: tuple[int, int]
    energy: float
    degeneracy: int
    values: tuple[float, ...]  # one per ground-space basis vector (S^z resolved)
    sz: tuple[float, ...]
    gauge_value: float | None  # n=3: the state with two spins down

    @property
    def value(self) -> float:
        return self.gauge_value if self.gauge_value is not None else self.values[0]


def pair_concurrence_ed(spec: ChainSpec, site_a: int, site_b: int) -> PairConcurrence:
    """Ground-state concurrence between two sites by exact diagonalization."""
    a, b = sorted((site_a, site_b))
    if a == b or a < 1 or b > spec.n_sites:
        raise ValueError(f"invalid sites ({site_a}, {site_b}) for {spec.n_sites} sites")
    energy, states = ground_state_ed(spec)
    k = states.shape[1]
    if k > 2:
        raise AmbiguousGroundSpace(f"ground space is {k}-fold degenerate")
    szd = total_sz_diag(spec.n_sites)
    sz = tuple(float(np.real(np.vdot(s, szd * s))) for s in states.T)
    if k == 2 and abs(sz[0] - sz[1]) < 0.5:
        raise AmbiguousGroundSpace("degenerate ground states share one S^z sector")
    values = tuple(state_pair_concurrence(s, a, b) for s in states.T)
    gauge = None
    if spec.n_sites == 3:
        idx = int(np.argmin(sz))
        if abs(sz[idx] + 1.0) < 1e-8:
            gauge = values[idx]
    return PairConcurrence((a, b), energy, k, values, sz, gauge)
