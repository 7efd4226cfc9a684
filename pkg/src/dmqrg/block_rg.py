"""Three-site block: Hamiltonian, ground doublet and the coupling flow.

The chain is

    H = (J/4) sum_i [ sx_i sx_{i+1} + sy_i sy_{i+1} + Delta sz_i sz_{i+1}
                      + D (sx_i sy_{i+1} - sy_i sx_{i+1}) ]

and one renormalization step maps three sites onto one effective spin-1/2
while changing (J, Delta, D) -> (J', Delta', D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import TOL
from .spin_core import kron, pauli

BLOCK_SIZE = 3

# basis indices (up=0, site 1 most significant)
DDU, DUD, UDD = 0b110, 0b101, 0b011
DUU, UDU, UUD = 0b100, 0b010, 0b001


@dataclass(frozen=True)
class Couplings:
    """Model parameters (J, Delta, D); J > 0, Delta >= 0, D >= 0."""

    J: float = 1.0
    Delta: float = 1.0
    D: float = 0.0

    def __post_init__(self):
        for name in ("J", "Delta", "D"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.J <= 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if self.Delta < 0:
            raise ValueError(f"Delta must be non-negative, got {self.Delta}")
        if self.D < 0:
            raise ValueError(f"D must be non-negative, got {self.D} (negative DM is not supported)")

    def with_(self, **changes) -> "Couplings":
        return replace(self, **changes)

    @property
    def q(self) -> float:
        return math.sqrt(self.Delta**2 + 8.0 * (1.0 + self.D**2))


def bond_operator(c: Couplings, i: int, j: int, n_sites: int) -> np.ndarray:
    """One XXZ+DM bond between sites ``i`` and ``j`` (1-based), including J/4."""
    sx, sy, sz = pauli("x"), pauli("y"), pauli("z")
    eye = np.eye(2, dtype=complex)

    def two(a, b):
        return kron(*[a if k == i else b if k == j else eye for k in range(1, n_sites + 1)])

    h = two(sx, sx) + two(sy, sy) + c.Delta * two(sz, sz) + c.D * (two(sx, sy) - two(sy, sx))
    return (c.J / 4.0) * h


def block_hamiltonian(c: Couplings) -> np.ndarray:
    """8x8 Hamiltonian of one open three-site block (bonds 1-2 and 2-3)."""
    return bond_operator(c, 1, 2, 3) + bond_operator(c, 2, 3, 3)


@dataclass(frozen=True)
class BlockGroundDoublet:
    psi0: np.ndarray  # two spins down
    psi0_prime: np.ndarray  # two spins up
    q: float
    energy: float


def ground_doublet(c: Couplings) -> BlockGroundDoublet:
    """Closed-form degenerate ground states of the three-site block.

    With ``q = sqrt(Delta^2 + 8(1 + D^2))`` the amplitudes on
    ``(|ddu>, |dud>, |udd>)`` are

        ( 2(1+D^2),  -(1+iD)(Delta+q),  -2[(D^2-1) - 2iD] ) / sqrt(2q(q+Delta)(1+D^2))

    and psi0' carries the same amplitudes on the spin-flipped kets.  The
    phase of the imaginary parts matches the (up, down) basis and the
    +D sign of the DM term used in :func:`block_hamiltonian`; with the
    opposite convention they are complex conjugated.  The energy of both
    states is ``-J(Delta+q)/4``.
    """
    d2 = 1.0 + c.D**2
    q = c.q
    norm = math.sqrt(2.0 * q * (q + c.Delta) * d2)
    amps = np.array(
        [2.0 * d2, -(1.0 + 1j * c.D) * (c.Delta + q), -2.0 * ((c.D**2 - 1.0) - 2j * c.D)],
        dtype=complex,
    ) / norm
    psi0 = np.zeros(8, dtype=complex)
    psi0[[DDU, DUD, UDD]] = amps
    psi0p = np.zeros(8, dtype=complex)
    psi0p[[DUU, UDU, UUD]] = amps
    psi0.setflags(write=False)
    psi0p.setflags(write=False)
    return BlockGroundDoublet(psi0=psi0, psi0_prime=psi0p, q=q, energy=-c.J * (c.Delta + q) / 4.0)


def rg_step(c: Couplings) -> Couplings:
    """One block renormalization step.

    J' = J (2/q)^2 (1+D^2),  Delta' = Delta/(1+D^2) * ((Delta+q)/4)^2,  D' = D.
    """
    q = c.q
    d2 = 1.0 + c.D**2
    j_new = c.J * (2.0 / q) ** 2 * d2
    delta_new = c.Delta / d2 * ((c.Delta + q) / 4.0) ** 2
    return Couplings(J=j_new, Delta=delta_new, D=c.D)


@dataclass(frozen=True)
class FlowTrace:
    """Couplings after 0..n renormalization steps.

    ``saturated[k]`` marks steps whose Delta hit ``TOL.delta_cap``; from the
    first saturated step on the couplings are frozen (Neel basin).
    """

    steps: tuple[Couplings, ...]
    saturated: tuple[bool, ...]
    block_size: int = BLOCK_SIZE
    effective_sizes: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.effective_sizes:
            sizes = tuple(self.block_size ** (k + 1) for k in range(len(self.steps)))
            object.__setattr__(self, "effective_sizes", sizes)

    @property
    def final(self) -> Couplings:
        return self.steps[-1]

    @property
    def n_steps(self) -> int:
        return len(self.steps) - 1

    def deltas(self) -> np.ndarray:
        return np.array([s.Delta for s in self.steps])


def flow(c: Couplings, n_steps: int) -> FlowTrace:
    """Iterate :func:`rg_step` ``n_steps`` times, recording every step."""
    if not isinstance(n_steps, (int, np.integer)) or n_steps < 0:
        raise ValueError(f"n_steps must be a non-negative integer, got {n_steps!r}")
    if n_steps > TOL.max_steps:
        raise ValueError(f"n_steps={n_steps} exceeds the limit of {TOL.max_steps}")
    cap = TOL.delta_cap
    cur = c
    sat = cur.Delta >= cap
    if sat:
        cur = cur.with_(Delta=cap)
    steps, flags = [cur], [sat]
    for _ in range(int(n_steps)):
        if not sat:
            cur = rg_step(cur)
            if cur.Delta >= cap:
                cur, sat = cur.with_(Delta=cap), True
        steps.append(cur)
        flags.append(sat)
    return FlowTrace(steps=tuple(steps), saturated=tuple(flags))


def critical_delta(D: float) -> float:
    """Anisotropy on the critical line, sqrt(1 + D^2)."""
    if D < 0:
        raise ValueError("D must be non-negative")
    return math.sqrt(1.0 + D * D)


def critical_dm(Delta: float) -> float:
    """DM strength on the critical line at fixed anisotropy, sqrt(Delta^2 - 1)."""
    if Delta < 1:
        raise ValueError(f"no critical D for Delta={Delta} < 1")
    return math.sqrt(Delta * Delta - 1.0)


def mapped_anisotropy(c: Couplings) -> float:
    """Anisotropy of the equivalent plain XXZ chain, Delta / sqrt(1 + D^2)."""
    return c.Delta / math.sqrt(1.0 + c.D**2)


def phase(c: Couplings) -> str:
    """'spin-fluid', 'critical' or 'neel' from the mapped anisotropy."""
    t = mapped_anisotropy(c)
    if math.isclose(t, 1.0, rel_tol=0, abs_tol=1e-12):
        return "critical"
    return "spin-fluid" if t < 1 else "neel"
