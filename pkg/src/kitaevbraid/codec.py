"""Logical-qubit encoding in the six-site ground space and gate extraction."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np

from .fermions import SITE_COUNT, fock_state
from .ite import Schedule, hamiltonian_matrix, propagate

LOGICAL_LABELS = ("00", "01", "10", "11")
EVEN = (0, 3)
ODD = (1, 2)
LEAKAGE_TOL = 1e-6
BLOCK_TOL = 1e-8
PHASE_TOL = 1e-9

# rows: |x1x2 z3 x4x5x6>, |x x z3 xb xb xb>, |xb xb z3 x x x>, |xb xb z3 xb xb xb>
# in terms of (|00_g>, |01_g>, |10_g>, |11_g>)
XBASIS_MATRIX = 0.5 * np.array(
    [
        [1, 1, 1, 1],
        [-1, 1, -1, 1],
        [1, 1, -1, -1],
        [-1, 1, 1, -1],
    ],
    dtype=complex,
)


def _chain_state(occupations: list[tuple[int, ...]], sites: tuple[int, ...]) -> dict[int, float]:
    amp = 1 / np.sqrt(len(occupations))
    return {
        sum(b << (s - 1) for s, b in zip(sites, occ)): amp for occ in occupations
    }


# |0_12> = (|zb zb> + |z z>)/sqrt2,  |1_12> = (|z zb> + |zb z>)/sqrt2
_CHAIN12 = {
    0: _chain_state([(0, 0), (1, 1)], (1, 2)),
    1: _chain_state([(1, 0), (0, 1)], (1, 2)),
}
# even / odd occupation parity of sites 4, 5, 6 with equal amplitudes
_CHAIN456 = {
    0: _chain_state([(0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1)], (4, 5, 6)),
    1: _chain_state([(1, 1, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1)], (4, 5, 6)),
}


@functools.lru_cache(maxsize=None)
def _code_basis() -> np.ndarray:
    cols = []
    for left, right in itertools.product((0, 1), repeat=2):
        v = np.zeros(2**SITE_COUNT, dtype=complex)
        for i, a in _CHAIN12[left].items():
            for j, b in _CHAIN456[right].items():
                v[i | j] += a * b  # site 3 stays empty (|z-bar_3>)
        cols.append(v)
    basis = np.array(cols).T
    basis.setflags(write=False)
    return basis


def code_basis() -> np.ndarray:
    """64 x 4 matrix whose columns are ``|00_g>, |01_g>, |10_g>, |11_g>``."""
    return _code_basis()


@dataclass(frozen=True)
class LogicalState:
    amplitudes: np.ndarray
    residual: float = 0.0

    @classmethod
    def basis(cls, label: str) -> "LogicalState":
        amps = np.zeros(4, dtype=complex)
        amps[LOGICAL_LABELS.index(label)] = 1
        return cls(amps)

    @classmethod
    def from_even(cls, a00: complex, a11: complex) -> "LogicalState":
        amps = np.array([a00, 0, 0, a11], dtype=complex)
        return cls(amps / np.linalg.norm(amps))

    @property
    def even(self) -> np.ndarray:
        return self.amplitudes[list(EVEN)]

    def overlap(self, label: str) -> float:
        return float(abs(self.amplitudes[LOGICAL_LABELS.index(label)]) ** 2)


def encode_logical(state: LogicalState) -> np.ndarray:
    if state.residual > 1e-12:
        raise ValueError("cannot encode a state with weight outside the code space")
    amps = np.asarray(state.amplitudes, dtype=complex)
    return code_basis() @ (amps / np.linalg.norm(amps))


def decode_logical(psi: np.ndarray) -> LogicalState:
    E = code_basis()
    psi = np.asarray(psi, dtype=complex)
    amps = E.conj().T @ psi
    residual = float(np.linalg.norm(psi - E @ amps))
    return LogicalState(amps, residual)


def xbasis_to_logical(v) -> LogicalState:
    """Map amplitudes over the four x-basis ground states onto the logical basis."""
    v = np.asarray(v, dtype=complex)
    return LogicalState(XBASIS_MATRIX.T @ v)


def logical_to_xbasis(state: LogicalState) -> np.ndarray:
    return XBASIS_MATRIX.conj() @ state.amplitudes


def fix_global_phase(mat: np.ndarray) -> tuple[np.ndarray, complex]:
    """Rotate so the first non-negligible entry of the first nonzero column is real positive.

    Returns the rotated matrix and the unit phase that was removed.
    """
    mat = np.asarray(mat, dtype=complex)
    flat = mat.T.ravel()
    idx = np.flatnonzero(np.abs(flat) > PHASE_TOL * max(np.abs(flat).max(), 1e-300))
    if len(idx) == 0:
        return mat.copy(), 1.0 + 0j
    ref = flat[idx[0]]
    phase = ref / abs(ref)
    return mat / phase, complex(phase)


@dataclass(frozen=True)
class LogicalGate:
    matrix4: np.ndarray
    leakage: float = 0.0
    global_phase: complex = 1.0 + 0j

    @property
    def even_block(self) -> np.ndarray:
        return even_parity_block(self)

    @property
    def code_preserving(self) -> bool:
        return self.leakage < LEAKAGE_TOL

    def parity_mixing(self) -> float:
        m = self.matrix4
        return float(max(np.abs(m[np.ix_(EVEN, ODD)]).max(), np.abs(m[np.ix_(ODD, EVEN)]).max()))

    def is_unitary(self, atol: float = 1e-8) -> bool:
        m = self.matrix4
        return np.allclose(m.conj().T @ m, np.eye(4), atol=atol)


def even_parity_block(gate: LogicalGate) -> np.ndarray:
    if gate.parity_mixing() > BLOCK_TOL:
        raise ValueError("gate mixes the even and odd parity sectors")
    return fix_global_phase(gate.matrix4[np.ix_(EVEN, EVEN)])[0]


def code_space_check(h) -> float:
    """Largest weight of a code basis vector outside the ground space of ``h``."""
    H = hamiltonian_matrix(h)
    w, v = np.linalg.eigh(H)
    g = v[:, w <= w[0] + 1e-9]
    E = code_basis()
    return float(np.linalg.norm(E - g @ (g.conj().T @ E), axis=0).max())


def gate_from_block(block: np.ndarray) -> LogicalGate:
    """Decode propagated code-basis columns into a phase-fixed logical gate."""
    E = code_basis()
    K = E.conj().T @ block
    col_norms = np.linalg.norm(block, axis=0)
    outside = np.linalg.norm(block - E @ K, axis=0)
    live = col_norms > 1e-12 * max(col_norms.max(), 1e-300)
    if not live.any():
        raise ArithmeticError("every logical basis state was annihilated")
    leakage = float((outside[live] / col_norms[live]).max())
    K = K * np.sqrt(4 / np.sum(np.abs(K) ** 2))
    K, phase = fix_global_phase(K)
    return LogicalGate(K, leakage, phase)


def extract_gate(schedule: Schedule) -> LogicalGate:
    """Logical 4 x 4 action of a schedule that starts and ends on the code Hamiltonian."""
    for seg in (schedule.segments[0], schedule.segments[-1]):
        if seg.kind != "imaginary" or code_space_check(seg.hamiltonian) > 1e-8:
            raise ValueError("schedule must start and end with an ITE segment of the code Hamiltonian")
    return gate_from_block(propagate(code_basis(), schedule))
