"""Linear-inversion process tomography on the four-dimensional code space."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import polar

from .codec import LogicalGate, code_basis, fix_global_phase
from .ite import Schedule, propagate

_PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}
# logical-label single-qubit states: |0>, |1>, |+>, |+i>
_PREP = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "+i": np.array([1, 1j], dtype=complex) / np.sqrt(2),
}


@dataclass(frozen=True)
class TomographyPlan:
    """Product inputs and Pauli-pair settings over the two logical labels (16 x 16)."""

    input_labels: tuple[tuple[str, str], ...] = tuple(itertools.product(_PREP, repeat=2))
    setting_labels: tuple[tuple[str, str], ...] = tuple(itertools.product(_PAULIS, repeat=2))
    shots: int | None = None
    seed: int = 0

    def inputs(self) -> np.ndarray:
        """4 x 16 logical input vectors, one per column."""
        return np.array([np.kron(_PREP[a], _PREP[b]) for a, b in self.input_labels]).T

    def settings(self) -> list[np.ndarray]:
        return [np.kron(_PAULIS[a], _PAULIS[b]) for a, b in self.setting_labels]

    @property
    def size(self) -> int:
        return len(self.input_labels) * len(self.setting_labels)


@dataclass(frozen=True)
class TomographyResult:
    gate: LogicalGate
    closest_unitary: np.ndarray
    expectations: np.ndarray  # (inputs, settings), each entry tr(P rho_out)
    choi_purity: float
    plan: TomographyPlan = field(repr=False)


def _measure(plan: TomographyPlan, outputs: np.ndarray) -> np.ndarray:
    rng = np.random.default_rng(plan.seed)
    settings = plan.settings()
    exp = np.empty((outputs.shape[1], len(settings)))
    for k in range(outputs.shape[1]):
        rho = np.outer(outputs[:, k], outputs[:, k].conj())
        trace = np.trace(rho).real
        for m, p in enumerate(settings):
            value = np.trace(p @ rho).real
            if plan.shots and trace > 0 and m > 0:
                p_up = np.clip((1 + value / trace) / 2, 0, 1)
                value = trace * (2 * rng.binomial(plan.shots, p_up) / plan.shots - 1)
            exp[k, m] = value
    return exp


def reconstruct_superoperator(plan: TomographyPlan, expectations: np.ndarray) -> np.ndarray:
    """Row-major superoperator ``S`` with ``vec(rho_out) = S vec(rho_in)``."""
    settings = plan.settings()
    d = settings[0].shape[0]
    rho_out = np.einsum("km,mij->kij", expectations, np.array(settings)) / d
    ins = plan.inputs()
    rho_in = np.array([np.outer(v, v.conj()) for v in ins.T])
    A = rho_in.reshape(len(rho_in), -1).T  # columns vec(rho_in_k)
    B = rho_out.reshape(len(rho_out), -1).T
    if np.linalg.matrix_rank(A, tol=1e-10) < d * d:
        raise np.linalg.LinAlgError("tomography inputs are not informationally complete")
    return B @ np.linalg.pinv(A)


def kraus_from_superoperator(S: np.ndarray) -> tuple[np.ndarray, float]:
    """Dominant Kraus operator of ``S`` and the purity weight of that component."""
    d = int(round(np.sqrt(S.shape[0])))
    # S[(a,b),(c,d)] = K[a,c] conj(K[b,d])  ->  R[(a,c),(b,d)] = vec K vec K^dag
    R = S.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
    R = (R + R.conj().T) / 2
    w, v = np.linalg.eigh(R)
    total = w.clip(min=0).sum()
    K = np.sqrt(max(w[-1], 0.0)) * v[:, -1].reshape(d, d)
    return K, float(w[-1] / total) if total > 0 else 0.0


def simulate_tomography(schedule: Schedule, plan: TomographyPlan | None = None) -> TomographyResult:
    plan = plan or TomographyPlan()
    E = code_basis()
    block = propagate(E @ plan.inputs(), schedule)
    outputs = E.conj().T @ block
    expectations = _measure(plan, outputs)
    S = reconstruct_superoperator(plan, expectations)
    K, purity = kraus_from_superoperator(S)
    if not np.abs(K).max() > 0:
        raise ArithmeticError("reconstructed process is zero")
    K = K * np.sqrt(4 / np.sum(np.abs(K) ** 2))
    K, phase = fix_global_phase(K)
    leak = np.linalg.norm(block - E @ outputs, axis=0) / np.maximum(np.linalg.norm(block, axis=0), 1e-300)
    U = fix_global_phase(polar(K)[0])[0]
    return TomographyResult(LogicalGate(K, float(leak.max()), phase), U, expectations, purity, plan)


def process_fidelity(U: np.ndarray, V: np.ndarray) -> float:
    """``|tr(U^dag V)|^2 / (||U||_F^2 ||V||_F^2)``; equals ``|tr(U^dag V)|^2 / d^2`` for unitaries."""
    U, V = np.asarray(U, dtype=complex), np.asarray(V, dtype=complex)
    if U.shape != V.shape:
        raise ValueError(f"shape mismatch {U.shape} vs {V.shape}")
    denom = np.vdot(U, U).real * np.vdot(V, V).real
    if denom == 0:
        raise ValueError("zero operator")
    return float(min(abs(np.vdot(U, V)) ** 2 / denom, 1.0))


def state_fidelity(psi, phi) -> float:
    psi = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
    phi = np.asarray(getattr(phi, "amplitudes", phi), dtype=complex)
    return float(min(abs(np.vdot(psi, phi)) ** 2 / (np.vdot(psi, psi).real * np.vdot(phi, phi).real), 1.0))


def pauli_process_matrix(block: np.ndarray) -> np.ndarray:
    """Trace-normalized process matrix of a 2 x 2 operator in the {I, X, Y, Z} basis."""
    block = np.asarray(block, dtype=complex)
    e = np.array([np.trace(_PAULIS[k].conj().T @ block) / 2 for k in "IXYZ"])
    chi = np.outer(e, e.conj())
    return chi / np.trace(chi).real
