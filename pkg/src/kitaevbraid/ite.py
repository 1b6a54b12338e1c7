"""Imaginary- and real-time evolution of state vectors and evolution schedules."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Union

import numpy as np

from .fermions import SITE_COUNT, MajoranaHamiltonian, build_hamiltonian, is_hermitian
from .spin import PauliString, SpinHamiltonian, spin_matrix

if TYPE_CHECKING:
    from .noise import NoiseSpec

DEFAULT_ITE_TIME = 20.0
ANNIHILATION_TOL = 1e-14

Hamiltonian = Union[SpinHamiltonian, MajoranaHamiltonian, np.ndarray]


class EvolutionError(ArithmeticError):
    """A state was annihilated by a projection-like step."""


@functools.lru_cache(maxsize=256)
def _cached_matrix(h) -> np.ndarray:
    if isinstance(h, SpinHamiltonian):
        mat = spin_matrix(h)
    else:
        mat = build_hamiltonian(h, max(SITE_COUNT, h.max_site()))
    mat.setflags(write=False)
    return mat


def hamiltonian_matrix(h: Hamiltonian) -> np.ndarray:
    if isinstance(h, (SpinHamiltonian, MajoranaHamiltonian)):
        return _cached_matrix(h)
    return np.asarray(h, dtype=complex)


@functools.lru_cache(maxsize=256)
def _cached_eigh(h):
    w, v = np.linalg.eigh(_cached_matrix(h))
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def spectrum(h: Hamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors, cached for hashable Hamiltonians."""
    if isinstance(h, (SpinHamiltonian, MajoranaHamiltonian)):
        return _cached_eigh(h)
    mat = hamiltonian_matrix(h)
    if not is_hermitian(mat):
        raise ValueError("Hamiltonian matrix is not Hermitian")
    return np.linalg.eigh(mat)


def ite_propagator(h: Hamiltonian, t: float) -> np.ndarray:
    """``exp(-(H - E0) t)``; the ground-energy shift keeps entries bounded by 1."""
    w, v = spectrum(h)
    return (v * np.exp(-(w - w[0]) * t)) @ v.conj().T


def real_time_propagator(h: Hamiltonian, tau: float) -> np.ndarray:
    w, v = spectrum(h)
    return (v * np.exp(-1j * w * tau)) @ v.conj().T


def _normalized(psi: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(psi)
    if nrm < ANNIHILATION_TOL:
        raise EvolutionError(f"state annihilated (norm {nrm:.3e})")
    return psi / nrm


def ite_step(psi: np.ndarray, h: Hamiltonian, t: float) -> np.ndarray:
    if t <= 0:
        raise ValueError("imaginary time must be positive")
    return _normalized(ite_propagator(h, t) @ psi)


def real_time_step(psi: np.ndarray, h: Hamiltonian, tau: float) -> np.ndarray:
    return real_time_propagator(h, tau) @ psi


def _term_projectors(term: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the low- and high-energy eigenspaces of a single Pauli term."""
    # term / |c| already carries the sign, so its -1 eigenspace is the low branch
    p = term.matrix() / abs(term.coefficient)
    eye = np.eye(p.shape[0])
    return (eye - p) / 2, (eye + p) / 2


def term_factor(term: PauliString, t: float) -> np.ndarray:
    """``exp(-(term + |c|) t)``, i.e. identity on the low branch, ``e^{-2|c|t}`` on the high one."""
    if set(term.letters) == {"I"}:
        return np.eye(2 ** len(term.letters), dtype=complex)
    low, high = _term_projectors(term)
    return low + np.exp(-2 * abs(term.coefficient) * t) * high


def ite_factored(psi: np.ndarray, h: SpinHamiltonian, t: float) -> np.ndarray:
    """ITE as a product of single-term factors, normalized once at the end."""
    if t <= 0:
        raise ValueError("imaginary time must be positive")
    for i, a in enumerate(h.terms):
        for b in h.terms[i + 1:]:
            if not a.commutes_with(b):
                raise ValueError(f"terms {a} and {b} do not commute")
    out = np.asarray(psi, dtype=complex)
    for term in h.terms:
        out = term_factor(term, t) @ out
    return _normalized(out)


def dissipative_term_step(psi: np.ndarray, term: PauliString, t: float) -> np.ndarray:
    """Single-term ITE through an ancilla and post-selection.

    The ancilla is the highest tensor slot.  A controlled rotation leaves the
    low-energy branch with the ancilla in ``|0>`` and tilts the high-energy
    branch to ``cos(th)|0> + sin(th)|1>`` with ``cos(th) = exp(-2|c| t)``;
    keeping only ``|0>`` reproduces ``exp(-term t)`` up to normalization.  At
    ``t -> inf`` the joint state is ``|g>|0> + |g_perp>|1>``.
    """
    if t <= 0:
        raise ValueError("imaginary time must be positive")
    psi = np.asarray(psi, dtype=complex)
    dim = psi.shape[0]
    if set(term.letters) == {"I"}:
        return _normalized(psi)
    low, high = _term_projectors(term)
    theta = np.arccos(np.exp(-2 * abs(term.coefficient) * t))
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    coupling = np.kron(np.eye(2), low) + np.kron(rot, high)
    joint = coupling @ np.kron(np.array([1.0, 0.0]), psi)
    kept = joint[:dim]
    if np.linalg.norm(kept) ** 2 < ANNIHILATION_TOL:
        raise EvolutionError("zero post-selection probability")
    return _normalized(kept)


def post_selection_probability(psi: np.ndarray, term: PauliString, t: float) -> float:
    low, high = _term_projectors(term)
    c = np.exp(-2 * abs(term.coefficient) * t)
    return float(np.linalg.norm(low @ psi) ** 2 + c**2 * np.linalg.norm(high @ psi) ** 2)


@dataclass(frozen=True)
class Segment:
    hamiltonian: Hamiltonian
    kind: str = "imaginary"
    duration: float = DEFAULT_ITE_TIME

    def __post_init__(self):
        if self.kind not in ("imaginary", "real"):
            raise ValueError(f"segment kind must be 'imaginary' or 'real', got {self.kind!r}")
        if self.kind == "imaginary" and not self.duration > 0:
            raise ValueError("imaginary-time segments need a positive duration")
        if self.kind == "real" and not np.isfinite(self.duration):
            raise ValueError("real-time duration must be finite")

    def propagator(self) -> np.ndarray:
        if self.kind == "imaginary":
            return ite_propagator(self.hamiltonian, self.duration)
        return real_time_propagator(self.hamiltonian, self.duration)


@dataclass(frozen=True)
class Schedule:
    """Ordered evolution segments; a noise at ``position`` p acts after the first p segments."""

    segments: tuple[Segment, ...]
    noise: tuple["NoiseSpec", ...] = field(default=())

    def __post_init__(self):
        if not self.segments:
            raise ValueError("a schedule needs at least one segment")
        for n in self.noise:
            if n.position is None or not 0 <= n.position <= len(self.segments):
                raise ValueError(f"noise position {n.position} outside 0..{len(self.segments)}")

    def __len__(self) -> int:
        return len(self.segments)

    def __add__(self, other: "Schedule") -> "Schedule":
        shift = len(self.segments)
        moved = tuple(replace(n, position=n.position + shift) for n in other.noise)
        return Schedule(self.segments + other.segments, self.noise + moved)

    def with_noise(self, *specs: "NoiseSpec") -> "Schedule":
        return Schedule(self.segments, self.noise + tuple(specs))

    def map_segments(self, fn) -> "Schedule":
        return Schedule(tuple(fn(i, s) for i, s in enumerate(self.segments)), self.noise)

    def steps(self):
        """Yield ``("segment", Segment)`` and ``("noise", NoiseSpec)`` in execution order."""
        for i in range(len(self.segments) + 1):
            for n in self.noise:
                if n.position == i:
                    yield "noise", n
            if i < len(self.segments):
                yield "segment", self.segments[i]


def run_schedule_with_survival(psi: np.ndarray, schedule: Schedule) -> tuple[np.ndarray, list[float]]:
    """Run a schedule on one state; also return the survival probability of each noise event."""
    out = np.asarray(psi, dtype=complex)
    survival = []
    for kind, item in schedule.steps():
        if kind == "segment":
            out = item.propagator() @ out
            if item.kind == "imaginary":
                out = _normalized(out)
        else:
            out, p = item.apply(out)
            survival.append(p)
    return out, survival


def run_schedule(psi: np.ndarray, schedule: Schedule) -> np.ndarray:
    return run_schedule_with_survival(psi, schedule)[0]


def propagate(block: np.ndarray, schedule: Schedule) -> np.ndarray:
    """Apply a schedule linearly to the columns of ``block``.

    All columns share one overall scale, so relative norms and phases between
    inputs survive; this is the linear map whose columns ``run_schedule``
    would return one at a time after normalization.
    """
    out = np.array(block, dtype=complex)
    for kind, item in schedule.steps():
        if kind == "segment":
            out = item.propagator() @ out
        else:
            out = item.operator(out.shape[0]) @ out
        scale = np.abs(out).max()
        if scale > 0:
            out /= scale
    return out
