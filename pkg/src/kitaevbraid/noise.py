"""Post-selected phase and flip errors inserted into evolution schedules."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

from .codec import LogicalGate, extract_gate
from .fermions import PAULI, SITE_COUNT, _kron_sites
from .ite import EvolutionError
from .tomography import process_fidelity

if TYPE_CHECKING:
    from .braiding import GateRecipe

SURVIVAL_TOL = 1e-14


class ZeroSurvivalError(EvolutionError):
    """The error operator annihilated the state."""


@dataclass(frozen=True)
class NoiseSpec:
    """``kind="phase"`` applies ``(1 + Z_i)/2``; ``kind="flip"`` applies ``(X_i X_j + Y_i Y_j)/2``."""

    kind: str
    sites: tuple[int, ...]
    position: int | None = None

    def __post_init__(self):
        sites = tuple(int(s) for s in np.atleast_1d(self.sites))
        object.__setattr__(self, "sites", sites)
        if self.kind not in ("phase", "flip"):
            raise ValueError(f"noise kind must be 'phase' or 'flip', got {self.kind!r}")
        if any(not 1 <= s <= SITE_COUNT for s in sites):
            raise ValueError(f"noise sites {sites} outside 1..{SITE_COUNT}")
        if self.kind == "phase" and len(sites) != 1:
            raise ValueError("a phase error acts on exactly one site")
        if self.kind == "flip" and (len(sites) != 2 or abs(sites[0] - sites[1]) != 1):
            raise ValueError(f"a flip error needs two adjacent sites, got {sites}")
        if self.position is not None and self.position < 0:
            raise ValueError("noise position must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        """Parse ``"phase:4"``, ``"flip:3,4"`` or ``"flip:4-5@8"`` (``@`` gives the position)."""
        m = re.fullmatch(r"\s*(phase|flip)\s*:\s*([\d,\-\s]+?)\s*(?:@\s*(\d+))?\s*", text)
        if m is None:
            raise ValueError(f"cannot parse noise spec {text!r}")
        sites = tuple(int(s) for s in re.split(r"[,\-\s]+", m.group(2).strip()) if s)
        pos = int(m.group(3)) if m.group(3) is not None else None
        return cls(m.group(1), sites, pos)

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        return cls(d["kind"], tuple(np.atleast_1d(d["sites"])), d.get("position"))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sites": list(self.sites), "position": self.position}

    def at(self, position: int) -> "NoiseSpec":
        return replace(self, position=position)

    def operator(self, dim: int = 2**SITE_COUNT) -> np.ndarray:
        n = int(round(np.log2(dim)))
        if self.kind == "phase":
            return phase_error_operator(self.sites[0], n)
        return flip_error_operator(self.sites, n)

    def apply(self, psi: np.ndarray) -> tuple[np.ndarray, float]:
        return _apply(self.operator(len(psi)), psi)

    def __str__(self) -> str:
        s = f"{self.kind}:{','.join(map(str, self.sites))}"
        return s if self.position is None else f"{s}@{self.position}"


def phase_error_operator(site: int, site_count: int = SITE_COUNT) -> np.ndarray:
    z = _kron_sites({site: PAULI["Z"]}, site_count)
    return (np.eye(2**site_count) + z) / 2


def flip_error_operator(sites, site_count: int = SITE_COUNT) -> np.ndarray:
    i, j = sites
    xx = _kron_sites({i: PAULI["X"], j: PAULI["X"]}, site_count)
    yy = _kron_sites({i: PAULI["Y"], j: PAULI["Y"]}, site_count)
    return (xx + yy) / 2


def _apply(op: np.ndarray, psi: np.ndarray) -> tuple[np.ndarray, float]:
    psi = np.asarray(psi, dtype=complex)
    out = op @ psi
    survival = float(np.vdot(out, out).real / np.vdot(psi, psi).real)
    if survival < SURVIVAL_TOL:
        raise ZeroSurvivalError("error operator annihilated the state")
    return out / np.linalg.norm(out), min(survival, 1.0)


def survival_probability(psi: np.ndarray, spec: NoiseSpec) -> float:
    out = spec.operator(len(psi)) @ psi
    return float(np.vdot(out, out).real / np.vdot(psi, psi).real)


def apply_phase_error(psi: np.ndarray, site: int) -> tuple[np.ndarray, float]:
    return NoiseSpec("phase", (site,)).apply(psi)


def apply_flip_error(psi: np.ndarray, sites) -> tuple[np.ndarray, float]:
    return NoiseSpec("flip", tuple(sites)).apply(psi)


def corrupted_gate(recipe: "GateRecipe", noise: NoiseSpec) -> tuple[LogicalGate, float, float]:
    """Extract the gate with ``noise`` inserted; position defaults to the recipe's."""
    if noise.position is None:
        noise = noise.at(recipe.noise_position)
    gate = extract_gate(recipe.schedule.with_noise(noise))
    even = gate.matrix4[np.ix_((0, 3), (0, 3))]
    fid = process_fidelity(recipe.expected_even_block, even) if np.abs(even).max() > 0 else 0.0
    return gate, fid, gate.leakage
