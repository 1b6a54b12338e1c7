"""Single-qubit Deutsch-Jozsa run built only from braiding schedules."""

from __future__ import annotations

from dataclasses import dataclass

from .braiding import GateRecipe, braid_AC, braid_CD, compose, identity_gate
from .codec import LogicalState, decode_logical, encode_logical
from .ite import DEFAULT_ITE_TIME, run_schedule

VERDICT_THRESHOLD = 0.99
ORACLES = ("constant", "balanced")


@dataclass(frozen=True)
class DJResult:
    oracle: str
    trajectory: tuple[LogicalState, ...]
    stages: tuple[str, ...]
    verdict: str | None  # None when neither final overlap clears the threshold

    @property
    def final(self) -> LogicalState:
        return self.trajectory[-1]

    @property
    def ambiguous(self) -> bool:
        return self.verdict is None


def oracle_recipe(kind: str, ite_time: float = DEFAULT_ITE_TIME) -> GateRecipe:
    if kind == "constant":
        return identity_gate(ite_time)
    if kind == "balanced":
        return compose(braid_CD(ite_time), braid_CD(ite_time), name="Z")
    raise ValueError(f"oracle must be 'constant' or 'balanced', got {kind!r}")


def run_dj(
    kind: str,
    ite_time: float = DEFAULT_ITE_TIME,
    hadamard: GateRecipe | None = None,
    oracle: GateRecipe | None = None,
) -> DJResult:
    """Braid A-C, apply the oracle, braid A-C again; |11_g> means constant, |00_g> balanced."""
    h = hadamard or braid_AC(ite_time)
    u = oracle or oracle_recipe(kind, ite_time)
    psi = encode_logical(LogicalState.basis("00"))
    trajectory = []
    for recipe in (h, u, h):
        psi = run_schedule(psi, recipe.schedule)
        trajectory.append(decode_logical(psi))
    final = trajectory[-1]
    if final.overlap("11") >= VERDICT_THRESHOLD:
        verdict = "constant"
    elif final.overlap("00") >= VERDICT_THRESHOLD:
        verdict = "balanced"
    else:
        verdict = None
    return DJResult(kind, tuple(trajectory), (h.name, u.name, h.name), verdict)
