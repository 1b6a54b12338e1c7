"""Pauli-string Hamiltonians and the Jordan-Wigner image of Majorana pairings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .fermions import (
    PAULI,
    SITE_COUNT,
    MajoranaHamiltonian,
    MajoranaIndex,
    _kron_sites,
    site_sign,
)

# single-letter products: (a, b) -> (phase, letter) with a @ b = phase * letter
_PRODUCT = {}
for _a in "IXYZ":
    for _b in "IXYZ":
        _m = PAULI[_a] @ PAULI[_b]
        for _c in "IXYZ":
            _ov = np.trace(PAULI[_c].conj().T @ _m) / 2
            if abs(_ov) > 0.5:
                _PRODUCT[_a, _b] = (complex(np.round(_ov)), _c)


@dataclass(frozen=True)
class PauliString:
    coefficient: float
    letters: str

    def __post_init__(self):
        if set(self.letters) - set("IXYZ"):
            raise ValueError(f"bad Pauli letters {self.letters!r}")

    @classmethod
    def from_sites(cls, coefficient: float, ops: dict[int, str], site_count: int = SITE_COUNT):
        """``PauliString.from_sites(-1, {1: "X", 2: "X"})`` is ``-X1 X2``."""
        letters = ["I"] * site_count
        for site, letter in ops.items():
            letters[site - 1] = letter
        return cls(float(coefficient), "".join(letters))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k + 1 for k, c in enumerate(self.letters) if c != "I")

    @property
    def weight(self) -> int:
        return len(self.support)

    def matrix(self) -> np.ndarray:
        factors = {k + 1: PAULI[c] for k, c in enumerate(self.letters) if c != "I"}
        return self.coefficient * _kron_sites(factors, len(self.letters))

    def commutes_with(self, other: "PauliString") -> bool:
        clashes = sum(
            1 for a, b in zip(self.letters, other.letters) if a != "I" and b != "I" and a != b
        )
        return clashes % 2 == 0

    def __str__(self) -> str:
        ops = " ".join(f"{c}{k + 1}" for k, c in enumerate(self.letters) if c != "I")
        return f"{self.coefficient!r} * {ops or 'I'}"


def pauli_product(a: str, b: str) -> tuple[complex, str]:
    """Product of two Pauli words as ``(phase, word)``."""
    phase = 1 + 0j
    out = []
    for x, y in zip(a, b):
        p, c = _PRODUCT[x, y]
        phase *= p
        out.append(c)
    return phase, "".join(out)


@dataclass(frozen=True)
class SpinHamiltonian:
    terms: tuple[PauliString, ...] = ()

    def __post_init__(self):
        keys = [t.letters for t in self.terms]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate Pauli strings; use SpinHamiltonian.canonical")
        if len({len(k) for k in keys}) > 1:
            raise ValueError("Pauli strings of different lengths")

    @classmethod
    def canonical(cls, terms: Iterable[PauliString]) -> "SpinHamiltonian":
        """Merge duplicate letter arrays by summing, drop zero terms, keep first-seen order."""
        acc: dict[str, float] = {}
        for t in terms:
            acc[t.letters] = acc.get(t.letters, 0.0) + t.coefficient
        return cls(tuple(PauliString(c, k) for k, c in acc.items() if c != 0.0))

    @property
    def site_count(self) -> int:
        return len(self.terms[0].letters) if self.terms else SITE_COUNT

    def __add__(self, other: "SpinHamiltonian") -> "SpinHamiltonian":
        if not isinstance(other, SpinHamiltonian):
            return NotImplemented
        return SpinHamiltonian.canonical(self.terms + other.terms)

    def scaled(self, factor: float) -> "SpinHamiltonian":
        return SpinHamiltonian.canonical(
            PauliString(factor * t.coefficient, t.letters) for t in self.terms
        )

    def coefficient_of(self, letters: str) -> float:
        for t in self.terms:
            if t.letters == letters:
                return t.coefficient
        return 0.0

    def __str__(self) -> str:
        return " + ".join(str(t) for t in self.terms) or "0"


def _majorana_word(m: MajoranaIndex, site_count: int) -> tuple[complex, str]:
    letters = ["Z"] * (m.site - 1) + ["X" if m.species == "a" else "Y"]
    letters += ["I"] * (site_count - m.site)
    sign = site_sign(m.site) if m.species == "a" else -site_sign(m.site)
    return complex(sign), "".join(letters)


def jw_transform(h: MajoranaHamiltonian, site_count: int = SITE_COUNT) -> SpinHamiltonian:
    terms = []
    if h.offset:
        terms.append(PauliString(h.offset, "I" * site_count))
    for coef, first, second in h.terms:
        p1, w1 = _majorana_word(first, site_count)
        p2, w2 = _majorana_word(second, site_count)
        p12, word = pauli_product(w1, w2)
        value = 1j * coef * p1 * p2 * p12
        if abs(value.imag) > 1e-12:
            raise AssertionError(f"non-Hermitian image for pairing {first}-{second}")
        terms.append(PauliString(float(value.real), word))
    return SpinHamiltonian.canonical(terms)


def spin_matrix(H: SpinHamiltonian) -> np.ndarray:
    n = H.site_count
    out = np.zeros((2**n, 2**n), dtype=complex)
    for t in H.terms:
        out += t.matrix()
    return out


def commuting_groups(H: SpinHamiltonian) -> list[list[PauliString]]:
    """Greedy first-fit partition into mutually commuting groups, input order."""
    groups: list[list[PauliString]] = []
    for term in H.terms:
        for g in groups:
            if all(term.commutes_with(other) for other in g):
                g.append(term)
                break
        else:
            groups.append([term])
    return groups


def sign_gauge_report(fermionic: MajoranaHamiltonian, literal: SpinHamiltonian) -> dict[str, float]:
    """Ratio of literal to JW-derived coefficients for every Pauli word of either side.

    A value of ``+1`` means the JW convention reproduces the literal term exactly,
    ``-1`` a pure sign flip, ``0`` a word present on only one side.
    """
    derived = jw_transform(fermionic, literal.site_count)
    words = [t.letters for t in derived.terms] + [
        t.letters for t in literal.terms if derived.coefficient_of(t.letters) == 0.0
    ]
    report = {}
    for w in words:
        d, l = derived.coefficient_of(w), literal.coefficient_of(w)
        report[w] = l / d if d and l else 0.0
    return report


def _lit(*terms: tuple[float, dict[int, str]]) -> SpinHamiltonian:
    return SpinHamiltonian(tuple(PauliString.from_sites(c, ops) for c, ops in terms))


# Hand-entered spin Hamiltonians of the two-chain network, kept independent of
# jw_transform so the two constructions cross-check each other.
H0_SPIN = _lit(
    (-1, {1: "X", 2: "X"}), (1, {3: "Z"}), (-1, {4: "X", 5: "X"}), (-1, {5: "X", 6: "X"})
)
H1_SPIN = _lit(
    (-1, {1: "X", 2: "X"}), (1, {1: "Y", 2: "Z", 3: "X"}), (1, {4: "Z"}), (-1, {5: "X", 6: "X"})
)
H2_SPIN = _lit(
    (-1, {1: "X", 2: "X"}), (1, {1: "Y", 2: "Z", 3: "X"}), (1, {3: "X", 4: "Y"}), (-1, {5: "X", 6: "X"})
)
H3_SPIN = _lit(
    (-1, {1: "X", 2: "X"}), (1, {1: "Y", 2: "Z", 3: "X"}), (-1, {4: "X", 5: "X"}), (-1, {5: "X", 6: "X"})
)
