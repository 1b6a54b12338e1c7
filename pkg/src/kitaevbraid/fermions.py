"""Majorana operators and quadratic Majorana Hamiltonians on the full Fock space.

Basis convention: bit ``k`` of a basis-state index is the occupation of site
``k + 1``.  An occupied site is the spin-up state ``|z>`` (sigma^z = +1), the
empty site is ``|z-bar>``.

Jordan-Wigner convention, with ``P_j = Z_1 ... Z_{j-1}`` and the per-site sign
``eps_j = (-1)**(j + 1)``::

    gamma_ja =  eps_j * P_j X_j
    gamma_jb = -eps_j * P_j Y_j

so that ``c_j^dag c_j = (1 + Z_j) / 2`` on every site, and the quadratic
pairings of the two-chain network map term by term onto the printed spin
Hamiltonians (``i g_1b g_2a -> -X1 X2``, ``i g_3a g_3b -> +Z3``,
``i g_1a g_3a -> +Y1 Z2 X3`` ...).
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SITE_COUNT = 6
DEGENERACY_TOL = 1e-9

PAULI = {
    "I": np.eye(2, dtype=complex),
    # local order is (empty, occupied) = (|z-bar>, |z>)
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "Z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


def site_sign(site: int) -> int:
    """Per-site gauge sign ``eps_j`` of the Jordan-Wigner convention."""
    return 1 if site % 2 == 1 else -1


@dataclass(frozen=True, order=True)
class MajoranaIndex:
    site: int
    species: str

    def __post_init__(self):
        if not isinstance(self.site, (int, np.integer)) or self.site < 1:
            raise ValueError(f"site must be a positive integer, got {self.site!r}")
        if self.species not in ("a", "b"):
            raise ValueError(f"species must be 'a' or 'b', got {self.species!r}")

    @classmethod
    def parse(cls, label: "str | MajoranaIndex") -> "MajoranaIndex":
        if isinstance(label, MajoranaIndex):
            return label
        m = re.fullmatch(r"\s*(\d+)\s*([ab])\s*", label)
        if m is None:
            raise ValueError(f"cannot parse Majorana label {label!r}")
        return cls(int(m.group(1)), m.group(2))

    def __str__(self) -> str:
        return f"{self.site}{self.species}"


def all_majoranas(site_count: int = SITE_COUNT) -> list[MajoranaIndex]:
    return [MajoranaIndex(s, sp) for s in range(1, site_count + 1) for sp in "ab"]


@dataclass(frozen=True)
class MajoranaHamiltonian:
    """Sum of ``i * coefficient * gamma_first gamma_second`` plus a constant offset."""

    terms: tuple[tuple[float, MajoranaIndex, MajoranaIndex], ...] = ()
    offset: float = 0.0

    def __post_init__(self):
        seen = set()
        for coef, first, second in self.terms:
            if first == second:
                raise ValueError(f"pairing of {first} with itself")
            key = frozenset((first, second))
            if key in seen:
                raise ValueError(f"duplicate pairing {first}-{second}")
            seen.add(key)

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[Sequence],
        offset: float = 0.0,
    ) -> "MajoranaHamiltonian":
        """Build from ``(first, second)`` or ``(first, second, coefficient)`` tuples.

        >>> MajoranaHamiltonian.from_pairs([("3a", "3b")]).terms[0][0]
        1.0
        """
        terms = []
        for p in pairs:
            first, second = MajoranaIndex.parse(p[0]), MajoranaIndex.parse(p[1])
            coef = float(p[2]) if len(p) > 2 else 1.0
            terms.append((coef, first, second))
        return cls(tuple(terms), float(offset))

    @property
    def indices(self) -> set[MajoranaIndex]:
        return {m for _, a, b in self.terms for m in (a, b)}

    def max_site(self) -> int:
        return max((m.site for m in self.indices), default=0)

    def __add__(self, other: "MajoranaHamiltonian") -> "MajoranaHamiltonian":
        if not isinstance(other, MajoranaHamiltonian):
            return NotImplemented
        merged: dict[frozenset, list] = {}
        for coef, a, b in self.terms + other.terms:
            key = frozenset((a, b))
            if key in merged:
                ref = merged[key]
                # i g_b g_a = -i g_a g_b
                merged[key][0] += coef if (a, b) == (ref[1], ref[2]) else -coef
            else:
                merged[key] = [coef, a, b]
        terms = tuple((c, a, b) for c, a, b in merged.values() if c != 0.0)
        return MajoranaHamiltonian(terms, self.offset + other.offset)

    def scaled(self, factor: float) -> "MajoranaHamiltonian":
        return MajoranaHamiltonian(
            tuple((factor * c, a, b) for c, a, b in self.terms), factor * self.offset
        )

    def __str__(self) -> str:
        parts = [f"{c:+g} i g{a} g{b}" for c, a, b in self.terms]
        if self.offset:
            parts.append(f"{self.offset:+g}")
        return " ".join(parts) or "0"


def occupation(site: int) -> MajoranaHamiltonian:
    """Number operator ``c_j^dag c_j = (1 + i g_ja g_jb) / 2``."""
    return MajoranaHamiltonian(
        ((0.5, MajoranaIndex(site, "a"), MajoranaIndex(site, "b")),), offset=0.5
    )


def _kron_sites(factors: dict[int, np.ndarray], site_count: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for site in range(site_count, 0, -1):
        out = np.kron(out, factors.get(site, PAULI["I"]))
    return out


def _check_site(site: int, site_count: int):
    if not 1 <= site <= site_count:
        raise ValueError(f"site {site} out of range 1..{site_count}")


@functools.lru_cache(maxsize=None)
def _majorana_matrix(m: MajoranaIndex, site_count: int) -> np.ndarray:
    factors = {k: PAULI["Z"] for k in range(1, m.site)}
    if m.species == "a":
        factors[m.site] = site_sign(m.site) * PAULI["X"]
    else:
        factors[m.site] = -site_sign(m.site) * PAULI["Y"]
    mat = _kron_sites(factors, site_count)
    mat.setflags(write=False)
    return mat


def majorana_matrix(m: "MajoranaIndex | str", site_count: int = SITE_COUNT) -> np.ndarray:
    """Dense matrix of one Majorana operator on ``2**site_count`` states."""
    m = MajoranaIndex.parse(m)
    _check_site(m.site, site_count)
    return _majorana_matrix(m, site_count)


def build_hamiltonian(h: MajoranaHamiltonian, site_count: int = SITE_COUNT) -> np.ndarray:
    dim = 2**site_count
    mat = h.offset * np.eye(dim, dtype=complex)
    for coef, first, second in h.terms:
        mat = mat + 1j * coef * (majorana_matrix(first, site_count) @ majorana_matrix(second, site_count))
    return mat


def is_hermitian(mat: np.ndarray, atol: float = 1e-10) -> bool:
    mat = np.asarray(mat)
    return mat.ndim == 2 and mat.shape[0] == mat.shape[1] and np.allclose(mat, mat.conj().T, atol=atol)


def parity_operator(site_count: int = SITE_COUNT) -> np.ndarray:
    """Total fermion parity ``prod_j (-Z_j)``; +1 on the vacuum."""
    return _kron_sites({k: -PAULI["Z"] for k in range(1, site_count + 1)}, site_count)


def ground_space(
    H: np.ndarray,
    tol: float = DEGENERACY_TOL,
    sector: int | None = None,
) -> tuple[float, list[np.ndarray], int]:
    """Lowest eigenvalue, an orthonormal basis of its eigenspace, and the degeneracy.

    With ``sector=+1`` or ``-1`` the search is restricted to that fermion-parity
    sector (``H`` must then commute with the parity operator).
    """
    H = np.asarray(H, dtype=complex)
    if not is_hermitian(H):
        raise ValueError("ground_space needs a Hermitian matrix")
    if sector is None:
        w, v = np.linalg.eigh(H)
    else:
        if sector not in (1, -1):
            raise ValueError("sector must be +1 or -1")
        n = int(round(np.log2(H.shape[0])))
        diag = np.real(np.diag(parity_operator(n)))
        keep = np.flatnonzero(np.isclose(diag, sector))
        w, vs = np.linalg.eigh(H[np.ix_(keep, keep)])
        v = np.zeros((H.shape[0], len(w)), dtype=complex)
        v[keep] = vs
    mask = w <= w[0] + tol
    basis = [v[:, k].copy() for k in np.flatnonzero(mask)]
    return float(w[0]), basis, len(basis)


def zero_modes(h: MajoranaHamiltonian, site_count: int | None = None) -> list[MajoranaIndex]:
    """Majorana operators absent from every pairing, checked to commute with ``h``."""
    n = site_count or max(SITE_COUNT, h.max_site())
    used = h.indices
    free = [m for m in all_majoranas(n) if m not in used]
    H = build_hamiltonian(h, n)
    for m in free:
        g = majorana_matrix(m, n)
        if np.abs(H @ g - g @ H).max() > 1e-12:
            raise AssertionError(f"{m} is absent from h but does not commute with it")
    return free


def fock_state(occupied: Iterable[int] = (), site_count: int = SITE_COUNT) -> np.ndarray:
    """Computational basis state with the given sites occupied."""
    v = np.zeros(2**site_count, dtype=complex)
    v[sum(1 << (s - 1) for s in set(occupied))] = 1.0
    return v


def creation(site: int, site_count: int = SITE_COUNT) -> np.ndarray:
    """``c_j^dag = (gamma_ja - i gamma_jb) / 2``."""
    return 0.5 * (
        majorana_matrix(MajoranaIndex(site, "a"), site_count)
        - 1j * majorana_matrix(MajoranaIndex(site, "b"), site_count)
    )
