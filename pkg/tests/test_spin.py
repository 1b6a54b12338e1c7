import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kitaevbraid.braiding import H_E, H_H1, H_H2, H_H3, H_M0, derived_cd_path, derived_transport_path
from kitaevbraid.fermions import MajoranaHamiltonian, build_hamiltonian, occupation
from kitaevbraid.spin import (
    H0_SPIN,
    H1_SPIN,
    H2_SPIN,
    H3_SPIN,
    PauliString,
    SpinHamiltonian,
    commuting_groups,
    jw_transform,
    pauli_product,
    sign_gauge_report,
    spin_matrix,
)

PAIRS = [(H_M0, H0_SPIN), (H_H1, H1_SPIN), (H_H2, H2_SPIN), (H_H3, H3_SPIN)]
IDS = ["M0", "h1", "h2", "h3"]


def _as_dict(H):
    return {t.letters: t.coefficient for t in H.terms}


@pytest.mark.parametrize("fermionic,literal", PAIRS, ids=IDS)
def test_jw_image_matches_hand_entered_spin_hamiltonian(fermionic, literal):
    assert _as_dict(jw_transform(fermionic)) == _as_dict(literal)
    assert set(sign_gauge_report(fermionic, literal).values()) == {1.0}


@pytest.mark.parametrize("fermionic,literal", PAIRS, ids=IDS)
def test_jw_preserves_the_operator(fermionic, literal):
    assert np.allclose(spin_matrix(jw_transform(fermionic)), build_hamiltonian(fermionic), atol=1e-12)
    assert np.allclose(spin_matrix(literal), build_hamiltonian(fermionic), atol=1e-12)


def test_single_pairings():
    assert _as_dict(jw_transform(MajoranaHamiltonian.from_pairs([("3a", "3b")]))) == {"IIZIII": 1.0}
    assert _as_dict(jw_transform(MajoranaHamiltonian.from_pairs([("1b", "2a")]))) == {"XXIIII": -1.0}
    assert _as_dict(jw_transform(occupation(2))) == {"IIIIII": 0.5, "IZIIII": 0.5}
    assert _as_dict(jw_transform(H_E)) == {"IIZIII": -1.0}


def test_sign_gauge_report_flags_mismatch():
    flipped = SpinHamiltonian(tuple(PauliString(-t.coefficient, t.letters) for t in H0_SPIN.terms))
    assert set(sign_gauge_report(H_M0, flipped).values()) == {-1.0}
    extra = H0_SPIN + SpinHamiltonian((PauliString(1.0, "IIIIIZ"),))
    assert sign_gauge_report(H_M0, extra)["IIIIIZ"] == 0.0


def test_derived_paths_have_local_spin_images():
    for h in (*derived_cd_path(), *derived_transport_path()):
        H = jw_transform(h)
        assert max(t.weight for t in H.terms) <= 3
        assert np.allclose(spin_matrix(H), build_hamiltonian(h), atol=1e-12)


def test_pauli_string_basics():
    p = PauliString.from_sites(-1, {1: "X", 2: "X"})
    assert p.letters == "XXIIII"
    assert p.support == (1, 2) and p.weight == 2
    assert str(p) == "-1.0 * X1 X2"
    with pytest.raises(ValueError):
        PauliString(1.0, "XQ")


def test_spin_hamiltonian_merging():
    a = PauliString(1.0, "ZI")
    with pytest.raises(ValueError):
        SpinHamiltonian((a, a))
    with pytest.raises(ValueError):
        SpinHamiltonian((a, PauliString(1.0, "Z")))
    merged = SpinHamiltonian.canonical([a, PauliString(2.0, "ZI"), PauliString(1.0, "IX"), PauliString(-1.0, "IX")])
    assert _as_dict(merged) == {"ZI": 3.0}
    assert merged.scaled(2).coefficient_of("ZI") == 6.0
    assert merged.coefficient_of("XX") == 0.0


def test_commuting_groups():
    groups = commuting_groups(H0_SPIN)
    assert len(groups) == 1 and len(groups[0]) == 4
    H = SpinHamiltonian((PauliString(1.0, "XI"), PauliString(1.0, "ZI"), PauliString(1.0, "IZ")))
    groups = commuting_groups(H)
    assert [[t.letters for t in g] for g in groups] == [["XI", "IZ"], ["ZI"]]
    for g in commuting_groups(H2_SPIN + H1_SPIN.scaled(0.5)):
        for a in g:
            for b in g:
                A, B = a.matrix(), b.matrix()
                assert np.allclose(A @ B, B @ A)


words = st.text(alphabet="IXYZ", min_size=3, max_size=3)


@settings(max_examples=60, deadline=None)
@given(words, words)
def test_pauli_product_and_commutation_match_matrices(a, b):
    A, B = PauliString(1.0, a).matrix(), PauliString(1.0, b).matrix()
    phase, word = pauli_product(a, b)
    assert np.allclose(A @ B, phase * PauliString(1.0, word).matrix())
    assert PauliString(1.0, a).commutes_with(PauliString(1.0, b)) == np.allclose(A @ B, B @ A)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_isospectral_under_random_couplings(coefs):
    pairs = [("1b", "2a"), ("1a", "3a"), ("3b", "4b"), ("5b", "6a")]
    h = MajoranaHamiltonian.from_pairs([(*p, c) for p, c in zip(pairs, coefs)])
    ef = np.linalg.eigvalsh(build_hamiltonian(h))
    es = np.linalg.eigvalsh(spin_matrix(jw_transform(h)))
    assert np.allclose(ef, es, atol=1e-10)


def test_code_hamiltonian_term_weights():
    assert [t.weight for t in jw_transform(H_M0).terms] == [2, 2, 2, 1]
    assert sorted(t.weight for t in H0_SPIN.terms) == [1, 2, 2, 2]
