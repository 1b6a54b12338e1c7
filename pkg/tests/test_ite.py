import numpy as np
import pytest
from conftest import random_state

from kitaevbraid.braiding import H_H1, H_H2, H_H3, H_M0, braid_AC
from kitaevbraid.codec import code_basis, encode_logical, LogicalState
from kitaevbraid.ite import (
    EvolutionError,
    Schedule,
    Segment,
    dissipative_term_step,
    hamiltonian_matrix,
    ite_factored,
    ite_step,
    post_selection_probability,
    propagate,
    real_time_step,
    run_schedule,
    spectrum,
    term_factor,
)
from kitaevbraid.noise import NoiseSpec
from kitaevbraid.spin import H0_SPIN, H1_SPIN, H2_SPIN, H3_SPIN, PauliString, SpinHamiltonian

SPIN = [H0_SPIN, H1_SPIN, H2_SPIN, H3_SPIN]


def _ground_projector(h):
    w, v = np.linalg.eigh(hamiltonian_matrix(h))
    g = v[:, w <= w[0] + 1e-9]
    return g @ g.conj().T


def _leakage(psi, P):
    return np.linalg.norm(psi - P @ psi)


def test_ite_step_preserves_norm_and_projects(rng):
    psi = random_state(rng)
    P = _ground_projector(H_M0)
    out = ite_step(psi, H_M0, 40.0)
    assert np.linalg.norm(out) == pytest.approx(1, abs=1e-12)
    assert _leakage(out, P) < 1e-15
    overlap = P @ psi
    assert abs(abs(np.vdot(out, overlap / np.linalg.norm(overlap))) - 1) < 1e-12


@pytest.mark.parametrize("h", [H_M0, H_H1, H_H2, H_H3], ids=["M0", "h1", "h2", "h3"])
def test_leakage_decays_at_the_gap_rate(rng, h):
    psi = random_state(rng)
    P = _ground_projector(h)
    times = np.arange(1, 11)
    leak = np.array([_leakage(ite_step(psi, h, t), P) for t in times])
    scaled = leak * np.exp(2 * times)
    assert scaled.max() / scaled.min() < 2


def test_ite_step_errors(rng):
    with pytest.raises(ValueError):
        ite_step(random_state(rng), H_M0, 0.0)
    excited = np.linalg.eigh(hamiltonian_matrix(H_M0))[1][:, -1]
    # ground energy shift keeps entries finite, so the excited state is crushed below tolerance
    with pytest.raises(EvolutionError):
        ite_step(excited, H_M0, 50.0)


@pytest.mark.parametrize("H", SPIN, ids=["H0", "H1", "H2", "H3"])
def test_factored_ite_matches_exact(rng, H):
    psi = random_state(rng)
    for t in (0.3, 1.0, 5.0):
        assert np.allclose(ite_factored(psi, H, t), ite_step(psi, H, t), atol=1e-12)


def test_factored_ite_rejects_noncommuting():
    H = SpinHamiltonian((PauliString(1.0, "XI"), PauliString(1.0, "ZI")))
    with pytest.raises(ValueError):
        ite_factored(np.array([1, 0, 0, 0], dtype=complex), H, 1.0)


@pytest.mark.parametrize("H", SPIN, ids=["H0", "H1", "H2", "H3"])
def test_dissipative_steps_match_exact(rng, H):
    psi = random_state(rng)
    for t in (0.5, 2.0, 20.0):
        out = psi
        for term in H.terms:
            out = dissipative_term_step(out, term, t)
        assert np.allclose(out, ite_step(psi, H, t), atol=1e-12)


def test_post_selection_probability(rng):
    psi = random_state(rng)
    term = PauliString(1.0, "IIZIII")
    Z = term.matrix()
    high = np.linalg.norm((np.eye(64) + Z) / 2 @ psi) ** 2
    for t in (0.0, 0.5, 3.0):
        expected = 1 - high + np.exp(-4 * t) * high
        assert post_selection_probability(psi, term, t) == pytest.approx(expected)
    assert post_selection_probability(psi, term, 50.0) == pytest.approx(1 - high)


def test_term_factor_is_shifted_exponential():
    term = PauliString(-0.5, "XX")
    t = 0.7
    w, v = np.linalg.eigh(term.matrix())
    direct = (v * np.exp(-(w + 0.5) * t)) @ v.conj().T
    assert np.allclose(term_factor(term, t), direct)


def test_five_factor_simplification(rng):
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    phi0 = code_basis() @ (amps / np.linalg.norm(amps))
    for t in (20.0, 30.0):
        chain = phi0
        for H in (H1_SPIN, H2_SPIN, H3_SPIN, H0_SPIN):
            chain = ite_step(chain, H, t)
        factors = [
            PauliString.from_sites(1, {4: "Z"}),
            PauliString.from_sites(1, {1: "Y", 2: "Z", 3: "X"}),
            PauliString.from_sites(1, {3: "X", 4: "Y"}),
            PauliString.from_sites(-1, {4: "X", 5: "X"}),
            PauliString.from_sites(1, {3: "Z"}),
        ]
        out = phi0
        for f in factors:
            out = term_factor(f, t) @ out
        out = out / np.linalg.norm(out)
        assert np.linalg.norm(out - chain) < 1e-10


def test_real_time_step_is_unitary(rng):
    psi = random_state(rng)
    out = real_time_step(psi, H_M0, 0.37)
    assert np.linalg.norm(out) == pytest.approx(1)
    w, v = spectrum(H_M0)
    assert np.allclose(out, v @ (np.exp(-0.37j * w) * (v.conj().T @ psi)))


def test_segment_and_schedule_validation():
    with pytest.raises(ValueError):
        Segment(H_M0, "imaginary", 0.0)
    with pytest.raises(ValueError):
        Segment(H_M0, "sideways")
    with pytest.raises(ValueError):
        Segment(H_M0, "real", np.inf)
    with pytest.raises(ValueError):
        Schedule(())
    s = Schedule((Segment(H_M0),))
    with pytest.raises(ValueError):
        s.with_noise(NoiseSpec("phase", (4,), 2))


def test_schedule_concatenation_shifts_noise():
    a = Schedule((Segment(H_M0), Segment(H_H1)), (NoiseSpec("phase", (4,), 1),))
    b = Schedule((Segment(H_H2),), (NoiseSpec("phase", (3,), 0),))
    c = a + b
    assert len(c) == 3
    assert [n.position for n in c.noise] == [1, 2]
    kinds = [k for k, _ in c.steps()]
    assert kinds == ["segment", "noise", "segment", "noise", "segment"]


def test_propagate_matches_run_schedule():
    sched = braid_AC().schedule.with_noise(NoiseSpec("phase", (4,), 3))
    E = code_basis()
    block = propagate(E, sched)
    for k in (0, 3):
        single = run_schedule(E[:, k], sched)
        col = block[:, k] / np.linalg.norm(block[:, k])
        assert abs(abs(np.vdot(col, single)) - 1) < 1e-12
        assert np.allclose(col * np.vdot(col, single) / abs(np.vdot(col, single)), single, atol=1e-12)


def test_run_schedule_stays_normalized():
    psi = encode_logical(LogicalState.from_even(1, 1j))
    out = run_schedule(psi, braid_AC().schedule)
    assert np.linalg.norm(out) == pytest.approx(1, abs=1e-12)
