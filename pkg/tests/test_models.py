import math

import numpy as np
import pytest

from qsync import hilbert, models
from qsync.models import DimerParams, MilitelloParams


def interaction_part(params):
    """Dimer Hamiltonian minus its exciton and free-mode lines."""
    built = models.dimer_hamiltonian(params)
    m = params.levels
    number = np.diag(np.arange(m, dtype=float))
    ident_e, ident_m = np.eye(2), np.eye(m)
    free = (np.kron(np.kron(np.diag(built.exciton_energies), ident_m), ident_m)
            + np.kron(np.kron(ident_e, params.omega1 * number), ident_m)
            + np.kron(np.kron(ident_e, ident_m), params.omega2 * number))
    return built.operator.matrix - free, built


def test_table_defaults():
    p = DimerParams()
    assert p.delta_e == pytest.approx(1042.0)
    assert p.V == pytest.approx(92.0)
    assert p.omega1 == p.omega2 == pytest.approx(1111.0)
    assert p.g1 == pytest.approx(267.1, rel=1e-12)
    assert p.kBT == pytest.approx(207.1)
    assert p.gamma_th == pytest.approx(1.0)
    assert p.gamma_deph == pytest.approx(10.0)
    assert p.levels == 9


def test_eta_accessor():
    assert DimerParams().eta == pytest.approx(0.17, abs=0.01)
    # delocalised variant used for the eta = 0.5 sweep
    assert DimerParams(V=260.5).eta == pytest.approx(0.5)


def test_reorganisation_energy():
    assert models.reorganisation_energy(1111.0, 0.0) == 0.0
    s = (267.1 / 1111.0) ** 2
    assert models.reorganisation_energy(1111.0, s) == pytest.approx(64.2, abs=0.05)
    assert models.reorganisation_energy(1111.0, 2 * s) == pytest.approx(
        2 * models.reorganisation_energy(1111.0, s))
    with pytest.raises(ValueError):
        models.reorganisation_energy(-5.0, 0.1)


def test_mixing_angle_table():
    assert models.mixing_angle(DimerParams()) == pytest.approx(
        0.5 * math.atan(2 * 92.0 / 1042.0), abs=1e-12)
    assert models.mixing_angle(DimerParams()) == pytest.approx(0.0874, abs=2e-4)


def test_mixing_angle_limits():
    assert models.mixing_angle(DimerParams(V=0.0)) == 0.0
    # degenerate shifted sites fall back to pi/4
    degenerate = DimerParams(e1=0.0, e2=0.0)
    assert models.mixing_angle(degenerate) == pytest.approx(math.pi / 4)


def test_exciton_splitting():
    built = models.dimer_hamiltonian(DimerParams())
    e1, e2 = built.exciton_energies
    assert e2 - e1 == pytest.approx(math.sqrt(1042.0 ** 2 + 4 * 92.0 ** 2), rel=1e-12)


def test_exciton_vectors_unitary_and_energies():
    p = DimerParams()
    built = models.dimer_hamiltonian(p)
    u = built.exciton_vectors
    np.testing.assert_allclose(u @ u.T, np.eye(2), atol=1e-12)
    # rows diagonalise the shifted electronic Hamiltonian
    es1, es2 = models.shifted_site_energies(p)
    h_el = np.array([[es1, p.V], [p.V, es2]])
    np.testing.assert_allclose(u @ h_el @ u.T, np.diag(built.exciton_energies),
                               atol=1e-9)


def test_hamiltonian_hermitian():
    for params in (DimerParams(), DimerParams().detuned(1.02)):
        assert models.dimer_hamiltonian(params).operator.hermiticity_defect() < 1e-10
    assert models.militello_hamiltonian(
        MilitelloParams(phi1=0.7)).hermiticity_defect() < 1e-10


def test_decoupled_dimer_spectrum():
    # without exciton-vibration coupling the spectrum is E_d + n1*w1 + n2*w2
    p = DimerParams(S1=0.0, S2=0.0, omega2=1111.0 * 1.17, levels=4)
    built = models.dimer_hamiltonian(p)
    eigs = np.linalg.eigvalsh(built.operator.matrix)
    expected = sorted(e + n1 * p.omega1 + n2 * p.omega2
                      for e in built.exciton_energies
                      for n1 in range(4) for n2 in range(4))
    np.testing.assert_allclose(eigs, expected, atol=1e-9)


def test_symmetric_interaction_collective_form():
    """At equal mode parameters the coupling splits into a centre-of-mass
    displacement (electronic identity) and a relative-coordinate term carrying
    the effective Pauli mixture cos(2theta)sz - sin(2theta)sx."""
    p = DimerParams()
    h_int, built = interaction_part(p)
    m = p.levels
    g = p.g1
    theta = built.theta
    x = hilbert.position(m).matrix.real
    ident_m = np.eye(m)
    x1 = np.kron(np.kron(np.eye(2), x), ident_m)
    x2 = np.kron(np.kron(np.eye(2), ident_m), x)
    sz = np.kron(np.kron(np.diag([-1.0, 1.0]), ident_m), ident_m)
    sx = np.kron(np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), ident_m), ident_m)
    sigma_eff = math.cos(2 * theta) * sz - math.sin(2 * theta) * sx
    expected = 0.5 * g * (x1 + x2) + 0.5 * g * sigma_eff @ (x2 - x1)
    np.testing.assert_allclose(h_int, expected, atol=1e-9)


def test_detuning_changes_omega2_only():
    p = DimerParams().detuned(1.02)
    assert p.omega1 == pytest.approx(1111.0)
    assert p.omega2 == pytest.approx(1111.0 * 1.02)
    assert p.S2 == pytest.approx(DimerParams().S2)  # Huang-Rhys held fixed
    pg = DimerParams().detuned(1.02, fix="g")
    assert pg.g2 == pytest.approx(DimerParams().g2)
    assert pg.S2 < DimerParams().S2


def test_dimer_channels_structure():
    p = DimerParams()
    channels = models.dimer_channels(p)
    assert len(channels) == 6
    labels = [c.label for c in channels]
    assert labels == ["deph_site1", "deph_site2", "mode1_down", "mode1_up",
                      "mode2_down", "mode2_up"]
    # rates arrive in cm^-1
    assert channels[0].rate == pytest.approx(10.0 * 5.30884, rel=1e-4)
    occupation = channels[3].rate / channels[2].rate
    bose = 1.0 / (math.exp(1111.0 / 207.1) - 1.0)
    assert occupation == pytest.approx(bose / (1 + bose), rel=1e-9)
    assert bose == pytest.approx(0.00470, abs=5e-5)


def test_dimer_channels_cold_limit():
    cold = models.dimer_channels(DimerParams(kBT=1e-6))
    assert cold[3].rate == 0.0 and cold[5].rate == 0.0


def test_dephasing_operators_are_site_projectors():
    p = DimerParams()
    channels = models.dimer_channels(p)
    u = models.dimer_hamiltonian(p).exciton_vectors
    m = p.levels
    for k in range(2):
        proj = np.zeros((2, 2))
        proj[k, k] = 1.0
        expected = np.kron(np.kron(u @ proj @ u.T, np.eye(m)), np.eye(m))
        np.testing.assert_allclose(channels[k].operator.matrix, expected, atol=1e-12)


def test_full_swap_symmetry_with_degenerate_sites():
    # swapping both sites and modes is a symmetry once e1 = e2 removes the
    # electronic asymmetry; with split site energies only the interaction
    # attachments swap, so no permutation covariance is expected
    p = DimerParams(e1=0.0, e2=0.0, levels=4)
    h = models.dimer_hamiltonian(p).operator.matrix
    m = p.levels
    swap_modes = models.mode_swap_permutation(m).matrix.real
    swap_sites_exciton = np.diag([1.0, -1.0])  # site swap acts as sigma_z at theta=pi/4
    full = np.kron(np.kron(swap_sites_exciton, np.eye(m)), np.eye(m)) @ swap_modes
    np.testing.assert_allclose(full @ h @ full.conj().T, h, atol=1e-9)


def test_militello_defaults():
    p = MilitelloParams()
    assert p.delta_e == pytest.approx(1.0)
    assert p.omega1 == p.omega2 == pytest.approx(p.delta_e)
    assert p.g1 == p.g2 == pytest.approx(p.delta_e)
    assert p.gamma_minus == pytest.approx(0.2 * p.delta_e)
    with pytest.raises(ValueError):
        MilitelloParams(phi1=-0.1)
    with pytest.raises(ValueError):
        MilitelloParams(phi2=3.5)


@pytest.mark.parametrize("phi,xsign,psign", [
    (0.0, 1.0, 0.0),
    (math.pi / 2, 0.0, 1.0),
    (math.pi, -1.0, 0.0),
])
def test_militello_interaction_quadratures(phi, xsign, psign):
    m = 5
    p = MilitelloParams(phi1=phi, phi2=0.0, levels=m)
    h = models.militello_hamiltonian(p).matrix
    number = np.diag(np.arange(m, dtype=float))
    ident_m = np.eye(m)
    free = (np.kron(np.kron(np.diag([p.e1, p.e2]), ident_m), ident_m)
            + np.kron(np.kron(np.eye(2), p.omega1 * number), ident_m)
            + np.kron(np.kron(np.eye(2), ident_m), p.omega2 * number))
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    x = hilbert.position(m).matrix
    pq = hilbert.momentum(m).matrix
    mode1 = xsign * x + psign * pq
    expected = (p.g1 * np.kron(np.kron(sx, mode1), ident_m)
                + p.g2 * np.kron(np.kron(sx, ident_m), x))
    np.testing.assert_allclose(h - free, expected, atol=1e-12)


def test_militello_channel():
    p = MilitelloParams()
    channels = models.militello_channels(p)
    assert len(channels) == 1
    assert channels[0].rate == pytest.approx(0.2)
    op = channels[0].operator.matrix
    m = p.levels
    ground_block = op[:m * m, :]  # rows where the two-level system is |e1>
    # sigma_- annihilates |e1> x anything
    np.testing.assert_allclose(op @ np.kron([1, 0], np.eye(m * m)).T, 0.0, atol=1e-15)
    assert np.abs(ground_block).max() == pytest.approx(1.0)


def test_channel_rate_validation():
    with pytest.raises(ValueError):
        models.LindbladChannel(hilbert.identity(2), -0.5)
