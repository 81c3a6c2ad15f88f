import warnings

import numpy as np
import pytest

from liouskin.classical import delta_populations
from liouskin.errors import RegimeWarning, ShapeError
from liouskin.hatano_nelson import (
    correlation_evolve,
    effective_hamiltonian,
    eigensystem,
    skin_diagnostics,
    symmetrized,
    theta_sequence,
)
from liouskin.lattice import LatticeModel, hamiltonian_matrix


def _delta(L, n0):
    return np.diag(delta_populations(L, n0)).astype(complex)


def test_matrix_entries():
    H = effective_hamiltonian(4, 1.0, 0.6, theta=[0.0, np.pi, 0.0]).matrix
    assert H[1, 0] == pytest.approx(1.3) and H[0, 1] == pytest.approx(0.7)
    assert H[2, 1] == pytest.approx(0.7) and H[1, 2] == pytest.approx(1.3)
    np.testing.assert_allclose(np.diag(H), [-0.3j, -0.6j, -0.6j, -0.3j])
    np.testing.assert_allclose(np.diag(effective_hamiltonian(4, 1.0, 0.6, diagonal="uniform").matrix), -0.6j)


def test_zero_loss_reduces_to_coherent_hopping():
    H = effective_hamiltonian(6, 0.2, 0.0).matrix
    np.testing.assert_allclose(H, hamiltonian_matrix(LatticeModel.build(6, J=0.2)), atol=1e-15)


def test_regime_and_shape_checks():
    with pytest.warns(RegimeWarning):
        effective_hamiltonian(5, 1.0, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        effective_hamiltonian(5, 1.0, 1.9)
    with pytest.raises(ShapeError):
        effective_hamiltonian(5, 1.0, 0.5, theta=np.zeros(5))
    with pytest.raises(ValueError):
        effective_hamiltonian(5, 1.0, 0.5, diagonal="edge")


@pytest.mark.parametrize("L, J, kappa", [(10, 1.0, 1.0), (51, 1.0, 1.5), (101, 0.5, 0.3)])
def test_clean_spectrum_is_shifted_cosine_band(L, J, kappa):
    Heff = effective_hamiltonian(L, J, kappa, diagonal="uniform")
    lam, _ = eigensystem(Heff)
    m = np.arange(1, L + 1)
    ref = 2 * Heff.J_e.real * np.cos(m * np.pi / (L + 1)) - 1j * kappa
    ref = ref[np.lexsort((np.round(ref.imag, 10), np.round(ref.real, 10)))]
    assert np.abs(lam - ref).max() < 1e-10


def test_clean_eigenvectors_are_gauged_standing_waves():
    L, J, kappa = 30, 1.0, 0.8
    Heff = effective_hamiltonian(L, J, kappa, diagonal="uniform")
    lam, psi = eigensystem(Heff)
    n = np.arange(1, L + 1)
    r = np.sqrt((J + kappa / 2) / (J - kappa / 2))
    for k in range(L):
        # each eigenvalue identifies its mode number through the cosine band
        m = int(round(np.arccos(lam[k].real / (2 * Heff.J_e.real)) * (L + 1) / np.pi))
        ref = r**n * np.sin(m * np.pi * n / (L + 1))
        ref /= np.linalg.norm(ref)
        overlap = abs(np.vdot(ref, psi[:, k]))
        assert overlap == pytest.approx(1, abs=1e-9)
    assert np.all(np.abs(np.linalg.norm(psi, axis=0) - 1) < 1e-12)


def test_gauge_symmetrization():
    theta = theta_sequence(40, 0.5, seed=3)
    Heff = effective_hamiltonian(40, 1.0, 1.2, theta=theta, diagonal="uniform")
    assert Heff.real_gauge
    K, _ = symmetrized(Heff)
    np.testing.assert_allclose(K, K.T, atol=1e-12)
    np.testing.assert_allclose(np.abs(np.diagonal(K, 1)), abs(Heff.J_e), rtol=1e-12)
    # shifting out the uniform loss leaves a real symmetric matrix with a real spectrum
    lam = np.linalg.eigvals(Heff.matrix + 1j * Heff.kappa * np.eye(40))
    assert np.abs(lam.imag).max() < 1e-9


def test_theta_sequence():
    th = theta_sequence(2001, 0.3, seed=1)
    assert set(np.unique(th)) <= {0.0, np.pi}
    assert abs(np.mean(th == 0) - 0.3) < 0.05
    np.testing.assert_array_equal(th, theta_sequence(2001, 0.3, seed=1))
    assert not np.array_equal(th, theta_sequence(2001, 0.3, seed=1, realization=1))


def test_clean_model_skins_to_one_edge():
    d = skin_diagnostics(effective_hamiltonian(60, 1.0, 1.0, diagonal="uniform"))
    assert d["corner_mass"]["right"] > 0.9
    assert d["interface_sites"] == [60]


def test_stochastic_phases_break_the_edge_pile_up():
    L = 60
    clean = skin_diagnostics(effective_hamiltonian(L, 1.0, 1.0, diagonal="uniform"))["corner_mass"]["right"]
    masses = []
    for r in range(50):
        Heff = effective_hamiltonian(L, 1.0, 1.0, theta=theta_sequence(L, 0.5, seed=7, realization=r),
                                     diagonal="uniform")
        d = skin_diagnostics(Heff)
        masses.append(max(d["corner_mass"]["left"], d["corner_mass"]["right"]))
        Y = Heff.gauge_walk()
        assert d["interface_sites"] == [int(n) + 1 for n in np.flatnonzero(Y >= Y.max() - 1e-9)]
    assert np.median(masses) < 0.5 < clean


def test_ode_and_expm_agree():
    L = 21
    Heff = effective_hamiltonian(L, 1.0, 1.0, theta=theta_sequence(L, 0.5, seed=2))
    times = np.linspace(0, 6, 13)
    a = correlation_evolve(Heff, _delta(L, 11), times, method="expm")
    b = correlation_evolve(Heff, _delta(L, 11), times, tolerance=1e-12, method="ode")
    np.testing.assert_allclose(a.populations, b.populations, atol=1e-9)
    np.testing.assert_allclose(a.extra["log_trace"], b.extra["log_trace"], atol=1e-9)


def test_pure_state_path_matches_matrix_path():
    L = 25
    Heff = effective_hamiltonian(L, 1.0, 1.0, theta=theta_sequence(L, 0.5, seed=4))
    times = np.linspace(0, 5, 11)
    pure = correlation_evolve(Heff, _delta(L, 13), times, method="expm")
    # a tiny mixed admixture forces the two-sided matrix product
    C = _delta(L, 13) + 1e-30 * np.eye(L)
    C[0, 0] = 1e-8
    mixed = correlation_evolve(Heff, C, times, method="expm")
    np.testing.assert_allclose(pure.populations, mixed.populations, atol=1e-6)
    np.testing.assert_allclose(pure.n_cm, mixed.n_cm, atol=1e-5)


def test_trace_conserved_without_loss_and_initial_decay_rate():
    L = 31
    times = np.linspace(0, 4, 9)
    closed = correlation_evolve(effective_hamiltonian(L, 1.0, 0.0), _delta(L, 16), times, method="expm")
    np.testing.assert_allclose(closed.extra["trace"], 1.0, atol=1e-12)
    kappa = 0.7
    short = np.array([0.0, 1e-6])
    tr = correlation_evolve(effective_hamiltonian(L, 1.0, kappa), _delta(L, 16), short, method="expm")
    rate = tr.extra["log_trace"][1] / short[1]
    assert rate == pytest.approx(-2 * kappa, rel=1e-5)


def test_clean_model_drifts_ballistically():
    L = 201
    Heff = effective_hamiltonian(L, 1.0, 1.0, diagonal="uniform")
    times = np.linspace(0, 30, 61)
    tr = correlation_evolve(Heff, _delta(L, 101), times, method="expm")
    late = times > 10
    a = np.polyfit(np.log(times[late]), np.log(tr.n_cm[late]), 1)[0]
    # the packet runs towards the favoured (right) edge at constant speed
    assert np.all(np.diff(tr.n_cm) > 0)
    assert a == pytest.approx(1, abs=0.05)


def test_evolve_errors():
    Heff = effective_hamiltonian(5, 1.0, 0.5)
    with pytest.raises(ShapeError):
        correlation_evolve(Heff, np.eye(4), [0, 1])
    with pytest.raises(ShapeError):
        correlation_evolve(Heff, np.eye(5), [0.5, 1])
    with pytest.raises(ValueError):
        correlation_evolve(Heff, np.eye(5), [0, 1], method="rk4")
