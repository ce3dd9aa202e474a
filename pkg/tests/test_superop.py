import math

import numpy as np
import pytest

from conftest import random_unitary
from dqwalk.errors import NumericalError, ValidationError
from dqwalk.pauli import SIGMA, eigenvalues4, pauli_decompose
from dqwalk.superop import SIGMA_Z_RIGHT, Superoperator, SuperoperatorMatrix, apply_pauli
from dqwalk.walk import coin_from_u2, coin_o2, hadamard, projective_kraus


def o2_reflection_matrix(theta, p, k, nu):
    """Closed-form Pauli-basis matrix for the reflection coin with projective dephasing."""
    q = 1 - p
    s, c = math.sin(2 * theta), math.cos(2 * theta)
    a = 2 * k + nu
    i = 1j
    return np.array([
        [math.cos(nu), q * i * math.sin(nu) * s, 0, i * math.sin(nu) * c],
        [0, -q * math.cos(a) * c, q * math.sin(a), math.cos(a) * s],
        [0, -q * math.sin(a) * c, -q * math.cos(a), math.sin(a) * s],
        [i * math.sin(nu), q * math.cos(nu) * s, 0, math.cos(nu) * c],
    ])


def test_matches_closed_form_matrix(rng):
    for _ in range(64):
        theta, p = rng.uniform(0, 2 * np.pi), rng.uniform(0, 1)
        k, nu = rng.uniform(0, 2 * np.pi), rng.uniform(-np.pi, np.pi)
        op = Superoperator(coin_o2(theta, -1), projective_kraus(p))
        np.testing.assert_allclose(op.matrices(k, nu), o2_reflection_matrix(theta, p, k, nu), atol=1e-12)


def test_columns_are_decomposed_action(rng):
    u = random_unitary(rng)
    op = Superoperator(coin_from_u2(u), projective_kraus(0.37))
    k, nu = 0.9, -0.4
    cols = np.stack([pauli_decompose(op.apply(k, nu, s)) for s in SIGMA], axis=1)
    np.testing.assert_allclose(op.matrix_rep(k, nu).l, cols, atol=1e-14)


def test_general_coin_entries(rng):
    # with the normal form [[a, -conj(b)], [b, conj(a)]] the known entries of L_kk read
    for _ in range(20):
        c = coin_from_u2(random_unitary(rng))
        q, k = rng.uniform(0, 1), rng.uniform(0, 2 * np.pi)
        l = Superoperator(c, projective_kraus(1 - q)).matrices(k, 0.0)
        a, b = c.alpha, -c.beta
        ba = b * np.conj(a)
        assert abs(l[1, 3] - (-2 * math.cos(2 * k) * ba.real + 2 * math.sin(2 * k) * ba.imag)) < 1e-12
        assert abs(l[2, 3] - (-2 * math.cos(2 * k) * ba.imag - 2 * math.sin(2 * k) * ba.real)) < 1e-12
        assert abs(l[3, 1] - 2 * q * (a * b).real) < 1e-12
        assert abs(l[3, 2] - 2 * q * (a * b).imag) < 1e-12
        assert abs(l[3, 3] - (abs(a) ** 2 - abs(b) ** 2)) < 1e-12


def test_identity_maps_to_phase(rng):
    op = Superoperator(coin_from_u2(random_unitary(rng)), projective_kraus(0.4))
    for k, nu in [(0.3, 0.7), (2.0, -1.1)]:
        np.testing.assert_allclose(op.apply(k, nu, np.eye(2)), np.diag([np.exp(1j * nu), np.exp(-1j * nu)]),
                                   atol=1e-14)
    np.testing.assert_allclose(op.apply(1.0, 0.0, np.eye(2)), np.eye(2), atol=1e-14)


def test_trace_and_hermiticity_at_zero_nu(rng):
    op = Superoperator(coin_from_u2(random_unitary(rng)), projective_kraus(0.6))
    for _ in range(10):
        h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h = h + h.conj().T
        out = op.apply(rng.uniform(0, 6), 0.0, h)
        assert abs(np.trace(out) - np.trace(h)) < 1e-12
        np.testing.assert_allclose(out, out.conj().T, atol=1e-12)


def test_structure_grid():
    op = Superoperator(hadamard(), projective_kraus(0.3))
    g = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    for k in g[::4]:
        for nu in g[::4]:
            op.matrix_rep(k, nu).check_structure()
    mats = op.matrices(g[:, None], g[None, :])
    lam = np.linalg.eigvals(mats)
    assert np.max(np.abs(lam)) <= 1 + 1e-9


def test_structure_violation_detected():
    op = Superoperator(hadamard(), projective_kraus(0.3))
    rep = op.matrix_rep(0.2, 0.1)
    bad = SuperoperatorMatrix(rep.l * 1.1, rep.k, rep.nu, rep.coin, rep.kraus)
    with pytest.raises(NumericalError):
        bad.check_structure()


def test_p1_hadamard_entries():
    l = Superoperator(hadamard(), projective_kraus(1.0)).matrices(0.4, 0.0)
    assert np.all(np.abs(l[:, 1:3]) < 1e-15)


def test_global_phase_invariance(rng):
    u = random_unitary(rng)
    a = Superoperator(coin_from_u2(u), projective_kraus(0.5)).matrices(0.3, 0.2)
    b = Superoperator(coin_from_u2(np.exp(0.77j) * u), projective_kraus(0.5)).matrices(0.3, 0.2)
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_nu_factorization(rng):
    op = Superoperator(coin_from_u2(random_unitary(rng)), projective_kraus(0.25))
    k, nu = 1.3, 0.8
    l0 = op.matrices(k, 0.0)
    expected = (math.cos(nu) * np.eye(4) + 1j * math.sin(nu) * SIGMA_Z_RIGHT) @ l0
    np.testing.assert_allclose(op.matrices(k, nu), expected, atol=1e-14)


def test_power_apply():
    op = Superoperator(hadamard(), projective_kraus(0.5))
    v = pauli_decompose(np.diag([1.0, 0.0]))
    np.testing.assert_allclose(op.power_apply(0.3, 0.2, v, 0), v)
    np.testing.assert_allclose(op.power_apply(0.3, 0.2, v, 1), op.matrices(0.3, 0.2) @ v)
    traces = [op.power_apply(0.3, 0.0, v, t)[0] for t in range(6)]
    np.testing.assert_allclose(traces, 0.5, atol=1e-14)
    with pytest.raises(ValidationError):
        op.power_apply(0.0, 0.0, v, -1)


def test_apply_pauli_agrees():
    op = Superoperator(hadamard(), projective_kraus(0.2))
    b = np.array([[0.3, 0.1j], [0.5, -0.2]])
    np.testing.assert_allclose(apply_pauli(op.matrices(0.5, 0.1), b), op.apply(0.5, 0.1, b), atol=1e-14)


def test_contraction_p0_is_isometry():
    rep = Superoperator(hadamard(), projective_kraus(0.0)).contraction_check(0.4, 0.9, 200)
    assert rep.ok
    assert abs(rep.min_ratio - 1) < 1e-12


def test_contraction_generic():
    rep = Superoperator(coin_o2(1.0, 1), projective_kraus(0.5)).contraction_check(0.1, 1.7, 500, seed=3)
    assert rep.ok and rep.samples == 500


def test_diagonal_operators_keep_norm():
    op = Superoperator(hadamard(), projective_kraus(0.5))
    assert abs(op.norm_ratio(0.7, 0.3, np.diag([0.4, -1.3])) - 1) < 1e-12


def test_sigma_x_strictly_contracted():
    op = Superoperator(hadamard(), projective_kraus(0.5))
    assert op.norm_ratio(0.7, 0.3, SIGMA[1]) < 1 - 1e-3


def test_samples_validated():
    with pytest.raises(ValidationError):
        Superoperator(hadamard(), projective_kraus(0.5)).contraction_check(0, 0, 0)


def test_spectrum_inside_unit_disk(rng):
    op = Superoperator(coin_from_u2(random_unitary(rng)), projective_kraus(0.7))
    for k, nu in rng.uniform(0, 2 * np.pi, size=(20, 2)):
        assert np.max(np.abs(eigenvalues4(op.matrices(k, nu)))) <= 1 + 1e-9
