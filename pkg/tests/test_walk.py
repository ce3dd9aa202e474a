import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_unitary
from dqwalk.errors import ValidationError
from dqwalk.walk import (
    InitialCoinState,
    KrausSet,
    coin_from_u2,
    coin_o2,
    degenerate_angle,
    hadamard,
    kraus_from_matrices,
    momentum_coin,
    o2_matrix,
    projective_kraus,
)


def test_hadamard_matrix():
    np.testing.assert_allclose(hadamard().u, np.array([[1, 1], [1, -1]]) / math.sqrt(2), atol=1e-15)
    assert hadamard().o2_form == (math.pi / 4, -1)


def test_non_unitary_rejected():
    with pytest.raises(ValidationError, match="not unitary"):
        coin_from_u2([[1, 1], [0, 1]])
    with pytest.raises(ValidationError):
        coin_from_u2(np.eye(3))


def test_su2_normal_form(rng):
    for _ in range(20):
        c = coin_from_u2(random_unitary(rng))
        w = c.normalized
        np.testing.assert_allclose(w, [[c.alpha, -np.conj(c.beta)], [c.beta, np.conj(c.alpha)]], atol=1e-12)
        assert abs(np.linalg.det(w) - 1) < 1e-12


@pytest.mark.parametrize("det", [1, -1])
@pytest.mark.parametrize("theta", [0.3, 1.0, 2.5, 4.0])
def test_o2_detection(theta, det):
    c = coin_from_u2(o2_matrix(theta, det))
    assert c.det_sign == det
    assert abs(c.theta - theta) < 1e-12


def test_complex_coin_has_no_o2_form(rng):
    assert coin_from_u2(random_unitary(rng)).o2_form is None


def test_bad_det_sign():
    with pytest.raises(ValidationError):
        coin_o2(0.3, 0)


def test_degenerate_angle_exact():
    assert coin_o2(0.5 * math.pi, -1).is_degenerate_angle()
    assert degenerate_angle(0.0) and degenerate_angle(math.pi)
    assert not degenerate_angle(1.5707963)
    assert not hadamard().is_degenerate_angle()


def test_momentum_coin_vectorised():
    ks = np.array([0.0, 0.4, 2.0])
    u = momentum_coin(hadamard(), ks)
    for i, k in enumerate(ks):
        np.testing.assert_allclose(u[i], np.diag([np.exp(-1j * k), np.exp(1j * k)]) @ hadamard().u)


@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
def test_projective_kraus_certificates(p):
    k = projective_kraus(p)
    assert k.completeness_defect() < 1e-14
    assert k.unitality_defect() < 1e-14
    assert k.family == "projective" and k.decoherence_rate == p


@pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
def test_projective_kraus_range(p):
    with pytest.raises(ValidationError, match="^p:"):
        projective_kraus(p)


def test_projective_channel_dephases():
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    out = projective_kraus(0.4).channel(rho)
    np.testing.assert_allclose(out, [[0.5, 0.3], [0.3, 0.5]])


def test_incomplete_kraus_rejected():
    with pytest.raises(ValidationError, match="not complete"):
        kraus_from_matrices([np.eye(2) * 0.5])


def test_non_unital_kraus_rejected():
    # amplitude damping is complete but not unital
    g = 0.3
    ops = [np.array([[1, 0], [0, math.sqrt(1 - g)]]), np.array([[0, math.sqrt(g)], [0, 0]])]
    with pytest.raises(ValidationError, match="not unital"):
        kraus_from_matrices(ops)


def test_kraus_shapes():
    with pytest.raises(ValidationError):
        KrausSet(())


def test_initial_states():
    assert InitialCoinState.right().is_pure
    np.testing.assert_allclose(InitialCoinState.left().density, np.diag([0, 1]))
    m = InitialCoinState.mixed()
    assert not m.is_pure
    np.testing.assert_allclose(m.pauli, [0.5, 0, 0, 0])
    assert len(m.ensemble()) == 2 and len(InitialCoinState.right().ensemble()) == 1


@pytest.mark.parametrize("rho", [
    [[1, 0], [0, 1]],
    [[1, 1], [0, 0]],
    [[1.5, 0], [0, -0.5]],
])
def test_invalid_densities(rho):
    with pytest.raises(ValidationError):
        InitialCoinState(np.array(rho, dtype=float))


def test_bloch_too_long():
    with pytest.raises(ValidationError):
        InitialCoinState.from_bloch([1, 1, 0])


@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi), st.floats(0, 1))
def test_bloch_round_trip(pol, az, r):
    v = r * np.array([math.sin(pol) * math.cos(az), math.sin(pol) * math.sin(az), math.cos(pol)])
    s = InitialCoinState.from_bloch(v)
    np.testing.assert_allclose(2 * s.pauli[1:].real, v, atol=1e-12)
    w = sum(wi for wi, _ in s.ensemble())
    assert abs(w - 1) < 1e-10
