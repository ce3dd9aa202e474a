import json
import math

import numpy as np
import pytest

from conftest import random_unitary
from dqwalk.errors import ValidationError
from dqwalk.spectral import (
    CoinClass,
    DegenerateCase,
    classify,
    classify_superoperator,
    peripheral_gap,
    peripheral_gaps,
    spectrum_report,
    u2_condition,
)
from dqwalk.superop import Superoperator
from dqwalk.walk import KrausSet, coin_from_u2, coin_o2, hadamard, projective_kraus


def test_hadamard_generic():
    rep = classify(hadamard(), 0.3, 1.0)
    assert rep.theorem_applies and rep.mult_one == 1 and rep.dim_one == 1
    assert rep.degenerate_case is DegenerateCase.NONE
    assert not rep.has_minus_one


def test_identity_coin_is_ballistic():
    rep = classify(coin_o2(0.0, 1), 0.5, 0.4)
    assert rep.dim_one == 2 and rep.mult_one == 2
    assert not rep.theorem_applies
    assert rep.degenerate_case is DegenerateCase.BALLISTIC


def test_flip_coin_is_oscillatory():
    rep = classify(coin_o2(math.pi / 2, -1), 0.5, 0.4)
    assert rep.has_minus_one and not rep.theorem_applies
    assert sorted(m for z, m in rep.peripheral) == [1, 1]
    assert rep.degenerate_case is DegenerateCase.OSCILLATORY


@pytest.mark.parametrize("m, cls", [
    (np.eye(2), CoinClass.DIAGONAL),
    (np.array([[0, 1], [1, 0]]), CoinClass.ANTIDIAGONAL),
    (hadamard().u, CoinClass.GENERIC),
    (np.diag([1j, np.exp(0.3j)]), CoinClass.DIAGONAL),
])
def test_u2_condition(m, cls):
    assert u2_condition(coin_from_u2(m)) is cls


def test_p_range():
    with pytest.raises(ValidationError):
        classify(hadamard(), 1.2, 0.0)


@pytest.mark.parametrize("p, word", [(0.0, "unitary"), (1.0, "dephasing")])
def test_boundary_p_diagnostics(p, word):
    rep = classify(hadamard(), p, 0.3)
    assert word in rep.diagnostic


def test_non_projective_refused():
    ops = (np.sqrt(0.5) * np.eye(2), np.sqrt(0.5) * np.array([[0, 1], [1, 0]]))
    op = Superoperator(hadamard(), KrausSet(ops).validate())
    with pytest.raises(ValidationError):
        classify_superoperator(op, 0.0)


def test_classify_superoperator_projective():
    op = Superoperator(hadamard(), projective_kraus(0.5))
    assert classify_superoperator(op, 0.2).theorem_applies


def test_report_invariants(rng):
    for _ in range(30):
        c = coin_from_u2(random_unitary(rng))
        rep = classify(c, rng.uniform(0.05, 0.95), rng.uniform(0, 2 * np.pi))
        assert rep.mult_one >= 1
        assert np.max(np.abs(rep.eigenvalues)) <= 1 + 1e-9
        assert rep.theorem_applies


def test_theorem_applies_is_k_independent(rng):
    c = coin_from_u2(random_unitary(rng))
    ks = 2 * np.pi * np.arange(64) / 64
    assert all(classify(c, 0.4, k).theorem_applies for k in ks)


def test_to_dict_is_json():
    d = classify(coin_o2(0.0, 1), 0.5, 0.0).to_dict()
    s = json.loads(json.dumps(d))
    assert s["dim_one"] == 2 and s["theorem_applies"] is False
    assert all(len(z) == 2 for z in s["eigenvalues"])


def test_gap_positive_for_hadamard():
    assert peripheral_gap(hadamard(), 0.5, 64) > 0.1


def test_gap_zero_for_identity():
    assert peripheral_gap(coin_o2(0.0, 1), 0.5, 16) == 0.0


def test_gap_shrinks_with_p():
    gaps = [peripheral_gap(hadamard(), p, 32) for p in (0.1, 0.01, 0.001)]
    assert gaps[0] > gaps[1] > gaps[2] > 0


def test_gap_grid_validated():
    with pytest.raises(ValidationError):
        peripheral_gaps(hadamard(), 0.5, 4)


def test_spectrum_report_on_plain_matrix():
    rep = spectrum_report(np.diag([1, 1, 0.5, 0.2]).astype(complex))
    assert rep.mult_one == 2 and not rep.theorem_applies
