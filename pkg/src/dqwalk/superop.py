"""The one-step superoperator ``L_{k,k'} B = sum_n U_k A_n B A_n* U_{k'}*``.

Matrices are taken in the Pauli basis ``(sigma_0, sigma_x, sigma_y, sigma_z)``
with column ``j`` holding the coordinates of ``L sigma_j``. Norms on operators
are Hilbert-Schmidt, ``||B||^2 = Tr(B* B)``; since the Pauli basis is
orthogonal with ``||sigma_j||^2 = 2`` the operator norm of ``L`` equals the
spectral norm of its 4x4 matrix.
"""

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import NumericalError, ValidationError
from .pauli import SIGMA, pauli_compose, pauli_decompose
from .walk import CoinOperator, KrausSet, momentum_coin

# row-major vectorisation: vec(B)[2a + b] = B[a, b]
_Q = SIGMA.reshape(4, 4).T.copy()
_QINV = _Q.conj().T / 2

# B -> B sigma_z in Pauli coordinates; L_{k,k+nu} = (cos nu + i sin nu S) L_kk
SIGMA_Z_RIGHT = np.array([[0, 0, 0, 1], [0, 0, 1j, 0], [0, -1j, 0, 0], [1, 0, 0, 0]])


def _kron2(a, b):
    """Batched Kronecker product of (..., 2, 2) arrays."""
    out = np.einsum("...ab,...cd->...acbd", a, b)
    return out.reshape(out.shape[:-4] + (4, 4))


def _hs_norm(b):
    return np.sqrt(np.einsum("...ab,...ab->...", b.conj(), b).real)


@dataclass(frozen=True, eq=False)
class SuperoperatorMatrix:
    l: np.ndarray
    k: float
    nu: float
    coin: CoinOperator
    kraus: KrausSet

    def check_structure(self, tol=None):
        """Raise :class:`NumericalError` if a structural invariant fails."""
        tol = TOL.structure if tol is None else tol
        col0 = np.array([np.cos(self.nu), 0, 0, 1j * np.sin(self.nu)])
        if np.max(np.abs(self.l[:, 0] - col0)) > tol:
            raise NumericalError(f"first column {self.l[:, 0]} differs from (cos nu, 0, 0, i sin nu)")
        if self.nu == 0 and np.max(np.abs(self.l[0] - np.array([1, 0, 0, 0]))) > tol:
            raise NumericalError(f"first row at nu=0 is {self.l[0]}, expected (1, 0, 0, 0)")
        norm = np.linalg.norm(self.l, 2)
        if norm > 1 + tol:
            raise NumericalError(f"superoperator norm {norm} exceeds 1")
        return self


@dataclass
class ContractionReport:
    samples: int
    equality_violation: float  # max | ||L_{k,k+nu} O|| - ||L_{k,k} O|| | / ||O||
    norm_excess: float  # max (||L O|| / ||O|| - 1), <= 0 for a contraction
    min_ratio: float

    @property
    def ok(self):
        return self.equality_violation <= 1e-10 and self.norm_excess <= 1e-10


class Superoperator:
    """Superoperator of a coin and a unital Kraus set, evaluated at ``(k, nu)``.

    ``nu`` is the momentum offset: the operator is ``L_{k, k + nu}``.
    """

    def __init__(self, coin: CoinOperator, kraus: KrausSet):
        kraus.validate()
        self.coin = coin
        self.kraus = kraus
        a = kraus.stacked
        self._channel = _QINV @ _kron2(a, a.conj()).sum(axis=0) @ _Q

    def apply(self, k, nu, b):
        b = np.asarray(b, dtype=complex)
        uk = momentum_coin(self.coin, k)
        ukv = momentum_coin(self.coin, np.asarray(k) + np.asarray(nu))
        return uk @ self.kraus.channel(b) @ np.swapaxes(ukv, -1, -2).conj()

    def matrices(self, k, nu):
        """Pauli-basis matrices for broadcast arrays ``k``, ``nu``: shape (..., 4, 4)."""
        k, nu = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(nu, dtype=float))
        uk = momentum_coin(self.coin, k)
        ukv = momentum_coin(self.coin, k + nu)
        return _QINV @ _kron2(uk, ukv.conj()) @ _Q @ self._channel

    def matrix_rep(self, k, nu) -> SuperoperatorMatrix:
        return SuperoperatorMatrix(self.matrices(float(k), float(nu)), float(k), float(nu), self.coin, self.kraus)

    def power_apply(self, k, nu, v, t):
        """``L^t v`` by repeated matrix-vector products."""
        if t < 0:
            raise ValidationError(f"t must be >= 0, got {t}", "t")
        l = self.matrices(k, nu)
        v = np.broadcast_to(np.asarray(v, dtype=complex), l.shape[:-1]).copy()
        for _ in range(t):
            v = np.einsum("...ij,...j->...i", l, v)
        return v

    def norm_ratio(self, k, nu, o):
        """``||L_{k,k+nu} O|| / ||O||`` in Hilbert-Schmidt norm."""
        o = np.asarray(o, dtype=complex)
        return float(_hs_norm(self.apply(k, nu, o)) / _hs_norm(o))

    def contraction_check(self, k, nu, samples, seed=0, operators=None) -> ContractionReport:
        """Compare ``||L_{k,k+nu} O||``, ``||L_{k,k} O||`` and ``||O||``.

        Uses ``samples`` random complex operators, or ``operators`` if given.
        """
        if operators is None:
            if samples < 1:
                raise ValidationError("samples must be >= 1", "samples")
            rng = np.random.default_rng(seed)
            ops = rng.normal(size=(samples, 2, 2)) + 1j * rng.normal(size=(samples, 2, 2))
        else:
            ops = np.asarray(operators, dtype=complex).reshape(-1, 2, 2)
        n0 = _hs_norm(ops)
        n_off = _hs_norm(self.apply(k, nu, ops))
        n_diag = _hs_norm(self.apply(k, 0.0, ops))
        ratio = n_off / n0
        return ContractionReport(
            samples=len(ops),
            equality_violation=float(np.max(np.abs(n_off - n_diag) / n0)),
            norm_excess=float(np.max(ratio - 1.0)),
            min_ratio=float(np.min(ratio)),
        )


def apply_pauli(l, v):
    """Act with a Pauli-basis matrix on an operator given as a 2x2 matrix."""
    return pauli_compose(np.asarray(l) @ pauli_decompose(v))
