"""Coins, coin-space measurements and initial coin states.

Basis convention: ``|R> = (1, 0)``, ``|L> = (0, 1)``. The walker moves to
``x + 1`` on ``|R>`` and to ``x - 1`` on ``|L>``.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import TOL
from .errors import ValidationError

P_R = np.diag([1.0, 0.0]).astype(complex)
P_L = np.diag([0.0, 1.0]).astype(complex)


def _unitarity_defect(m):
    return float(np.linalg.norm(m @ m.conj().T - np.eye(2), 2))


def o2_matrix(theta, det_sign):
    c, s = math.cos(theta), math.sin(theta)
    if det_sign == 1:
        return np.array([[c, -s], [s, c]], dtype=complex)
    if det_sign == -1:
        return np.array([[c, s], [s, -c]], dtype=complex)
    raise ValidationError(f"det_sign must be +1 or -1, got {det_sign!r}", "det_sign")


@dataclass(frozen=True, eq=False)
class CoinOperator:
    """A 2x2 unitary together with its SU(2) normal form.

    ``exp(-i gamma / 2) u == [[alpha, -conj(beta)], [beta, conj(alpha)]]``.
    ``theta``/``det_sign`` are set when ``u`` is real orthogonal.
    """

    u: np.ndarray
    alpha: complex
    beta: complex
    gamma: float
    theta: Optional[float] = None
    det_sign: Optional[int] = None

    @property
    def o2_form(self):
        if self.theta is None:
            return None
        return self.theta, self.det_sign

    @property
    def normalized(self):
        return np.exp(-0.5j * self.gamma) * self.u

    def is_degenerate_angle(self, tol=None):
        """True when ``theta`` is within ``tol`` of a multiple of pi/2."""
        if self.theta is None:
            return False
        return degenerate_angle(self.theta, tol)


def degenerate_angle(theta, tol=None):
    tol = TOL.degenerate_angle if tol is None else tol
    r = theta / (math.pi / 2)
    return abs(theta - round(r) * math.pi / 2) < tol


def coin_from_u2(m, tol=None) -> CoinOperator:
    """Validate a unitary 2x2 matrix and extract its normal forms.

    Raises:
        ValidationError: if ``m`` is not unitary to ``tol.unitary``.
    """
    tol = TOL if tol is None else tol
    m = np.array(m, dtype=complex)
    if m.shape != (2, 2) or not np.all(np.isfinite(m)):
        raise ValidationError(f"coin must be a finite 2x2 matrix, got shape {m.shape}", "coin")
    defect = _unitarity_defect(m)
    if defect > tol.unitary:
        raise ValidationError(f"coin is not unitary: ||U U* - I|| = {defect:.3e}", "coin")

    gamma = float(np.angle(np.linalg.det(m)))
    w = np.exp(-0.5j * gamma) * m
    alpha, beta = complex(w[0, 0]), complex(w[1, 0])
    # the SU(2) pattern follows from unitarity + det 1; checked for safety
    if abs(w[0, 1] + np.conj(beta)) > tol.unitary or abs(w[1, 1] - np.conj(alpha)) > tol.unitary:
        raise ValidationError("normalized coin does not have SU(2) form", "coin")

    theta = det_sign = None
    if np.max(np.abs(m.imag)) <= tol.orthogonal:
        re = m.real
        det_sign = 1 if np.linalg.det(re) > 0 else -1
        th = math.atan2(re[1, 0], re[0, 0]) % (2 * math.pi)
        if np.max(np.abs(o2_matrix(th, det_sign) - m)) <= tol.orthogonal:
            theta = th
        else:
            det_sign = None
    return CoinOperator(m, alpha, beta, gamma, theta, det_sign)


def coin_o2(theta, det_sign) -> CoinOperator:
    """Rotation (``det_sign=+1``) or reflection (``det_sign=-1``) coin.

    ``theta`` is stored exactly as given so that ``0.5 * pi`` stays flagged
    as a degenerate angle.
    """
    m = o2_matrix(theta, det_sign)
    c = coin_from_u2(m)
    return CoinOperator(c.u, c.alpha, c.beta, c.gamma, float(theta), int(det_sign))


def hadamard() -> CoinOperator:
    return coin_o2(math.pi / 4, -1)


def momentum_coin(coin, k):
    """``U_k = diag(exp(-ik), exp(ik)) U``; vectorised over array ``k``."""
    k = np.asarray(k, dtype=float)
    ph = np.stack([np.exp(-1j * k), np.exp(1j * k)], axis=-1)
    return ph[..., :, None] * coin.u


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Coin measurement ``rho -> sum_n A_n rho A_n*``.

    ``family`` is ``"projective"`` for the dephasing family built by
    :func:`projective_kraus`; classification routines require it.
    """

    operators: tuple
    decoherence_rate: Optional[float] = None
    family: Optional[str] = None

    def __post_init__(self):
        ops = tuple(np.array(a, dtype=complex) for a in self.operators)
        if not ops or any(a.shape != (2, 2) for a in ops):
            raise ValidationError("Kraus operators must be a non-empty list of 2x2 matrices", "kraus")
        object.__setattr__(self, "operators", ops)

    @property
    def stacked(self):
        return np.stack(self.operators)

    def completeness_defect(self):
        s = sum(a.conj().T @ a for a in self.operators)
        return float(np.linalg.norm(s - np.eye(2), 2))

    def unitality_defect(self):
        s = sum(a @ a.conj().T for a in self.operators)
        return float(np.linalg.norm(s - np.eye(2), 2))

    def validate(self, tol=None):
        tol = TOL.kraus_certificate if tol is None else tol
        c, u = self.completeness_defect(), self.unitality_defect()
        if c > tol:
            raise ValidationError(f"Kraus set is not complete: ||sum A*A - I|| = {c:.3e}", "kraus")
        if u > tol:
            raise ValidationError(f"Kraus set is not unital: ||sum AA* - I|| = {u:.3e}", "kraus")
        return self

    def channel(self, rho):
        """Apply the measurement channel; ``rho`` may carry batch dims."""
        rho = np.asarray(rho, dtype=complex)
        out = np.zeros_like(rho)
        for a in self.operators:
            out = out + a @ rho @ a.conj().T
        return out


def kraus_from_matrices(ops: Sequence, tol=None) -> KrausSet:
    return KrausSet(tuple(ops)).validate(tol)


def projective_kraus(p) -> KrausSet:
    """``A0 = sqrt(1-p) I``, ``A1 = sqrt(p) |R><R|``, ``A2 = sqrt(p) |L><L|``."""
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValidationError(f"decoherence rate must be in [0, 1], got {p}", "p")
    ops = (math.sqrt(1.0 - p) * np.eye(2), math.sqrt(p) * P_R, math.sqrt(p) * P_L)
    return KrausSet(ops, decoherence_rate=p, family="projective").validate()


@dataclass(frozen=True, eq=False)
class InitialCoinState:
    """Coin density matrix of the walker, which starts at the origin."""

    density: np.ndarray
    label: str = field(default="custom", compare=False)

    def __post_init__(self):
        rho = np.array(self.density, dtype=complex)
        tol = TOL
        if rho.shape != (2, 2) or not np.all(np.isfinite(rho)):
            raise ValidationError("initial coin state must be a finite 2x2 matrix", "init")
        if np.max(np.abs(rho - rho.conj().T)) > tol.unitary:
            raise ValidationError("initial coin state is not Hermitian", "init")
        if abs(np.trace(rho) - 1.0) > tol.unitary:
            raise ValidationError(f"initial coin state has trace {np.trace(rho).real:.6g}, expected 1", "init")
        if np.linalg.eigvalsh(rho).min() < -tol.psd:
            raise ValidationError("initial coin state is not positive semidefinite", "init")
        object.__setattr__(self, "density", rho)

    @classmethod
    def pure(cls, c, label="pure"):
        c = np.asarray(c, dtype=complex)
        n = np.linalg.norm(c)
        if c.shape != (2,) or n == 0:
            raise ValidationError("coin state vector must be a nonzero 2-vector", "init")
        c = c / n
        return cls(np.outer(c, c.conj()), label)

    @classmethod
    def right(cls):
        return cls.pure([1, 0], "R")

    @classmethod
    def left(cls):
        return cls.pure([0, 1], "L")

    @classmethod
    def mixed(cls):
        return cls(np.eye(2) / 2, "mixed")

    @classmethod
    def from_bloch(cls, r):
        """``rho = (I + r . sigma) / 2`` with ``|r| <= 1``."""
        x, y, z = (float(v) for v in r)
        if x * x + y * y + z * z > 1.0 + 1e-12:
            raise ValidationError("Bloch vector must have length <= 1", "init")
        rho = 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])
        return cls(rho, "bloch")

    @property
    def pauli(self):
        from .pauli import pauli_decompose

        return pauli_decompose(self.density)

    @property
    def is_pure(self):
        return abs(np.trace(self.density @ self.density).real - 1.0) < 1e-10

    def ensemble(self):
        """Eigen-decomposition ``[(weight, vector), ...]`` with positive weights."""
        w, v = np.linalg.eigh(self.density)
        return [(float(wi), v[:, i]) for i, wi in enumerate(w) if wi > TOL.psd]
