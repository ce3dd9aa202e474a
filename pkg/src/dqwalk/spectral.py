"""Spectrum of ``L_{k,k}`` and whether the diffusive limit applies.

For the projective measurement family with ``0 < p < 1`` the unit-modulus
part of the spectrum can only be ``{1}`` (generic coin), ``{1, 1}``
(diagonal coin, walker moves ballistically) or ``{1, -1}`` (antidiagonal
coin, walker oscillates between two sites).
"""

import enum
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .config import TOL
from .errors import NumericalError, ValidationError
from .pauli import eigenvalues4, cluster_roots, geometric_dim
from .superop import Superoperator
from .walk import CoinOperator, projective_kraus


class CoinClass(str, enum.Enum):
    GENERIC = "generic"
    DIAGONAL = "diagonal_coin"
    ANTIDIAGONAL = "antidiagonal_coin"


class DegenerateCase(str, enum.Enum):
    NONE = "none"
    BALLISTIC = "ballistic"
    OSCILLATORY = "oscillatory"


def u2_condition(coin: CoinOperator, tol=None) -> CoinClass:
    tol = TOL.coin_element if tol is None else tol
    u = coin.u
    if abs(u[0, 1]) <= tol and abs(u[1, 0]) <= tol:
        return CoinClass.DIAGONAL
    if abs(u[0, 0]) <= tol and abs(u[1, 1]) <= tol:
        return CoinClass.ANTIDIAGONAL
    return CoinClass.GENERIC


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    multiplicities: List[Tuple[complex, int]]
    peripheral: List[Tuple[complex, int]]
    dim_one: int
    mult_one: int
    has_minus_one: bool
    theorem_applies: bool
    degenerate_case: DegenerateCase
    coin_class: CoinClass
    p: float
    k: float
    diagnostic: str = ""
    geometric_dims: List[int] = field(default_factory=list)

    def check_invariants(self):
        """Structural facts guaranteed for ``0 < p < 1``; raises on violation."""
        if not 0 < self.p < 1:
            return self
        if sum(m for _, m in self.peripheral) > 2:
            raise NumericalError(f"more than two peripheral eigenvalues: {self.peripheral}")
        if self.mult_one < 1:
            raise NumericalError("1 is not an eigenvalue")
        for lam, _ in self.peripheral:
            if min(abs(lam - 1), abs(lam + 1)) > TOL.root_cluster:
                raise NumericalError(f"peripheral eigenvalue {lam} is neither 1 nor -1")
        return self

    def to_dict(self):
        pair = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "k": self.k,
            "p": self.p,
            "eigenvalues": [pair(z) for z in self.eigenvalues],
            "multiplicities": [{"value": pair(z), "algebraic": m, "geometric": g}
                               for (z, m), g in zip(self.multiplicities, self.geometric_dims)],
            "peripheral": [{"value": pair(z), "multiplicity": m} for z, m in self.peripheral],
            "dim_one": self.dim_one,
            "has_minus_one": self.has_minus_one,
            "theorem_applies": self.theorem_applies,
            "degenerate_case": self.degenerate_case.value,
            "coin_class": self.coin_class.value,
            "diagnostic": self.diagnostic,
        }


def spectrum_report(l, p=float("nan"), k=float("nan"), coin_class=CoinClass.GENERIC, tol=None) -> SpectralReport:
    """Eigenvalue bookkeeping for an arbitrary ``L_{k,k}`` matrix."""
    tol = TOL if tol is None else tol
    lam = eigenvalues4(l, tol)
    groups = cluster_roots(lam, tol.root_cluster)
    gdims = [geometric_dim(l, z, tol) for z, _ in groups]
    peripheral = [(z, m) for z, m in groups if abs(z) >= 1 - tol.peripheral]
    one = [(z, m, g) for (z, m), g in zip(groups, gdims) if abs(z - 1) < tol.root_cluster]
    mult_one = one[0][1] if one else 0
    dim_one = one[0][2] if one else 0
    has_minus_one = any(abs(z + 1) < tol.root_cluster for z, _ in groups)
    others = [(z, m) for z, m in peripheral if abs(z - 1) >= tol.root_cluster]
    applies = mult_one == 1 and not others
    case = {
        CoinClass.DIAGONAL: DegenerateCase.BALLISTIC,
        CoinClass.ANTIDIAGONAL: DegenerateCase.OSCILLATORY,
    }.get(coin_class, DegenerateCase.NONE)
    return SpectralReport(lam, groups, peripheral, dim_one, mult_one, has_minus_one, applies,
                          case, coin_class, float(p), float(k), geometric_dims=gdims)


def classify(coin: CoinOperator, p, k, tol=None) -> SpectralReport:
    """Spectrum of ``L_{k,k}`` for the projective measurement with rate ``p``.

    ``theorem_applies`` is true iff 1 is a simple eigenvalue and every other
    eigenvalue lies strictly inside the unit circle (up to ``tol.peripheral``).
    At ``p`` in ``{0, 1}`` the report is computed but the structural
    guarantees are not asserted; ``diagnostic`` says so.
    """
    kraus = projective_kraus(p)
    op = Superoperator(coin, kraus)
    report = spectrum_report(op.matrices(k, 0.0), p, k, u2_condition(coin, tol and tol.coin_element), tol)
    if p == 0:
        report.diagnostic = "p=0: unitary walk, whole spectrum on the unit circle; no diffusive limit"
    elif p == 1:
        report.diagnostic = "p=1: full dephasing; structure theorem stated for 0<p<1 only"
    else:
        report.check_invariants()
    return report


def classify_superoperator(op: Superoperator, k, tol=None) -> SpectralReport:
    if op.kraus.family != "projective":
        raise ValidationError(
            "spectral classification is only defined for the projective measurement family", "kraus")
    return classify(op.coin, op.kraus.decoherence_rate, k, tol)


def peripheral_gaps(coin: CoinOperator, p, k_grid, tol=None):
    """Per-k gap ``1 - max |lambda|`` over eigenvalues other than one copy of 1."""
    if k_grid < 8:
        raise ValidationError(f"k_grid must be >= 8, got {k_grid}", "k_grid")
    op = Superoperator(coin, projective_kraus(p))
    ks = 2 * np.pi * np.arange(k_grid) / k_grid
    gaps = np.empty(k_grid)
    for i, k in enumerate(ks):
        lam = eigenvalues4(op.matrices(k, 0.0), tol)
        rest = np.delete(lam, np.argmin(np.abs(lam - 1)))
        gaps[i] = max(0.0, 1.0 - np.max(np.abs(rest)))
    return ks, gaps


def peripheral_gap(coin: CoinOperator, p, k_grid, tol=None) -> float:
    """Uniform spectral gap on a k grid; 0 when a second unit eigenvalue exists."""
    tol = TOL if tol is None else tol
    _, gaps = peripheral_gaps(coin, p, k_grid, tol)
    g = float(gaps.min())
    return 0.0 if g < tol.peripheral else g
