"""Diffusive scaling limit of the decoherent walk.

For each momentum ``k`` the limit is governed by ``z0(nu)``, the root of
``g(z, nu) = det(I - z L_{k,k+nu})`` continued from ``z0(0) = 1``. Its second
derivative ``z0''(0; k)`` is the variance of a centred normal component, and
the limit law of ``x / sqrt(t)`` is the uniform mixture of these normals over
``k in [0, 2 pi)``.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .config import DEFAULT_K_GRID, TOL
from .errors import ContinuationError, NumericalError, ValidationError
from .pauli import det_poly, poly_roots
from .spectral import CoinClass, spectrum_report, u2_condition
from .superop import Superoperator
from .walk import CoinOperator, InitialCoinState, KrausSet, degenerate_angle, projective_kraus

_EPS = np.finfo(float).eps


@dataclass
class RootTrack:
    k: float
    nu_step: float
    nus: np.ndarray
    z0_of_nu: np.ndarray
    z0_prime_0: complex
    z0_double_prime_0: complex
    min_separation: float


def _newton(l, z, tol, nu):
    """Newton on ``g(z) = det(I - z l)`` using ``g'/g = -tr((I - z l)^-1 l)``."""
    eye = np.eye(4)
    z0 = z
    last = math.inf
    for _ in range(tol.newton_max_iter):
        a = eye - z * l
        if np.linalg.det(a) == 0:
            break
        dz = -1.0 / np.trace(np.linalg.solve(a, l))
        # roundoff floor reached: steps stop shrinking
        if abs(dz) >= last and abs(dz) < 1e-10 * max(1.0, abs(z)):
            break
        z = z - dz
        last = abs(dz)
        if abs(z - z0) > 0.5:
            raise ContinuationError("Newton iteration left the neighbourhood of the seed", nu)
        if abs(dz) <= 4 * _EPS * max(1.0, abs(z)):
            break
    else:
        raise ContinuationError(f"Newton did not converge in {tol.newton_max_iter} iterations", nu)
    resid = abs(np.linalg.det(eye - z * l))
    if resid > tol.newton_residual * (1 + np.linalg.norm(l, 2)) ** 4:
        raise ContinuationError(f"Newton residual |g| = {resid:.3e} above tolerance", nu)
    return z


def _step(op, k, nu, z_seed, tol):
    l = op.matrices(k, nu)
    z = _newton(l, z_seed, tol, nu)
    roots = poly_roots(det_poly(l), tol)
    d = np.sort(np.abs(roots - z))
    sep = float(d[1]) if len(d) > 1 else math.inf
    if sep < tol.branch_separation:
        raise ContinuationError(f"tracked root within {sep:.2e} of another branch", nu)
    return z, sep


def _require_simple_one(op, k, tol):
    rep = spectrum_report(op.matrices(k, 0.0), tol=tol)
    if not rep.theorem_applies:
        raise ValidationError(
            f"at k={k}: 1 is not a simple isolated eigenvalue of L_kk "
            f"(peripheral spectrum {[(complex(z), m) for z, m in rep.peripheral]})", "k")


def track_root(op: Superoperator, k, nu_max=None, steps=2, tol=None) -> RootTrack:
    """Continue ``z0(nu)`` from ``z0(0) = 1`` and differentiate at ``nu = 0``.

    Samples ``nu = j * nu_step`` for ``|j| <= steps`` (``nu_step = nu_max / steps``),
    each by Newton seeded at the previous sample. Derivatives use central
    differences at steps ``h`` and ``2h`` combined by one Richardson level.
    The truncation error grows as ``p -> 0`` because a branch point of
    ``z0(nu)`` approaches the real axis; :func:`variance_perturbative` has
    no such limitation.
    """
    tol = TOL if tol is None else tol
    if steps < 2:
        raise ValidationError("steps must be >= 2 for Richardson extrapolation", "steps")
    nu_max = 2 * tol.fd_step if nu_max is None else float(nu_max)
    if not nu_max > 0:
        raise ValidationError(f"nu_max must be positive, got {nu_max}", "nu_max")
    h = nu_max / steps
    k = float(k)
    _require_simple_one(op, k, tol)

    z_center, sep0 = _step(op, k, 0.0, 1.0 + 0j, tol)
    if abs(z_center - 1) > 1e-10:
        raise NumericalError(f"z0(0) = {z_center}, expected 1")
    z = {0: z_center}
    seps = [sep0]
    for sign in (1, -1):
        prev = z_center
        for j in range(1, steps + 1):
            prev, sep = _step(op, k, sign * j * h, prev, tol)
            z[sign * j] = prev
            seps.append(sep)

    def central1(m):
        return (z[m] - z[-m]) / (2 * m * h)

    def central2(m):
        return (z[m] - 2 * z[0] + z[-m]) / (m * h) ** 2

    d1 = (4 * central1(1) - central1(2)) / 3
    d2 = (4 * central2(1) - central2(2)) / 3
    js = np.arange(-steps, steps + 1)
    track = RootTrack(k, h, js * h, np.array([z[j] for j in js]), complex(d1), complex(d2), min(seps))

    if abs(d1) > tol.derivative_imag:
        raise NumericalError(f"z0'(0) = {d1} at k={k}, expected 0")
    if abs(d2.imag) > tol.derivative_imag or d2.real <= 0:
        raise NumericalError(f"z0''(0) = {d2} at k={k} is not real and positive")
    return track


def variance_perturbative(op: Superoperator, k, tol=None):
    """``z0''(0; k)`` by second-order perturbation of the eigenvalue 1.

    ``L_{k,k+nu} = (cos nu + i sin nu S) L_kk`` with ``S`` right
    multiplication by ``sigma_z``, and ``L_kk`` is block diagonal with a
    1 in the identity slot. Writing ``M`` for the remaining 3x3 block,
    ``z0''(0) = 1 + 2 L_kk[z, 1:] (I - M)^-1 e_z`` and ``z0'(0) = 0``.
    Vectorised over ``k``; the caller is responsible for checking that 1
    is a simple eigenvalue (otherwise ``I - M`` is singular).
    """
    tol = TOL if tol is None else tol
    l = op.matrices(np.asarray(k, dtype=float), 0.0)
    m = l[..., 1:, 1:]
    rhs = np.broadcast_to(np.array([0, 0, 1], dtype=complex), m.shape[:-1])
    a = np.eye(3) - m
    if np.any(np.linalg.cond(a) > 1 / tol.rank):
        raise NumericalError("1 is not a simple eigenvalue of L_kk: reduced resolvent is singular")
    x = np.linalg.solve(a, rhs[..., None])[..., 0]
    v = 1 + 2 * np.einsum("...i,...i->...", l[..., 3, 1:], x)
    if np.any(np.abs(v.imag) > tol.derivative_imag) or np.any(v.real <= 0):
        raise NumericalError(f"z0''(0) is not real and positive: min {v.real.min():.3e}, "
                             f"max |imag| {np.abs(v.imag).max():.3e}")
    return v.real


def variance_closed_form(theta, q, k, det_sign=-1):
    """Closed-form ``z0''(0; k)`` for an O(2) coin with dephasing ``p = 1 - q``.

    For a reflection coin this is ``(1 + 2q cos 2k + q^2) / (1 - q^2) * cot^2 theta``.
    A rotation coin gives the same curve shifted by ``k -> k + pi/2``, so the
    sign of the cosine term flips; the k-averaged limit is identical.
    """
    _check_angle(theta)
    if not 0.0 <= q < 1.0:
        raise ValidationError(f"q = 1 - p must be in [0, 1), got {q}", "p")
    c = np.cos(2 * np.asarray(k, dtype=float)) * (1 if det_sign == -1 else -1)
    return (1 + 2 * q * c + q * q) / ((1 - q) * (1 + q)) / math.tan(theta) ** 2


def _check_angle(theta):
    if degenerate_angle(theta):
        raise ValidationError(
            f"theta={theta} is a multiple of pi/2: no diffusive limit; use degenerate_limits", "theta")


@dataclass
class LimitModel:
    k: np.ndarray
    variance: np.ndarray
    coin: CoinOperator
    p: Optional[float]
    closed_form: Optional[Tuple[float, float, int]] = None
    kraus: Optional[KrausSet] = field(default=None, repr=False)

    @property
    def k_grid(self):
        return len(self.k)

    def variance_curve(self, k=None):
        """Grid values of ``z0''(0; k)``, or fresh evaluations at ``k``."""
        if k is None:
            return self.variance
        kraus = self.kraus if self.kraus is not None else projective_kraus(self.p)
        return variance_perturbative(Superoperator(self.coin, kraus), k)


def build_limit_model(coin: CoinOperator, p=None, k_grid=DEFAULT_K_GRID, kraus=None, tol=None) -> LimitModel:
    """``z0''(0; k)`` on a uniform grid of ``k_grid`` momenta.

    Every grid point must have 1 as a simple, isolated eigenvalue of
    ``L_kk``. With an O(2) coin and the projective measurement the curve is
    checked against :func:`variance_closed_form` to ``tol.closed_form_rel``.
    """
    tol = TOL if tol is None else tol
    if kraus is None:
        if p is None:
            raise ValidationError("either p or kraus is required", "p")
        kraus = projective_kraus(p)
    if int(k_grid) != k_grid or k_grid < 8:
        raise ValidationError(f"k_grid must be an integer >= 8, got {k_grid}", "k_grid")
    k_grid = int(k_grid)
    _check_coin_angle(coin)
    op = Superoperator(coin, kraus)
    ks = 2 * np.pi * np.arange(k_grid) / k_grid
    for k in ks:
        _require_simple_one(op, k, tol)
    var = variance_perturbative(op, ks, tol)

    closed = None
    rate = kraus.decoherence_rate
    if coin.o2_form is not None and kraus.family == "projective":
        closed = (coin.theta, 1.0 - rate, coin.det_sign)
        ref = variance_closed_form(*closed[:2], ks, closed[2])
        err = np.max(np.abs(var - ref) / ref)
        if err > tol.closed_form_rel:
            raise NumericalError(f"variance curve deviates from closed form by {err:.3e} (relative)")
    return LimitModel(ks, var, coin, rate, closed, kraus)


def _check_coin_angle(coin):
    if coin.theta is not None:
        _check_angle(coin.theta)
    elif u2_condition(coin) is not CoinClass.GENERIC:
        raise ValidationError("diagonal and antidiagonal coins have no diffusive limit; "
                              "use degenerate_limits", "coin")


def limit_char_fn(model: LimitModel, nu):
    """``(1/2pi) int exp(-z0''(0;k) nu^2 / 2) dk`` by the periodic trapezoid rule."""
    nu = np.asarray(nu, dtype=float)
    out = np.exp(-0.5 * np.multiply.outer(nu * nu, model.variance)).mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def limit_density(model: LimitModel, x):
    """Density of the normal mixture; vectorised over ``x``."""
    x = np.asarray(x, dtype=float)
    v = model.variance
    dens = np.exp(-0.5 * np.multiply.outer(x * x, 1 / v)) / np.sqrt(2 * np.pi * v)
    out = dens.mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def density_mass(model: LimitModel, n_points=8001):
    """Mass of :func:`limit_density` on ``[-L, L]``, ``L = 8 sqrt(max variance)``."""
    half = 8 * math.sqrt(model.variance.max())
    x = np.linspace(-half, half, n_points)
    return float(np.trapezoid(limit_density(model, x), x))


def _gauss_factor(n):
    # (2n)! / (n! 2^n)
    return math.factorial(2 * n) / (math.factorial(n) * 2 ** n)


def t_poly(n, q):
    """``T_n(q) = sum_l C(n, l)^2 q^(2l)``."""
    return sum(math.comb(n, l) ** 2 * q ** (2 * l) for l in range(n + 1))


@dataclass
class MomentTable:
    orders: np.ndarray
    values: np.ndarray
    tn_values: np.ndarray  # T_n for n = 0 .. max_order // 2
    normal_values: np.ndarray  # N_2n for the same n, nan if undefined

    def moment(self, order):
        return float(self.values[order])

    def rows(self):
        out = []
        for m in self.orders:
            n = m // 2
            even = m % 2 == 0
            out.append({
                "order": int(m),
                "moment": float(self.values[m]),
                "t_n": float(self.tn_values[n]) if even else float("nan"),
                "normal_moment": float(self.normal_values[n]) if even else 0.0,
            })
        return out


def moments_closed(theta, q, max_order) -> MomentTable:
    """Moments of the O(2) limit law; odd moments vanish.

    ``M_2n = (2n)!/(n! 2^n) * (cot^2 theta / (1 - q^2))^n * T_n(q)``.
    """
    _check_angle(theta)
    if not 0.0 <= q < 1.0:
        raise ValidationError(f"q = 1 - p must be in [0, 1), got {q}", "p")
    if max_order < 0:
        raise ValidationError("max_order must be >= 0", "max_order")
    sigma2 = 1 / math.tan(theta) ** 2 / ((1 - q) * (1 + q))
    n_max = max_order // 2
    tn = np.array([t_poly(n, q) for n in range(n_max + 1)])
    normal = np.array([_gauss_factor(n) * sigma2 ** n for n in range(n_max + 1)])
    values = np.zeros(max_order + 1)
    values[0::2] = normal * tn
    return MomentTable(np.arange(max_order + 1), values, tn, normal)


def moments_numeric(model: LimitModel, max_order) -> MomentTable:
    """``M_2n = (2n)!/(n! 2^n) * mean_k z0''(0;k)^n`` from the tracked curve."""
    n_max = max_order // 2
    values = np.zeros(max_order + 1)
    for n in range(n_max + 1):
        values[2 * n] = _gauss_factor(n) * np.mean(model.variance ** n)
    if model.closed_form is not None:
        theta, q, _ = model.closed_form
        sigma2 = 1 / math.tan(theta) ** 2 / ((1 - q) * (1 + q))
        normal = np.array([_gauss_factor(n) * sigma2 ** n for n in range(n_max + 1)])
        tn = values[0::2] / normal
    else:
        normal = tn = np.full(n_max + 1, np.nan)
    return MomentTable(np.arange(max_order + 1), values, tn, normal)


def critical_exponent(theta, order_2n, p_samples):
    """Least-squares slope of ``-ln M_2n`` against ``ln p`` (tends to ``n`` as ``p -> 0``)."""
    p = np.asarray(p_samples, dtype=float)
    if p.size < 2:
        raise ValidationError("need at least two p samples", "p_list")
    if np.any((p <= 0) | (p >= 1)):
        raise ValidationError("p samples must lie in (0, 1)", "p_list")
    if np.any(np.diff(p) >= 0):
        raise ValidationError("p samples must be strictly decreasing", "p_list")
    if order_2n < 2 or order_2n % 2:
        raise ValidationError(f"order must be a positive even integer, got {order_2n}", "order")
    m = np.array([moments_closed(theta, 1 - pi, order_2n).moment(order_2n) for pi in p])
    slope, _ = np.polyfit(np.log(p), -np.log(m), 1)
    return float(slope)


def generating_fn(op: Superoperator, k, nu, z, init: InitialCoinState):
    """``Tr[(I - z L_{k,k+nu})^{-1} rho0]`` for ``|z| < 1``."""
    if abs(z) >= 1:
        raise ValidationError(f"generating function needs |z| < 1, got |z| = {abs(z)}", "z")
    a = np.eye(4) - z * op.matrices(k, nu)
    x = np.linalg.solve(a, init.pauli)
    return complex(2 * x[0])


def degenerate_limits(coin: CoinOperator, init: InitialCoinState, nu):
    """Limit characteristic function for diagonal and antidiagonal coins.

    Diagonal coin, ``nu`` scaled by ``1/t``: ``|c_R|^2 e^{i nu} + |c_L|^2 e^{-i nu}``.
    Antidiagonal coin, any scaling ``t^kappa``: identically 1.
    """
    cls = u2_condition(coin)
    if cls is CoinClass.GENERIC:
        raise ValidationError("coin is generic: use limit_char_fn for the diffusive limit", "coin")
    nu = np.asarray(nu, dtype=float)
    if cls is CoinClass.ANTIDIAGONAL:
        out = np.ones_like(nu, dtype=complex)
    else:
        w_r, w_l = init.density[0, 0].real, init.density[1, 1].real
        out = w_r * np.exp(1j * nu) + w_l * np.exp(-1j * nu)
    return complex(out) if out.ndim == 0 else out
