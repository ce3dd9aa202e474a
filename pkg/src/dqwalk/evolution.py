"""Finite-time position statistics of the decoherent walk.

Three independent routes to ``p(x, t)``:

* ``fourier``: ``P(nu, t) = (1/2pi) int Tr(L_{k,k+nu}^t rho0) dk`` on a
  uniform k grid, inverted on ``2t + 1`` equally spaced ``nu``;
* ``density_matrix``: the full state on the lattice ``{-t..t}`` (x) coin;
* ``monte_carlo``: sampled quantum trajectories of the measurement process.

The walker starts at the origin, so after ``t`` steps it lives on
``{-t..t}`` and ``p(x, t)`` vanishes when ``x + t`` is odd.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .config import DEFAULT_K_GRID, TOL
from .errors import NumericalError, ResourceError, ValidationError
from .limit import LimitModel, build_limit_model, degenerate_limits, limit_char_fn
from .superop import SIGMA_Z_RIGHT, Superoperator
from .walk import InitialCoinState

METHODS = ("fourier", "density_matrix", "monte_carlo")
RNG_NAME = "PCG64"


def _check_t(t, minimum=0):
    if isinstance(t, bool) or int(t) != t or t < minimum:
        raise ValidationError(f"t must be an integer >= {minimum}, got {t!r}", "t")
    return int(t)


def _init(init):
    return InitialCoinState.right() if init is None else init


def default_k_grid(t):
    """Smallest safe grid is ``2t + 1``; the default is ``max(256, 4t + 2)``."""
    return max(DEFAULT_K_GRID, 4 * t + 2)


def _workers(threads):
    if threads is None or threads == 1:
        return 1
    if threads == 0:
        return os.cpu_count() or 1
    if threads < 0:
        raise ValidationError(f"threads must be >= 0, got {threads}", "threads")
    return int(threads)


@dataclass
class DistributionTable:
    """``p(x, t)`` on ``x = -t..t``."""

    t: int
    x: np.ndarray
    probs: np.ndarray
    method: str
    total: float
    clipped_mass: float = 0.0
    imag_residue: float = 0.0
    meta: dict = field(default_factory=dict)

    def prob(self, x):
        if abs(x) > self.t:
            return 0.0
        return float(self.probs[x + self.t])

    def moment(self, order):
        return float(np.sum(self.x.astype(float) ** order * self.probs))

    def mean(self):
        return self.moment(1)

    def variance(self):
        return self.moment(2) - self.mean() ** 2

    def tv_distance(self, other: "DistributionTable"):
        """Total variation distance ``(1/2) sum |p - q|``."""
        if other.t != self.t:
            raise ValidationError(f"tables have different t ({self.t} vs {other.t})", "t")
        return 0.5 * float(np.sum(np.abs(self.probs - other.probs)))

    def rows(self):
        return [(int(x), float(p)) for x, p in zip(self.x, self.probs)]


def _finalize(t, probs, method, imag_residue=0.0, meta=None, exact=True, tol=None):
    """Apply the parity, clipping and normalization checks to raw probabilities."""
    tol = TOL if tol is None else tol
    x = np.arange(-t, t + 1)
    probs = np.array(probs, dtype=float)
    odd = (x + t) % 2 == 1
    parity = float(np.max(np.abs(probs[odd]))) if odd.any() else 0.0
    if parity > tol.imag_residue:
        raise NumericalError(f"{method}: mass {parity:.3e} on sites with x + t odd")
    probs[odd] = 0.0
    low = probs.min()
    if low < -tol.clip:
        raise NumericalError(f"{method}: negative probability {low:.3e} at t={t}")
    neg = probs < 0
    clipped = float(-probs[neg].sum())
    probs[neg] = 0.0
    total = float(probs.sum())
    if exact and abs(total - 1) > tol.mass:
        raise NumericalError(f"{method}: total probability {total!r} differs from 1")
    meta = dict(meta or {})
    meta["parity_residue"] = parity
    return DistributionTable(t, x, probs, method, total, clipped, imag_residue, meta)


@dataclass
class CharFnSample:
    nu: float
    t: int
    value: complex

    def check(self, tol=1e-9):
        if abs(self.value) > 1 + tol:
            raise NumericalError(f"|P(nu={self.nu}, t={self.t})| = {abs(self.value)} exceeds 1")
        return self


def _char_fn_chunk(op, v0, t, nu, ks):
    l = op.matrices(ks[None, :], nu[:, None])
    v = np.broadcast_to(v0, l.shape[:-1])[..., None]
    for _ in range(t):
        v = l @ v
    return 2 * v[..., 0, 0].mean(axis=-1)


def char_fn_values(op: Superoperator, nu, t, init=None, k_grid=None, threads=1, chunk=64):
    """``P(nu, t)`` for an array of ``nu``; exact when ``k_grid > 2t``."""
    t = _check_t(t)
    init = _init(init)
    k_grid = default_k_grid(t) if k_grid is None else int(k_grid)
    if k_grid < 1:
        raise ValidationError(f"k_grid must be positive, got {k_grid}", "k_grid")
    nu = np.asarray(nu, dtype=float)
    flat = nu.ravel()
    ks = 2 * np.pi * np.arange(k_grid) / k_grid
    # keep each batch around 2**20 matrices
    chunk = max(1, min(chunk, (1 << 20) // k_grid))
    parts = [flat[i:i + chunk] for i in range(0, len(flat), chunk)]
    v0 = init.pauli
    n = _workers(threads)
    if n == 1 or len(parts) == 1:
        out = [_char_fn_chunk(op, v0, t, p, ks) for p in parts]
    else:
        with ThreadPoolExecutor(n) as pool:
            out = list(pool.map(lambda p: _char_fn_chunk(op, v0, t, p, ks), parts))
    vals = np.concatenate(out) if out else np.zeros(0, dtype=complex)
    return vals.reshape(nu.shape)


def char_fn_exact(op: Superoperator, nu, t, init=None, k_grid=None) -> CharFnSample:
    """Single value of the characteristic function of ``p(., t)``."""
    val = complex(char_fn_values(op, np.array([nu]), t, init, k_grid)[0])
    return CharFnSample(float(nu), int(t), val).check()


def distribution_fourier(op: Superoperator, t, init=None, k_grid=None, threads=1, tol=None) -> DistributionTable:
    """Invert ``P(nu_j, t)`` at ``nu_j = 2 pi j / (2t + 1)``.

    ``p`` is supported on ``2t + 1`` sites, so the discrete inversion
    ``p(x) = (1/N) sum_j exp(-i nu_j x) P(nu_j)`` is exact.
    """
    tol = TOL if tol is None else tol
    t = _check_t(t, 1)
    init = _init(init)
    k_grid = default_k_grid(t) if k_grid is None else int(k_grid)
    if k_grid <= 2 * t:
        raise ValidationError(f"k_grid must exceed 2t = {2 * t} for exact quadrature", "k_grid")
    n = 2 * t + 1
    nus = 2 * np.pi * np.arange(n) / n
    phat = char_fn_values(op, nus, t, init, k_grid, threads)
    raw = np.fft.fft(phat) / n
    x = np.arange(-t, t + 1)
    vals = raw[x % n]
    resid = float(np.max(np.abs(vals.imag)))
    if resid > tol.imag_residue:
        raise NumericalError(f"fourier inversion left imaginary residue {resid:.3e}")
    return _finalize(t, vals.real, "fourier", resid, {"k_grid": k_grid}, tol=tol)


@dataclass
class LatticeDensity:
    """Walker state ``rho[x, a, y, b]`` with ``x, y`` indexing ``-t..t``."""

    t: int
    rho: np.ndarray

    def matrix(self):
        n = 2 * (2 * self.t + 1)
        return self.rho.reshape(n, n)

    def position_probs(self):
        return np.einsum("xaxa->x", self.rho).real

    def check(self, tol=1e-9):
        m = self.matrix()
        tr = np.trace(m)
        if abs(tr - 1) > tol:
            raise NumericalError(f"lattice density has trace {tr}")
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise NumericalError("lattice density is not Hermitian")
        low = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
        if low < -tol:
            raise NumericalError(f"lattice density has eigenvalue {low:.3e} < 0")
        return self


def evolve_density(op: Superoperator, t, init=None, cap=None) -> LatticeDensity:
    """Measurement, coin and shift applied ``t`` times on the lattice ``{-t..t}``."""
    cap = TOL.lattice_cap if cap is None else cap
    t = _check_t(t)
    if t > cap:
        raise ResourceError(f"density-matrix route is capped at t={cap} (got t={t}); memory grows as t^2")
    init = _init(init)
    size = 2 * t + 1
    rho = np.zeros((size, 2, size, 2), dtype=complex)
    rho[t, :, t, :] = init.density
    ks = [op.coin.u @ a for a in op.kraus.operators]
    for _ in range(t):
        rho = sum(np.einsum("ab,xbyc,dc->xayd", kn, rho, kn.conj()) for kn in ks)
        # |R> moves to x + 1, |L> to x - 1; the light cone keeps roll from wrapping
        for a, sa in ((0, 1), (1, -1)):
            rho[:, a] = np.roll(rho[:, a], sa, axis=0)
        for b, sb in ((0, 1), (1, -1)):
            rho[:, :, :, b] = np.roll(rho[:, :, :, b], sb, axis=2)
    return LatticeDensity(t, rho)


def distribution_density_matrix(op: Superoperator, t, init=None, cap=None, tol=None) -> DistributionTable:
    lat = evolve_density(op, t, init, cap)
    return _finalize(lat.t, lat.position_probs(), "density_matrix", tol=tol)


def _initial_vectors(init: InitialCoinState, n, rng):
    ens = init.ensemble()
    if len(ens) == 1:
        return np.broadcast_to(ens[0][1], (n, 2)).astype(complex)
    w = np.array([e[0] for e in ens])
    pick = rng.choice(len(ens), size=n, p=w / w.sum())
    vecs = np.stack([e[1] for e in ens])
    return vecs[pick].astype(complex)


def _run_block(op, t, init, n, rng, batch):
    size = 2 * t + 1
    counts = np.zeros(size, dtype=np.int64)
    ops = op.kraus.stacked
    u = op.coin.u
    done = 0
    while done < n:
        m = min(batch, n - done)
        psi = np.zeros((m, size, 2), dtype=complex)
        psi[:, t, :] = _initial_vectors(init, m, rng)
        rows = np.arange(m)
        for _ in range(t):
            phi = np.einsum("nab,sxb->nsxa", ops, psi)
            w = np.einsum("nsxa,nsxa->ns", phi.conj(), phi).real
            cum = np.cumsum(w, axis=0)
            r = rng.random(m) * cum[-1]
            sel = np.minimum((r[None, :] >= cum).sum(axis=0), len(ops) - 1)
            ws = w[sel, rows]
            if np.any(ws <= 0):
                raise NumericalError("trajectory selected a measurement outcome of probability zero")
            psi = phi[sel, rows] / np.sqrt(ws)[:, None, None]
            psi = psi @ u.T
            psi[:, :, 0] = np.roll(psi[:, :, 0], 1, axis=1)
            psi[:, :, 1] = np.roll(psi[:, :, 1], -1, axis=1)
        marg = np.einsum("sxa,sxa->sx", psi.conj(), psi).real
        cum = np.cumsum(marg, axis=1)
        r = rng.random(m) * cum[:, -1]
        pos = np.minimum((r[:, None] >= cum).sum(axis=1), size - 1)
        counts += np.bincount(pos, minlength=size)
        done += m
    return counts


def trajectories(op: Superoperator, t, init=None, n_samples=10_000, seed=0, workers=1, batch=20_000) -> DistributionTable:
    """Empirical ``p(x, t)`` from ``n_samples`` quantum trajectories.

    Each step samples a Kraus outcome with probability ``||A_n psi||^2``,
    renormalizes, then applies coin and shift; the final position is drawn
    from the position marginal. A mixed initial coin state is handled by
    drawing the starting vector from its eigen-ensemble. Results depend only
    on ``(seed, workers)``: worker ``i`` uses stream ``i`` of
    ``SeedSequence(seed)``.
    """
    t = _check_t(t)
    if isinstance(n_samples, bool) or int(n_samples) != n_samples or n_samples < 1:
        raise ValidationError(f"n_samples must be a positive integer, got {n_samples!r}", "n_samples")
    n_samples = int(n_samples)
    init = _init(init)
    n_workers = min(_workers(workers), n_samples)
    seqs = np.random.SeedSequence(int(seed)).spawn(n_workers)
    sizes = [n_samples // n_workers + (i < n_samples % n_workers) for i in range(n_workers)]

    def job(i):
        return _run_block(op, t, init, sizes[i], np.random.Generator(np.random.PCG64(seqs[i])), batch)

    if n_workers == 1:
        parts = [job(0)]
    else:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(job, range(n_workers)))
    counts = np.sum(parts, axis=0)
    meta = {"rng": RNG_NAME, "seed": int(seed), "workers": n_workers, "mc_samples": n_samples}
    return _finalize(t, counts / n_samples, "monte_carlo", meta=meta, exact=False)


def rescaled_pmf(table: DistributionTable):
    """``(x / sqrt(t), p(x, t))`` for the sites of ``table``."""
    if table.t < 1:
        raise ValidationError("rescaling needs t >= 1", "t")
    return table.x / math.sqrt(table.t), table.probs.copy()


def position_moments(op: Superoperator, t, init=None, max_order=2, k_grid=None):
    """Exact ``E[x^m]`` for ``m = 0..max_order`` at time ``t``.

    Propagates the ``nu``-derivatives of ``L(nu)^t rho0`` at ``nu = 0``
    using ``L(nu) = (cos nu + i sin nu S) L(0)``, which needs only ``t``
    matrix-vector products per order instead of ``2t + 1`` characteristic
    function evaluations.
    """
    t = _check_t(t)
    if max_order < 0:
        raise ValidationError("max_order must be >= 0", "max_order")
    init = _init(init)
    k_grid = default_k_grid(t) if k_grid is None else int(k_grid)
    ks = 2 * np.pi * np.arange(k_grid) / k_grid
    l0 = op.matrices(ks, 0.0)
    # j-th derivative of L(nu) at 0 is i^j S^(j mod 2) L(0)
    sl0 = SIGMA_Z_RIGHT @ l0
    d = [(1j ** j) * (sl0 if j % 2 else l0) for j in range(max_order + 1)]
    v = [np.broadcast_to(init.pauli, (k_grid, 4))[..., None].astype(complex)]
    v += [np.zeros_like(v[0]) for _ in range(max_order)]
    for _ in range(t):
        v = [sum(math.comb(m, j) * (d[j] @ v[m - j]) for j in range(m + 1)) for m in range(max_order + 1)]
    deriv = np.array([2 * vm[:, 0, 0].mean() for vm in v])
    return ((-1j) ** np.arange(max_order + 1) * deriv).real


@dataclass
class ConvergenceReport:
    rows: List[dict]
    decreasing: bool
    scaling: str
    nu_list: List[float]

    def errors(self):
        return [r["max_err"] for r in self.rows]


def convergence_study(op: Superoperator, init, t_list, nu_list, model: Optional[LimitModel] = None,
                      k_grid=None, scaling="diffusive", threads=1) -> ConvergenceReport:
    """``e(t) = max_nu |P(nu / t^a, t) - limit(nu)|`` along ``t_list``.

    ``scaling="diffusive"`` uses ``a = 1/2`` and the normal-mixture limit;
    ``scaling="ballistic"`` uses ``a = 1`` and the diagonal-coin limit.
    """
    init = _init(init)
    nu = np.asarray(nu_list, dtype=float)
    if scaling == "diffusive":
        if model is None:
            model = build_limit_model(op.coin, kraus=op.kraus)
        target = np.asarray(limit_char_fn(model, nu))
        power = 0.5
    elif scaling == "ballistic":
        target = np.asarray(degenerate_limits(op.coin, init, nu))
        power = 1.0
    else:
        raise ValidationError(f"scaling must be 'diffusive' or 'ballistic', got {scaling!r}", "scaling")
    rows = []
    for t in t_list:
        t = _check_t(t, 1)
        vals = char_fn_values(op, nu / t ** power, t, init, k_grid, threads)
        err = np.abs(vals - target)
        rows.append({"t": t, "max_err": float(err.max()), "per_nu": [float(e) for e in err]})
    errs = [r["max_err"] for r in rows]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    return ConvergenceReport(rows, decreasing, scaling, [float(v) for v in nu])
