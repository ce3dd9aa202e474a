"""Small complex linear algebra on 2x2 and 4x4 matrices.

Operators on the coin space are plain ``(2, 2)`` complex arrays. Their
coordinates in the basis ``(sigma_0, sigma_x, sigma_y, sigma_z)`` are
``(4,)`` complex arrays ("Pauli vectors"). Polynomials of degree <= 4 are
stored as ascending coefficient arrays ``c[0] + c[1] z + ... + c[4] z**4``.

All functions accept leading batch dimensions where that is natural.
"""

import numpy as np

from .config import TOL
from .errors import NumericalError, ValidationError

SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def pauli_decompose(m):
    """Coordinates ``r`` with ``m = sum_j r[j] * SIGMA[j]``.

    Uses ``r_j = Tr(sigma_j m) / 2``; in particular ``r_0 = Tr(m) / 2``.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape[-2:] != (2, 2):
        raise ValidationError(f"expected (..., 2, 2) array, got shape {m.shape}")
    a, b = m[..., 0, 0], m[..., 0, 1]
    c, d = m[..., 1, 0], m[..., 1, 1]
    return np.stack([(a + d) / 2, (b + c) / 2, 1j * (b - c) / 2, (a - d) / 2], axis=-1)


def pauli_compose(v):
    """Inverse of :func:`pauli_decompose`."""
    v = np.asarray(v, dtype=complex)
    if v.shape[-1] != 4:
        raise ValidationError(f"expected (..., 4) array, got shape {v.shape}")
    r0, r1, r2, r3 = v[..., 0], v[..., 1], v[..., 2], v[..., 3]
    out = np.empty(v.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = r0 + r3
    out[..., 0, 1] = r1 - 1j * r2
    out[..., 1, 0] = r1 + 1j * r2
    out[..., 1, 1] = r0 - r3
    return out


def char_poly(m):
    """Ascending coefficients of ``det(lambda I - m)`` (Faddeev-LeVerrier)."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[-1]
    coeffs = np.zeros(m.shape[:-2] + (n + 1,), dtype=complex)
    coeffs[..., n] = 1.0
    eye = np.eye(n, dtype=complex)
    aux = np.zeros_like(m)
    for j in range(1, n + 1):
        aux = m @ aux + coeffs[..., n - j + 1, None, None] * eye
        coeffs[..., n - j] = -np.trace(m @ aux, axis1=-2, axis2=-1) / j
    return coeffs


def det_poly(l):
    """``g(z) = det(I - z l)`` as ascending coefficients; ``g(0) == 1``.

    Since ``g(z) = z**n det(I/z - l)``, the coefficients of ``g`` are those of
    the characteristic polynomial read in reverse.
    """
    return char_poly(l)[..., ::-1].copy()


def poly_eval(c, z):
    c = np.asarray(c, dtype=complex)
    out = np.zeros(np.broadcast(c[..., 0], z).shape, dtype=complex)
    for j in range(c.shape[-1] - 1, -1, -1):
        out = out * z + c[..., j]
    return out


def poly_deriv(c):
    c = np.asarray(c, dtype=complex)
    return c[1:] * np.arange(1, c.shape[-1])


def trim_degree(c, tol=None):
    """Drop leading (highest-order) coefficients that are negligible."""
    tol = TOL.degree_trim if tol is None else tol
    c = np.asarray(c, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        raise ValidationError("zero polynomial has no well-defined roots")
    deg = c.shape[-1] - 1
    while deg > 0 and abs(c[deg]) <= tol * scale:
        deg -= 1
    return c[: deg + 1]


def _companion_roots(c):
    deg = c.shape[-1] - 1
    if deg == 0:
        return np.zeros(0, dtype=complex)
    comp = np.zeros((deg, deg), dtype=complex)
    comp[0, :] = -c[deg - 1 :: -1] / c[deg]
    comp[np.arange(1, deg), np.arange(deg - 1)] = 1.0
    try:
        return np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"companion eigenvalue iteration failed: {exc}") from exc


def _newton_polish(c, roots):
    dc = poly_deriv(c)
    out = roots.copy()
    for i, z in enumerate(roots):
        f = poly_eval(c, z)
        df = poly_eval(dc, z)
        if df == 0:
            continue
        z_new = z - f / df
        if abs(poly_eval(c, z_new)) < abs(f):
            out[i] = z_new
    return out


def _root_groups(roots, tol):
    label = list(range(len(roots)))

    def find(i):
        while label[i] != i:
            label[i] = label[label[i]]
            i = label[i]
        return i

    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) < tol:
                label[find(j)] = find(i)
    groups = {}
    for i in range(len(roots)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def cluster_roots(roots, tol=None):
    """Group roots closer than ``tol``; returns ``[(centroid, multiplicity), ...]``.

    Grouping is transitive (single linkage), ordered by first appearance.
    """
    tol = TOL.root_cluster if tol is None else tol
    roots = np.asarray(roots, dtype=complex)
    return [(complex(np.mean(roots[idx])), len(idx)) for idx in _root_groups(roots, tol)]


def _snap_clusters(roots, tol):
    out = np.asarray(roots, dtype=complex).copy()
    for idx in _root_groups(out, tol):
        if len(idx) > 1:
            out[idx] = np.mean(out[idx])
    return out


def _taylor_at(c, z):
    """Coefficients of ``p`` expanded around ``z``: ``p(z + h) = sum_j a_j h^j``."""
    out = []
    d = np.asarray(c, dtype=complex)
    fact = 1.0
    for j in range(len(c)):
        out.append(poly_eval(d, z) / fact)
        d = poly_deriv(d) if len(d) > 1 else np.zeros(1, dtype=complex)
        fact *= j + 1
    return np.array(out)


def _merge_multiple(c, roots, tol):
    """Replace a split multiple root by its centroid.

    Roots of multiplicity ``m`` come out of any eigen-solver spread by about
    ``eps**(1/m)`` while their centroid is accurate to ``eps``. A group of
    ``m`` candidates, grouped at radii growing up to ``tol.multiple_radius``,
    is merged when the Taylor coefficients of order ``< m - 1`` at the
    centroid vanish to roundoff (order ``m - 1`` vanishes at any centroid).
    """
    out = np.asarray(roots, dtype=complex).copy()
    merged = np.zeros(len(out), dtype=bool)
    if len(out) < 2:
        return out, merged
    base = max(1.0, float(np.max(np.abs(out))))
    # tightest groups first, so a multiple root next to a close simple root still merges
    for radius in np.geomspace(tol.root_cluster, tol.multiple_radius, 9) * base:
        for idx in _root_groups(out, radius):
            m = len(idx)
            if m < 2 or np.all(out[idx] == out[idx[0]]):
                continue
            cen = np.mean(out[idx])
            scale = float(np.sum(np.abs(c) * max(1.0, abs(cen)) ** np.arange(len(c))))
            taylor = _taylor_at(c, cen)[: m - 1]
            if np.all(np.abs(taylor) <= tol.multiple_test * scale):
                out[idx] = cen
                merged[idx] = True
    return out, merged


def _refined_roots(c, tol):
    """Companion roots; multiple roots merged, simple roots Newton-polished."""
    roots, merged = _merge_multiple(c, _companion_roots(c), tol)
    roots = np.where(merged, roots, _newton_polish(c, roots))
    return _snap_clusters(roots, tol.root_cluster)


def poly_roots(c, tol=None):
    """All roots of a polynomial of degree <= 4, with multiplicity.

    Negligible leading coefficients are trimmed first, so the number of roots
    returned equals the effective degree.
    """
    tol = TOL if tol is None else tol
    c = trim_degree(c, tol.degree_trim)
    roots = _refined_roots(c, tol)
    scale = 1.0 + np.max(np.abs(c))
    resid = np.abs(poly_eval(c, roots))
    if np.any(resid > tol.root_residual * scale * np.maximum(1.0, np.abs(roots)) ** (len(c) - 1)):
        raise NumericalError(f"polynomial roots failed residual check: max |p(root)| = {resid.max():.3e}")
    return roots


def eigenvalues4(m, tol=None):
    """Eigenvalues of a 4x4 complex matrix, repeated by algebraic multiplicity.

    Roots of the characteristic polynomial (companion matrix). Split multiple
    roots are merged into their centroid, simple roots get one Newton step,
    and roots closer than ``tol.root_cluster`` are snapped together.
    """
    tol = TOL if tol is None else tol
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValidationError(f"expected a 4x4 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    c = char_poly(m)
    lam = _refined_roots(c, tol)
    bound = tol.eig_residual * (1.0 + np.linalg.norm(m, 2))
    for x in lam:
        r = abs(np.linalg.det(m - x * np.eye(4)))
        if r > bound:
            raise NumericalError(f"eigenvalue {x} has residual |det(m - lambda I)| = {r:.3e}")
    return lam


def eigen_multiplicities(m, tol=None):
    """``[(eigenvalue, algebraic multiplicity), ...]`` for a 4x4 matrix."""
    tol = TOL if tol is None else tol
    return cluster_roots(eigenvalues4(m, tol), tol.root_cluster)


def geometric_dim(m, lam, tol=None):
    """Dimension of ``ker(m - lam I)`` via singular values (threshold ``tol.rank``)."""
    tol = TOL if tol is None else tol
    m = np.asarray(m, dtype=complex)
    s = np.linalg.svd(m - lam * np.eye(m.shape[0]), compute_uv=False)
    return int(np.sum(s <= tol.rank * max(1.0, s[0])))
