"""Numerical tolerances used across the package, gathered in one record.

Every module reads its thresholds from ``TOL``. Tests and sweeps may build a
modified copy with :func:`dataclasses.replace` and pass it explicitly where a
function accepts ``tol=``.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # pauli algebra
    roundtrip: float = 1e-12
    root_cluster: float = 1e-7
    multiple_radius: float = 1e-3  # search radius for split multiple roots
    multiple_test: float = 1e-12  # Taylor-coefficient threshold, relative
    degree_trim: float = 1e-13
    eig_residual: float = 1e-8
    root_residual: float = 1e-9

    # walk model
    unitary: float = 1e-10
    orthogonal: float = 1e-12
    kraus_certificate: float = 1e-10
    degenerate_angle: float = 1e-9
    psd: float = 1e-12

    # superoperator / spectral
    structure: float = 1e-10
    peripheral: float = 1e-9
    coin_element: float = 1e-9
    rank: float = 1e-8

    # scaling limit
    fd_step: float = 1e-3
    newton_residual: float = 1e-12
    newton_max_iter: int = 50
    branch_separation: float = 1e-4
    derivative_imag: float = 1e-6
    closed_form_rel: float = 1e-6

    # evolution
    imag_residue: float = 1e-9
    clip: float = 1e-10
    mass: float = 1e-8
    lattice_cap: int = 64


TOL = Tolerances()

DEFAULT_K_GRID = 256
