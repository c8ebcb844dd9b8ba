"""Linear algebra of the standard G2 structure on R^7.

Coordinates are ordered ``(x1, x2, x3, a0, a1, a2, a3)`` with indices 0..6.
The three-form is ``dx123 + sum_i dx_i ∧ Omega_i`` where
``Omega_i = da0 ∧ da_i - da_j ∧ da_k`` for cyclic ``(i, j, k)``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateQuadruple, DegenerateTriple, NotPositive
from .forms import Form, basis, hodge_star

DIM = 7
X = (0, 1, 2)
A = (3, 4, 5, 6)
_CYCLIC = ((1, 2, 3), (2, 3, 1), (3, 1, 2))


def _omega_terms(i, j, k):
    a0 = A[0]
    return {(a0, A[i]): 1.0, (A[j], A[k]): -1.0}


def _build_phi0():
    terms = {X: 1.0}
    for i, j, k in _CYCLIC:
        for (p, q), c in _omega_terms(i, j, k).items():
            terms[(X[i - 1], p, q)] = c
    return Form.from_terms(DIM, terms)


def _build_psi0():
    terms = {A: 1.0}
    for i, j, k in _CYCLIC:
        for (p, q), c in _omega_terms(i, j, k).items():
            terms[(X[j - 1], X[k - 1], p, q)] = -c
    return Form.from_terms(DIM, terms)


PHI0 = _build_phi0()
STAR_PHI0 = _build_psi0()


def phi0():
    """The standard G2 three-form (a fresh copy)."""
    return PHI0.copy()


def star_phi0():
    """The standard coassociative four-form (a fresh copy)."""
    return STAR_PHI0.copy()


standard_phi0 = phi0
standard_star_phi0 = star_phi0


@dataclass(frozen=True)
class Metric7:
    """Metric determined by a definite three-form.

    ``matrix`` is in the coordinate basis, ``volume_scale`` is the factor
    relating its volume form to the reference ``e^{0..6}`` and
    ``orientation`` is +1 when that reference orientation is the induced one.
    """

    matrix: np.ndarray
    volume_scale: float
    orientation: float = 1.0


def bilinear_form(phi):
    """The symmetric form ``B(u, v) = -(1/6) [(u⌟phi)∧(v⌟phi)∧phi]``."""
    n = phi.dim
    eye = np.eye(n)
    contracted = [phi.interior(eye[i]) for i in range(n)]
    b = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            top = contracted[i].wedge(contracted[j]).wedge(phi)
            b[i, j] = b[j, i] = -top.coeffs[0] / 6.0
    return b


def metric_from_phi(phi, tol=1e-12):
    """Metric and volume induced by a three-form on a 7-dimensional space.

    Raises :class:`NotPositive` when the form is not of G2 type (its
    associated bilinear form is not definite).
    """
    if phi.degree != 3 or phi.dim != DIM:
        raise ValueError("expected a 3-form in dimension 7")
    b = bilinear_form(phi)
    eig = np.linalg.eigvalsh(b)
    scale = max(np.max(np.abs(eig)), 1e-300)
    if np.all(eig > tol * scale):
        orientation = 1.0
    elif np.all(eig < -tol * scale):
        # odd dimension: -phi gives the opposite sign, so flip orientation
        orientation = -1.0
        b = -b
    else:
        raise NotPositive(f"three-form is not definite (eigenvalues {eig})")
    det = np.linalg.det(b)
    root = det ** (1.0 / 9.0)
    return Metric7(matrix=b / root, volume_scale=root, orientation=orientation)


def star(phi, metric=None):
    """Hodge dual of ``phi`` for the metric it induces (or a supplied one)."""
    m = metric if metric is not None else metric_from_phi(phi)
    return hodge_star(phi, m.matrix, m.orientation)


def cross_product(u, v, phi=PHI0, metric=None):
    """Vector ``u × v`` defined by ``g(u × v, w) = phi(u, v, w)``."""
    if metric is not None:
        g = metric.matrix
    elif phi is PHI0:
        g = np.eye(DIM)
    else:
        g = metric_from_phi(phi).matrix
    lowered = phi.interior(u).interior(v)
    # v ⌟ (u ⌟ phi) = phi(u, v, .)
    return np.linalg.solve(g, lowered.coeffs)


class PlaneTest(NamedTuple):
    """Outcome of a calibration test: ``calibrated+``, ``calibrated-`` or ``not_calibrated``."""

    status: str
    residual: float

    @property
    def calibrated(self):
        return self.status != NOT_CALIBRATED


CALIBRATED_POS = "calibrated+"
CALIBRATED_NEG = "calibrated-"
NOT_CALIBRATED = "not_calibrated"


def _metric_matrix(phi, metric):
    if metric is not None:
        return metric.matrix if isinstance(metric, Metric7) else np.asarray(metric, dtype=float)
    if phi is PHI0:
        return np.eye(DIM)
    return metric_from_phi(phi).matrix


def _orthonormal(vectors, g, error, tol=1e-12):
    """g-orthonormal basis of the span, raising ``error`` when the Gram determinant is tiny."""
    m = np.array(vectors, dtype=float)
    gram = m @ g @ m.T
    scale = np.prod(np.diag(gram))
    if scale == 0 or np.linalg.det(gram) <= tol * scale:
        raise error("vectors are linearly dependent")
    chol = np.linalg.cholesky(gram)
    return np.linalg.solve(chol, m), np.sqrt(np.linalg.det(gram))


def is_associative_plane(u, v, w, phi=PHI0, psi=None, metric=None, tol=1e-9):
    """Associativity test for the span of three vectors.

    The span is calibrated when the vector-valued contraction of the
    four-form with a g-orthonormal basis vanishes; the residual is the g-norm
    of that contraction for ``(u, v, w)`` divided by the g-volume of the
    triple, and the sign is that of ``phi(u, v, w)``.
    """
    g = _metric_matrix(phi, metric)
    _, volume = _orthonormal([u, v, w], g, DegenerateTriple)
    if psi is None:
        psi = STAR_PHI0 if phi is PHI0 else star(phi)
    chi = psi.interior(u).interior(v).interior(w).coeffs
    residual = float(np.sqrt(chi @ np.linalg.solve(g, chi)) / volume)
    if residual > tol:
        return PlaneTest(NOT_CALIBRATED, residual)
    return PlaneTest(CALIBRATED_POS if phi(u, v, w) > 0 else CALIBRATED_NEG, residual)


def is_coassociative_plane(u, v, w, x, phi=PHI0, psi=None, metric=None, tol=1e-9):
    """Coassociativity test for the span of four vectors.

    The residual is the norm of ``phi`` restricted to the span, measured on a
    g-orthonormal basis; the sign is that of the four-form on ``(u, v, w, x)``.
    """
    g = _metric_matrix(phi, metric)
    basis4, _ = _orthonormal([u, v, w, x], g, DegenerateQuadruple)
    if psi is None:
        psi = STAR_PHI0 if phi is PHI0 else star(phi)
    total = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            for k in range(j + 1, 4):
                total += phi(basis4[i], basis4[j], basis4[k]) ** 2
    residual = float(np.sqrt(total))
    if residual > tol:
        return PlaneTest(NOT_CALIBRATED, residual)
    return PlaneTest(CALIBRATED_POS if psi(u, v, w, x) > 0 else CALIBRATED_NEG, residual)


def coefficient_rows(form):
    """``(i, j, k[, l], value)`` rows for every nonzero coefficient."""
    return [(*idx, val) for idx, val in form.terms().items()]


def tables_csv():
    """CSV text listing all 70 coefficients of both standard forms, zeros included."""
    lines = ["form,i,j,k,l,value"]
    for idx, val in zip(basis(DIM, 3), PHI0.coeffs):
        lines.append("phi0,{},{},{},,{:g}".format(*idx, val))
    for idx, val in zip(basis(DIM, 4), STAR_PHI0.coeffs):
        lines.append("star_phi0,{},{},{},{},{:g}".format(*idx, val))
    return "\n".join(lines) + "\n"


__all__ = [
    "DIM", "PHI0", "STAR_PHI0", "Metric7", "PlaneTest", "phi0", "star_phi0", "standard_phi0",
    "standard_star_phi0", "bilinear_form",
    "metric_from_phi", "star", "cross_product", "is_associative_plane",
    "is_coassociative_plane", "coefficient_rows", "tables_csv", "basis",
]
