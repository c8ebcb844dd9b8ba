"""Multi-moment maps of the T^2 x SU(2) action on an FHN solution.

Points of the principal set are triples ``(p, q, t)`` with unit quaternions
``p, q``.  The left-invariant frame ``(E1, E2, E3, F1, F2, F3)`` is dual to
the coframe ``(e, f)`` with ``E_m(p) = -p i_m`` and ``F_m(q) = -q i_m``;
vectors on the 7-dimensional space use the coframe order of
:mod:`g2sym.fhn_structure` with ``dt`` first.
"""

from dataclasses import dataclass
from math import sqrt

import numpy as np

from . import _kernels as K
from . import quaternion as Q
from .errors import SingularPoint, UnknownCase
from .fhn_structure import ETA_TOL, assemble_phi, assemble_star_phi
from .g2_linear import metric_from_phi

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


@dataclass(frozen=True)
class HopfPair:
    v: np.ndarray
    w: np.ndarray

    @property
    def cos_theta(self):
        return float(np.clip(self.v @ self.w, -1.0, 1.0))

    @property
    def theta(self):
        return float(np.arccos(self.cos_theta))


@dataclass(frozen=True)
class KillingFrame:
    """Generators of the action as 6-vectors on ``(E1, E2, E3, F1, F2, F3)``."""

    U1: np.ndarray
    U2: np.ndarray
    V: tuple

    def lifted(self):
        """The five generators as 7-vectors with zero ``dt`` component."""
        def lift(x):
            return np.concatenate(([0.0], x))
        return lift(self.U1), lift(self.U2), tuple(lift(x) for x in self.V)


@dataclass(frozen=True)
class MomentValues:
    nu: float
    theta1: np.ndarray
    theta2: np.ndarray
    mu: np.ndarray
    eta: float

    def to_dict(self):
        return {"nu": float(self.nu), "theta1": [float(x) for x in self.theta1],
                "theta2": [float(x) for x in self.theta2], "mu": [float(x) for x in self.mu],
                "eta": float(self.eta)}


def hopf_pair(p, q):
    """``v = q p̄ i p q̄`` and ``w = q i q̄`` as vectors in R^3."""
    p = Q.check_unit(p, name="p")
    q = Q.check_unit(q, name="q")
    h = Q.mul(Q.mul(Q.conj(p), Q.I), p)
    v = Q.sandwich(q, h)[1:]
    w = Q.sandwich(q, Q.I)[1:]
    return HopfPair(v / np.linalg.norm(v), w / np.linalg.norm(w))


def killing_frame(p, q):
    """``U1 = -sum h_m E_m``, ``U2 = E1 + F1``, ``V_i = (1/2) sum_m g_{i,m} F_m``."""
    p = Q.check_unit(p, name="p")
    q = Q.check_unit(q, name="q")
    h = Q.mul(Q.mul(Q.conj(p), Q.I), p)[1:]
    g = [Q.mul(Q.mul(Q.conj(q), u), q)[1:] for u in Q.UNITS]
    u1 = np.concatenate((-h, np.zeros(3)))
    u2 = np.array([1.0, 0, 0, 1.0, 0, 0])
    vs = tuple(np.concatenate((np.zeros(3), 0.5 * gi)) for gi in g)
    return KillingFrame(u1, u2, vs)


def _field_derivative(name, p, q, z):
    """Derivative of the coefficient vector of a generator along frame vector ``z``.

    ``E_m h = 2 i_m × h`` for ``h = p̄ i p`` and likewise ``F_m g = 2 i_m × g``.
    """
    ze, zf = z[:3], z[3:]
    if name == "U1":
        h = Q.mul(Q.mul(Q.conj(p), Q.I), p)[1:]
        return np.concatenate((-2.0 * np.cross(ze, h), np.zeros(3)))
    if name == "U2":
        return np.zeros(6)
    i = int(name[1]) - 1
    g = Q.mul(Q.mul(Q.conj(q), Q.UNITS[i]), q)[1:]
    return np.concatenate((np.zeros(3), np.cross(zf, g)))


def _coefficients(name, frame):
    if name == "U1":
        return frame.U1
    if name == "U2":
        return frame.U2
    return frame.V[int(name[1]) - 1]


def lie_bracket(x, y, p, q):
    """Coefficients of ``[X, Y]`` for generators named ``U1, U2, V1, V2, V3``.

    Uses ``[E_i, E_j] = -2 E_k`` and ``[F_i, F_j] = -2 F_k`` (cyclic), the
    structure constants dual to ``de_k = 2 e_i ∧ e_j``.
    """
    p = Q.check_unit(p, name="p")
    q = Q.check_unit(q, name="q")
    frame = killing_frame(p, q)
    xv, yv = _coefficients(x, frame), _coefficients(y, frame)
    out = _field_derivative(y, p, q, xv) - _field_derivative(x, p, q, yv)
    out[:3] -= 2.0 * np.cross(xv[:3], yv[:3])
    out[3:] -= 2.0 * np.cross(xv[3:], yv[3:])
    return out


def act(p, q, lam1, lam2, gamma):
    """Action of ``(lam1, lam2, gamma)`` in T^2 x SU(2): ``(lam1 p lam2̄, gamma q lam2̄)``."""
    return Q.mul(Q.mul(lam1, p), Q.conj(lam2)), Q.mul(Q.mul(gamma, q), Q.conj(lam2))


def frame_flow(p, q, direction, s):
    """Move ``(p, q)`` along frame vector ``direction`` (1..6 = E1..F3) for time ``s``."""
    m = (direction - 1) % 3
    step = Q.exp_imag(-s * Q.UNITS[m][1:])
    if direction <= 3:
        return Q.mul(p, step), q
    return p, Q.mul(q, step)


# -- eta ---------------------------------------------------------------------

def eta(solution, t):
    """Primitive of the eta integrand, anchored to zero at the left endpoint."""
    t = float(t)
    solution._check(t)
    k = K.locate(solution.ts, t)
    rest = K.adaptive_simpson_eta(solution.ts, solution.ys, solution.ds, solution.ss,
                                  solution.ts[k], t, solution.params.c1, solution.params.c2,
                                  ETA_TOL)
    return float(solution._eta_prefix[k] + rest)


def eta_integrand(solution, t):
    return float(K.eta_integrand(solution.ts, solution.ys, solution.ds, solution.ss, float(t),
                                 solution.params.c1, solution.params.c2))


# -- moment maps -------------------------------------------------------------

def moment_values(pair, t, solution, with_eta=True):
    """Closed-form multi-moment maps at ``(pair, t)``."""
    t = float(t)
    a, b, x1, x2, _ = solution.values(t)
    c1, c2 = solution.params.c1, solution.params.c2
    v, w = pair.v, pair.w
    vw = float(v @ w)
    nu = -4.0 * (b - c1) * vw
    mu = -4.0 * x1 * np.cross(v, w)
    theta1 = 2.0 * a * v - 2.0 * (a - b) * vw * w
    theta2 = -2.0 * (b + c2) * w
    e = eta(solution, t) if with_eta else float("nan")
    return MomentValues(float(nu), theta1, theta2, mu, e)


def moment_values_at(p, q, t, solution, with_eta=True):
    return moment_values(hopf_pair(p, q), t, solution, with_eta)


def bs_moment_values(case, pair, r, c):
    """Tabulated Bryant-Salamon multi-moment maps for the three torus choices."""
    if case not in (0, 1, 2):
        raise UnknownCase(f"case must be 0, 1 or 2, got {case}")
    v, w = pair.v, pair.w
    vw = float(v @ w)
    s3 = sqrt(3.0)
    wide = s3 / 4.0 * (3.0 * c + 4.0 * r * r)
    twist = 3.0 * r * r * (c + r * r) ** (1.0 / 3.0) * np.cross(v, w)
    if case == 0:
        return MomentValues(2 * s3 * r * r * vw, wide * v, -s3 * r * r * w, -twist, float("nan"))
    if case == 1:
        return MomentValues(-s3 / 2.0 * (3 * c + 4 * r * r) * vw, s3 * r * r * v, -s3 * r * r * w,
                            -twist, float("nan"))
    return MomentValues(-2 * s3 * r * r * vw, wide * v, -s3 * r * r * w, twist, float("nan"))


def pointwise_formulas(p, q, t, solution):
    """Contraction formulas for ``mu`` and ``theta`` at one point.

    ``mu_k = -*phi(U1, U2, V_i, V_j)`` and ``theta^l_k = phi(U_l, V_i, V_j)``
    for cyclic ``(i, j, k)``.  With the closed-form ``theta`` the differential
    is ``d theta^l_i = -phi(U_l, V_i, .)``, so the contraction carries a plus.
    """
    phi = assemble_phi(solution, t)
    psi = assemble_star_phi(solution, t)
    u1, u2, vs = killing_frame(p, q).lifted()
    mu = np.zeros(3)
    th1 = np.zeros(3)
    th2 = np.zeros(3)
    for i, j, k in _CYCLIC:
        mu[k] = -psi(u1, u2, vs[i], vs[j])
        th1[k] = phi(u1, vs[i], vs[j])
        th2[k] = phi(u2, vs[i], vs[j])
    return {"mu": mu, "theta1": th1, "theta2": th2}


# -- gradient identities -----------------------------------------------------

def _component(which):
    """Parse ``nu``, ``mu_i`` or ``theta<l>_<i>`` (1-based indices)."""
    if which == "nu":
        return "nu", None, None
    name, _, idx = which.partition("_")
    if name == "mu" and idx in ("1", "2", "3"):
        return "mu", None, int(idx) - 1
    if name in ("theta1", "theta2") and idx in ("1", "2", "3"):
        return "theta", int(name[-1]), int(idx) - 1
    raise ValueError(f"unknown moment component {which!r}")


def _scalar(kind, l, i, p, q, t, solution):
    m = moment_values(hopf_pair(p, q), t, solution, with_eta=False)
    if kind == "nu":
        return m.nu
    if kind == "mu":
        return m.mu[i]
    return (m.theta1 if l == 1 else m.theta2)[i]


def directional_derivatives(func, p, q, t, solution, h, order=2):
    """Central differences of ``func(p, q, t)`` along ``dt, E1..E3, F1..F3``."""
    if order == 2:
        offsets, weights = (1, -1), (0.5, -0.5)
    elif order == 4:
        offsets, weights = (2, 1, -1, -2), (-1 / 12, 8 / 12, -8 / 12, 1 / 12)
    else:
        raise ValueError("order must be 2 or 4")
    solution._check(t, pad=max(offsets) * h)
    out = np.zeros(7)
    for o, wgt in zip(offsets, weights):
        out[0] += wgt * func(p, q, t + o * h)
    for d in range(1, 7):
        for o, wgt in zip(offsets, weights):
            pp, qq = frame_flow(p, q, d, o * h)
            out[d] += wgt * func(pp, qq, t)
    return out / h


def gradient_identity_residual(which, p, q, t, solution, h=1e-4, order=2, relative=False):
    """Largest gap between a finite-difference differential and its defining form.

    ``which`` is ``"nu"`` (against ``phi(U1, U2, .)``), ``"mu_i"`` (against
    ``*phi(U1, U2, V_i, .)``) or ``"theta<l>_<i>"`` (against
    ``-phi(U_l, V_i, .)``), with indices starting at 1.
    """
    kind, l, i = _component(which)
    frame = killing_frame(p, q)
    sv = np.linalg.svd(np.array([frame.U1, frame.U2, *frame.V]), compute_uv=False)
    if sv[-1] < 1e-8:
        raise SingularPoint("generators are linearly dependent at this point")
    derivs = directional_derivatives(lambda pp, qq, tt: _scalar(kind, l, i, pp, qq, tt, solution),
                                     p, q, t, solution, h, order)
    u1, u2, vs = killing_frame(p, q).lifted()
    eye = np.eye(7)
    if kind == "nu":
        form = assemble_phi(solution, t)
        target = np.array([form(u1, u2, eye[a]) for a in range(7)])
    elif kind == "mu":
        form = assemble_star_phi(solution, t)
        target = np.array([form(u1, u2, vs[i], eye[a]) for a in range(7)])
    else:
        form = assemble_phi(solution, t)
        ul = u1 if l == 1 else u2
        target = np.array([-form(ul, vs[i], eye[a]) for a in range(7)])
    gap = float(np.max(np.abs(derivs - target)))
    return gap / max(1.0, float(np.max(np.abs(target)))) if relative else gap


def cross_direction(p, q, t, solution):
    """Coframe components of ``U1 × U2`` for the metric induced by ``phi``."""
    phi = assemble_phi(solution, t)
    metric = metric_from_phi(phi)
    u1, u2, _ = killing_frame(p, q).lifted()
    return np.linalg.solve(metric.matrix, phi.interior(u1).interior(u2).coeffs)


def derivative_along(func, direction, p, q, t, solution, h=1e-3, order=4):
    """Derivative of ``func(p, q, t)`` along a coframe-component vector."""
    return float(directional_derivatives(func, p, q, t, solution, h, order) @ direction)


def mu_along_associative_direction(p, q, t, solution, h=1e-3):
    """Derivatives of ``mu_1, mu_2, mu_3`` along ``U1 × U2`` (zero in theory)."""
    x = cross_direction(p, q, t, solution)
    return np.array([
        derivative_along(lambda pp, qq, tt, i=i: _scalar("mu", None, i, pp, qq, tt, solution),
                         x, p, q, t, solution, h)
        for i in range(3)
    ])


def su2_coassoc_obstruction(solution, samples=20, seed=0, tol=1e-9):
    """The constant ``phi(V1, V2, V3)``, checked constant along the trajectory."""
    rng = np.random.default_rng(seed)
    ts = np.linspace(solution.t_min, solution.t_max, samples)
    vals = []
    for t in ts:
        p, q = Q.random_unit(rng), Q.random_unit(rng)
        _, _, vs = killing_frame(p, q).lifted()
        vals.append(assemble_phi(solution, t)(*vs))
    vals = np.array(vals)
    spread = float(vals.max() - vals.min())
    if spread > tol * max(1.0, abs(vals.mean())):
        raise ArithmeticError(f"phi(V1, V2, V3) is not constant (spread {spread})")
    return float(vals.mean())
