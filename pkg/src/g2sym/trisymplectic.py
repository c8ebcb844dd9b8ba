"""Coherent symplectic triples on ``(a, b) x SU(2)`` from the tau matrix ODE.

The coframe is ``(delta0, delta1, delta2, delta3)`` with ``delta0 = dR`` and
``d delta_i = -delta_j ∧ delta_k`` for cyclic ``(i, j, k)``.  Coefficient
matrices depend on ``R``; along the group they transform equivariantly, which
is what the ``"generated"`` coframe mode encodes.
"""

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import NonPositiveDet, NotCoherent, OutOfDomain, SingularTau
from .forms import Coframe, Form
from .ode import StepUnderflow, dopri5

DIM = 4
DET_TOL = 1e-14
_CYCLIC = ((1, 2, 3), (2, 3, 1), (3, 1, 2))
# delta-bar = (delta23, delta31, delta12)
_BAR = ((2, 3), (3, 1), (1, 2))


def _structure():
    eqs = [None] * DIM
    for i, j, k in _CYCLIC:
        eqs[i] = Form.from_terms(DIM, {(j, k): -1.0})
    return eqs


COFRAME = Coframe(DIM, _structure(), mode="generated")


# -- T paths -----------------------------------------------------------------

@dataclass(frozen=True)
class TMatrixPath:
    """``R -> T(R)``, a symmetric positive-definite 2x2 matrix, with its derivative."""

    value: object
    derivative: object
    name: str = "custom"

    def block(self, R):
        t = np.asarray(self.value(R), dtype=float)
        if t.shape != (2, 2):
            raise ValueError("T(R) must be 2x2")
        return t

    def padded(self, R):
        return pad(self.block(R))

    def padded_derivative(self, R):
        d = np.zeros((3, 3))
        d[1:, 1:] = np.asarray(self.derivative(R), dtype=float)
        return d

    def Q(self, R):
        inv = np.linalg.inv(self.block(R))
        return inv @ inv

    def check(self, R):
        t = self.block(R)
        if not np.allclose(t, t.T, rtol=0, atol=1e-14) or np.min(np.linalg.eigvalsh(t)) <= 0:
            raise ValueError(f"T({R}) is not symmetric positive definite")
        return t

    @classmethod
    def identity(cls):
        return cls(lambda R: np.eye(2), lambda R: np.zeros((2, 2)), "identity")

    @classmethod
    def scaled(cls, s, ds):
        """``T = s(R) Id`` for a positive function ``s`` with derivative ``ds``."""
        return cls(lambda R: s(R) * np.eye(2), lambda R: ds(R) * np.eye(2), "scaled")


def pad(block):
    out = np.zeros((3, 3))
    out[0, 0] = 1.0
    out[1:, 1:] = block
    return out


# -- tau ODE -----------------------------------------------------------------

@dataclass(frozen=True)
class TauState:
    R: float
    tau: np.ndarray


def _check_tau(tau, R=None):
    det = np.linalg.det(tau)
    if abs(det) < DET_TOL:
        raise SingularTau(f"|det tau| = {abs(det):.3g} below {DET_TOL}"
                          + ("" if R is None else f" at R = {R}"))
    return det


def tau_rhs(state, T_path):
    """``(dT/dR) T^{-1} tau + (tau^T)^{-1}``."""
    tau = np.asarray(state.tau, dtype=float)
    _check_tau(tau, state.R)
    T = T_path.padded(state.R)
    dT = T_path.padded_derivative(state.R)
    return dT @ np.linalg.solve(T, tau) + np.linalg.inv(tau.T)


class TauTrajectory:
    """Nodes of an integrated tau path; values between nodes are re-integrated."""

    def __init__(self, T_path, Rs, taus, tol, singular_R=None):
        self.T_path = T_path
        self.Rs = Rs
        self.taus = taus
        self.tol = tol
        self.singular_R = singular_R
        order = np.argsort(Rs)
        self._sorted = Rs[order]
        self._order = order

    @property
    def R_min(self):
        return float(self._sorted[0])

    @property
    def R_max(self):
        return float(self._sorted[-1])

    def states(self):
        return [TauState(float(R), t.copy()) for R, t in zip(self.Rs, self.taus)]

    def __len__(self):
        return len(self.Rs)

    def _rhs(self, R, y):
        return tau_rhs(TauState(R, y.reshape(3, 3)), self.T_path).ravel()

    def __call__(self, R):
        """tau at ``R``, integrated from the nearest node to full accuracy."""
        R = float(R)
        slack = 1e-12 * max(1.0, abs(self.R_max))
        if R < self.R_min - slack or R > self.R_max + slack:
            raise OutOfDomain(f"R = {R} outside [{self.R_min}, {self.R_max}]")
        k = int(np.clip(np.searchsorted(self._sorted, R), 1, len(self._sorted) - 1))
        if abs(self._sorted[k - 1] - R) < abs(self._sorted[k] - R):
            k -= 1
        idx = self._order[k]
        R0, tau0 = float(self.Rs[idx]), self.taus[idx]
        if R == R0:
            return tau0.copy()
        _, ys, _ = dopri5(self._rhs, R0, tau0.ravel(), R, rtol=1e-13, atol=1e-14)
        return ys[-1].reshape(3, 3)

    def det(self):
        return np.linalg.det(self.taus)


def integrate_tau(T_path, tau0, R_range, tol=1e-12, max_step=None, strict=False):
    """Integrate the tau ODE over ``R_range = (R0, R1)`` starting from ``tau0`` at ``R0``.

    When ``det tau`` degenerates the trajectory is truncated and the last
    resolvable ``R`` is stored in ``singular_R``; ``strict=True`` raises
    :class:`SingularTau` instead.
    """
    R0, R1 = (float(x) for x in R_range)
    tau0 = np.asarray(tau0, dtype=float).reshape(3, 3)
    _check_tau(tau0, R0)
    T_path.check(R0)
    traj_rhs = TauTrajectory(T_path, np.array([R0]), tau0[None], tol)._rhs
    cap = np.inf if max_step is None else float(max_step)
    singular = None
    try:
        Rs, ys, _ = dopri5(traj_rhs, R0, tau0.ravel(), R1, rtol=tol, atol=tol, max_step=cap)
    except StepUnderflow as exc:
        singular = exc.t
        # rerun up to the last accepted point so the nodes are kept
        Rs, ys, _ = dopri5(traj_rhs, R0, tau0.ravel(), exc.t, rtol=tol, atol=tol, max_step=cap)
    taus = ys.reshape(-1, 3, 3)
    dets = np.linalg.det(taus)
    small = np.nonzero(np.abs(dets) < DET_TOL)[0]
    if small.size:
        cut = int(small[0])
        singular = float(Rs[cut])
        Rs, taus = Rs[:cut], taus[:cut]
    if singular is not None and strict:
        err = SingularTau(f"tau degenerates near R = {singular}")
        err.R = singular
        raise err
    return TauTrajectory(T_path, Rs, taus, tol, singular)


def hyperkahler_tau(R, k):
    """Diagonal solution ``tau_ii = sqrt(2R + k_i)`` for ``T = Id``."""
    return np.diag(np.sqrt(2.0 * R + np.asarray(k, dtype=float)))


# -- from tau to forms -------------------------------------------------------

def adjugate(m):
    m = np.asarray(m, dtype=float)
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(m, j, axis=0), i, axis=1)
            out[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return out


def eta_from_tau(tau):
    """The positive solution ``eta = adj(tau^T) / sqrt(det tau)`` of ``tau = adj(eta^T)``."""
    tau = np.asarray(tau, dtype=float)
    det = np.linalg.det(tau)
    if det <= 0:
        raise NonPositiveDet(f"det tau = {det} is not positive")
    return adjugate(tau.T) / sqrt(det)


def metric_hat(tau):
    """``g(V_i, V_j) = eta^T eta``."""
    eta = eta_from_tau(tau)
    return eta.T @ eta


def _sigma(tau, sign=1.0):
    """Rows ``sign (1/det eta) delta0 ∧ eta delta + tau delta-bar``."""
    eta = eta_from_tau(tau)
    f = sign / np.linalg.det(eta)
    out = []
    for i in range(3):
        terms = {(0, j + 1): f * eta[i, j] for j in range(3)}
        for j, pair in enumerate(_BAR):
            terms[pair] = tau[i, j]
        out.append(Form.from_terms(DIM, terms))
    return out


def sigma_forms(tau):
    """The orthogonalized triple ``sigma = (sigma0, sigma1, sigma2)``."""
    return _sigma(np.asarray(tau, dtype=float))


def sigma_minus_forms(tau):
    """``-alpha0 ∧ alpha_i + alpha_j ∧ alpha_k``: the triple with ``alpha0`` reversed."""
    return _sigma(np.asarray(tau, dtype=float), -1.0)


def alpha_forms(tau):
    """Orthonormal coframe ``alpha0 = delta0 / det(eta)``, ``alpha_i = sum_j eta_ij delta_j``."""
    eta = eta_from_tau(tau)
    a0 = Form.from_terms(DIM, {(0,): 1.0 / np.linalg.det(eta)})
    rest = [Form(DIM, 1, np.concatenate(([0.0], eta[i]))) for i in range(3)]
    return [a0] + rest


def _combine(matrix, forms):
    out = []
    for row in matrix:
        acc = Form(DIM, 2)
        for c, f in zip(row, forms):
            acc = acc + f * c
        out.append(acc)
    return out


@dataclass
class CoherentTriple:
    sigma: list
    sigma_bar: list
    Q: np.ndarray
    vol: float
    eta: np.ndarray
    tau: np.ndarray

    def wedge_matrix(self, bar=True):
        forms = self.sigma_bar if bar else self.sigma
        return np.array([[forms[i].wedge(forms[j]).coeffs[0] for j in range(3)] for i in range(3)])

    def residuals(self):
        """Deviations from the three coherence conditions and from ``Q``."""
        w = self.wedge_matrix()
        w00 = w[0, 0]
        return {
            "mixed": float(max(abs(w[0, 1]), abs(w[0, 2])) / abs(w00)),
            "volume": float(w00 / self.vol),
            "Q": float(np.max(np.abs(w[1:, 1:] / w00 - self.Q))),
            "Q_min_eig": float(np.min(np.linalg.eigvalsh(w[1:, 1:] / w00))),
        }

    def check(self, tol=1e-10):
        r = self.residuals()
        if r["mixed"] > tol or r["volume"] <= 0 or r["Q"] > tol or r["Q_min_eig"] <= 0:
            raise NotCoherent(f"coherence violated: {r}")
        return r


def reconstruct_triple(state, T_path):
    """Forms ``sigma`` from ``tau`` and ``sigma_bar = T^{-1} sigma``, with ``Q = T^{-2}``."""
    tau = np.asarray(state.tau, dtype=float)
    _check_tau(tau, state.R)
    sigma = sigma_forms(tau)
    T = T_path.padded(state.R)
    sigma_bar = _combine(np.linalg.inv(T), sigma)
    vol = 0.5 * sigma[0].wedge(sigma[0]).coeffs[0]
    return CoherentTriple(sigma, sigma_bar, T_path.Q(state.R), float(vol), eta_from_tau(tau), tau)


# -- closedness ------------------------------------------------------------------

def _tau_at(trajectory, R, perturb):
    tau = trajectory(R)
    if perturb is not None:
        tau = tau + (perturb(R) if callable(perturb) else np.asarray(perturb, dtype=float))
    return tau


def closedness_residual_triple(trajectory, i, R, h=1e-4, perturb=None):
    """Coefficient norm of ``d sigma_bar_i`` by central differences in ``R``.

    ``perturb`` (a 3x3 array or a callable of ``R``) is added to ``tau``
    before the forms are built.
    """
    if not trajectory.R_min <= R - h and R + h <= trajectory.R_max:
        raise OutOfDomain(f"R +- h = {R} +- {h} leaves [{trajectory.R_min}, {trajectory.R_max}]")
    T_path = trajectory.T_path

    def form(s):
        tau = _tau_at(trajectory, R + s, perturb)
        sigma = sigma_forms(tau)
        return _combine(np.linalg.inv(T_path.padded(R + s)), sigma)[i]

    return COFRAME.exterior_derivative(form, 0.0, h).norm()


# -- curvature pair ----------------------------------------------------------

@dataclass
class FPair:
    F_plus: list
    F_minus: list
    residual: float
    trace: float = None
    trace_satisfied: bool = None


def orthogonality_trace(A, Q):
    """``Tr(A Q)``, which vanishes for an orthogonal ``F_+ = (sigma_bar1, sigma_bar2) A``."""
    return float(np.trace(np.asarray(A, dtype=float) @ np.asarray(Q, dtype=float)))


def _f_forms(tau, a):
    sp = sigma_forms(tau)
    sm = sigma_minus_forms(tau)
    # F_+^k = sum_i a_ik sigma_i and F_-^k = -sum_i a_ik sigma^-_i
    fp = _combine(a.T, sp)
    fm = _combine(-a.T, sm)
    return fp, fm


def construct_F_pair(trajectory, a, R, h=1e-4, A=None, tol=1e-10):
    """``F_+ = a sigma`` and ``F_- = -a sigma^-`` at ``R``, with ``a(R)`` a 3x2 matrix.

    ``residual`` is the largest coefficient norm of ``d(F_+ + F_-)`` over the
    two components.  When ``A`` is given the trace condition is reported too.
    """
    tau = trajectory(R)
    a_r = np.asarray(a(R), dtype=float).reshape(3, 2)
    fp, fm = _f_forms(tau, a_r)
    residual = 0.0
    if np.any(a_r != 0) or np.any(np.asarray(a(R + h)) != 0) or np.any(np.asarray(a(R - h)) != 0):
        for k in range(2):
            def total(s, k=k):
                p, m = _f_forms(trajectory(R + s), np.asarray(a(R + s), dtype=float).reshape(3, 2))
                return p[k] + m[k]
            residual = max(residual, COFRAME.exterior_derivative(total, 0.0, h).norm())
    out = FPair(fp, fm, float(residual))
    if A is not None:
        Q = trajectory.T_path.Q(R)
        out.trace = orthogonality_trace(A, Q)
        out.trace_satisfied = abs(out.trace) <= tol * max(1.0, np.abs(A).max() * np.abs(Q).max())
    return out


def difference_residual(trajectory, R, h=1e-4):
    """Largest coefficient norm of ``d(sigma_i - sigma^-_i)``."""
    worst = 0.0
    for i in range(3):
        def diff(s, i=i):
            tau = trajectory(R + s)
            return sigma_forms(tau)[i] - sigma_minus_forms(tau)[i]
        worst = max(worst, COFRAME.exterior_derivative(diff, 0.0, h).norm())
    return worst
