"""Cohomogeneity-one G2 structures with SU(2)xSU(2)xU(1) symmetry.

The invariant coframe is ordered ``(dt, e1, e2, e3, f1, f2, f3)`` with
``d e_i = 2 e_j ∧ e_k`` and ``d f_i = 2 f_j ∧ f_k`` for cyclic ``(i, j, k)``.
Under the enhanced symmetry ``a1 = b`` and ``a2 = a3 = a``; the state is
``(a, b, x1, x2)`` with ``x1 = ȧḃ`` and ``x2 = ȧ²``.
"""

from dataclasses import dataclass, field, replace
from math import gcd, sqrt

import numpy as np

from . import _kernels as K
from .errors import (IntegrationFailure, InvalidParams, OutOfDomain, OutsideCone,
                     SingularOrbitInconsistent)
from .forms import Coframe, Form

DIAGRAMS = ("Delta_SU2", "One_x_SU2", "Kmn", "NoSingularOrbit")
COFRAME_DIM = 7
E = (1, 2, 3)
F = (4, 5, 6)
_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def _structure():
    eqs = [None] * COFRAME_DIM
    for i, j, k in _CYCLIC:
        eqs[E[i]] = Form.from_terms(COFRAME_DIM, {(E[j], E[k]): 2.0})
        eqs[F[i]] = Form.from_terms(COFRAME_DIM, {(F[j], F[k]): 2.0})
    return eqs


COFRAME = Coframe(COFRAME_DIM, _structure(), mode="constant")


@dataclass(frozen=True)
class FHNParams:
    """Constants ``c1, c2`` and the group diagram of the singular orbit."""

    c1: float
    c2: float
    diagram: str = "NoSingularOrbit"
    m: int = 0
    n: int = 0
    r0: float = 0.0

    def __post_init__(self):
        if self.diagram not in DIAGRAMS:
            raise InvalidParams(f"unknown diagram {self.diagram!r}")
        if self.diagram == "Kmn":
            if self.m * self.n <= 0 or gcd(self.m, self.n) != 1:
                raise InvalidParams("Kmn needs coprime m, n with mn > 0")
            if self.r0 == 0.0:
                raise InvalidParams("Kmn needs r0 != 0")
            r3 = self.r0 ** 3
            if not (np.isclose(self.c1, -self.m ** 2 * r3) and np.isclose(self.c2, self.n ** 2 * r3)):
                raise InvalidParams("Kmn needs c1 = -m^2 r0^3 and c2 = n^2 r0^3")
        elif self.diagram == "Delta_SU2":
            if not (self.c1 > 0 and np.isclose(self.c1 + self.c2, 0.0)):
                raise InvalidParams("Delta_SU2 needs c1 > 0 and c1 + c2 = 0")
        elif self.diagram == "One_x_SU2":
            if not (self.c1 < 0 and self.c2 == 0.0):
                raise InvalidParams("One_x_SU2 needs c1 < 0 and c2 = 0")

    @classmethod
    def kmn(cls, m, n, r0=1.0):
        r3 = r0 ** 3
        return cls(-m * m * r3, n * n * r3, "Kmn", m, n, r0)

    @classmethod
    def bryant_salamon(cls, c=1.0):
        """Parameters under which the Bryant-Salamon metric is an FHN solution."""
        return cls(-3.0 / 8.0 * sqrt(3.0) * c, 0.0, "One_x_SU2")


@dataclass(frozen=True)
class FHNState:
    t: float
    a: float
    b: float
    x1: float
    x2: float

    @property
    def adot(self):
        return sqrt(self.x2)

    @property
    def bdot(self):
        return self.x1 / sqrt(self.x2)

    def vector(self):
        return np.array([self.a, self.b, self.x1, self.x2])


def big_lambda(a1, a2, a3, params):
    """The quartic Lambda(a1, a2, a3) for constants ``params.c1, params.c2``."""
    c1, c2 = params.c1, params.c2
    return (a1 ** 4 + a2 ** 4 + a3 ** 4
            - 2 * a1 ** 2 * a2 ** 2 - 2 * a2 ** 2 * a3 ** 2 - 2 * a3 ** 2 * a1 ** 2
            + 4 * (c1 - c2) * a1 * a2 * a3
            + 2 * c1 * c2 * (a1 ** 2 + a2 ** 2 + a3 ** 2) + c1 ** 2 * c2 ** 2)


def lambda_enhanced(a, b, params):
    """Lambda with ``a1 = b`` and ``a2 = a3 = a``."""
    return K.lambda_enhanced(a, b, params.c1, params.c2)


def lambda_gradient(a, b, params):
    """Partial derivatives (dLambda/da, dLambda/db) of the enhanced Lambda."""
    return K.lambda_grad(a, b, params.c1, params.c2)


def _check_interior(a, b, x1, x2, params):
    lam = lambda_enhanced(a, b, params)
    if not (x1 > 0 and x2 > 0):
        raise OutsideCone("x1 and x2 must be positive")
    if not lam < 0:
        raise OutsideCone(f"Lambda = {lam} is not negative")
    return lam


def hamiltonian(state, params):
    """``sqrt(-Lambda) - 2 sqrt(x1^2 x2)``; zero on torsion-free trajectories."""
    lam = _check_interior(state.a, state.b, state.x1, state.x2, params)
    return sqrt(-lam) - 2.0 * sqrt(state.x1 ** 2 * state.x2)


def enhanced_ode_rhs(state, params):
    """Time derivative ``(ȧ, ḃ, ẋ1, ẋ2)`` of an interior state."""
    _check_interior(state.a, state.b, state.x1, state.x2, params)
    y = np.array([state.a, state.b, state.x1, state.x2, 0.0])
    return K.fhn_rhs(y, params.c1, params.c2, -1.0)[:4]


def default_epsilon(params):
    return 1e-3 * max(1.0, abs(params.c1) ** 0.5)


def singular_ic(params, alpha=None, epsilon=None):
    """Series seed just off the singular orbit.

    ``alpha`` is the case-specific free datum: the common quadratic
    coefficient for ``Delta_SU2``; a scalar or ``(alpha_b, alpha_a)`` pair for
    ``One_x_SU2``; the initial slope of ``a`` for ``Kmn``.  Omitted values
    are filled from the constraints (``Kmn`` defaults to slope 1).
    """
    eps = default_epsilon(params) if epsilon is None else float(epsilon)
    if eps <= 0:
        raise InvalidParams("epsilon must be positive")
    c1, c2 = params.c1, params.c2
    if params.diagram == "Delta_SU2":
        al = (c1 / 8.0) ** (1.0 / 3.0)
        if alpha is not None:
            if not np.isclose(8.0 * float(alpha) ** 3, c1, rtol=1e-9, atol=0.0):
                raise SingularOrbitInconsistent("need 8 alpha^3 = c1")
            al = float(alpha)
        a = b = c1 + 0.5 * al * eps ** 2
        adot = bdot = al * eps
    elif params.diagram == "One_x_SU2":
        if alpha is None:
            al_b = al_a = (-c1 / 8.0) ** (1.0 / 3.0)
        elif np.ndim(alpha) == 0:
            al_b = al_a = float(alpha)
        else:
            al_b, al_a = (float(x) for x in alpha)
        if al_a <= 0 or al_b <= 0 or not np.isclose(8.0 * al_b * al_a ** 2, -c1, rtol=1e-9, atol=0.0):
            raise SingularOrbitInconsistent("need positive alphas with 8 alpha1 alpha2 alpha3 = -c1")
        a = 0.5 * al_a * eps ** 2
        b = 0.5 * al_b * eps ** 2
        adot = al_a * eps
        bdot = al_b * eps
    elif params.diagram == "Kmn":
        slope = 1.0 if alpha is None else float(alpha)
        if slope <= 0:
            raise SingularOrbitInconsistent("the slope of a at the singular orbit must be positive")
        m, n, r3 = params.m, params.n, abs(params.r0) ** 3
        b0 = m * n * params.r0 ** 3
        # curvature of b fixed by H = 0 at leading order
        beta = abs(m + n) * sqrt(m * n) * r3 / slope
        a = slope * eps
        b = b0 + 0.5 * beta * eps ** 2
        adot = slope
        bdot = beta * eps
    else:
        raise SingularOrbitInconsistent("no singular orbit for this diagram")
    return FHNState(t=eps, a=a, b=b, x1=adot * bdot, x2=adot * adot)


def bs_closed_form(r, c):
    """Bryant-Salamon data at radius ``r``: (state with t=nan, dr/dt)."""
    a = sqrt(3.0) / 2.0 * r * r
    adot = sqrt(3.0) / 2.0 * r * (c + r * r) ** (1.0 / 6.0)
    drdt = 0.5 * (c + r * r) ** (1.0 / 6.0)
    return FHNState(t=float("nan"), a=a, b=a, x1=adot * adot, x2=adot * adot), drdt


def bs_radius_series(t, c):
    """Radius ``r(t)`` near the zero section, through cubic order."""
    k = 0.5 * c ** (1.0 / 6.0)
    return k * t + c ** -0.5 / 144.0 * t ** 3


ETA_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FHNSolution:
    """Dense trajectory of the enhanced system.

    Nodes carry the state ``(a, b, x1, x2, r)`` together with its first and
    second time derivatives, and values in between come from quintic Hermite
    interpolation.  ``r`` is only meaningful when ``bs_c`` is set.
    """

    params: FHNParams
    ts: np.ndarray
    ys: np.ndarray
    ds: np.ndarray
    ss: np.ndarray
    status: int = 0
    from_singular_orbit: bool = False
    bs_c: float = None
    _eta_prefix: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self._eta_prefix is None:
            prefix = K.eta_prefix(self.ts, self.ys, self.ds, self.ss, self.params.c1,
                                  self.params.c2, ETA_TOL)
            object.__setattr__(self, "_eta_prefix", prefix)

    @property
    def t_min(self):
        return float(self.ts[0])

    @property
    def t_max(self):
        return float(self.ts[-1])

    @property
    def cone_exit(self):
        """Time of the cone exit, or ``None`` if the run ended normally."""
        return self.t_max if self.status == 1 else None

    def _check(self, t, pad=0.0):
        t = np.asarray(t, dtype=float)
        lo, hi = self.t_min, self.t_max
        tol = 1e-12 * max(1.0, abs(hi))
        if np.any(t - pad < lo - tol) or np.any(t + pad > hi + tol):
            raise OutOfDomain(f"t outside [{lo}, {hi}]")
        return t

    def values(self, t, order=0):
        """Array ``(..., 5)`` of ``(a, b, x1, x2, r)`` or its derivatives."""
        t = self._check(t)
        flat = np.atleast_1d(t).ravel()
        out = K.table_eval_many(self.ts, self.ys, self.ds, self.ss, flat, order)
        return out.reshape(np.shape(t) + (K.NSTATE,))

    def state(self, t):
        a, b, x1, x2, _ = self.values(float(t))
        return FHNState(float(t), a, b, x1, x2)

    def a(self, t):
        return self.values(t)[..., 0]

    def b(self, t):
        return self.values(t)[..., 1]

    def adot(self, t):
        return np.sqrt(self.values(t)[..., 3])

    def bdot(self, t):
        v = self.values(t)
        return v[..., 2] / np.sqrt(v[..., 3])

    def radius(self, t):
        if self.bs_c is None:
            raise ValueError("radius is only tracked for Bryant-Salamon runs")
        return self.values(t)[..., 4]

    def t_at_radius(self, r):
        """Invert the tracked radius (monotone) by bisection on the dense output."""
        if self.bs_c is None:
            raise ValueError("radius is only tracked for Bryant-Salamon runs")
        rs = self.ys[:, 4]
        if not rs[0] <= r <= rs[-1]:
            raise OutOfDomain(f"radius {r} outside [{rs[0]}, {rs[-1]}]")
        k = int(np.searchsorted(rs, r))
        lo, hi = self.ts[max(k - 1, 0)], self.ts[min(k, len(rs) - 1)]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.radius(mid) < r:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    def hamiltonian_samples(self):
        a, b, x1, x2 = self.ys[:, 0], self.ys[:, 1], self.ys[:, 2], self.ys[:, 3]
        lam = _lambda_array(a, b, self.params)
        return np.sqrt(-lam) - 2.0 * np.sqrt(x1 * x1 * x2)

    def restrict(self, t0, t1):
        """Sub-trajectory on ``[t0, t1]`` (interior nodes plus interpolated ends)."""
        self._check(np.array([t0, t1]))
        keep = (self.ts > t0) & (self.ts < t1)
        ends = np.array([t0, t1])
        yv, dv, sv = (self.values(ends, o) for o in (0, 1, 2))
        ts = np.concatenate(([t0], self.ts[keep], [t1]))
        ys = np.vstack([yv[:1], self.ys[keep], yv[1:]])
        ds = np.vstack([dv[:1], self.ds[keep], dv[1:]])
        ss = np.vstack([sv[:1], self.ss[keep], sv[1:]])
        return replace(self, ts=ts, ys=ys, ds=ds, ss=ss, status=0,
                       from_singular_orbit=self.from_singular_orbit and t0 <= self.t_min,
                       _eta_prefix=None)


def solution_from_nodes(params, ts, a, b, adot, bdot, from_singular_orbit=False):
    """Rebuild a dense solution from tabulated ``(t, a, b, a', b')`` nodes.

    Derivatives at the nodes come from the equations of motion, so the
    Hermite data are exact up to the precision of the table.
    """
    ts = np.asarray(ts, dtype=float)
    n = len(ts)
    if n < 2 or np.any(np.diff(ts) <= 0):
        raise ValueError("need at least two strictly increasing times")
    ys = np.zeros((n, K.NSTATE))
    ys[:, 0], ys[:, 1] = a, b
    ys[:, 2] = np.asarray(adot) * np.asarray(bdot)
    ys[:, 3] = np.asarray(adot) ** 2
    ds = np.empty_like(ys)
    ss = np.empty_like(ys)
    for k in range(n):
        ds[k] = K.fhn_rhs(ys[k], params.c1, params.c2, -1.0)
        ss[k] = K.fhn_second_derivative(ys[k], ds[k], params.c1, params.c2, -1.0)
    return FHNSolution(params, ts, ys, ds, ss, 0, bool(from_singular_orbit), None)


def _lambda_array(a, b, params):
    c1, c2 = params.c1, params.c2
    s = b * b + c1 * c2
    return -(4.0 * a * a * (b - c1) * (b + c2) - s * s)


def integrate(params, initial, t_end, tol=1e-10, bs_c=None, r0=None, max_steps=200000,
              max_step=None, from_singular_orbit=None):
    """Integrate the enhanced system from ``initial`` to ``t_end``.

    Stops early at a cone exit (``Lambda -> 0``), recorded in the solution's
    ``status``.  When ``bs_c`` is given the Bryant-Salamon radius is
    integrated alongside, starting from ``r0`` (or its series value).
    """
    _check_interior(initial.a, initial.b, initial.x1, initial.x2, params)
    if bs_c is not None and r0 is None:
        r0 = bs_radius_series(initial.t, bs_c)
    y0 = np.array([initial.a, initial.b, initial.x1, initial.x2, 0.0 if r0 is None else r0])
    c = -1.0 if bs_c is None else float(bs_c)
    span = abs(t_end - initial.t)
    cap = span if max_step is None else float(max_step)
    h0 = max(1e-3 * initial.t if initial.t > 0 else 1e-4, 1e-6) if span > 0 else 0.0
    ts, ys, ds, ss, status = K.integrate_fhn(y0, float(initial.t), float(t_end), params.c1,
                                             params.c2, c, tol, tol, h0, max_steps, cap)
    if status == 2:
        raise IntegrationFailure(f"step size underflow at t = {ts[-1]}")
    if status == 3:
        raise IntegrationFailure(f"step limit reached at t = {ts[-1]}")
    if ts[-1] < ts[0]:
        ts, ys, ds, ss = ts[::-1].copy(), ys[::-1].copy(), ds[::-1].copy(), ss[::-1].copy()
    if len(ts) < 2:
        raise IntegrationFailure("trajectory has fewer than two nodes")
    if from_singular_orbit is None:
        from_singular_orbit = params.diagram != "NoSingularOrbit"
    return FHNSolution(params, ts, ys, ds, ss, int(status), bool(from_singular_orbit), bs_c)


def solve_from_singular_orbit(params, t_end, alpha=None, epsilon=None, tol=1e-10, bs_c=None,
                              max_step=None):
    """Seed with :func:`singular_ic` and integrate forward."""
    seed = singular_ic(params, alpha, epsilon)
    return integrate(params, seed, t_end, tol, bs_c=bs_c, max_step=max_step,
                     from_singular_orbit=True)


def bryant_salamon_solution(c=1.0, r_max=5.0, tol=1e-11, epsilon=None):
    """Numerical Bryant-Salamon trajectory from the zero section to ``r_max``."""
    params = FHNParams.bryant_salamon(c)
    # t(r) = int 2 (c + s^2)^(-1/6) ds bounds the time needed to reach r_max
    t_end = 2.0 * r_max * c ** (-1.0 / 6.0) + 1.0
    sol = solve_from_singular_orbit(params, t_end, epsilon=epsilon, tol=tol, bs_c=c)
    if sol.ys[-1, 4] < r_max:
        raise IntegrationFailure("radius did not reach r_max")
    t_stop = sol.t_at_radius(r_max)
    return sol.restrict(sol.t_min, t_stop)


# -- forms on the invariant coframe -----------------------------------------

def _enhanced(values):
    a, b, x1, x2 = values[0], values[1], values[2], values[3]
    adot = sqrt(x2)
    bdot = x1 / adot
    return (b, a, a), (bdot, adot, adot)


def phi_from_data(coeffs, rates, params):
    """phi = -8c1 e123 - 8c2 f123 + 4 d(sum a_i e_i ∧ f_i), expanded on the coframe."""
    n = COFRAME_DIM
    out = Form.from_terms(n, {(E[0], E[1], E[2]): -8.0 * params.c1,
                              (F[0], F[1], F[2]): -8.0 * params.c2})
    two = Form(n, 2)
    for i in range(3):
        two = two + Form.from_terms(n, {(E[i], F[i]): coeffs[i]})
    dt_part = Form(n, 3)
    for i in range(3):
        dt_part = dt_part + Form.from_terms(n, {(0, E[i], F[i]): rates[i]})
    return out + 4.0 * (Form(n, 3, COFRAME.d_matrix(2) @ two.coeffs) + dt_part)


def star_phi_from_data(coeffs, rates, params):
    """The coassociative 4-form of a torsion-free solution, from its closed formula."""
    c1, c2 = params.c1, params.c2
    a1, a2, a3 = coeffs
    neg_lam = -big_lambda(a1, a2, a3, params)
    if neg_lam <= 0:
        raise OutsideCone("Lambda must be negative")
    w = 8.0 / sqrt(neg_lam)
    squares = a1 * a1 + a2 * a2 + a3 * a3 + c1 * c2
    triple = 2.0 * a1 * a2 * a3
    terms = {}
    for i, j, k in _CYCLIC:
        terms[(E[j], F[j], E[k], F[k])] = 16.0 * rates[j] * rates[k]
    terms[(0, E[0], E[1], E[2])] = w * (triple - c1 * squares)
    terms[(0, F[0], F[1], F[2])] = w * (triple + c2 * squares)
    for i, j, k in _CYCLIC:
        core = coeffs[i] * (coeffs[i] ** 2 - coeffs[j] ** 2 - coeffs[k] ** 2 + c1 * c2)
        terms[(0, E[i], F[j], F[k])] = w * (core - 2.0 * c2 * coeffs[j] * coeffs[k])
        terms[(0, F[i], E[j], E[k])] = w * (core + 2.0 * c1 * coeffs[j] * coeffs[k])
    return Form.from_terms(COFRAME_DIM, terms)


def assemble_phi(solution, t):
    coeffs, rates = _enhanced(solution.values(float(t)))
    return phi_from_data(coeffs, rates, solution.params)


def assemble_star_phi(solution, t):
    coeffs, rates = _enhanced(solution.values(float(t)))
    return star_phi_from_data(coeffs, rates, solution.params)


def closedness_residual(solution, t, h=1e-4, perturb_a=0.0):
    """``(|dphi|, |d*phi|)`` at ``t`` with a central difference of step ``h``.

    ``perturb_a`` (a number, or a function of time) is added to the three
    coefficients ``a_i`` while their rates are left alone, which breaks the
    torsion-free equations on purpose.  A constant shift keeps ``phi`` exact,
    so only ``d*phi`` sees it.
    """
    solution._check(float(t), pad=h)
    shift = perturb_a if callable(perturb_a) else (lambda _t: perturb_a)

    def data(s):
        coeffs, rates = _enhanced(solution.values(float(t) + s))
        extra = shift(float(t) + s)
        return tuple(c + extra for c in coeffs), rates

    def phi_at(s):
        return phi_from_data(*data(s), solution.params)

    def star_at(s):
        return star_phi_from_data(*data(s), solution.params)

    d_phi = COFRAME.exterior_derivative(phi_at, 0.0, h)
    d_star = COFRAME.exterior_derivative(star_at, 0.0, h)
    return d_phi.norm(), d_star.norm()


def closedness_residual_bs(r, c, h=1e-4):
    """Closedness residuals of the Bryant-Salamon closed form at radius ``r``.

    Time enters through a cubic Taylor model of ``r(t)`` built from
    ``dr/dt = g(r) = (c + r^2)^(1/6) / 2``.
    """
    params = FHNParams.bryant_salamon(c)
    q = c + r * r
    g = 0.5 * q ** (1.0 / 6.0)
    dg = (r / 6.0) * q ** (-5.0 / 6.0)
    ddg = q ** (-5.0 / 6.0) / 6.0 - (5.0 / 18.0) * r * r * q ** (-11.0 / 6.0)
    r2 = dg * g
    r3 = ddg * g * g + dg * dg * g

    def data(s):
        state, _ = bs_closed_form(r + g * s + 0.5 * r2 * s * s + r3 * s ** 3 / 6.0, c)
        return (state.a,) * 3, (state.adot,) * 3

    d_phi = COFRAME.exterior_derivative(lambda s: phi_from_data(*data(s), params), 0.0, h)
    d_star = COFRAME.exterior_derivative(lambda s: star_phi_from_data(*data(s), params), 0.0, h)
    return d_phi.norm(), d_star.norm()
