"""Calibrated families on the quotient ``B = (0, pi) x I`` with coordinates ``(theta, t)``.

Associatives project to level sets of ``|mu| = u(t) sin(theta)`` and
``T^3``-invariant coassociatives to level sets of ``nu = v(t) cos(theta)``.
For an FHN trajectory ``u = 4 a' b'`` and ``v = -4 (b - c1)``; the
Bryant-Salamon model uses the radius, ``u = 3 r^2 (c + r^2)^(1/3)`` and
``v = 2 sqrt(3) r^2``.
"""

import csv
import io
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np

from . import _kernels as K
from . import quaternion as Q
from .errors import EmptyLevel, HypothesisFailed, IOFailure, Unclassifiable, UnknownCase
from .fhn_structure import assemble_phi
from .g2_linear import metric_from_phi
from .multimoment import frame_flow, hopf_pair

ASSOCIATIVE = "associative"
COASSOCIATIVE = "coassociative"
TAGS = ("theta_0", "theta_pi", "singular_orbit", "cone_exit", "domain_end")

T2xR = "T2xR"
S1xR2 = "S1xR2"
S3 = "S3"
UNKNOWN = "unknown/incomplete"

SMOOTH_T3 = "smooth_T3xR"
SMOOTH_T2 = "smooth_T2xR2"
SINGULAR = "singular_HLcone"
AWAY = "not_through_singular_set"


@dataclass(frozen=True)
class QuotientPoint:
    theta: float
    t: float

    @classmethod
    def from_pair(cls, pair, t):
        return cls(pair.theta, float(t))


@dataclass
class LevelSetCurve:
    kind: str
    level: float
    points: np.ndarray
    endpoints: tuple
    topology: str = ""
    in_singular_orbit: bool = False

    @property
    def theta(self):
        return self.points[:, 0]

    @property
    def t(self):
        return self.points[:, 1]


@dataclass(frozen=True)
class CoassocFiberSpec:
    target: tuple
    singular: bool = False


class QuotientModel:
    """The functions ``u, v`` on a solution's time interval.

    ``model="fhn"`` reads them off the trajectory; ``model="bs"`` uses the
    Bryant-Salamon closed forms in the tracked radius.
    """

    def __init__(self, solution, model="fhn"):
        if model not in ("fhn", "bs"):
            raise UnknownCase(f"unknown quotient model {model!r}")
        if model == "bs" and solution.bs_c is None:
            raise UnknownCase("the bs model needs a Bryant-Salamon trajectory")
        self.solution = solution
        self.name = model
        self.code = K.MODEL_FHN if model == "fhn" else K.MODEL_BS
        self.c = -1.0 if solution.bs_c is None else float(solution.bs_c)

    @property
    def t_min(self):
        return self.solution.t_min

    @property
    def t_max(self):
        return self.solution.t_max

    def _args(self):
        s = self.solution
        return s.ts, s.ys, s.ds, s.ss, s.params.c1, self.c

    def uv(self, t):
        """``(u, u', v, v')`` at time ``t``."""
        return K.quotient_uv(self.code, *self._args(), float(t))

    def level(self, kind, theta, t):
        u, _, v, _ = self.uv(t)
        return u * np.sin(theta) if kind == ASSOCIATIVE else v * np.cos(theta)

    def gradient(self, kind, theta, t):
        code = K.CURVE_ASSOC if kind == ASSOCIATIVE else K.CURVE_COASSOC
        _, ft, fs = K.level_function(self.code, code, *self._args(), 0.0, float(theta), float(t))
        return np.array([ft, fs])


def _model(solution, model):
    return model if isinstance(model, QuotientModel) else QuotientModel(solution, model)


def _tag(code, solution):
    if code == K.END_THETA_0:
        return "theta_0"
    if code == K.END_THETA_PI:
        return "theta_pi"
    if code == K.END_LOW:
        return "singular_orbit" if solution.from_singular_orbit else "domain_end"
    if code == K.END_HIGH:
        return "cone_exit" if solution.status == 1 else "domain_end"
    return "domain_end"


def _roots(f, grid):
    """Roots of ``f`` on ``grid`` located by sign changes and bisection."""
    vals = np.array([f(x) for x in grid])
    out = []
    for k in range(len(grid) - 1):
        lo, hi, flo, fhi = grid[k], grid[k + 1], vals[k], vals[k + 1]
        if flo == 0.0:
            out.append(lo)
            continue
        if flo * fhi > 0.0:
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 0.0 or hi - lo < 1e-15 * max(1.0, abs(mid)):
                break
            if fm * flo < 0.0:
                hi = mid
            else:
                lo, flo = mid, fm
        out.append(0.5 * (lo + hi))
    if vals[-1] == 0.0:
        out.append(grid[-1])
    return out


def _seeds(model, kind, level):
    """Points of the level set on the lines ``theta = pi/2`` and on the four edges."""
    ts = model.solution.ts
    tgrid = np.unique(np.concatenate((ts, np.linspace(ts[0], ts[-1], 200))))
    thgrid = np.linspace(0.0, pi, 401)
    seeds = []
    for th in (pi / 2, 0.0, pi):
        seeds += [(th, t) for t in _roots(lambda t: model.level(kind, th, t) - level, tgrid)]
    for t in (ts[0], ts[-1]):
        seeds += [(th, t) for th in _roots(lambda th: model.level(kind, th, t) - level, thgrid)]
    return seeds


def _near(curve_pts, point, tol):
    d = np.hypot(curve_pts[:, 0] - point[0], curve_pts[:, 1] - point[1])
    return bool(np.min(d) <= tol)


def _level_range(model, kind):
    ts = np.linspace(model.t_min, model.t_max, 400)
    if kind == ASSOCIATIVE:
        vals = np.array([model.uv(t)[0] for t in ts])
        return 0.0, float(np.max(vals))
    vals = np.abs([model.uv(t)[2] for t in ts])
    return -float(np.max(vals)), float(np.max(vals))


def _boundary_lines(solution, level, kind):
    ts = solution.ts
    low = _tag(K.END_LOW, solution)
    high = _tag(K.END_HIGH, solution)
    out = []
    for th in (0.0, pi):
        pts = np.column_stack((np.full(len(ts), th), ts))
        out.append(LevelSetCurve(kind, level, pts, (low, high)))
    return out


def _trace(solution, kind, level, step, model, max_points):
    model = _model(solution, model)
    lo, hi = _level_range(model, kind)
    if level < lo - 1e-12 or level > hi + 1e-12:
        raise EmptyLevel(f"level {level} outside the attained range [{lo}, {hi}]")
    if step is None:
        step = (model.t_max - model.t_min) / 400.0
    code = K.CURVE_ASSOC if kind == ASSOCIATIVE else K.CURVE_COASSOC
    args = model._args()
    curves = []
    for seed in _seeds(model, kind, level):
        if any(_near(c.points, seed, 3.0 * step) for c in curves):
            continue
        halves = []
        for direction in (1.0, -1.0):
            pts, end = K.trace_branch(model.code, code, *args, float(level), seed[0], seed[1],
                                      direction, float(step), 1e-6, int(max_points))
            halves.append((pts, end))
        (fwd, end_f), (back, end_b) = halves
        pts = np.vstack((back[::-1], fwd[1:]))
        keep = np.concatenate(([True], np.any(np.diff(pts, axis=0) != 0.0, axis=1)))
        pts = pts[keep]
        curves.append(LevelSetCurve(kind, float(level), pts,
                                    (_tag(end_b, solution), _tag(end_f, solution))))
    if not curves:
        raise EmptyLevel(f"level {level} has no points on the domain")
    return curves


def trace_associative(solution, level, step=None, model="fhn", max_points=20000):
    """Level sets of ``|mu|`` in ``B``, one curve per connected component.

    Level zero gives the two boundary lines ``theta = 0`` and ``theta = pi``.
    Each curve carries endpoint tags and a topology label.
    """
    if level < 0:
        raise EmptyLevel("|mu| levels are non-negative")
    if level == 0:
        curves = _boundary_lines(solution, 0.0, ASSOCIATIVE)
    else:
        curves = _trace(solution, ASSOCIATIVE, float(level), step, model, max_points)
    for c in curves:
        try:
            c.topology = classify_associative(c, solution.params)
        except Unclassifiable:
            c.topology = UNKNOWN
    return curves


def trace_coassociative(solution, nu_level, step=None, model="fhn", max_points=20000):
    """Level sets of ``nu`` in ``B``, one curve per connected component."""
    return _trace(solution, COASSOCIATIVE, float(nu_level), step, model, max_points)


def singular_orbit_associatives(params):
    """Topology labels of the associatives inside the singular orbit."""
    if params.diagram in ("Delta_SU2", "One_x_SU2"):
        return [S3]
    if params.diagram == "Kmn":
        m, n = params.m, params.n
        generic = f"L({m};{-n},{n})"
        special = f"L({n};{m},{-m})"
        return [generic, special, special]
    return []


def singular_orbit_curve(solution, samples=64):
    """The edge ``t = t_min`` of ``B`` as the trace of the singular orbit."""
    if not solution.from_singular_orbit:
        raise UnknownCase("the trajectory does not start on a singular orbit")
    th = np.linspace(0.0, pi, samples)
    pts = np.column_stack((th, np.full(samples, solution.t_min)))
    curve = LevelSetCurve(ASSOCIATIVE, 0.0, pts, ("theta_0", "theta_pi"), in_singular_orbit=True)
    curve.topology = classify_associative(curve, solution.params)
    return curve


def classify_associative(curve, params):
    """Topology label from the endpoint tags of a traced associative."""
    if curve.in_singular_orbit:
        labels = singular_orbit_associatives(params)
        if not labels:
            raise UnknownCase("no singular orbit for this diagram")
        return labels[0]
    tags = set(curve.endpoints)
    if "cone_exit" in tags:
        raise Unclassifiable("curve runs into a cone exit, the metric is incomplete")
    if "singular_orbit" in tags and tags & {"theta_0", "theta_pi"}:
        return S1xR2
    if curve.level == 0 and "singular_orbit" in tags:
        return S1xR2
    return T2xR


# -- T^3-invariant coassociatives ------------------------------------------

def singular_fibre_targets(params, bs_case=None):
    """Values of ``(theta^1_1, theta^2_1, nu)`` whose fibres are singular."""
    if bs_case is not None:
        k = 3.0 * sqrt(3.0) * _bs_c(params) / 4.0
        return [(k, 0.0, 0.0), (-k, 0.0, 0.0)]
    d = params.diagram
    if d == "Delta_SU2":
        return [(2 * params.c1, 0.0, 0.0), (-2 * params.c1, 0.0, 0.0)]
    if d == "One_x_SU2":
        return [(0.0, 0.0, 4 * params.c1), (0.0, 0.0, -4 * params.c1)]
    if d == "Kmn":
        m, n, r3 = params.m, params.n, params.r0 ** 3
        out = []
        for x in (1.0, -1.0):
            for y in (1.0, -1.0):
                out.append((2 * m * n * r3 * x * y, -2 * n * (m + n) * r3 * y,
                            -4 * m * (m + n) * r3 * x))
        return out
    return []


def _bs_c(params):
    # c1 = -(3 sqrt(3) / 8) c for the Bryant-Salamon parameters
    return -8.0 * params.c1 / (3.0 * sqrt(3.0))


def _close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def coassoc_fiber_status(spec, params, bs_case=None, tol=1e-9):
    """Regularity of the fibre over ``spec.target``.

    ``bs_case=0`` uses the Bryant-Salamon torus of the explicit model; otherwise
    the loci of the FHN diagram in ``params`` apply.
    """
    x, y, z = (float(s) for s in spec.target)
    if bs_case is not None:
        if bs_case != 0:
            raise UnknownCase("only the first Bryant-Salamon torus has tabulated loci")
        k = 3.0 * sqrt(3.0) * _bs_c(params) / 4.0
        if _close(y, 0.0, tol) and _close(z, 0.0, tol):
            if _close(abs(x), k, tol):
                return SINGULAR
            return SMOOTH_T2 if abs(x) < k else AWAY
        a = abs(y)
        if a > tol and _close(abs(x), k + a, tol) and _close(abs(z), 2 * a, tol):
            # (±(k + a), -a, ±2a) or (±(k + a), a, ∓2a)
            if _close(np.sign(x) * np.sign(z), -np.sign(y), tol):
                return SMOOTH_T2
        return AWAY
    d = params.diagram
    if d == "Delta_SU2":
        k = 2 * params.c1
        if not (_close(y, 0.0, tol) and _close(z, 0.0, tol)):
            return AWAY
        if _close(abs(x), k, tol):
            return SINGULAR
        return SMOOTH_T2 if abs(x) < k else AWAY
    if d == "One_x_SU2":
        k = 4 * abs(params.c1)
        if not (_close(x, 0.0, tol) and _close(y, 0.0, tol)):
            return AWAY
        if _close(abs(z), k, tol):
            return SINGULAR
        return SMOOTH_T2 if abs(z) < k else AWAY
    if d == "Kmn":
        m, n, r3 = params.m, params.n, params.r0 ** 3
        px = -z / (4 * m * (m + n) * r3)
        py = -y / (2 * n * (m + n) * r3)
        if not _close(x, 2 * m * n * r3 * px * py, tol):
            return AWAY
        edge_x, edge_y = _close(abs(px), 1.0, tol), _close(abs(py), 1.0, tol)
        if (abs(px) > 1 and not edge_x) or (abs(py) > 1 and not edge_y):
            return AWAY
        if edge_x and edge_y:
            return SINGULAR
        if edge_x or edge_y:
            return SMOOTH_T2
        return SMOOTH_T3
    if d == "NoSingularOrbit":
        return AWAY
    raise UnknownCase(f"unknown diagram {d!r}")


# -- alpha map ---------------------------------------------------------------

@dataclass(frozen=True)
class FibrationResult:
    verdict: str
    u_minus: float
    u_plus: float
    v_minus: float
    v_plus: float
    jacobian_min: float
    details: dict = field(default_factory=dict)


def alpha_fibration_test(solution, grid=50, model="fhn"):
    """Decide whether ``alpha = (u sin(theta), v cos(theta))`` gives a global fibration.

    The sign of ``v`` is chosen so that ``v' `` has the sign of ``u'``; the
    monotonicity hypothesis is checked at every node.
    """
    model = _model(solution, model)
    ts = solution.ts
    vals = np.array([model.uv(t) for t in ts])
    u, du, v, dv = vals.T
    su = np.sign(du)
    # the first node may sit on the singular orbit where u' can vanish
    interior = slice(1, None) if solution.from_singular_orbit else slice(None)
    if np.any(su[interior] == 0) or len(set(su[interior])) > 1:
        k = int(np.argmin(np.abs(du[interior])))
        raise HypothesisFailed(f"u' changes sign near t = {ts[interior][k]}")
    s = su[interior][0]
    sv = np.sign(dv[interior])
    if np.any(sv == 0) or len(set(sv)) > 1:
        k = int(np.argmin(np.abs(dv[interior])))
        raise HypothesisFailed(f"v' changes sign near t = {ts[interior][k]}")
    flip = s * sv[0]
    v, dv = flip * v, flip * dv

    th = np.linspace(0.0, pi, grid + 2)[1:-1]
    tt = np.linspace(solution.t_min, solution.t_max, grid)
    jac = []
    for t in tt:
        uu, ud, vv, vd = model.uv(t)
        vv, vd = flip * vv, flip * vd
        jac.append(ud * vv * np.sin(th) ** 2 + uu * vd * np.cos(th) ** 2)
    jac = np.array(jac)
    if np.any(jac == 0) or (np.any(jac > 0) and np.any(jac < 0)):
        raise HypothesisFailed("Jacobian of alpha vanishes on the sample grid")

    u_minus = 0.0 if solution.from_singular_orbit else float(np.min(u))
    verdict = "global_fibration" if u_minus == 0.0 else "split_required"
    return FibrationResult(verdict, u_minus, float(np.max(u)), float(np.min(v)), float(np.max(v)),
                           float(np.min(np.abs(jac))), {"v_sign": float(flip)})


# -- quotient metric ---------------------------------------------------------

def representative(theta, t=None):
    """A point ``(p, q)`` with ``q = 1`` whose Hopf pair has angle ``theta``."""
    p = Q.exp_imag([0.0, 0.0, -0.5 * theta])
    return p, Q.ONE.copy()


def _theta_of(p, q):
    pair = hopf_pair(p, q)
    return np.arccos(np.clip(pair.v @ pair.w, -1.0, 1.0))


def quotient_cometric(solution, theta, t, h=1e-6):
    """Inverse metric of ``B`` in ``(theta, t)`` from the 7-dimensional metric.

    ``G^{-1} = J g^{-1} J^T`` where ``J`` holds the differentials of ``theta``
    and ``t`` in the invariant frame.
    """
    p, q = representative(theta)
    jac = np.zeros((2, 7))
    jac[1, 0] = 1.0
    for d in range(1, 7):
        plus = _theta_of(*frame_flow(p, q, d, h))
        minus = _theta_of(*frame_flow(p, q, d, -h))
        jac[0, d] = (plus - minus) / (2 * h)
    g = metric_from_phi(assemble_phi(solution, t)).matrix
    return jac @ np.linalg.solve(g, jac.T)


def gradient_cosine(solution, theta, t, model="fhn"):
    """Cosine of the angle between the B-gradients of ``|mu|`` and ``nu``."""
    model = _model(solution, model)
    cometric = quotient_cometric(solution, theta, t)
    ga = model.gradient(ASSOCIATIVE, theta, t)
    gc = model.gradient(COASSOCIATIVE, theta, t)
    inner = ga @ cometric @ gc
    return float(inner / sqrt((ga @ cometric @ ga) * (gc @ cometric @ gc)))


# -- rendering -----------------------------------------------------------------

@dataclass
class Rendering:
    curves: list
    singular_fibres: list
    csv_text: str
    svg_text: str


def _fmt(x):
    return f"{x:.12g}"


def levelsets_csv(curves):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["curve_id", "kind", "level", "theta", "t"])
    for cid, c in enumerate(curves):
        for th, t in c.points:
            writer.writerow([cid, c.kind, _fmt(c.level), _fmt(th), _fmt(t)])
    return buf.getvalue()


def _svg(curves, singular_points, t_range, width=640, height=480):
    t0, t1 = t_range
    pad = 40

    def xy(th, t):
        x = pad + (width - 2 * pad) * th / pi
        y = height - pad - (height - 2 * pad) * (t - t0) / (t1 - t0)
        return f"{x:.2f},{y:.2f}"

    colours = {ASSOCIATIVE: "#1f77b4", COASSOCIATIVE: "#ff7f0e"}
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
             'fill="none" stroke="black"/>']
    for cid, c in enumerate(curves):
        pts = " ".join(xy(th, t) for th, t in c.points)
        parts.append(f'<polyline id="curve{cid}" fill="none" stroke="{colours[c.kind]}" '
                     f'stroke-width="1.2" points="{pts}"><title>{c.kind} {_fmt(c.level)}</title>'
                     '</polyline>')
    for th, t, label in singular_points:
        x, y = xy(th, t).split(",")
        parts.append(f'<circle class="singular" cx="{x}" cy="{y}" r="5" fill="red">'
                     f'<title>singular fibre {label}</title></circle>')
    parts.append(f'<text x="{pad}" y="{height - 10}">theta in [0, pi]</text>')
    parts.append(f'<text x="5" y="{pad - 10}">t in [{_fmt(t0)}, {_fmt(t1)}]</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _bs_singular_fibres(solution, curves, bs_case):
    """Singular targets whose fibres meet the zero section along a traced ``nu``-level."""
    found = []
    for target in singular_fibre_targets(solution.params, bs_case):
        if coassoc_fiber_status(CoassocFiberSpec(target), solution.params, bs_case) != SINGULAR:
            continue
        # the fibre lies over the nu-level of its third coordinate and reaches the zero section
        for c in curves:
            if c.kind == COASSOCIATIVE and _close(c.level, target[2], 1e-12) \
                    and "singular_orbit" in c.endpoints:
                k = int(np.argmin(c.t))
                found.append((float(c.theta[k]), float(c.t[k]), CoassocFiberSpec(target, True)))
                break
    return found


def render_levelsets(solution, levels_mu, levels_nu, csv_path=None, svg_path=None, model="fhn",
                     step=None):
    """Trace both families, write CSV and SVG, and flag singular coassociative fibres."""
    model = _model(solution, model)
    curves = []
    for level in levels_mu:
        curves += trace_associative(solution, level, step, model)
    for level in levels_nu:
        curves += trace_coassociative(solution, level, step, model)
    bs_case = 0 if model.name == "bs" else None
    singular = _bs_singular_fibres(solution, curves, bs_case) if bs_case is not None else []
    csv_text = levelsets_csv(curves)
    svg_text = _svg(curves, [(th, t, str(s.target)) for th, t, s in singular],
                    (solution.t_min, solution.t_max))
    try:
        if csv_path is not None:
            with open(csv_path, "w") as fh:
                fh.write(csv_text)
        if svg_path is not None:
            with open(svg_path, "w") as fh:
                fh.write(svg_text)
    except OSError as exc:
        raise IOFailure(str(exc)) from exc
    return Rendering(curves, [s for _, _, s in singular], csv_text, svg_text)
