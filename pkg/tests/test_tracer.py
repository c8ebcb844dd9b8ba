from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from g2sym import fhn_structure as fhn
from g2sym import tracer as tr
from g2sym.errors import EmptyLevel, HypothesisFailed, IOFailure, Unclassifiable, UnknownCase

K_BS = 3 * sqrt(3) / 4


def bs_u(r, c=1.0):
    return 3 * r * r * (c + r * r) ** (1 / 3)


def bs_v(r):
    return 2 * sqrt(3) * r * r


def fhn_u(sol, t):
    return 4 * sol.values(t)[..., 2]


def fhn_v(sol, t):
    return -4 * (sol.values(t)[..., 1] - sol.params.c1)


@pytest.mark.parametrize("level", [0.5, 10.0, 100.0])
def test_associative_level_is_kept(bs_solution, level):
    for curve in tr.trace_associative(bs_solution, level):
        got = fhn_u(bs_solution, curve.t) * np.sin(curve.theta)
        assert np.max(np.abs(got - level)) <= 1e-9 * max(1.0, level)


@pytest.mark.parametrize("level", [0.5, 10.0, 100.0])
def test_bs_model_matches_closed_form(bs_solution, level):
    for curve in tr.trace_associative(bs_solution, level, model="bs"):
        r = bs_solution.radius(curve.t)
        got = bs_u(r) * np.sin(curve.theta)
        assert np.max(np.abs(got - level)) <= 1e-9 * max(1.0, level)


def test_bs_large_level_approaches_boundary(bs_solution):
    (curve,) = tr.trace_associative(bs_solution, 10.0, model="bs")
    r = bs_solution.radius(curve.t)
    expected = np.arcsin(10.0 / bs_u(r))
    half = np.minimum(curve.theta, pi - curve.theta)
    np.testing.assert_allclose(half, expected, atol=1e-9)
    far = np.argmax(curve.t)
    assert half[far] < 0.1
    assert curve.endpoints == ("domain_end", "domain_end")


@pytest.mark.parametrize("level", [-20.0, 0.0, 5.0, 30.0])
def test_coassociative_level_is_kept(bs_solution, level):
    for curve in tr.trace_coassociative(bs_solution, level):
        got = fhn_v(bs_solution, curve.t) * np.cos(curve.theta)
        assert np.max(np.abs(got - level)) <= 1e-9 * max(1.0, abs(level))
    for curve in tr.trace_coassociative(bs_solution, level, model="bs"):
        got = bs_v(bs_solution.radius(curve.t)) * np.cos(curve.theta)
        assert np.max(np.abs(got - level)) <= 1e-9 * max(1.0, abs(level))


def test_zero_nu_level_is_vertical_line(bs_solution):
    (curve,) = tr.trace_coassociative(bs_solution, 0.0, model="bs")
    np.testing.assert_allclose(curve.theta, pi / 2, atol=1e-12)
    assert "singular_orbit" in curve.endpoints


def test_level_zero_gives_boundary_lines(bs_solution):
    curves = tr.trace_associative(bs_solution, 0.0)
    assert len(curves) == 2
    assert sorted(float(c.theta[0]) for c in curves) == [0.0, pi]
    assert all(c.topology == tr.S1xR2 for c in curves)


def test_positive_level_topology(bs_solution):
    (curve,) = tr.trace_associative(bs_solution, 5.0)
    assert curve.topology == tr.T2xR


def test_level_zero_without_singular_orbit(bs_solution):
    sub = bs_solution.restrict(1.0, 3.0)
    curves = tr.trace_associative(sub, 0.0)
    assert all(c.topology == tr.T2xR for c in curves)


def test_empty_levels(bs_solution):
    with pytest.raises(EmptyLevel):
        tr.trace_associative(bs_solution, 1e6)
    with pytest.raises(EmptyLevel):
        tr.trace_associative(bs_solution, -1.0)
    with pytest.raises(EmptyLevel):
        tr.trace_coassociative(bs_solution, 1e6)


def test_singular_orbit_labels(bs_solution):
    assert tr.singular_orbit_curve(bs_solution).topology == tr.S3
    assert tr.singular_orbit_associatives(fhn.FHNParams(1.0, -1.0, "Delta_SU2")) == [tr.S3]
    labels = tr.singular_orbit_associatives(fhn.FHNParams.kmn(1, 2, 1.0))
    assert labels == ["L(1;-2,2)", "L(2;1,-1)", "L(2;1,-1)"]
    assert tr.singular_orbit_associatives(fhn.FHNParams(0.0, 0.0)) == []


def test_cone_exit_is_unclassifiable():
    curve = tr.LevelSetCurve(tr.ASSOCIATIVE, 1.0, np.zeros((2, 2)), ("theta_0", "cone_exit"))
    with pytest.raises(Unclassifiable):
        tr.classify_associative(curve, fhn.FHNParams(0.0, 0.0))


def test_cone_exit_curves_are_labelled_unknown():
    params = fhn.FHNParams(-1.0, 0.0)
    lam = fhn.lambda_enhanced(1.0, 1.0, params)
    sol = fhn.integrate(params, fhn.FHNState(0.0, 1.0, 1.0, sqrt(-lam) / 2, 1.0), 50.0)
    assert sol.cone_exit is not None
    level = 0.5 * float(np.max(4 * sol.ys[:, 2]))
    curves = tr.trace_associative(sol, level)
    tags = {tag for c in curves for tag in c.endpoints}
    assert "cone_exit" in tags
    assert any(c.topology == tr.UNKNOWN for c in curves)


def test_associative_nu_is_monotone(bs_solution):
    for level in (2.0, 30.0):
        (curve,) = tr.trace_associative(bs_solution, level)
        nu = fhn_v(bs_solution, curve.t) * np.cos(curve.theta)
        steps = np.diff(nu)
        assert np.all(steps > 0) or np.all(steps < 0)


def test_distinct_levels_do_not_cross(bs_solution):
    (a,) = tr.trace_associative(bs_solution, 5.0)
    (b,) = tr.trace_associative(bs_solution, 5.5)
    gaps = np.min(np.linalg.norm(a.points[:, None, :] - b.points[None, :, :], axis=2))
    assert gaps > 1e-4


def test_fibration_coverage():
    sol = fhn.bryant_salamon_solution(c=1.0, r_max=2.0)
    u_max = float(np.max(4 * sol.ys[:, 2]))
    # u grows like t^2 near the zero section, so levels are spaced quadratically
    levels = u_max * np.linspace(0.0, 1.0, 120)[:-1] ** 2
    pts = np.vstack([c.points for lv in levels for c in tr.trace_associative(sol, lv)])
    th = np.linspace(0.2, pi - 0.2, 12)
    ts = np.linspace(0.5, sol.t_max - 0.2, 12)
    spacing = max(th[1] - th[0], ts[1] - ts[0])
    for a in th:
        for b in ts:
            assert np.min(np.hypot(pts[:, 0] - a, pts[:, 1] - b)) <= spacing


def test_gradients_orthogonal(bs_solution, rng):
    for _ in range(50):
        theta = rng.uniform(0.2, pi - 0.2)
        t = rng.uniform(0.3, bs_solution.t_max - 0.3)
        assert abs(tr.gradient_cosine(bs_solution, theta, t)) <= 1e-6


def test_quotient_cometric_positive(bs_solution):
    g = tr.quotient_cometric(bs_solution, 1.0, 2.0)
    assert np.all(np.linalg.eigvalsh(g) > 0)


def test_representative_angle():
    from g2sym.multimoment import hopf_pair
    for theta in (0.3, 1.2, 2.9):
        assert hopf_pair(*tr.representative(theta)).theta == pytest.approx(theta, abs=1e-12)


@pytest.mark.parametrize("target, status", [
    ((K_BS, 0.0, 0.0), tr.SINGULAR),
    ((-K_BS, 0.0, 0.0), tr.SINGULAR),
    ((0.1, 0.0, 0.0), tr.SMOOTH_T2),
    ((K_BS + 0.5, -0.5, 1.0), tr.SMOOTH_T2),
    ((K_BS + 0.5, 0.5, -1.0), tr.SMOOTH_T2),
    ((K_BS + 0.5, 0.5, 1.0), tr.AWAY),
    ((0.3, 0.7, -0.2), tr.AWAY),
    ((2.0, 0.0, 0.0), tr.AWAY),
])
def test_bs_fibre_status(target, status):
    params = fhn.FHNParams.bryant_salamon(1.0)
    assert tr.coassoc_fiber_status(tr.CoassocFiberSpec(target), params, bs_case=0) == status


def test_fhn_fibre_status():
    delta = fhn.FHNParams(1.0, -1.0, "Delta_SU2")
    spec = tr.CoassocFiberSpec
    assert tr.coassoc_fiber_status(spec((2.0, 0, 0)), delta) == tr.SINGULAR
    assert tr.coassoc_fiber_status(spec((1.0, 0, 0)), delta) == tr.SMOOTH_T2
    one = fhn.FHNParams(-1.0, 0.0, "One_x_SU2")
    assert tr.coassoc_fiber_status(spec((0, 0, 4.0)), one) == tr.SINGULAR
    assert tr.coassoc_fiber_status(spec((0, 0, -1.0)), one) == tr.SMOOTH_T2
    kmn = fhn.FHNParams.kmn(1, 2, 1.0)
    m, n = 1, 2

    def target(x, y):
        return (2 * m * n * x * y, -2 * n * (m + n) * y, -4 * m * (m + n) * x)
    assert tr.coassoc_fiber_status(spec(target(0.3, -0.4)), kmn) == tr.SMOOTH_T3
    assert tr.coassoc_fiber_status(spec(target(1.0, 0.2)), kmn) == tr.SMOOTH_T2
    assert tr.coassoc_fiber_status(spec(target(-1.0, 1.0)), kmn) == tr.SINGULAR
    assert tr.coassoc_fiber_status(spec(target(2.0, 0.1)), kmn) == tr.AWAY
    assert tr.coassoc_fiber_status(spec((5.0, 0.0, 0.0)), kmn) == tr.AWAY


def test_fibre_status_unknown_case():
    with pytest.raises(UnknownCase):
        tr.coassoc_fiber_status(tr.CoassocFiberSpec((0, 0, 0)),
                                fhn.FHNParams.bryant_salamon(1.0), bs_case=2)


def test_singular_targets_classify_as_singular():
    for params in (fhn.FHNParams(1.5, -1.5, "Delta_SU2"), fhn.FHNParams(-0.7, 0.0, "One_x_SU2"),
                   fhn.FHNParams.kmn(2, 3, 1.0)):
        for target in tr.singular_fibre_targets(params):
            assert tr.coassoc_fiber_status(tr.CoassocFiberSpec(target), params) == tr.SINGULAR


def test_alpha_global_fibration(bs_solution):
    result = tr.alpha_fibration_test(bs_solution)
    assert result.verdict == "global_fibration"
    assert result.u_minus == 0.0
    assert result.jacobian_min > 0


def test_alpha_split_required(bs_solution):
    t1, t2 = bs_solution.t_at_radius(1.0), bs_solution.t_at_radius(2.0)
    result = tr.alpha_fibration_test(bs_solution.restrict(t1, t2))
    state, _ = fhn.bs_closed_form(1.0, 1.0)
    assert result.verdict == "split_required"
    assert result.u_minus == pytest.approx(4 * state.x1, rel=1e-6)
    assert result.u_plus > result.u_minus


class _WobblyModel(tr.QuotientModel):
    """u with an interior maximum, which the monotonicity hypothesis excludes."""

    def uv(self, t):
        return (t * (3 - t), 3 - 2 * t, -t, -1.0)


def test_alpha_hypothesis_failure(bs_solution):
    with pytest.raises(HypothesisFailed, match="u' changes sign"):
        tr.alpha_fibration_test(bs_solution, model=_WobblyModel(bs_solution))


def test_render_bs_figure(bs_solution, tmp_path):
    mu_levels = [2, 5, 10, 20, 40, 60, 80, 100]
    nu_levels = [-40, -20, -5, 0, 5, 20, 40, 60]
    out = tr.render_levelsets(bs_solution, mu_levels, nu_levels, tmp_path / "l.csv",
                              tmp_path / "l.svg", model="bs")
    assert len(out.curves) >= 16
    vertical = [c for c in out.curves if c.kind == tr.COASSOCIATIVE and c.level == 0]
    assert vertical and np.allclose(vertical[0].theta, pi / 2)
    targets = sorted(s.target for s in out.singular_fibres)
    assert targets == [(-K_BS, 0.0, 0.0), (K_BS, 0.0, 0.0)]
    text = (tmp_path / "l.csv").read_text()
    assert text.splitlines()[0] == "curve_id,kind,level,theta,t"
    assert "<polyline" in (tmp_path / "l.svg").read_text()


def test_render_points_satisfy_equations(bs_solution):
    out = tr.render_levelsets(bs_solution, [3.0, 50.0], [-10.0, 10.0], model="bs")
    rows = [line.split(",") for line in out.csv_text.strip().splitlines()[1:]]
    for _, kind, level, theta, t in rows:
        r = bs_solution.radius(float(t))
        f = bs_u(r) * np.sin(float(theta)) if kind == tr.ASSOCIATIVE else bs_v(r) * np.cos(float(theta))
        # values are printed with 12 significant digits
        assert f == pytest.approx(float(level), rel=1e-9, abs=1e-9)


def test_render_empty_levels(bs_solution):
    out = tr.render_levelsets(bs_solution, [], [])
    assert out.csv_text == "curve_id,kind,level,theta,t\n"


def test_render_write_failure(bs_solution, tmp_path):
    with pytest.raises(IOFailure):
        tr.render_levelsets(bs_solution, [], [], csv_path=tmp_path / "missing" / "x.csv")


def test_bs_model_needs_bs_trajectory(delta_solution):
    with pytest.raises(UnknownCase):
        tr.QuotientModel(delta_solution, "bs")


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95))
def test_constancy_property(frac):
    sol = _solution()
    u_max = float(np.max(4 * sol.ys[:, 2]))
    level = frac * u_max
    for curve in tr.trace_associative(sol, level):
        f = fhn_u(sol, curve.t) * np.sin(curve.theta)
        assert np.ptp(f) <= 1e-8 * (1 + level)
    v = fhn_v(sol, sol.ts)
    nu = (2 * frac - 1) * 0.9 * float(np.max(np.abs(v)))
    for curve in tr.trace_coassociative(sol, nu):
        f = fhn_v(sol, curve.t) * np.cos(curve.theta)
        assert np.ptp(f) <= 1e-8 * (1 + abs(nu))


_SOL = []


def _solution():
    if not _SOL:
        _SOL.append(fhn.bryant_salamon_solution(c=1.0, r_max=3.0))
    return _SOL[0]
