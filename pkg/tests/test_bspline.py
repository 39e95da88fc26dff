from __future__ import annotations

import numpy as np
import pytest
from scipy import integrate
from scipy.interpolate import BSpline

from atomscreen.bspline import (
    BSplineBasis,
    build_knots,
    build_quadrature,
    eval_basis,
    eval_basis_derivative,
    gamma_for_first_interval,
    tabulate,
)
from atomscreen.errors import ConfigError
from atomscreen.radial import SolverConfig, assemble
from atomscreen.potentials import ModelKind, PotentialModel


def _scipy_matrix(knots, r):
    """Dense (len(r), N) spline values from scipy's independent implementation."""
    t = knots.knots
    p = knots.order - 1
    n = knots.n_splines
    out = np.empty((r.size, n))
    for i in range(n):
        c = np.zeros(n)
        c[i] = 1.0
        out[:, i] = BSpline(t, c, p, extrapolate=False)(r)
    return np.nan_to_num(out)


def _dense(basis, r, deriv=False):
    first, vals = (basis.derivatives if deriv else basis.values)(r)
    out = np.zeros((r.size, basis.n_splines))
    for a in range(basis.order):
        out[np.arange(r.size), first + a] = vals[:, a]
    return out


@pytest.mark.parametrize("gamma", [None, 3.0, 10.0])
def test_partition_of_unity(gamma):
    kn = build_knots(60, 20.0, 8, gamma)
    basis = BSplineBasis(kn)
    r = np.concatenate([np.linspace(0.0, 20.0, 2001), kn.breakpoints])
    _, vals = basis.values(r)
    assert np.max(np.abs(vals.sum(axis=1) - 1.0)) < 1e-12


def test_nonnegative_and_local_support():
    kn = build_knots(40, 10.0, 6, 4.0)
    basis = BSplineBasis(kn)
    r = np.linspace(0.0, 10.0, 997)
    dense = _dense(basis, r)
    assert dense.min() >= -1e-15
    assert np.all(np.count_nonzero(np.abs(dense) > 1e-15, axis=1) <= kn.order)
    t = kn.knots
    for i in range(kn.n_splines):
        outside = (r < t[i]) | (r > t[i + kn.order])
        assert np.all(dense[outside, i] == 0.0)


@pytest.mark.parametrize("order", [2, 4, 10])
def test_values_match_scipy(order):
    kn = build_knots(3 * order + 5, 50.0, order, 6.0)
    basis = BSplineBasis(kn)
    r = np.linspace(0.0, 50.0 * (1 - 1e-12), 1500)
    assert np.allclose(_dense(basis, r), _scipy_matrix(kn, r), atol=1e-13)


def test_derivative_central_difference():
    kn = build_knots(50, 30.0, 10, 5.0)
    basis = BSplineBasis(kn)
    # stay inside knot intervals so the difference stencil sees a single polynomial
    mids = 0.5 * (kn.breakpoints[:-1] + kn.breakpoints[1:])
    h = 1e-4 * np.diff(kn.breakpoints)
    fd = (_dense(basis, mids + h) - _dense(basis, mids - h)) / (2 * h)[:, None]
    ex = _dense(basis, mids, deriv=True)
    scale = np.max(np.abs(ex), axis=1, keepdims=True)
    assert np.max(np.abs(fd - ex) / scale) < 1e-6


def test_derivatives_sum_to_zero():
    kn = build_knots(30, 5.0, 5, 2.0)
    _, d = BSplineBasis(kn).derivatives(np.linspace(0, 5, 333))
    assert np.max(np.abs(d.sum(axis=1))) < 1e-9


def test_single_point_helpers():
    kn = build_knots(20, 10.0, 4)
    basis = BSplineBasis(kn)
    pairs = eval_basis(basis, 0.0)
    assert pairs == [(0, 1.0)]
    assert sum(v for _, v in eval_basis(basis, 3.3)) == pytest.approx(1.0, abs=1e-14)
    assert len(eval_basis_derivative(basis, 3.3)) == 4
    assert eval_basis(basis, 10.0)[-1] == (kn.n_splines - 1, 1.0)


def test_default_grid_first_interval():
    cfg = SolverConfig()
    kn = build_knots(cfg.n_splines, cfg.r_max, cfg.order, cfg.resolved_gamma())
    assert kn.n_splines == 600
    assert kn.n_intervals == 591
    assert kn.breakpoints[1] == pytest.approx(1e-4, rel=1e-10)
    assert kn.breakpoints[-1] == 200.0
    assert np.all(np.diff(kn.widths()) > 0)
    assert BSplineBasis(kn).size == 598


def test_gamma_solver_inverts_breakpoints():
    g = gamma_for_first_interval(200, 100.0, 8, 1e-3)
    kn = build_knots(200, 100.0, 8, g)
    assert kn.breakpoints[1] == pytest.approx(1e-3, rel=1e-10)
    with pytest.raises(ConfigError):
        gamma_for_first_interval(20, 10.0, 5, 5.0)


@pytest.mark.parametrize("n, rmax, order, gamma", [
    (15, 10.0, 10, 1.0), (0, 10.0, 4, None), (20, 0.0, 4, None), (20, 10.0, 4, -1.0), (20, 10.0, 0, None),
])
def test_invalid_knots(n, rmax, order, gamma):
    with pytest.raises(ConfigError):
        build_knots(n, rmax, order, gamma)


def test_radius_outside_box_rejected():
    basis = BSplineBasis(build_knots(20, 10.0, 4))
    with pytest.raises(ConfigError):
        basis.values([10.5])
    with pytest.raises(ConfigError):
        basis.values([-0.1])


@pytest.mark.parametrize("power", range(0, 20))
def test_quadrature_moments(power):
    kn = build_knots(40, 3.0, 10, 2.0)
    rule = build_quadrature(kn)
    exact = 3.0 ** (power + 1) / (power + 1)
    assert rule.integrate(lambda r: r**power) == pytest.approx(exact, rel=1e-13)


def test_quadrature_needs_k_nodes():
    kn = build_knots(30, 3.0, 6)
    with pytest.raises(ConfigError):
        build_quadrature(kn, 5)
    assert build_quadrature(kn, 9).nodes.shape == (kn.n_intervals, 9)


def test_tabulated_values_match_direct_evaluation():
    kn = build_knots(40, 8.0, 6, 3.0)
    basis = BSplineBasis(kn)
    rule = build_quadrature(kn)
    tab = tabulate(basis, rule)
    first, vals = basis.values(rule.points)
    assert np.allclose(tab.values.reshape(-1, kn.order), vals, atol=1e-15)
    assert np.array_equal(first, np.repeat(np.arange(kn.n_intervals), rule.nodes_per_interval))


def test_overlap_against_adaptive_quadrature():
    kn = build_knots(14, 6.0, 4, 1.5)
    basis = BSplineBasis(kn)
    rule = build_quadrature(kn)
    model = PotentialModel(ModelKind.COULOMB, 1.0, 1)
    _, S = assemble(model, 0, basis, rule)
    Sd = S.to_dense()
    t = kn.knots
    n = kn.n_splines

    def spl(i):
        c = np.zeros(n)
        c[i] = 1.0
        return BSpline(t, c, 3, extrapolate=False)

    for i, j in [(1, 1), (1, 2), (3, 5), (6, 9), (12, 12), (4, 7)]:
        bi, bj = spl(i), spl(j)
        pts = [x for x in kn.breakpoints if 0 < x < 6.0]
        val, _ = integrate.quad(lambda r: bi(r) * bj(r), 0.0, 6.0, points=pts, limit=200, epsabs=1e-14)
        assert Sd[i - 1, j - 1] == pytest.approx(val, abs=1e-12)
    assert Sd[1, 6] == 0.0  # beyond the band
