from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plaplab.fields import (
    CellMask,
    DomainError,
    GridDomain,
    QuadratureWarning,
    ScalarField,
    VectorField,
    box_window,
    degenerate_mask,
    disk_window,
    integrate,
    jet,
    load_field,
    save_field,
)
from plaplab.oracles import radial_reference_integral


def interior(J, order=None):
    return ~J.domain.margin_mask(J.interior_margin if order is None else order)


def test_domain_invariants():
    d = GridDomain.box([0, -1], [2, 1], [8, 4])
    assert d.h == (0.25, 0.5)
    assert d.size == 9 * 5
    assert d.cell_volume == 0.125
    assert d.header("u") == {"n": 2, "origin": [0.0, -1.0], "extent": [2.0, 2.0], "cells": [8, 4], "name": "u"}
    with pytest.raises(DomainError):
        GridDomain.box([0, 0], [1, 1], [3, 8])
    with pytest.raises(DomainError):
        GridDomain(4, (0,) * 4, (1,) * 4, (4,) * 4)
    with pytest.raises(DomainError):
        GridDomain.cube(2, 0, 1, 0.3)


def test_scalar_field_checks():
    d = GridDomain.box([0, 0], [1, 1], 4)
    with pytest.raises(DomainError):
        ScalarField(d, np.zeros(7))
    with pytest.raises(DomainError):
        ScalarField(d, np.full(d.shape, np.nan))
    u = ScalarField(d, np.arange(d.size, dtype=float))
    assert u.values.shape == d.shape
    assert not u.values.flags.writeable
    V = VectorField(d, np.stack([np.full(d.shape, 3.0), np.full(d.shape, 4.0)]))
    assert np.all(V.norm() == 5.0)


def test_linear_jet_exact():
    d = GridDomain.box([0, 0], [1, 1], 16)
    J = jet(ScalarField.from_function(d, lambda x, y: x), 3)
    m = interior(J)
    assert np.all(J.grad[0][m] == pytest.approx(1.0, abs=1e-12))
    assert np.all(np.abs(J.grad[1][m]) <= 1e-12)
    assert np.max(np.abs(J.hess[..., m])) <= 1e-10
    assert np.max(np.abs(J.third[..., m])) <= 1e-7


def test_x2y_jet():
    d = GridDomain.box([-1, -1], [1, 1], 20)
    x, y = d.coordinates()
    J = jet(ScalarField(d, x**2 * y), 3)
    m = interior(J)
    np.testing.assert_allclose(J.hess[0, 0][m], (2 * y)[m], atol=1e-10)
    np.testing.assert_allclose(J.hess[0, 1][m], (2 * x)[m], atol=1e-10)
    np.testing.assert_allclose(J.third[0, 0, 1][m], 2.0, atol=1e-8)
    np.testing.assert_allclose(J.third[1, 0, 0][m], 2.0, atol=1e-8)


def test_sine_hessian_second_order():
    errs = []
    for cells in (32, 64):
        d = GridDomain.box([0, 0], [1, 1], cells)
        x, y = d.coordinates()
        J = jet(ScalarField(d, np.sin(np.pi * x) * np.sin(np.pi * y)), 2)
        exact = -np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y)
        errs.append(np.max(np.abs(J.hess[0, 0] - exact)[interior(J)]))
    assert math.log2(errs[0] / errs[1]) >= 1.9


@pytest.mark.parametrize("mono", [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)])
def test_jets_exact_on_quadratics(mono):
    a, b = mono
    d = GridDomain.box([-0.7, 0.2], [0.9, 1.3], [12, 10])
    x, y = d.coordinates()
    J = jet(ScalarField(d, x**a * y**b), 2)
    m = interior(J)
    gx = a * x ** max(a - 1, 0) * y**b
    gy = b * x**a * y ** max(b - 1, 0)
    np.testing.assert_allclose(J.grad[0][m], gx[m], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(J.grad[1][m], gy[m], rtol=1e-12, atol=1e-12)
    hxx = a * (a - 1) * x ** max(a - 2, 0) * y**b
    hxy = a * b * x ** max(a - 1, 0) * y ** max(b - 1, 0)
    np.testing.assert_allclose(J.hess[0, 0][m], hxx[m], atol=1e-10)
    np.testing.assert_allclose(J.hess[0, 1][m], hxy[m], atol=1e-10)


@pytest.mark.parametrize("mono,idx,val", [((3, 0), (0, 0, 0), 6.0), ((2, 1), (0, 0, 1), 2.0), ((1, 2), (0, 1, 1), 2.0), ((0, 3), (1, 1, 1), 6.0)])
def test_third_exact_on_cubics(mono, idx, val):
    a, b = mono
    d = GridDomain.box([-1, -1], [1, 1], 16)
    x, y = d.coordinates()
    J = jet(ScalarField(d, x**a * y**b), 3)
    m = interior(J)
    np.testing.assert_allclose(J.third[idx][m], val, rtol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.integers(1, 3))
def test_hess_and_third_symmetric(coef, n):
    lo, hi = [-1.0] * n, [1.0] * n
    d = GridDomain.box(lo, hi, 8)
    xs = d.coordinates()
    u = coef[0] * np.sin(xs[0]) * np.exp(coef[1] * xs[-1]) + coef[2] * np.prod(xs, axis=0) ** 2
    J = jet(ScalarField(d, u), 3 if n > 1 else 3)
    scale = max(1.0, np.max(np.abs(J.hess)))
    assert np.max(np.abs(J.hess - np.swapaxes(J.hess, 0, 1))) <= 1e-12 * scale
    T = J.third
    for perm in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
        assert np.max(np.abs(T - np.transpose(T, perm + tuple(range(3, T.ndim))))) <= 1e-12 * max(1.0, np.max(np.abs(T)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4))
def test_translation_invariance(sx, sy):
    big = GridDomain.box([0, 0], [2, 2], 16)
    x, y = big.coordinates()
    vals = np.sin(3 * x) * np.cos(2 * y) + x**3
    J = jet(ScalarField(big, vals), 3)
    sub = GridDomain(2, (sx * big.h[0], sy * big.h[1]), (1.5, 1.5), (12, 12))
    Js = jet(ScalarField(sub, vals[sx : sx + 13, sy : sy + 13]), 3)
    m = interior(Js)
    win = (slice(sx, sx + 13), slice(sy, sy + 13))
    assert np.array_equal(Js.hess[..., m], J.hess[(...,) + win][..., m])
    assert np.array_equal(Js.third[..., m], J.third[(...,) + win][..., m])


def test_jet_rejects_small_grid():
    d = GridDomain.box([0, 0], [1, 1], 5)
    with pytest.raises(DomainError):
        jet(ScalarField(d, 0.0), 3)


def test_degenerate_mask_radial():
    d = GridDomain.cube(2, -0.25, 0.25, 1 / 512)
    r = d.radius()
    J = jet(ScalarField(d, r**3), 1)
    m = degenerate_mask(J, delta=0.01).values
    r_star = math.sqrt(0.01 / 3)
    assert abs(r_star - 0.05774) < 1e-5
    assert np.all(m[r < 0.98 * r_star]) and not np.any(m[r > 1.02 * r_star])


def test_degenerate_mask_trivial_cases():
    d = GridDomain.box([0, 0], [1, 1], 8)
    lin = jet(ScalarField.from_function(d, lambda x, y: x), 1)
    assert degenerate_mask(lin, delta=0.5).count == 0
    zero = jet(ScalarField(d, 0.0), 2)
    assert degenerate_mask(zero, delta=1e-3).fraction == 1.0
    assert degenerate_mask(zero, "hessian", delta=1e-3).provenance == ("degenerate_hessian",)
    with pytest.raises(DomainError):
        degenerate_mask(zero, delta=0.0)


def test_default_mask_shrinks():
    fractions = []
    for cells in (32, 64, 128):
        d = GridDomain.cube(2, -1, 1, 2 / cells)
        J = jet(ScalarField(d, d.radius() ** 3), 1)
        fractions.append(degenerate_mask(J).fraction)
    assert fractions[0] > fractions[-1] and fractions[-1] < 1e-3


def test_integrate_examples():
    d = GridDomain.box([0, 0], [1, 1], 16)
    assert abs(integrate(ScalarField(d, 1.0)) - 1.0) <= 1e-12
    d1 = GridDomain.box([0], [1], 64)
    assert integrate(ScalarField.from_function(d1, lambda x: x)) == 0.5
    with pytest.warns(QuadratureWarning):
        assert integrate(ScalarField(d, 1.0), CellMask(np.ones(d.shape, bool))) == 0.0
    with pytest.raises(DomainError):
        integrate(np.ones(d.shape))


def test_integrate_sqrt_r_on_disk():
    d = GridDomain.cube(2, -1, 1, 1 / 256)
    v = np.sqrt(d.radius())
    exact = radial_reference_integral(lambda r: np.sqrt(r), 2, 0.0, 1.0)
    assert exact == pytest.approx(2 * math.pi / 2.5, rel=1e-10)
    got = integrate(v, disk_window(d, 1.0), domain=d)
    assert abs(got - exact) / exact < 0.01


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
def test_integrate_linear_and_positive(a, b, seed):
    rng = np.random.default_rng(seed)
    d = GridDomain.box([0, 0], [1, 1], 6)
    u, v = rng.random(d.shape), rng.random(d.shape)
    mask = CellMask(rng.random(d.shape) < 0.3)
    lhs = integrate(a * u + b * v, mask, domain=d)
    rhs = a * integrate(u, mask, domain=d) + b * integrate(v, mask, domain=d)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert integrate(u, mask, domain=d, rule="midpoint") >= 0


def test_windows():
    d = GridDomain.box([-1, -1], [1, 1], 8)
    assert box_window(d, -0.5, 0.5).count == d.size - 25
    assert not disk_window(d, 10).values.any()
    ann = disk_window(d, 1.0, r_min=0.5)
    assert ann.values[4, 4] and not ann.values[4, 6]


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_field_roundtrip(tmp_path, fmt):
    d = GridDomain.box([0, 0, 0], [1, 2, 3], [4, 5, 6])
    vals = np.random.default_rng(1).normal(size=d.shape)
    head, data = save_field(tmp_path / "u", d, vals, "u", fmt=fmt)
    assert set(__import__("json").loads(head.read_text())) == {"n", "origin", "extent", "cells", "name"}
    d2, v2, name = load_field(data)
    assert d2 == d and name == "u"
    assert np.array_equal(v2, vals)
