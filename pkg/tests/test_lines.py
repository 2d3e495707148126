import numpy as np
import pytest
from hypothesis import given, strategies as st

from carnot_monotone.errors import BadGrid, EmptyWindow, NonPositiveLambda
from carnot_monotone.lie_core import dilate, multiply, preset
from carnot_monotone.lines import (
    Line,
    LineMeasureSampler,
    Window,
    decompose,
    dilate_line,
    flow,
    flow_jacobian_det,
    frame,
    n_coords,
    n_embed,
    parameter_grid,
    sample_lines,
    translate_line,
    unit_direction,
)
from carnot_monotone import rng

NAMES = ["R2", "H1", "H2", "free2-3", "engel"]


def random_lines(g, m, seed):
    gen = np.random.default_rng(seed)
    X = unit_direction(g, gen.standard_normal((m, g.r)))
    return X, gen.standard_normal((m, g.n))


@pytest.mark.parametrize("name", NAMES)
def test_frame_is_orthonormal_and_positive(name):
    g = preset(name)
    X, _ = random_lines(g, 50, 0)
    F = frame(g, X)
    B = np.concatenate([X[:, : g.r, None], F], axis=2)
    np.testing.assert_allclose(np.einsum("nij,nik->njk", B, B), np.broadcast_to(np.eye(g.r), B.shape[:1] + (g.r, g.r)),
                               atol=1e-12)
    assert np.all(np.linalg.det(B) > 0)


@pytest.mark.parametrize("name", NAMES)
def test_decompose_lands_in_complement_subgroup(name):
    g = preset(name)
    X, y = random_lines(g, 200, 1)
    n, t = decompose(g, X, y)
    np.testing.assert_allclose(np.sum(n[:, : g.r] * X[:, : g.r], axis=1), 0, atol=1e-12)
    np.testing.assert_allclose(flow(g, X, n, t), y, atol=1e-12)
    np.testing.assert_allclose(n_embed(g, X, n_coords(g, X, n)), n, atol=1e-12)


def test_heisenberg_first_coordinate_is_affine_along_e1():
    g = preset("H1")
    t = np.linspace(-1, 1, 11)
    pts = flow(g, np.array([1.0, 0, 0]), np.zeros((11, 3)), t)
    np.testing.assert_allclose(pts[:, 0], t)


@pytest.mark.parametrize("name", NAMES)
def test_flow_jacobian_is_one(name):
    g = preset(name)
    gen = np.random.default_rng(2)
    X, _ = random_lines(g, 100, 2)
    det = flow_jacobian_det(g, X, gen.uniform(-1, 1, (100, g.n - 1)), gen.uniform(-1, 1, 100))
    np.testing.assert_allclose(det, 1.0, atol=1e-8)


@pytest.mark.parametrize("name", ["H1", "engel"])
@given(seed=st.integers(0, 10 ** 6), lam=st.floats(0.2, 4.0))
def test_lines_transport(name, seed, lam):
    g = preset(name)
    X, b = random_lines(g, 1, seed)
    L = Line(X[0], decompose(g, X[0], b[0])[0])
    y = np.random.default_rng(seed + 1).standard_normal(g.n)
    t = np.linspace(-1, 1, 5)
    moved = translate_line(g, y, L)
    # y.L is the same set of points, reparametrized by a shift
    t_y = float(y[: g.r] @ X[0, : g.r])
    np.testing.assert_allclose(moved.point(g, t + t_y), multiply(g, y, L.point(g, t)), atol=1e-9)
    assert abs(moved.base[: g.r] @ X[0, : g.r]) < 1e-9
    np.testing.assert_allclose(dilate_line(g, lam, L).point(g, lam * t), dilate(g, lam, L.point(g, t)), atol=1e-9)


@pytest.mark.parametrize("name", ["H1", "H2", "engel"])
def test_window_interval_contains_window_parameters(name):
    g = preset(name)
    W = Window.cube(g, 1.0).translated(g, np.full(g.n, 0.2)).dilated(g, 1.5)
    X, b = random_lines(g, 300, 3)
    a, bb = W.line_interval(g, X, b)
    t = np.linspace(-6, 6, 2401)
    for i in range(len(X)):
        inside = W.contains(g, flow(g, X[i], np.broadcast_to(b[i], (len(t), g.n)), t))
        if inside.any():
            assert t[inside].min() >= a[i] - 1e-9 and t[inside].max() <= bb[i] + 1e-9


@pytest.mark.parametrize("name", ["H1", "H2", "engel"])
def test_covering_box_contains_bases_of_lines_through_window(name):
    g = preset(name)
    W = Window.cube(g, 1.0)
    box = W.covering_nbox(g)
    gen = np.random.default_rng(4)
    y = W.from_local(g, gen.uniform(-1, 1, (2000, g.n)))
    X = unit_direction(g, gen.standard_normal((2000, g.r)))
    n, _ = decompose(g, X, y)
    a = n_coords(g, X, n)
    assert np.all((a >= box.lo) & (a <= box.hi))


def test_window_errors():
    with pytest.raises(EmptyWindow):
        Window(np.zeros(3), np.zeros(3))
    with pytest.raises(NonPositiveLambda):
        Window(-np.ones(3), np.ones(3), scale=0.0)


def test_parameter_grid():
    t, valid, step = parameter_grid(np.array([0.0, -1.0, 2.0]), np.array([1.0, 1.0, 2.0]), 0.3)
    assert np.all(step[:2] <= 0.3)
    assert t[0, 0] == 0.0 and t[0, valid[0]].max() == pytest.approx(1.0)
    assert not valid[2].any()
    with pytest.raises(BadGrid):
        parameter_grid(np.zeros(1), np.ones(1), 0.0)


def test_sampler_is_chunk_independent():
    g = preset("H1")
    box = Window.cube(g).covering_nbox(g)
    s = LineMeasureSampler(g, 9)
    whole = s.batch(box, 0, 3000)
    parts = [s.batch(box, 0, 1000), s.batch(box, 1000, 1500), s.batch(box, 2500, 500)]
    np.testing.assert_array_equal(whole.bases, np.concatenate([p.bases for p in parts]))
    lines = list(sample_lines(s, Window.cube(g), 5))
    np.testing.assert_array_equal(lines[3].base, whole.bases[3])


def test_rng_blocks():
    a = rng.uniform(5, "x", 0, 3000, 2)
    b = np.concatenate([rng.uniform(5, "x", 0, 1023, 2), rng.uniform(5, "x", 1023, 1977, 2)])
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(rng.uniform(5, "x", 0, 10, 2), rng.uniform(5, "y", 0, 10, 2))
    assert not np.array_equal(rng.uniform(5, "x", 0, 10, 2), rng.uniform(6, "x", 0, 10, 2))
    assert rng.normal(1, "z", 0, 0, 3).shape == (0, 3)
