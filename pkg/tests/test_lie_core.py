import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from carnot_monotone.bch import bch_words
from carnot_monotone.errors import (
    AntisymmetryViolation,
    CarnotError,
    GradingViolation,
    JacobiViolation,
    NonPositiveLambda,
)
from carnot_monotone.lie_core import (
    PRESETS,
    Stratification,
    _constants_from_list,
    bracket,
    build_group,
    change_basis,
    dilate,
    dilate_box,
    group_from_mapping,
    haar_volume_box,
    inverse,
    load_group,
    multiply,
    preset,
)

NAMES = ["R2", "R3", "H1", "H2", "free2-3", "engel"]
coords = st.floats(-3, 3, allow_nan=False)


def points(n):
    return arrays(float, (n,), elements=coords)


def bch3(g, x, y):
    """Hand-expanded product for step <= 3."""
    xy = bracket(g, x, y)
    return x + y + xy / 2 + (bracket(g, x, xy) - bracket(g, y, xy)) / 12


def heis_matrix(p):
    return np.array([[0, p[0], p[2]], [0, 0, p[1]], [0, 0, 0]], dtype=float)


def heis_product(p, q):
    A, B = heis_matrix(p), heis_matrix(q)
    eA = np.eye(3) + A + A @ A / 2
    eB = np.eye(3) + B + B @ B / 2
    N = eA @ eB - np.eye(3)
    L = N - N @ N / 2
    return np.array([L[0, 1], L[1, 2], L[0, 2]])


def test_stratification_numbers():
    s = Stratification((2, 1, 1))
    assert (s.s, s.n, s.r, s.Q) == (3, 4, 2, 2 + 2 + 3)
    assert list(s.layer_of) == [1, 1, 2, 3]
    assert s.layer_slice(2) == slice(2, 3)


@pytest.mark.parametrize("name,Q", [("R2", 2), ("R3", 3), ("H1", 4), ("H2", 6), ("free2-3", 9), ("engel", 7)])
def test_preset_dimensions(name, Q):
    assert preset(name).Q == Q


def test_heisenberg_frozen_product():
    g = preset("H1")
    np.testing.assert_allclose(multiply(g, [1, 2, 3], [4, 5, 6]), [5, 7, 7.5], rtol=0, atol=1e-15)


def test_heisenberg_matches_matrix_group():
    g = preset("H1")
    gen = np.random.default_rng(0)
    for p, q in gen.standard_normal((50, 2, 3)):
        np.testing.assert_allclose(multiply(g, p, q), heis_product(p, q), atol=1e-12)


@pytest.mark.parametrize("name", NAMES)
def test_product_matches_hand_expansion(name):
    g = preset(name)
    gen = np.random.default_rng(1)
    p, q = gen.standard_normal((2, 200, g.n))
    np.testing.assert_allclose(multiply(g, p, q), bch3(g, p, q), atol=1e-12)


def test_bch_low_order_coefficients():
    table = {w: c for c, w in bch_words(3)}
    assert table[(0,)] == 1 and table[(1,)] == 1
    # 1/2 [X, Y] written as (1/2)(1/2)([XY] - [YX])
    assert table[(0, 1)] == -table[(1, 0)] == pytest.approx(0.25)


def test_bracket_matches_dense_contraction():
    g = preset("free2-3")
    gen = np.random.default_rng(2)
    a, b = gen.standard_normal((2, 10, g.n))
    np.testing.assert_allclose(bracket(g, a, b), np.einsum("ijk,ni,nj->nk", g.constants, a, b), atol=1e-14)


@pytest.mark.parametrize("name", NAMES)
@given(data=st.data())
def test_group_axioms(name, data):
    g = preset(name)
    p, q, r = (data.draw(points(g.n)) for _ in range(3))
    np.testing.assert_allclose(multiply(g, multiply(g, p, q), r), multiply(g, p, multiply(g, q, r)), atol=1e-9)
    np.testing.assert_array_equal(multiply(g, p, inverse(g, p)), np.zeros(g.n))
    np.testing.assert_array_equal(multiply(g, p, g.identity()), p)


@pytest.mark.parametrize("name", NAMES)
@given(data=st.data(), lam=st.floats(0.1, 5))
def test_dilation_is_automorphism(name, data, lam):
    g = preset(name)
    p, q = data.draw(points(g.n)), data.draw(points(g.n))
    np.testing.assert_allclose(dilate(g, lam, multiply(g, p, q)),
                               multiply(g, dilate(g, lam, p), dilate(g, lam, q)), atol=1e-8 * (1 + lam ** 3))


@given(a=points(5), b=points(5), c=st.floats(-2, 2))
def test_bracket_antisymmetric_bilinear(a, b, c):
    g = preset("H2")
    np.testing.assert_allclose(bracket(g, a, b), -bracket(g, b, a), atol=1e-12)
    np.testing.assert_allclose(bracket(g, c * a, b), c * bracket(g, a, b), atol=1e-10)


def test_dilate_rejects_nonpositive():
    g = preset("H1")
    with pytest.raises(NonPositiveLambda):
        dilate(g, 0.0, np.ones(3))
    with pytest.raises(NonPositiveLambda):
        dilate(g, -1.0, np.ones(3))


def test_haar_volume_of_dilated_box_scales_with_Q():
    g = preset("engel")
    box = (-np.ones(4), np.ones(4))
    assert haar_volume_box(g, dilate_box(g, 2.0, box)) == pytest.approx(2 ** g.Q * haar_volume_box(g, box))


def test_jacobi_violation_names_triple():
    c = _constants_from_list(5, [(1, 2, 3, 1), (1, 3, 4, 1), (1, 4, 5, 1), (2, 4, 5, 1)])
    with pytest.raises(JacobiViolation) as exc:
        build_group((2, 1, 1, 1), c)
    assert exc.value.triple == (0, 1, 2)
    assert "(e_1, e_2, e_3)" in str(exc.value)


def test_grading_violations():
    with pytest.raises(GradingViolation):
        build_group((3, 1), _constants_from_list(4, [(1, 2, 4, 1), (2, 3, 1, 1)]))
    with pytest.raises(GradingViolation) as exc:
        build_group((2, 2), _constants_from_list(4, [(1, 2, 3, 1)]))
    assert exc.value.rank_defect == (2, 1)


def test_antisymmetry_violation():
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    with pytest.raises(AntisymmetryViolation):
        build_group((2, 1), c)
    with pytest.raises(AntisymmetryViolation):
        _constants_from_list(3, [(1, 2, 3, 1.0), (2, 1, 3, 1.0)])


def test_change_basis_is_isomorphism():
    g = preset("H1")
    theta = 0.7
    M = np.eye(3)
    M[:2, :2] = [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    h = change_basis(g, M)
    gen = np.random.default_rng(3)
    p, q = gen.standard_normal((2, 20, 3))
    Minv = np.linalg.inv(M)
    np.testing.assert_allclose(multiply(h, p @ Minv.T, q @ Minv.T), multiply(g, p, q) @ Minv.T, atol=1e-12)
    with pytest.raises(GradingViolation):
        change_basis(g, np.ones((3, 3)) + np.eye(3))


def test_group_definition_file(tmp_path):
    f = tmp_path / "engel.toml"
    f.write_text('name = "mine"\nlayers = [2, 1, 1]\nconstants = [[1, 2, 3, 1.0], [1, 3, 4, 1.0]]\n')
    g = load_group(f)
    assert g == preset("engel") and g.name == "mine"
    assert group_from_mapping({"preset": "H1"}) is preset("H1")
    assert load_group("H2") is preset("H2")
    with pytest.raises(CarnotError):
        preset("nope")
    with pytest.raises(CarnotError):
        group_from_mapping({"name": "x"})


def test_generic_presets():
    assert preset("R5").n == 5 and preset("H3").Q == 8
    assert set(PRESETS) >= {"R2", "H1", "H2", "free2-3", "engel"}
