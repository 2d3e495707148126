import numpy as np
import pytest

from carnot_monotone.density import box_gauge
from carnot_monotone.errors import BadGrid, PerturbationTouchesBoundary
from carnot_monotone.lie_core import preset
from carnot_monotone.lines import Line, LineMeasureSampler, Window
from carnot_monotone.perimeter import (
    estimate_perimeter,
    homogeneity_test,
    minimality_test,
    per_line_perimeter,
    random_interior_balls,
)
from carnot_monotone.sets import (
    boolean_ops,
    complement,
    empty_set,
    full_set,
    half_space,
    metric_ball,
    translate_set,
    vertical_half_space,
)

H1 = preset("H1")
R2 = preset("R2")


def test_per_line_examples():
    W = Window.cube(R2)
    L = Line(np.array([1.0, 0.0]), np.zeros(2))
    assert per_line_perimeter(vertical_half_space(R2), L, W) == 1
    assert per_line_perimeter(metric_ball(R2, "coordinate", np.zeros(2), 0.5), L, W) == 2
    assert per_line_perimeter(empty_set(R2), L, W) == 0
    # boundary outside the window is not seen
    assert per_line_perimeter(half_space(R2, [1, 0], offset=1.5), L, W) == 0
    with pytest.raises(BadGrid):
        per_line_perimeter(empty_set(R2), L, W, h=0.01, min_run=0.001)


def test_euclidean_crofton_values():
    # integral over S^1 x R of crossings equals 4 times the Euclidean length
    W = Window.cube(R2)
    s = LineMeasureSampler(R2, 5)
    est = estimate_perimeter(vertical_half_space(R2), W, s, 20000, h=0.005)
    assert abs(est.value - 8.0) < 4 * est.stderr
    est = estimate_perimeter(metric_ball(R2, "coordinate", np.zeros(2), 0.5), W, s, 20000, h=0.005)
    assert abs(est.value - 4 * np.pi) < 4 * est.stderr


@pytest.fixture(scope="module")
def sampler():
    return LineMeasureSampler(H1, 3)


def test_trivial_sets_have_zero_perimeter(sampler):
    W = Window.cube(H1)
    for E in (empty_set(H1), full_set(H1)):
        est = estimate_perimeter(E, W, sampler, 1000)
        assert est.value == 0 and est.stderr == 0


def test_half_space_counts_at_most_one(sampler):
    from carnot_monotone.perimeter import _line_counts_matrix
    counts, meets, _ = _line_counts_matrix(vertical_half_space(H1), (), sampler, Window.cube(H1), 3000, 0.01, 0.04,
                                           1024, 1)
    assert set(np.unique(counts)) <= {0, 1}
    assert np.all(counts[0][~meets] == 0)


def test_complement_invariance(sampler):
    W = Window.cube(H1)
    E = metric_ball(H1, box_gauge(H1), np.zeros(3), 0.6)
    a = estimate_perimeter(E, W, sampler, 2000)
    b = estimate_perimeter(complement(E), W, sampler, 2000)
    assert a.value == b.value and a.stderr == b.stderr


def test_left_invariance(sampler):
    W = Window.cube(H1)
    E = metric_ball(H1, box_gauge(H1), np.zeros(3), 0.6)
    y = np.array([0.3, -0.2, 0.5])
    a = estimate_perimeter(E, W, sampler, 20000, h=0.02)
    b = estimate_perimeter(translate_set(E, y), W.translated(H1, y), LineMeasureSampler(H1, 4), 20000, h=0.02)
    assert abs(a.value - b.value) <= 3 * np.hypot(a.stderr, b.stderr)


def test_additivity_for_separated_sets(sampler):
    W = Window.cube(H1)
    d = box_gauge(H1)
    A = metric_ball(H1, d, np.array([-0.5, 0, 0]), 0.3)
    B = metric_ball(H1, d, np.array([0.5, 0, 0]), 0.3)
    U = boolean_ops(A, B, "union")
    pa = estimate_perimeter(A, W, sampler, 5000, h=0.02).value
    pb = estimate_perimeter(B, W, sampler, 5000, h=0.02).value
    pu = estimate_perimeter(U, W, sampler, 5000, h=0.02).value
    assert pu == pytest.approx(pa + pb, rel=1e-12)


def test_count_minimum(sampler):
    with pytest.raises(ValueError):
        estimate_perimeter(empty_set(H1), Window.cube(H1), sampler, 999)


def test_full_set_is_never_beaten(sampler):
    W = Window.cube(H1)
    balls = random_interior_balls(H1, W, 3, seed=1, radii=(0.1, 0.3), margin=0.02)
    rep = minimality_test(full_set(H1), W, balls, sampler, 2000)
    assert rep.passed
    assert all(b["delta"] >= 0 for b in rep.deltas)
    assert rep.to_dict()["verdict"] == "PASS" and len(rep.to_dict()["per_perturbation"]) == 3


def test_ball_is_not_minimal(sampler):
    W = Window.cube(H1)
    E = metric_ball(H1, box_gauge(H1), np.zeros(3), 0.5)
    rep = minimality_test(E, W, [E], sampler, 3000, h=0.02)
    assert not rep.passed and rep.deltas[0]["delta"] < 0


def test_perturbation_must_sit_inside(sampler):
    W = Window.cube(H1)
    big = metric_ball(H1, box_gauge(H1), np.array([0.9, 0, 0]), 0.3)
    with pytest.raises(PerturbationTouchesBoundary):
        minimality_test(full_set(H1), W, [big], sampler, 1000)
    with pytest.raises(PerturbationTouchesBoundary):
        minimality_test(full_set(H1), W, [vertical_half_space(H1)], sampler, 1000)
    with pytest.raises(PerturbationTouchesBoundary):
        random_interior_balls(H1, W, 2, seed=0, radii=(5.0, 6.0), max_tries=50)


def test_homogeneity_of_trivial_set():
    rep = homogeneity_test(empty_set(H1), Window.cube(H1), 2.0, 1000, seed=0)
    assert rep.passed and np.isnan(rep.ratio)
    assert rep.expected == 8.0
