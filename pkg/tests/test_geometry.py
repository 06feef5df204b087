import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmann.geometry import (
    BrokenEuclideanSpace,
    EuclideanSpace,
    StarTreeSpace,
    TreePoint,
    check_w_axioms,
)

coord = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
radius = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)
ray = st.integers(min_value=0, max_value=4)


def test_euclidean_combine_midquarter():
    sp = EuclideanSpace(1)
    c = sp.combine(np.array([0.0]), np.array([2.0]), 0.25)
    assert c[0] == pytest.approx(0.5)
    assert sp.dist(np.array([0.0]), c) == pytest.approx(0.25 * sp.dist(np.array([0.0]), np.array([2.0])))


def test_euclidean_dist_345():
    sp = EuclideanSpace(2)
    assert sp.dist(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0


def test_tree_dist_cases():
    sp = StarTreeSpace(3)
    assert sp.dist(TreePoint(1, 2.0), TreePoint(2, 1.0)) == 3.0
    assert sp.dist(TreePoint(1, 2.0), TreePoint(1, 0.5)) == 1.5


def test_tree_combine_through_origin():
    sp = StarTreeSpace(3)
    mid = sp.combine(TreePoint(1, 1.0), TreePoint(2, 1.0), 0.5)
    assert mid == TreePoint(0, 0.0)
    walked = sp.combine(TreePoint(1, 2.0), TreePoint(2, 1.0), 0.5)
    assert walked.ray == 1
    assert walked.t == pytest.approx(0.5)


def test_tree_point_canonical_origin():
    assert TreePoint(2, 0.0) == TreePoint(0, 0.0)
    assert TreePoint(2, 0.0).ray == 0
    with pytest.raises(ValueError):
        TreePoint(1, -0.5)
    with pytest.raises(ValueError):
        TreePoint(-1, 1.0)


def test_combine_rejects_bad_lambda():
    sp = EuclideanSpace(1)
    with pytest.raises(ValueError):
        sp.combine(np.array([0.0]), np.array([1.0]), 1.5)
    with pytest.raises(ValueError):
        sp.combine(np.array([0.0]), np.array([1.0]), -0.1)


def test_shape_mismatch_rejected():
    sp = EuclideanSpace(2)
    with pytest.raises(ValueError):
        sp.dist(np.array([0.0, 0.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        sp.combine(np.zeros(2), np.zeros(3), 0.5)


def test_tree_rejects_foreign_points():
    sp = StarTreeSpace(2)
    with pytest.raises(ValueError):
        sp.dist(TreePoint(5, 1.0), TreePoint(0, 0.0))
    with pytest.raises(ValueError):
        sp.dist(np.zeros(2), TreePoint(0, 0.0))


@pytest.mark.parametrize("space", [EuclideanSpace(3), StarTreeSpace(4)])
def test_axioms_pass_on_samples(space):
    report = check_w_axioms(space, samples=1000, tol=1e-9, seed=7)
    assert report.passed, report.summary()


def test_broken_space_flagged_with_expected_magnitude():
    sp = BrokenEuclideanSpace(1)
    x, y = np.array([0.0]), np.array([2.0])
    lam = 0.5
    # distance from x to the lam-combination should be lam*d; the broken map
    # yields lam^2*d, so the analytic violation is |lam^2 - lam| * d(x, y)
    observed = abs(sp.dist(x, sp.combine(x, y, lam)) - lam * sp.dist(x, y))
    assert observed == pytest.approx(abs(lam**2 - lam) * 2.0)
    # and the (W2) comparison against theta = 0 shows the same magnitude
    w2 = abs(sp.dist(sp.combine(x, y, lam), sp.combine(x, y, 0.0)) - lam * sp.dist(x, y))
    assert w2 == pytest.approx(abs(lam**2 - lam) * 2.0)

    report = check_w_axioms(sp, samples=2000, tol=1e-9, seed=3)
    assert not report.passed
    assert "W2" in report.failures()
    assert "endpoint_distances" in report.failures()


@settings(max_examples=100, deadline=None)
@given(x=coord, y=coord, lam=unit, th=unit)
def test_euclidean_endpoint_and_w2_exact(x, y, lam, th):
    sp = EuclideanSpace(1)
    px, py = np.array([x]), np.array([y])
    d = sp.dist(px, py)
    c_lam = sp.combine(px, py, lam)
    assert sp.dist(px, c_lam) == pytest.approx(lam * d, abs=1e-9)
    assert sp.dist(py, c_lam) == pytest.approx((1 - lam) * d, abs=1e-9)
    assert sp.dist(c_lam, sp.combine(px, py, th)) == pytest.approx(abs(lam - th) * d, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(r1=ray, t1=radius, r2=ray, t2=radius, lam=unit, th=unit)
def test_tree_endpoint_and_w2_exact(r1, t1, r2, t2, lam, th):
    sp = StarTreeSpace(5)
    x, y = TreePoint(r1, t1), TreePoint(r2, t2)
    d = sp.dist(x, y)
    c_lam = sp.combine(x, y, lam)
    assert sp.dist(x, c_lam) == pytest.approx(lam * d, abs=1e-9)
    assert sp.dist(y, c_lam) == pytest.approx((1 - lam) * d, abs=1e-9)
    assert sp.dist(c_lam, sp.combine(x, y, th)) == pytest.approx(abs(lam - th) * d, abs=1e-9)
    # symmetry of the combination map
    assert sp.dist(c_lam, sp.combine(y, x, 1.0 - lam)) <= 1e-9
