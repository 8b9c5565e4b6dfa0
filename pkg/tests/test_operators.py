import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from splitkit.operators import (
    FiniteSumOperator,
    LeastSquaresGradient,
    PrimalDualPoint,
    RowSplitOperator,
    SkewCoupling,
    box_resolvent,
    least_squares_gradient,
    load_matrix_csv,
    nonneg_resolvent,
    product_resolvent,
    save_matrix_csv,
    skew_apply,
    spectral_norm,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_box_resolvent_examples():
    np.testing.assert_array_equal(box_resolvent(0.3, [-0.5, 0.5, 2.0], 0, 1), [0, 0.5, 1])
    np.testing.assert_array_equal(box_resolvent(1.0, [1.5], 0, 1), [1.0])
    v = np.array([0.0, 0.25, 1.0])
    for gamma in (1e-3, 1.0, 1e3):
        np.testing.assert_array_equal(box_resolvent(gamma, v), v)


def test_box_resolvent_rejects_empty_box():
    with pytest.raises(ValueError):
        box_resolvent(1.0, [0.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        box_resolvent(1.0, [0.0], 2.0, 1.0)


def test_nonneg_resolvent_examples():
    np.testing.assert_array_equal(nonneg_resolvent(1.0, [-1, 0, 2]), [0, 0, 2])
    np.testing.assert_array_equal(nonneg_resolvent(1.0, np.zeros(4)), np.zeros(4))
    np.testing.assert_array_equal(nonneg_resolvent(0.1, [3.5]), [3.5])


def test_product_resolvent_examples():
    out = product_resolvent(1.0, PrimalDualPoint([-1, 2], [-3]))
    np.testing.assert_array_equal(out.x, [0, 1])
    np.testing.assert_array_equal(out.u, [0])
    z = PrimalDualPoint([0.2, 0.9], [4.0])
    np.testing.assert_array_equal(product_resolvent(2.0, z).flat(), z.flat())
    z = PrimalDualPoint([0.5], [0.0])
    np.testing.assert_array_equal(product_resolvent(2.0, z).flat(), [0.5, 0.0])
    with pytest.raises(ValueError):
        product_resolvent(1.0, z, d=2, q=1)


@pytest.mark.parametrize("proj", [lambda v: box_resolvent(1.0, v), lambda v: nonneg_resolvent(1.0, v)])
def test_projections_idempotent_and_firmly_nonexpansive(proj):
    rng = np.random.default_rng(0)
    a = 3 * rng.standard_normal((1000, 5))
    b = 3 * rng.standard_normal((1000, 5))
    Ja, Jb = proj(a.ravel()).reshape(a.shape), proj(b.ravel()).reshape(b.shape)
    np.testing.assert_array_equal(proj(Ja.ravel()).reshape(a.shape), Ja)
    lhs = np.sum((Ja - Jb) ** 2, axis=1)
    rhs = np.sum((Ja - Jb) * (a - b), axis=1)
    assert np.all(lhs <= rhs + 1e-12)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 6, elements=finite), arrays(np.float64, 6, elements=finite))
def test_box_firm_nonexpansive_property(a, b):
    Ja, Jb = box_resolvent(1.0, a), box_resolvent(1.0, b)
    diff = Ja - Jb
    assert diff @ diff <= diff @ (a - b) + 1e-12 * (1 + np.abs(a - b).sum())


def test_skew_apply_examples():
    out = skew_apply(np.eye(2), PrimalDualPoint([1, 2], [3, 4]))
    np.testing.assert_array_equal(out.x, [3, 4])
    np.testing.assert_array_equal(out.u, [-1, -2])
    D = np.random.default_rng(1).standard_normal((3, 4))
    np.testing.assert_array_equal(skew_apply(D, PrimalDualPoint(np.zeros(4), np.zeros(3))).flat(), 0)
    out = skew_apply([[2.0]], PrimalDualPoint([1.0], [1.0]))
    np.testing.assert_array_equal(out.flat(), [2.0, -2.0])
    with pytest.raises(ValueError):
        skew_apply(np.eye(2), PrimalDualPoint([1.0], [1.0]))


def test_skew_coupling_is_skew_and_lipschitz():
    rng = np.random.default_rng(2)
    D = rng.standard_normal((5, 8))
    B = SkewCoupling(D)
    np.testing.assert_allclose(B.lipschitz_bound, np.linalg.norm(B.matrix(), 2), rtol=1e-8)
    np.testing.assert_allclose(B.lipschitz_bound, np.linalg.norm(D, 2), rtol=1e-8)
    for _ in range(1000):
        z1, z2 = rng.standard_normal(13), rng.standard_normal(13)
        assert abs(B(z1) @ z1) <= 1e-10 * (z1 @ z1)
        dz = z1 - z2
        assert np.linalg.norm(B(z1) - B(z2)) <= B.lipschitz_bound * np.linalg.norm(dz) * (1 + 1e-9)
        # flat and block forms agree
    z = PrimalDualPoint(z1[:8], z1[8:])
    np.testing.assert_allclose(B(z1), skew_apply(D, z).flat())


def _h(G, b, x):
    r = G @ x - b
    return 0.5 * r @ r


def test_least_squares_gradient_examples():
    G = np.array([[1.0, 2.0], [0.0, 1.0]])
    x = np.array([0.3, -0.2])
    b = G @ x
    np.testing.assert_allclose(least_squares_gradient(G, b, PrimalDualPoint(x, [1.0])).flat(), 0, atol=1e-15)
    out = least_squares_gradient([[1.0]], [0.0], PrimalDualPoint([3.0], [7.0]))
    np.testing.assert_array_equal(out.flat(), [3.0, 0.0])


def test_least_squares_gradient_matches_central_differences():
    rng = np.random.default_rng(3)
    G, b = rng.standard_normal((4, 8)), rng.standard_normal(4)
    x = rng.standard_normal(8)
    grad = least_squares_gradient(G, b, PrimalDualPoint(x, np.zeros(2))).x
    eps = 1e-5
    fd = np.array([(_h(G, b, x + eps * e) - _h(G, b, x - eps * e)) / (2 * eps) for e in np.eye(8)])
    np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-8)


def test_least_squares_gradient_is_cocoercive():
    rng = np.random.default_rng(4)
    G, b = rng.standard_normal((6, 12)), rng.standard_normal(6)
    C = LeastSquaresGradient(G, b, q=3)
    np.testing.assert_allclose(C.beta, 1 / np.linalg.svd(G, compute_uv=False)[0] ** 2, rtol=1e-8)
    for _ in range(1000):
        z1, z2 = 5 * rng.standard_normal(15), 5 * rng.standard_normal(15)
        dC = C(z1) - C(z2)
        assert dC @ (z1 - z2) - C.beta * (dC @ dC) >= -1e-10 * (1 + dC @ dC)


def test_spectral_norm_examples():
    assert spectral_norm(np.eye(3)) == pytest.approx(1.0, rel=1e-12)
    assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-8)
    M = np.random.default_rng(5).standard_normal((5, 7))
    assert spectral_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-8)


@pytest.mark.parametrize("seed", range(10))
def test_spectral_norm_matches_svd(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal(tuple(rng.integers(1, 30, size=2)))
    assert spectral_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-8)


def test_spectral_norm_zero_matrix_and_orthogonal_start():
    value, info = spectral_norm(np.zeros((3, 3)), return_info=True)
    assert value == 0.0 and info["degenerate"]
    # all-ones start vector is in the null space: needs the random restart
    M = np.array([[1.0, -1.0]])
    value, info = spectral_norm(M, return_info=True)
    assert value == pytest.approx(np.sqrt(2.0), rel=1e-8)
    assert info["converged"] and not info["degenerate"]


def test_finite_sum_full_apply_equals_component_sum():
    rng = np.random.default_rng(6)
    mats = [rng.standard_normal((4, 4)) for _ in range(7)]
    op = FiniteSumOperator([lambda v, A=A: A @ v for A in mats], [np.linalg.norm(A, 2) for A in mats])
    for _ in range(50):
        v = rng.standard_normal(4)
        total = sum(op.component(i, v) for i in range(op.n_components))
        np.testing.assert_allclose(op.full_apply(v), total, rtol=1e-12 * 7, atol=1e-12 * 7 * np.abs(v).max())
    with pytest.raises(IndexError):
        op.component(7, v)


def test_row_split_components():
    rng = np.random.default_rng(7)
    M = rng.standard_normal((6, 6))
    op = RowSplitOperator(M)
    np.testing.assert_allclose(op.component_lipschitz, np.linalg.norm(M, axis=1))
    v = rng.standard_normal(6)
    total = np.sum([op.component(i, v) for i in range(6)], axis=0)
    np.testing.assert_allclose(op.full_apply(v), total, rtol=1e-12, atol=1e-12)
    comps = op.components
    np.testing.assert_array_equal(comps[2](v), op.component(2, v))


def test_primal_dual_point_behaves_as_concatenation():
    rng = np.random.default_rng(8)
    a = PrimalDualPoint(rng.standard_normal(3), rng.standard_normal(2))
    b = PrimalDualPoint(rng.standard_normal(3), rng.standard_normal(2))
    np.testing.assert_allclose((2.0 * a - b).flat(), 2.0 * a.flat() - b.flat())
    assert a.dot(b) == pytest.approx(a.flat() @ b.flat())
    assert a.norm() == pytest.approx(np.linalg.norm(a.flat()))
    c = PrimalDualPoint.from_flat(a.flat(), 3)
    np.testing.assert_array_equal(c.x, a.x)
    np.testing.assert_array_equal(c.u, a.u)


def test_matrix_csv_roundtrip(tmp_path):
    M = np.random.default_rng(9).standard_normal((3, 4))
    save_matrix_csv(tmp_path / "M.csv", M)
    np.testing.assert_array_equal(load_matrix_csv(tmp_path / "M.csv"), M)
    lines = (tmp_path / "M.csv").read_text().splitlines()
    assert len(lines) == 3 and all(line.count(",") == 3 for line in lines)
