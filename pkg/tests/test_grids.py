import numpy as np

from evflow.grids import (EdgeWeights, flow_grad, flow_grad_adjoint, grad,
                          grad_adjoint, project_ball2, project_box)


def brute_inner(a, b):
    """Independent double-loop inner product."""
    total = 0.0
    for x, y in zip(np.ravel(a), np.ravel(b)):
        total += x * y
    return total


def dense_matrix(op, in_shape, out_shape):
    """Assemble the dense matrix of a linear operator by basis vectors."""
    n_in = int(np.prod(in_shape))
    n_out = int(np.prod(out_shape))
    mat = np.zeros((n_out, n_in))
    for j in range(n_in):
        e = np.zeros(n_in)
        e[j] = 1.0
        mat[:, j] = op(e.reshape(in_shape)).ravel()
    return mat


def test_grad_of_constant_is_zero():
    g = np.full((6, 7), 0.37)
    assert np.all(grad(g) == 0.0)


def test_grad_forward_difference_1x3():
    g = np.array([[0.0, 1.0, 3.0]])
    gx = grad(g)[..., 0]
    assert np.array_equal(gx, np.array([[1.0, 2.0, 0.0]]))


def test_grad_adjoint_of_zero_is_zero():
    assert np.all(grad_adjoint(np.zeros((5, 4, 2))) == 0.0)


def test_grad_adjoint_identity_brute_force(rng):
    for shape in [(8, 8), (5, 7)]:
        g = rng.standard_normal(shape)
        v = rng.standard_normal(shape + (2,))
        lhs = brute_inner(grad(g), v)
        rhs = brute_inner(g, grad_adjoint(v))
        denom = np.linalg.norm(g) * np.linalg.norm(v)
        assert abs(lhs - rhs) / denom < 1e-12


def test_grad_adjoint_matches_dense_transpose(rng):
    mat = dense_matrix(grad, (4, 4), (4, 4, 2))
    v = rng.standard_normal((4, 4, 2))
    expected = (mat.T @ v.ravel()).reshape(4, 4)
    assert np.allclose(grad_adjoint(v), expected, atol=1e-14)


def test_grad_adjoint_unit_impulse_footprint():
    # unit x-component at an interior pixel scatters +1/-1 per the transposed stencil
    mat = dense_matrix(grad, (4, 4), (4, 4, 2))
    v = np.zeros((4, 4, 2))
    v[1, 1, 0] = 1.0
    out = grad_adjoint(v)
    expected = (mat.T @ v.ravel()).reshape(4, 4)
    assert np.array_equal(out, expected)
    assert out[1, 2] == 1.0 and out[1, 1] == -1.0


def test_flow_grad_constant_flow_is_zero():
    u = np.full((6, 6, 2), 1.7)
    w = EdgeWeights(np.full((6, 6), 0.5), np.full((6, 6), 2.0))
    assert np.all(flow_grad(u, w) == 0.0)


def test_flow_grad_unit_weights_reduces_to_grad(rng):
    u = rng.standard_normal((6, 6, 2))
    w = EdgeWeights(np.ones((6, 6)), np.ones((6, 6)))
    k = flow_grad(u, w)
    gu = grad(u[..., 0])
    gv = grad(u[..., 1])
    assert np.array_equal(k[..., 0], gu[..., 0])
    assert np.array_equal(k[..., 1], gu[..., 1])
    assert np.array_equal(k[..., 2], gv[..., 0])
    assert np.array_equal(k[..., 3], gv[..., 1])


def test_flow_grad_adjoint_identity(rng):
    for _ in range(5):
        w = EdgeWeights(rng.random((6, 6)) + 0.1, rng.random((6, 6)) + 0.1)
        u = rng.standard_normal((6, 6, 2))
        p = rng.standard_normal((6, 6, 4))
        lhs = brute_inner(flow_grad(u, w), p)
        rhs = brute_inner(u, flow_grad_adjoint(p, w))
        denom = np.linalg.norm(u) * np.linalg.norm(p)
        assert abs(lhs - rhs) / denom < 1e-12


def test_flow_grad_adjoint_matches_dense_transpose(rng):
    w = EdgeWeights(rng.random((4, 4)) + 0.1, rng.random((4, 4)) + 0.1)
    mat = dense_matrix(lambda u: flow_grad(u, w), (4, 4, 2), (4, 4, 4))
    p = rng.standard_normal((4, 4, 4))
    expected = (mat.T @ p.ravel()).reshape(4, 4, 2)
    assert np.allclose(flow_grad_adjoint(p, w), expected, atol=1e-14)


def test_project_ball2_inside_unchanged():
    p = np.zeros((1, 1, 4))
    p[0, 0] = [0.3, 0.1, 0.0, 0.0]
    assert np.array_equal(project_ball2(p), p)


def test_project_ball2_scales_3_4_5():
    p = np.zeros((1, 1, 4))
    p[0, 0] = [3.0, 4.0, 0.0, 0.0]
    out = project_ball2(p)
    assert np.allclose(out[0, 0], [0.6, 0.8, 0.0, 0.0], atol=1e-15)


def test_project_ball2_norms(rng):
    p = rng.standard_normal((8, 8, 4)) * 3
    out = project_ball2(p)
    norms_in = np.linalg.norm(p, axis=-1)
    norms_out = np.linalg.norm(out, axis=-1)
    assert np.all(np.abs(norms_out - np.minimum(1.0, norms_in)) < 1e-12)


def test_project_box_values():
    p = np.array([[[0.5, -2.0, 7.0]]])
    out = project_box(p)
    assert np.array_equal(out, np.array([[[0.5, -1.0, 1.0]]]))


def test_projections_idempotent_and_nonexpansive(rng):
    for proj in (project_ball2, project_box):
        a = rng.standard_normal((7, 7, 4)) * 2
        b = rng.standard_normal((7, 7, 4)) * 2
        pa, pb = proj(a), proj(b)
        assert np.allclose(proj(pa), pa, atol=1e-14)
        assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12


def power_iteration_norm_sq(fwd, adj, in_shape, iters=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(in_shape)
    for _ in range(iters):
        y = adj(fwd(x))
        x = y / np.linalg.norm(y)
    return float((fwd(x) ** 2).sum() / (x ** 2).sum())


def test_operator_norm_bounds(rng):
    n2 = power_iteration_norm_sq(grad, grad_adjoint, (12, 12))
    assert n2 <= 8.0 + 1e-9
    w = EdgeWeights(rng.random((10, 10)) * 2 + 0.1, rng.random((10, 10)) * 2 + 0.1)
    n2w = power_iteration_norm_sq(lambda u: flow_grad(u, w),
                                  lambda p: flow_grad_adjoint(p, w), (10, 10, 2))
    wmax = max(w.wx.max(), w.wy.max())
    assert n2w <= 8.0 * wmax * wmax + 1e-9
