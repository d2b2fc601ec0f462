"""Finite-difference verification of every autodiff primitive."""

import numpy as np
import pytest

from sild import autograd as ag
from sild.autograd import ShapeError, Tensor


def fd_grad(f, x, eps=1e-5):
    """Central-difference gradient oracle, independent of the tape."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_g = out.reshape(-1)
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + eps
        hi = float(f(Tensor(x)).data)
        flat_x[i] = orig - eps
        lo = float(f(Tensor(x)).data)
        flat_x[i] = orig
        flat_g[i] = (hi - lo) / (2 * eps)
    return out


def analytic_grad(f, x):
    t = Tensor(np.asarray(x, dtype=np.float64), requires_grad=True)
    ag.backward(f(t))
    return t.grad if t.grad is not None else np.zeros_like(t.data)


def assert_matches_fd(f, x, tol=1e-6):
    a = analytic_grad(f, x)
    n = fd_grad(f, x)
    rel = np.abs(a - n) / (np.abs(n) + 1e-12)
    assert rel.max() < tol, f"max rel err {rel.max():.3e}"


def test_sigmoid_at_zero_value_and_gradient():
    x = Tensor(np.zeros(1), requires_grad=True)
    y = ag.sigmoid(x)
    assert y.data[0] == pytest.approx(0.5, abs=1e-15)
    ag.backward(ag.sum_(y))
    assert x.grad[0] == pytest.approx(0.25, abs=1e-12)


def test_variance_of_constant_vector_is_zero_with_zero_gradient():
    x = Tensor(np.ones(3), requires_grad=True)
    v = ag.variance(x)
    assert v.data == pytest.approx(0.0, abs=0.0)
    ag.backward(v)
    np.testing.assert_array_equal(x.grad, np.zeros(3))


def test_matmul_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    b = Tensor(rng.standard_normal((4, 2)))
    x = rng.standard_normal((3, 4))
    assert_matches_fd(lambda t: ag.sum_(ag.square(ag.matmul(t, b))), x, tol=1e-6)
    # and with the checked operand on the right
    a = Tensor(rng.standard_normal((3, 4)))
    y = rng.standard_normal((4, 2))
    assert_matches_fd(lambda t: ag.sum_(ag.square(ag.matmul(a, t))), y, tol=1e-6)


@pytest.mark.parametrize("name,f,low,high", [
    ("add", lambda t, c: ag.sum_(ag.square(t + c)), -2, 2),
    ("sub", lambda t, c: ag.sum_(ag.square(c - t)), -2, 2),
    ("mul", lambda t, c: ag.sum_(t * c * t), -2, 2),
    ("div", lambda t, c: ag.sum_(t / c), -2, 2),
    ("div_denom", lambda t, c: ag.sum_(c / t), 0.5, 2),
    ("neg", lambda t, c: ag.sum_(ag.square(-t + c)), -2, 2),
    ("exp", lambda t, c: ag.sum_(ag.exp(t)), -2, 2),
    ("log", lambda t, c: ag.sum_(ag.log(t)), 0.5, 3),
    ("sqrt", lambda t, c: ag.sum_(ag.sqrt(t)), 0.5, 3),
    ("square", lambda t, c: ag.sum_(ag.square(t)), -2, 2),
    ("sin", lambda t, c: ag.sum_(ag.sin(t)), -2, 2),
    ("cos", lambda t, c: ag.sum_(ag.cos(t)), -2, 2),
    ("sigmoid", lambda t, c: ag.sum_(ag.sigmoid(t)), -3, 3),
    ("relu", lambda t, c: ag.sum_(ag.relu(t)), 0.3, 2),
    ("leaky_relu", lambda t, c: ag.sum_(ag.leaky_relu(t)), 0.3, 2),
    ("mean", lambda t, c: ag.mean(ag.square(t)), -2, 2),
    ("variance", lambda t, c: ag.variance(t * c), -2, 2),
])
def test_elementwise_primitives_match_finite_differences(name, f, low, high):
    rng = np.random.default_rng(hash(name) % 2**31)
    x = rng.uniform(low, high, size=(3, 4))
    c = Tensor(rng.uniform(0.5, 1.5, size=(3, 4)))
    assert_matches_fd(lambda t: f(t, c), x)


def test_negative_branch_of_relu_like_ops():
    x = -np.abs(np.random.default_rng(5).standard_normal((3, 3))) - 0.2
    assert_matches_fd(lambda t: ag.sum_(ag.relu(t)), x)
    assert_matches_fd(lambda t: ag.sum_(ag.leaky_relu(t)), x)


def test_arctan2_gradient_both_arguments():
    rng = np.random.default_rng(7)
    y = rng.uniform(0.5, 2, size=(4,)) * np.sign(rng.standard_normal(4))
    x = rng.uniform(0.5, 2, size=(4,)) * np.sign(rng.standard_normal(4))
    assert_matches_fd(lambda t: ag.sum_(ag.arctan2(t, Tensor(x))), y)
    assert_matches_fd(lambda t: ag.sum_(ag.arctan2(Tensor(y), t)), x)


def test_arctan2_origin_convention():
    assert ag.arctan2(Tensor(np.zeros(1)), Tensor(np.zeros(1))).data[0] == 0.0


def test_broadcasting_gradients():
    rng = np.random.default_rng(11)
    col = rng.standard_normal((3, 1))
    full = Tensor(rng.standard_normal((3, 4)))
    assert_matches_fd(lambda t: ag.sum_(t * full), col)
    row = rng.standard_normal((4,))
    assert_matches_fd(lambda t: ag.sum_(ag.square(full + t)), row)


def test_reductions_over_named_axis():
    rng = np.random.default_rng(13)
    x = rng.standard_normal((3, 5))
    assert_matches_fd(lambda t: ag.sum_(ag.square(ag.sum_(t, axis=1))), x)
    assert_matches_fd(lambda t: ag.sum_(ag.square(ag.mean(t, axis=0))), x)
    assert_matches_fd(lambda t: ag.sum_(ag.variance(t, axis=1)), x)


def test_variance_matches_population_formula():
    rng = np.random.default_rng(17)
    x = rng.standard_normal((4, 6))
    v = ag.variance(Tensor(x), axis=1)
    expected = ((x - x.mean(axis=1, keepdims=True)) ** 2).mean(axis=1)
    np.testing.assert_allclose(v.data, expected, rtol=0, atol=1e-15)
    np.testing.assert_allclose(v.data, x.var(axis=1), rtol=0, atol=1e-15)


def test_structural_ops_match_finite_differences():
    rng = np.random.default_rng(19)
    x = rng.standard_normal((5, 3))
    w = Tensor(rng.standard_normal((5, 3)))
    idx = np.array([0, 2, 2, 4])

    other = rng.standard_normal((5, 3))

    assert_matches_fd(lambda t: ag.sum_(ag.gather(t, idx) * Tensor(w.data[idx])), x)
    assert_matches_fd(lambda t: ag.sum_(ag.square(ag.scatter_add(t, idx[:4], 5))),
                      x[:4])
    assert_matches_fd(lambda t: ag.sum_(ag.square(ag.slice_axis0(t, 1, 4))), x)
    assert_matches_fd(
        lambda t: ag.sum_(ag.square(ag.concat([t, Tensor(other)], axis=-1))), x)
    assert_matches_fd(
        lambda t: ag.sum_(ag.square(ag.concat([ag.reshape(t, (1, 5, 3)),
                                               Tensor(other[None])], axis=0))), x)
    assert_matches_fd(lambda t: ag.sum_(w * ag.transpose(ag.transpose(t, (1, 0)),
                                                         (1, 0))), x)
    assert_matches_fd(lambda t: ag.sum_(ag.square(ag.reshape(t, (3, 5)))), x)


def test_gather_accumulates_duplicate_indices():
    x = Tensor(np.arange(4.0), requires_grad=True)
    y = ag.gather(x, np.array([1, 1, 3]))
    ag.backward(ag.sum_(y))
    np.testing.assert_array_equal(x.grad, [0.0, 2.0, 0.0, 1.0])


def test_detach_blocks_gradient():
    x = Tensor(np.full(3, 2.0), requires_grad=True)
    y = ag.sum_(x.detach() * x)
    ag.backward(y)
    np.testing.assert_array_equal(x.grad, np.full(3, 2.0))  # not 2x = 4


def test_grad_check_on_square_is_tight():
    err = ag.grad_check(lambda t: ag.sum_(ag.square(t)), np.array([3.0]), eps=1e-5)
    assert err < 1e-8


def test_grad_check_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        ag.grad_check(lambda t: ag.sum_(t), np.ones(2), eps=0.0)


def test_grad_check_raises_on_nonfinite():
    with pytest.raises(FloatingPointError):
        ag.grad_check(lambda t: ag.sum_(ag.log(t)), np.array([-1.0]))


def test_linearity_of_gradients_on_random_composites():
    rng = np.random.default_rng(23)
    x0 = rng.standard_normal((4, 3))
    c = Tensor(rng.standard_normal((4, 3)))

    def f(t):
        return ag.sum_(ag.sigmoid(t * c))

    def g(t):
        return ag.mean(ag.square(t + c))

    a_coef, b_coef = 0.7, -1.3
    ga = analytic_grad(f, x0)
    gb = analytic_grad(g, x0)
    combined = analytic_grad(lambda t: a_coef * f(t) + b_coef * g(t), x0)
    np.testing.assert_allclose(combined, a_coef * ga + b_coef * gb,
                               rtol=1e-12, atol=1e-14)


def test_identical_tapes_give_bit_identical_gradients():
    rng = np.random.default_rng(29)
    x = rng.standard_normal((6, 4))
    w = Tensor(rng.standard_normal((4, 2)))

    def run():
        t = Tensor(x.copy(), requires_grad=True)
        loss = ag.mean(ag.square(ag.sigmoid(ag.matmul(t, w))))
        ag.backward(loss)
        return t.grad.copy()

    np.testing.assert_array_equal(run(), run())


def test_shape_errors_name_primitive_and_shapes():
    a, b = Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2)))
    with pytest.raises(ShapeError, match=r"matmul.*\(2, 3\).*\(4, 2\)"):
        ag.matmul(a, b)
    with pytest.raises(ShapeError, match=r"add.*\(2, 3\).*\(3, 2\)"):
        ag.add(a, Tensor(np.ones((3, 2))))


def test_backward_requires_scalar():
    with pytest.raises(ShapeError):
        ag.backward(Tensor(np.ones(3), requires_grad=True))


def test_gradient_accumulates_across_uses():
    x = Tensor(np.array([2.0]), requires_grad=True)
    y = ag.sum_(x * x + x)  # dy/dx = 2x + 1 = 5
    ag.backward(y)
    assert x.grad[0] == pytest.approx(5.0, abs=1e-12)
