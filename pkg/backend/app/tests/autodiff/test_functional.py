# backend/app/tests/autodiff/test_functional.py
import numpy as np
import pytest

from app.autodiff import functional as F
from app.autodiff.gradcheck import finite_diff_gradient, max_relative_error
from app.autodiff.tensor import Tensor, backward
from app.core.exceptions import DimensionError


def grad_of(fn, *arrays):
    """Analytic gradients of the scalar fn(*tensors) for each input array."""
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    backward(fn(*tensors))
    return [t.grad for t in tensors]


def numeric_grad(fn, arrays, index):
    def partial(t):
        args = [Tensor(a) for a in arrays]
        args[index] = t
        return fn(*args)
    return finite_diff_gradient(partial, Tensor(arrays[index])).data


OPS = {
    "add": (lambda a, b: F.sum(F.mul(F.add(a, b), F.add(a, b))), [(3, 4), (3, 4)]),
    "add_trailing": (lambda a, b: F.sum(F.mul(F.add(a, b), a)), [(2, 3, 4), (4,)]),
    "sub": (lambda a, b: F.sum(F.mul(F.sub(a, b), a)), [(3, 4), (3, 4)]),
    "mul_scalar": (lambda a, b: F.sum(F.mul(a, F.mul(a, b))), [(3, 4), ()]),
    "div": (lambda a, b: F.sum(F.div(a, F.add(F.mul(b, b), 1.0))), [(3, 4), (3, 4)]),
    "matmul": (lambda a, b: F.sum(F.mul(F.matmul(a, b), F.matmul(a, b))), [(4, 5), (5, 3)]),
    "batched_matmul": (lambda a, b: F.sum(F.gelu(F.matmul(a, b))), [(2, 3, 4), (2, 4, 2)]),
    "silu": (lambda a: F.sum(F.mul(F.silu(a), a)), [(3, 4)]),
    "gelu": (lambda a: F.sum(F.mul(F.gelu(a), a)), [(3, 4)]),
    "softmax": (lambda a, b: F.sum(F.mul(F.softmax(a, axis=-1), b)), [(3, 5), (3, 5)]),
    "mean_axis": (lambda a: F.sum(F.mul(F.mean(a, axis=0), F.mean(a, axis=0))), [(4, 3)]),
    "reshape_transpose": (lambda a, b: F.sum(F.mul(F.transpose(F.reshape(a, (3, 2, 2)), (2, 0, 1)), b)),
                          [(3, 4), (2, 3, 2)]),
    "concat_narrow": (lambda a, b: F.sum(F.mul(F.narrow(F.concat([a, b], axis=1), 1, 1, 5), F.narrow(F.concat([a, b], axis=1), 1, 1, 5))),
                      [(2, 3), (2, 4)]),
    "expand": (lambda a, b: F.sum(F.mul(F.expand(F.reshape(a, (2, 1, 3)), (2, 4, 3)), b)), [(2, 3), (2, 4, 3)]),
    "layer_norm": (lambda a, g, c: F.sum(F.mul(F.layer_norm(a, g, c), F.layer_norm(a, g, c))),
                   [(3, 6), (6,), (6,)]),
}


class TestOperatorGradients:
    @pytest.mark.parametrize("name", sorted(OPS))
    def test_matches_central_differences(self, name):
        fn, shapes = OPS[name]
        rng = np.random.default_rng(sorted(OPS).index(name))
        arrays = [rng.normal(size=s) for s in shapes]
        analytic = grad_of(fn, *arrays)
        for i in range(len(arrays)):
            err = max_relative_error(analytic[i], numeric_grad(fn, arrays, i))
            assert err < 1e-4, f"{name} input {i}: {err}"

    def test_sqrt_gradient(self):
        x = np.array([0.5, 1.0, 4.0])
        (g,) = grad_of(lambda t: F.sum(F.sqrt(t)), x)
        np.testing.assert_allclose(g, 0.5 / np.sqrt(x), rtol=1e-12)

    def test_sqrt_gradient_at_zero(self):
        (g,) = grad_of(lambda t: F.sum(F.sqrt(t)), np.array([0.0, 4.0]))
        np.testing.assert_array_equal(g, [0.0, 0.25])

    def test_matmul_tight_tolerance(self, rng):
        a, b = rng.normal(size=(4, 5)), rng.normal(size=(5, 3))
        fn = OPS["matmul"][0]
        ga, gb = grad_of(fn, a, b)
        assert max_relative_error(ga, numeric_grad(fn, [a, b], 0)) < 1e-6
        assert max_relative_error(gb, numeric_grad(fn, [a, b], 1)) < 1e-6

    def test_shared_input_accumulates(self):
        x = Tensor(np.array([2.0]), requires_grad=True)
        backward(F.sum(F.add(F.mul(x, x), x)))
        np.testing.assert_allclose(x.grad, [5.0])

    def test_backward_is_repeatable(self, rng):
        a, b = rng.normal(size=(4, 5)), rng.normal(size=(5, 3))
        ta, tb = Tensor(a, requires_grad=True), Tensor(b, requires_grad=True)
        loss = F.sum(F.gelu(F.matmul(F.layer_norm(ta, Tensor(np.ones(5)), Tensor(np.zeros(5))), tb)))
        first = backward(loss)
        second = backward(loss)
        for key in first:
            np.testing.assert_array_equal(first[key], second[key])
        assert first.keys() == {ta.id, tb.id}


class TestOperatorSemantics:
    def test_softmax_rows_are_probabilities(self, rng):
        y = F.softmax(Tensor(rng.normal(scale=30.0, size=(7, 11))), axis=-1).data
        assert np.all(y >= 0.0)
        np.testing.assert_allclose(y.sum(axis=-1), 1.0, atol=1e-12)

    def test_layer_norm_statistics(self, rng):
        x = rng.normal(loc=3.0, scale=5.0, size=(6, 32))
        y = F.layer_norm(Tensor(x), Tensor(np.ones(32)), Tensor(np.zeros(32)), eps=1e-5).data
        assert np.max(np.abs(y.mean(axis=-1))) < 1e-10
        assert np.max(np.abs(y.var(axis=-1) - 1.0)) < 1e-6

    def test_split_covers_axis(self, rng):
        x = Tensor(rng.normal(size=(2, 7)))
        parts = F.split(x, [3, 4], axis=-1)
        np.testing.assert_array_equal(np.concatenate([p.data for p in parts], axis=-1), x.data)
        with pytest.raises(DimensionError):
            F.split(x, [3, 3], axis=-1)

    def test_incompatible_broadcast_is_rejected(self):
        with pytest.raises(DimensionError) as exc:
            F.add(Tensor(np.ones((3, 4))), Tensor(np.ones((3,))))
        assert (3, 4) in exc.value.shapes

    def test_matmul_inner_mismatch(self):
        with pytest.raises(DimensionError):
            F.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))

    def test_reshape_error_names_shapes(self):
        with pytest.raises(DimensionError) as exc:
            F.reshape(Tensor(np.ones((2, 3))), (4, 2))
        assert exc.value.shapes == ((2, 3), (4, 2))

    def test_transpose_needs_permutation(self):
        with pytest.raises(DimensionError):
            F.transpose(Tensor(np.ones((2, 3))), (0, 0))

    def test_operators_delegate_to_functional(self):
        a = Tensor(np.array([1.0, 2.0]))
        np.testing.assert_array_equal((a * 2.0 + 1.0 - a / 2.0).data, [2.5, 4.0])
        np.testing.assert_array_equal((-a).data, [-1.0, -2.0])
