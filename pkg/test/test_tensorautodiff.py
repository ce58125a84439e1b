"""Module containing the tests of the tensor engine and of its gradient checker"""
import math
import numpy
import numpy.testing as npt
import pytest
from tensorautodiff import Tensor, Graph, DimensionError, GraphError, backward, grad_check, \
    functional as F

F64 = numpy.float64


def _random(seed, *shape):
    return numpy.random.default_rng(seed).normal(size=shape)


@pytest.mark.parametrize("a, b, expected", [
    [[[1, 0], [0, 1]], [[1, 2], [3, 4]], [[1, 2], [3, 4]]],
    [[[2]], [[3]], [[6]]],
    [[[1, 2], [3, 4]], [[5, 6], [7, 8]], [[19, 22], [43, 50]]]])
def test_matmul_examples(a, b, expected):
    npt.assert_allclose(F.matmul(Tensor(a), Tensor(b)).data, expected)


def test_matmul_mismatch_names_both_shapes():
    with pytest.raises(DimensionError) as error:
        F.matmul(Tensor(numpy.zeros((2, 3))), Tensor(numpy.zeros((2, 3))))
    assert "(2, 3) x (2, 3)" in str(error.value)


def test_matmul_gradients_follow_transposes():
    a = Tensor(_random(1, 3, 4), requires_grad=True)
    b = Tensor(_random(2, 4, 2), requires_grad=True)
    upstream = _random(3, 3, 2)
    backward(F.sum(F.matmul(a, b) * upstream))
    npt.assert_allclose(a.grad, upstream @ b.data.T, rtol=1e-5)
    npt.assert_allclose(b.grad, a.data.T @ upstream, rtol=1e-5)


def test_matmul_vector_operands_follow_numpy():
    vector, matrix = _random(21, 4), _random(22, 4, 3)
    npt.assert_allclose(F.matmul(Tensor(vector), Tensor(matrix)).data, vector @ matrix,
                        rtol=1e-5)
    npt.assert_allclose(F.matmul(Tensor(matrix.T), Tensor(vector)).data, matrix.T @ vector,
                        rtol=1e-5)
    assert F.matmul(Tensor(vector), Tensor(vector)).shape == ()


def test_matmul_vector_gradients_are_outer_products():
    vector = Tensor(_random(23, 4), requires_grad=True)
    matrix = Tensor(_random(24, 4, 3), requires_grad=True)
    upstream = _random(25, 3)
    backward(F.sum(F.matmul(vector, matrix) * upstream))
    npt.assert_allclose(vector.grad, matrix.data @ upstream, rtol=1e-5)
    npt.assert_allclose(matrix.grad, numpy.outer(vector.data, upstream), rtol=1e-5)


@pytest.mark.parametrize("shape", [(4,), (2, 4)])
def test_grad_check_of_matmul_with_vector_operand(shape):
    matrix = Tensor(_random(26, 4, 3))
    assert grad_check(lambda x: F.sum(F.gelu(F.matmul(x, matrix))), _random(27, *shape)) < 1e-4
    assert grad_check(lambda x: F.sum(F.matmul(Tensor(_random(28, *shape)), x)),
                      _random(29, 4, 3)) < 1e-4


def test_matmul_vector_mismatch_is_rejected():
    with pytest.raises(DimensionError):
        F.matmul(Tensor(numpy.zeros(3)), Tensor(numpy.zeros((4, 2))))


def test_matmul_associativity_f32():
    a, b, c = (Tensor(_random(seed, 4, 4)) for seed in (4, 5, 6))
    left = F.matmul(F.matmul(a, b), c).data
    right = F.matmul(a, F.matmul(b, c)).data
    npt.assert_allclose(left, right, rtol=1e-5, atol=1e-5)


def test_softmax_examples():
    npt.assert_allclose(F.softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])
    npt.assert_allclose(F.softmax(Tensor([math.log(1), math.log(2), math.log(3)])).data,
                        [1 / 6, 2 / 6, 3 / 6], rtol=1e-6)
    x = _random(7, 3, 5)
    npt.assert_allclose(F.softmax(Tensor(x + 12.5)).data, F.softmax(Tensor(x)).data, atol=1e-6)


def test_softmax_rows_sum_to_one_in_f32():
    logits = numpy.random.default_rng(8).uniform(-50, 50, size=(200, 17)).astype(numpy.float32)
    rows = F.softmax(Tensor(logits)).data.sum(axis=-1)
    assert numpy.max(numpy.abs(rows - 1)) < 1e-6


def test_layer_norm_examples():
    ones, zeros = Tensor(numpy.ones(4)), Tensor(numpy.zeros(4))
    npt.assert_allclose(F.layer_norm(Tensor(numpy.full(4, 3.0)), ones, zeros).data, 0.0)

    with Graph(dtype=F64):
        unit = F.layer_norm(Tensor([1.0, -1.0]), Tensor([1.0, 1.0]), Tensor([0.0, 0.0]),
                            eps=1e-12).data
        affine = F.layer_norm(Tensor([1.0, -1.0]), Tensor([2.0, 2.0]), Tensor([1.0, 1.0]),
                              eps=1e-12).data
    npt.assert_allclose(unit, [1.0, -1.0], atol=1e-9)
    npt.assert_allclose(affine, [3.0, -1.0], atol=1e-9)


def test_layer_norm_rows_are_standardized():
    x = _random(9, 50, 32) * 3.0 + 1.5
    out = F.layer_norm(Tensor(x), Tensor(numpy.ones(32)), Tensor(numpy.zeros(32))).data
    assert numpy.max(numpy.abs(out.mean(axis=-1))) < 1e-5
    assert numpy.max(numpy.abs(out.var(axis=-1) - 1)) < 1e-4


def test_layer_norm_rejects_single_feature():
    with pytest.raises(DimensionError):
        F.layer_norm(Tensor([[1.0]]), Tensor([1.0]), Tensor([0.0]))


def test_gelu_uses_the_exact_normal_cdf():
    with Graph(dtype=F64):
        values = F.gelu(Tensor([0.0, 10.0, 1.0], dtype=F64)).data
    assert values[0] == 0.0
    assert abs(values[1] - 10.0) < 1e-6
    assert abs(values[2] - 0.8413447) < 1e-7


def test_conv2d_examples():
    image = _random(10, 1, 5, 5)
    identity = F.conv2d(Tensor(image), Tensor(numpy.ones((1, 1, 1, 1)))).data
    npt.assert_allclose(identity, image, rtol=1e-6)

    delta = numpy.zeros((1, 7, 7))
    delta[0, 3, 3] = 1.0
    spread = F.conv2d(Tensor(delta), Tensor(numpy.ones((1, 1, 3, 3))), padding=1).data
    expected = numpy.zeros((1, 7, 7))
    expected[0, 2:5, 2:5] = 1.0
    npt.assert_allclose(spread, expected)

    strided = F.conv2d(Tensor(numpy.zeros((1, 64, 64))), Tensor(numpy.zeros((4, 1, 3, 3))),
                       stride=2, padding=1)
    assert strided.shape == (4, 32, 32)


def test_conv2d_rejects_oversized_kernel():
    with pytest.raises(DimensionError):
        F.conv2d(Tensor(numpy.zeros((1, 2, 2))), Tensor(numpy.zeros((1, 1, 5, 5))))


@pytest.mark.parametrize("in_len, out_len, windows", [
    [4, 2, [(0, 2), (2, 4)]],
    [3, 3, [(0, 1), (1, 2), (2, 3)]],
    [3, 2, [(0, 2), (1, 3)]]])
def test_adaptive_avg_pool_windows(in_len, out_len, windows):
    x = _random(11, in_len, 3)
    pooled = F.adaptive_avg_pool_tokens(Tensor(x), out_len).data
    for row, (start, stop) in enumerate(windows):
        npt.assert_allclose(pooled[row], x[start:stop].mean(axis=0), rtol=1e-5, atol=1e-6)


def test_adaptive_avg_pool_rejects_up_sampling():
    with pytest.raises(DimensionError):
        F.adaptive_avg_pool_tokens(Tensor(numpy.zeros((2, 3))), 4)


def test_max_pool_tokens_examples():
    npt.assert_allclose(F.max_pool_tokens(Tensor([[1.0, 5.0], [3.0, 2.0]])).data, [3.0, 5.0])
    npt.assert_allclose(F.max_pool_tokens(Tensor([[4.0, -1.0]])).data, [4.0, -1.0])
    x = _random(12, 6, 4)
    permuted = x[numpy.random.default_rng(13).permutation(6)]
    npt.assert_array_equal(F.max_pool_tokens(Tensor(x)).data,
                           F.max_pool_tokens(Tensor(permuted)).data)
    with pytest.raises(DimensionError):
        F.max_pool_tokens(Tensor(numpy.zeros((0, 3))))


def test_max_pool_tokens_routes_ties_to_first_argmax():
    x = Tensor([[2.0, 1.0], [2.0, 3.0]], requires_grad=True)
    backward(F.sum(F.max_pool_tokens(x)))
    npt.assert_array_equal(x.grad, [[1.0, 0.0], [0.0, 1.0]])


def test_bce_with_logits_examples():
    with Graph(dtype=F64):
        assert abs(F.bce_with_logits(Tensor([0.0]), [1]).item() - 0.693147) < 1e-6
        assert F.bce_with_logits(Tensor([30.0]), [1]).item() < 1e-12
        assert abs(F.bce_with_logits(Tensor([1.0]), [0]).item() - 1.313262) < 1e-6


def test_bce_gradient_is_sigmoid_minus_label():
    logits = Tensor([0.3, -1.2], requires_grad=True)
    backward(F.bce_with_logits(logits, [1, 0]))
    expected = (1 / (1 + numpy.exp(-logits.data)) - numpy.array([1, 0])) / 2
    npt.assert_allclose(logits.grad, expected, rtol=1e-5)


def test_backward_examples():
    x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
    backward(F.sum(x * x))
    npt.assert_allclose(x.grad, [2.0, -4.0, 6.0])

    x = Tensor([1.0, 2.0], requires_grad=True)
    y = Tensor([3.0, 4.0], requires_grad=True)
    backward(F.sum(x * 0.0) + F.sum(y * y))
    npt.assert_array_equal(x.grad, [0.0, 0.0])


def test_backward_matches_hand_chained_jacobians():
    w1 = Tensor([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
    w2 = Tensor([[0.5, -1.0], [2.0, 1.0]], requires_grad=True)
    x = Tensor([[1.0, -1.0]], requires_grad=True)
    backward(F.sum(F.matmul(F.matmul(x, w1), w2)))
    npt.assert_allclose(x.grad, numpy.ones((1, 2)) @ w2.data.T @ w1.data.T)
    npt.assert_allclose(w2.grad, (x.data @ w1.data).T @ numpy.ones((1, 2)))


def test_backward_rejects_non_scalar_and_stale_graphs():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(GraphError):
        backward(x * x)
    loss = F.sum(x * x)
    backward(loss)
    with pytest.raises(GraphError):
        backward(loss)


def test_backward_is_deterministic():
    def gradients():
        w = Tensor(_random(14, 5, 5), requires_grad=True)
        h = F.gelu(F.matmul(Tensor(_random(15, 3, 5)), w))
        backward(F.sum(F.softmax(h) * Tensor(_random(16, 3, 5))))
        return w.grad

    npt.assert_array_equal(gradients(), gradients())


def test_grad_check_of_linear_function_is_exact():
    weights = Tensor(_random(17, 6), dtype=F64)
    assert grad_check(lambda x: F.sum(x * weights), _random(18, 6)) < 1e-9


def test_grad_check_of_gelu():
    assert grad_check(lambda x: F.sum(F.gelu(x)), _random(19, 10), eps=1e-5) < 1e-4


LAYER_CASES = {
    "matmul": (lambda x: F.sum(F.matmul(x, Tensor(_random(20, 4, 3))) *
                               Tensor(_random(21, 2, 3))), (2, 4)),
    "softmax": (lambda x: F.sum(F.softmax(x) * Tensor(_random(22, 3, 5))), (3, 5)),
    "layer_norm": (lambda x: F.sum(F.layer_norm(x, Tensor(_random(23, 6)),
                                                Tensor(_random(24, 6))) *
                                   Tensor(_random(25, 2, 6))), (2, 6)),
    "conv2d": (lambda x: F.sum(F.conv2d(x, Tensor(_random(26, 2, 2, 3, 3)), padding=1) *
                               Tensor(_random(27, 2, 5, 5))), (2, 5, 5)),
    "max_pool2d": (lambda x: F.sum(F.max_pool2d(x) * Tensor(_random(28, 1, 2, 2, 2))),
                   (1, 2, 4, 4)),
    "adaptive_pool": (lambda x: F.sum(F.adaptive_avg_pool_tokens(x, 3) *
                                      Tensor(_random(29, 3, 4))), (5, 4)),
    "max_pool_tokens": (lambda x: F.sum(F.max_pool_tokens(x) * Tensor(_random(30, 4))),
                        (6, 4)),
    "bce": (lambda x: F.bce_with_logits(x, [1, 0, 1]), (3,)),
}


@pytest.mark.parametrize("name", sorted(LAYER_CASES))
def test_grad_check_per_layer(name):
    fn, shape = LAYER_CASES[name]
    assert grad_check(fn, _random(31, *shape), eps=1e-5) < 1e-4


def test_grad_check_of_conv2d_weights():
    image = Tensor(_random(32, 1, 2, 6, 6), dtype=F64)
    upstream = Tensor(_random(33, 1, 3, 3, 3), dtype=F64)
    fn = lambda w: F.sum(F.conv2d(image, w, stride=2, padding=1) * upstream)
    assert grad_check(fn, _random(34, 3, 2, 3, 3)) < 1e-4
