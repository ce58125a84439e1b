"""Module containing the differentiable operations of the engine.

Every operation accepts optional leading batch axes: the per-sample contracts
(e.g. conv2d on Cin x H x W, token pooling on N x d) are the unbatched case.
"""
import math
import numpy
import scipy.special
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, Function, DimensionError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class Add(Function):

    def forward(self, a, b):
        return a + b

    def backward(self, gradient):
        return gradient, gradient


class Sub(Function):

    def forward(self, a, b):
        return a - b

    def backward(self, gradient):
        return gradient, -gradient


class Mul(Function):

    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, gradient):
        return gradient * self.b, gradient * self.a


class Div(Function):

    def forward(self, a, b):
        self.a, self.b = a, b
        return a / b

    def backward(self, gradient):
        return gradient / self.b, -gradient * self.a / (self.b * self.b)


class Neg(Function):

    def forward(self, a):
        return -a

    def backward(self, gradient):
        return (-gradient,)


class MatMul(Function):
    """Matrix product over the two last axes, broadcasting leading (batch) axes.

    A 1-D left operand is a row vector and a 1-D right operand a column vector; the
    promoted axis is removed from the result, as numpy.matmul does.
    """

    def forward(self, a, b):
        if a.ndim < 1 or b.ndim < 1 or a.shape[-1] != b.shape[0 if b.ndim == 1 else -2]:
            raise DimensionError("matmul shape mismatch: " + str(a.shape) + " x " + str(b.shape))
        self.a_shape, self.b_shape = a.shape, b.shape
        self.a = a[None, :] if a.ndim == 1 else a
        self.b = b[:, None] if b.ndim == 1 else b
        try:
            return numpy.matmul(a, b)
        except ValueError as error:
            raise DimensionError("matmul shape mismatch: " + str(a.shape) + " x " +
                                 str(b.shape)) from error

    def backward(self, gradient):
        if len(self.a_shape) == 1 and len(self.b_shape) == 1:
            gradient = numpy.reshape(gradient, (1, 1))
        elif len(self.a_shape) == 1:
            gradient = numpy.expand_dims(gradient, -2)
        elif len(self.b_shape) == 1:
            gradient = numpy.expand_dims(gradient, -1)
        a_grad = numpy.matmul(gradient, numpy.swapaxes(self.b, -1, -2))
        b_grad = numpy.matmul(numpy.swapaxes(self.a, -1, -2), gradient)
        if len(self.a_shape) == 1:
            a_grad = a_grad.reshape(-1, self.a_shape[0]).sum(axis=0)
        if len(self.b_shape) == 1:
            b_grad = b_grad.reshape(-1, self.b_shape[0]).sum(axis=0)
        return a_grad, b_grad


class Reshape(Function):

    def forward(self, a, shape):
        self.input_shape = a.shape
        try:
            return a.reshape(shape)
        except ValueError as error:
            raise DimensionError("Cannot reshape " + str(a.shape) + " into " +
                                 str(shape)) from error

    def backward(self, gradient):
        return (gradient.reshape(self.input_shape),)


class Transpose(Function):

    def forward(self, a, axes):
        self.axes = axes
        return numpy.transpose(a, axes)

    def backward(self, gradient):
        return (numpy.transpose(gradient, numpy.argsort(self.axes)),)


class GetItem(Function):

    def forward(self, a, index):
        self.input_shape, self.index = a.shape, index
        return a[index]

    def backward(self, gradient):
        full = numpy.zeros(self.input_shape, dtype=gradient.dtype)
        numpy.add.at(full, self.index, gradient)
        return (full,)


class Concat(Function):

    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.sizes = [array.shape[axis] for array in arrays]
        return numpy.concatenate(arrays, axis=axis)

    def backward(self, gradient):
        boundaries = numpy.cumsum(self.sizes)[:-1]
        return tuple(numpy.split(gradient, boundaries, axis=self.axis))


class Sum(Function):

    def forward(self, a, axis=None, keepdims=False):
        self.input_shape, self.axis, self.keepdims = a.shape, axis, keepdims
        return numpy.sum(a, axis=axis, keepdims=keepdims)

    def backward(self, gradient):
        if self.axis is not None and not self.keepdims:
            gradient = numpy.expand_dims(gradient, self.axis)
        return (numpy.broadcast_to(gradient, self.input_shape).copy(),)


class Mean(Function):

    def forward(self, a, axis=None, keepdims=False):
        self.input_shape, self.axis, self.keepdims = a.shape, axis, keepdims
        result = numpy.mean(a, axis=axis, keepdims=keepdims)
        self.count = a.size // max(1, numpy.size(result))
        return result

    def backward(self, gradient):
        if self.axis is not None and not self.keepdims:
            gradient = numpy.expand_dims(gradient, self.axis)
        return (numpy.broadcast_to(gradient / self.count, self.input_shape).copy(),)


class Softmax(Function):
    """Softmax along the last axis.

    The maximum of each row is subtracted before exponentiation; subtract_max exists so that
    the verification suite can demonstrate what the unstable form does to large logits.
    """

    subtract_max = True

    def forward(self, x):
        if Softmax.subtract_max:
            x = x - numpy.max(x, axis=-1, keepdims=True)
        exponentials = numpy.exp(x)
        self.output = exponentials / numpy.sum(exponentials, axis=-1, keepdims=True)
        return self.output

    def backward(self, gradient):
        inner = numpy.sum(gradient * self.output, axis=-1, keepdims=True)
        return (self.output * (gradient - inner),)


class LayerNorm(Function):
    """Per-row normalization over the last axis with the biased (1/d) variance, then affine."""

    def forward(self, x, gamma, beta, eps=1e-5):
        if x.shape[-1] < 2:
            raise DimensionError("layer_norm needs at least 2 features, got shape " +
                                 str(x.shape))
        if eps <= 0:
            raise ValueError("layer_norm eps must be positive")
        centered = x - numpy.mean(x, axis=-1, keepdims=True)
        variance = numpy.mean(centered * centered, axis=-1, keepdims=True)
        self.inv_std = 1.0 / numpy.sqrt(variance + eps)
        self.normalized = centered * self.inv_std
        self.gamma = gamma
        return self.normalized * gamma + beta

    def backward(self, gradient):
        width = gradient.shape[-1]
        scaled = gradient * self.gamma
        input_grad = self.inv_std * (scaled - numpy.mean(scaled, axis=-1, keepdims=True) -
                                     self.normalized * numpy.mean(scaled * self.normalized,
                                                                  axis=-1, keepdims=True))
        gamma_grad = numpy.sum((gradient * self.normalized).reshape(-1, width), axis=0)
        beta_grad = numpy.sum(gradient.reshape(-1, width), axis=0)
        return input_grad, gamma_grad, beta_grad


class Gelu(Function):
    """x * Phi(x) with the exact standard normal CDF (not the tanh approximation)."""

    def forward(self, x):
        self.x = x
        self.cdf = scipy.special.ndtr(x)
        return x * self.cdf

    def backward(self, gradient):
        density = numpy.exp(-0.5 * self.x * self.x) * _INV_SQRT_2PI
        return (gradient * (self.cdf + self.x * density),)


class Conv2d(Function):
    """Cross-correlation of B x Cin x H x W inputs with Cout x Cin x kh x kw kernels."""

    def forward(self, x, weight, stride=1, padding=0):
        batch, channels, height, width = x.shape
        out_channels, in_channels, kernel_h, kernel_w = weight.shape
        if channels != in_channels:
            raise DimensionError("conv2d input has " + str(channels) + " channels, kernel "
                                 "expects " + str(in_channels))
        if kernel_h > height + 2 * padding or kernel_w > width + 2 * padding:
            raise DimensionError("conv2d kernel " + str(weight.shape[2:]) + " larger than the "
                                 "padded input " + str((height + 2 * padding,
                                                        width + 2 * padding)))

        padded = numpy.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        windows = sliding_window_view(padded, (kernel_h, kernel_w), axis=(2, 3))
        windows = windows[:, :, ::stride, ::stride]
        out_h, out_w = windows.shape[2], windows.shape[3]
        columns = windows.transpose(0, 2, 3, 1, 4, 5).reshape(batch, out_h * out_w, -1)
        kernel = weight.reshape(out_channels, -1)

        self.columns, self.kernel, self.weight_shape = columns, kernel, weight.shape
        self.padded_shape, self.stride, self.padding = padded.shape, stride, padding
        self.out_shape = (out_h, out_w)

        output = numpy.matmul(columns, kernel.T)
        return output.transpose(0, 2, 1).reshape(batch, out_channels, out_h, out_w)

    def backward(self, gradient):
        batch, out_channels = gradient.shape[0], gradient.shape[1]
        out_h, out_w = self.out_shape
        _, in_channels, kernel_h, kernel_w = self.weight_shape
        rows = gradient.reshape(batch, out_channels, out_h * out_w).transpose(0, 2, 1)

        weight_grad = (rows.reshape(-1, out_channels).T @
                       self.columns.reshape(-1, self.columns.shape[-1]))
        column_grad = numpy.matmul(rows, self.kernel)
        column_grad = column_grad.reshape(batch, out_h, out_w, in_channels, kernel_h, kernel_w)

        padded_grad = numpy.zeros(self.padded_shape, dtype=gradient.dtype)
        step = self.stride
        for i in range(kernel_h):
            for j in range(kernel_w):
                padded_grad[:, :, i:i + step * (out_h - 1) + 1:step,
                            j:j + step * (out_w - 1) + 1:step] += \
                    column_grad[:, :, :, :, i, j].transpose(0, 3, 1, 2)

        pad = self.padding
        input_grad = padded_grad[:, :, pad:self.padded_shape[2] - pad,
                                 pad:self.padded_shape[3] - pad]
        return input_grad, weight_grad.reshape(self.weight_shape)


class MaxPool2d(Function):
    """Non-overlapping k x k max-pooling over the two last axes; ties route to the first max."""

    def forward(self, x, size=2):
        height, width = x.shape[-2], x.shape[-1]
        if height % size or width % size:
            raise DimensionError("max_pool2d needs spatial extents divisible by " + str(size) +
                                 ", got " + str((height, width)))
        self.input_shape, self.size = x.shape, size
        blocks = x.reshape(-1, height // size, size, width // size, size)
        blocks = blocks.transpose(0, 1, 3, 2, 4).reshape(blocks.shape[0], height // size,
                                                         width // size, size * size)
        self.argmax = numpy.argmax(blocks, axis=-1)[..., None]
        pooled = numpy.take_along_axis(blocks, self.argmax, axis=-1)[..., 0]
        return pooled.reshape(x.shape[:-2] + (height // size, width // size))

    def backward(self, gradient):
        size = self.size
        height, width = self.input_shape[-2], self.input_shape[-1]
        flat = gradient.reshape(-1, height // size, width // size, 1)
        blocks = numpy.zeros(flat.shape[:3] + (size * size,), dtype=gradient.dtype)
        numpy.put_along_axis(blocks, self.argmax, flat, axis=-1)
        blocks = blocks.reshape(-1, height // size, width // size, size, size)
        return (blocks.transpose(0, 1, 3, 2, 4).reshape(self.input_shape),)


def adaptive_pool_matrix(in_len, out_len):
    """Averaging matrix of adaptive pooling: row i averages inputs
    floor(i*L/N) <= j < ceil((i+1)*L/N).

    Args:
        in_len (int): The input token count L.
        out_len (int): The output token count N, 1 <= N <= L.

    Returns:
        ndarray: The N x L averaging matrix.
    """
    matrix = numpy.zeros((out_len, in_len))
    for row in range(out_len):
        start = (row * in_len) // out_len
        stop = -((-(row + 1) * in_len) // out_len)
        matrix[row, start:stop] = 1.0 / (stop - start)
    return matrix


class AdaptiveAvgPoolTokens(Function):

    def forward(self, x, out_len):
        in_len = x.shape[-2]
        if out_len < 1 or out_len > in_len:
            raise DimensionError("adaptive_avg_pool_tokens maps L=" + str(in_len) + " onto N=" +
                                 str(out_len) + "; it needs 1 <= N <= L (up-sampling is a "
                                 "linear projection)")
        self.matrix = adaptive_pool_matrix(in_len, out_len).astype(x.dtype)
        return numpy.matmul(self.matrix, x)

    def backward(self, gradient):
        return (numpy.matmul(self.matrix.T, gradient),)


class MaxPoolTokens(Function):
    """Maximum over the token axis (second to last); ties route to the first argmax."""

    def forward(self, x):
        if x.ndim < 2 or x.shape[-2] == 0:
            raise DimensionError("max_pool_tokens needs a non-empty token axis, got shape " +
                                 str(x.shape))
        self.input_shape = x.shape
        self.argmax = numpy.argmax(x, axis=-2)[..., None, :]
        return numpy.take_along_axis(x, self.argmax, axis=-2)[..., 0, :]

    def backward(self, gradient):
        full = numpy.zeros(self.input_shape, dtype=gradient.dtype)
        numpy.put_along_axis(full, self.argmax, gradient[..., None, :], axis=-2)
        return (full,)


class BCEWithLogits(Function):
    """Mean binary cross-entropy, in the stable form max(u, 0) + log1p(exp(-|u|)),
    u = -(2y - 1) * logit."""

    def forward(self, logits, targets=None):
        targets = numpy.asarray(targets, dtype=logits.dtype).reshape(logits.shape)
        if not numpy.all((targets == 0) | (targets == 1)):
            raise ValueError("bce_with_logits targets must be 0 or 1")
        self.logits, self.targets = logits, targets
        margin = -(2.0 * targets - 1.0) * logits
        losses = numpy.maximum(margin, 0) + numpy.log1p(numpy.exp(-numpy.abs(logits)))
        return numpy.asarray(numpy.mean(losses), dtype=logits.dtype)

    def backward(self, gradient):
        probabilities = scipy.special.expit(self.logits)
        return (gradient * (probabilities - self.targets) / self.logits.size,)


class Embedding(Function):

    def forward(self, table, ids=None):
        ids = numpy.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
            raise IndexError("token id out of range for a vocabulary of " +
                             str(table.shape[0]) + " entries")
        self.ids, self.table_shape = ids, table.shape
        return table[ids]

    def backward(self, gradient):
        table_grad = numpy.zeros(self.table_shape, dtype=gradient.dtype)
        numpy.add.at(table_grad, self.ids, gradient)
        return (table_grad,)


def add(a, b):
    return Add.apply(a, b)


def sub(a, b):
    return Sub.apply(a, b)


def mul(a, b):
    return Mul.apply(a, b)


def div(a, b):
    return Div.apply(a, b)


def neg(a):
    return Neg.apply(a)


def matmul(a, b):
    """Matrix product; dA = dC . B^T and dB = A^T . dC.

    Raises:
        DimensionError: If the inner extents differ (the message names both shapes).
    """
    return MatMul.apply(a, b)


def reshape(a, shape):
    return Reshape.apply(a, shape=tuple(shape))


def transpose(a, axes):
    return Transpose.apply(a, axes=tuple(axes))


def swapaxes(a, first, second):
    axes = list(range(a.ndim))
    axes[first], axes[second] = axes[second], axes[first]
    return transpose(a, axes)


def getitem(a, index):
    return GetItem.apply(a, index=index)


def concat(tensors, axis=0):
    return Concat.apply(*tensors, axis=axis)


def sum(a, axis=None, keepdims=False):  # pylint: disable=redefined-builtin
    return Sum.apply(a, axis=axis, keepdims=keepdims)


def mean(a, axis=None, keepdims=False):
    return Mean.apply(a, axis=axis, keepdims=keepdims)


def softmax(x):
    """Softmax along the last axis, computed with max-subtraction."""
    return Softmax.apply(x)


def layer_norm(x, gamma, beta, eps=1e-5):
    return LayerNorm.apply(x, gamma, beta, eps=eps)


def gelu(x):
    return Gelu.apply(x)


def conv2d(x, weight, stride=1, padding=0):
    """2-D cross-correlation; output extents floor((H + 2p - kh) / stride) + 1.

    Args:
        x (Tensor): Cin x H x W, or B x Cin x H x W.
        weight (Tensor): Cout x Cin x kh x kw.
        stride (int): The step between windows.
        padding (int): Zero padding on each spatial border.

    Raises:
        DimensionError: If the kernel is larger than the padded input or channels differ.
    """
    if x.ndim == 3:
        return getitem(Conv2d.apply(reshape(x, (1,) + x.shape), weight, stride=stride,
                                    padding=padding), 0)
    return Conv2d.apply(x, weight, stride=stride, padding=padding)


def max_pool2d(x, size=2):
    return MaxPool2d.apply(x, size=size)


def adaptive_avg_pool_tokens(x, out_len):
    return AdaptiveAvgPoolTokens.apply(x, out_len=out_len)


def max_pool_tokens(x):
    return MaxPoolTokens.apply(x)


def mean_pool_tokens(x):
    return mean(x, axis=-2)


def bce_with_logits(logits, targets):
    """Mean binary cross-entropy of logits against 0/1 targets; gradient (sigmoid - y) / n."""
    return BCEWithLogits.apply(logits, targets=targets)


def embedding(table, ids):
    """Rows of a table selected by integer ids (any shape of ids).

    Raises:
        IndexError: If an id is negative or not smaller than the table height.
    """
    return Embedding.apply(table, ids=ids)


Tensor.__add__ = add
Tensor.__radd__ = lambda self, other: add(other, self)
Tensor.__sub__ = sub
Tensor.__rsub__ = lambda self, other: sub(other, self)
Tensor.__mul__ = mul
Tensor.__rmul__ = lambda self, other: mul(other, self)
Tensor.__truediv__ = div
Tensor.__rtruediv__ = lambda self, other: div(other, self)
Tensor.__neg__ = neg
Tensor.__matmul__ = matmul
Tensor.__getitem__ = getitem
Tensor.reshape = lambda self, *shape: reshape(self, shape[0] if len(shape) == 1 and
                                              isinstance(shape[0], (tuple, list)) else shape)
Tensor.transpose = lambda self, *axes: transpose(self, axes[0] if len(axes) == 1 else axes)
Tensor.sum = sum
Tensor.mean = mean
