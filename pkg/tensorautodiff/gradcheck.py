"""Module containing the finite-difference gradient checker."""
import numpy

from .tensor import Tensor, Graph, backward, no_grad

F64 = numpy.float64


def analytic_gradient(fn, point):
    """Gradient of fn at point computed by a backward pass in f64."""
    variable = Tensor(numpy.array(point, dtype=F64), requires_grad=True, dtype=F64)
    with Graph(dtype=F64):
        backward(fn(variable))
    return variable.grad if variable.grad is not None else numpy.zeros_like(variable.data)


def numerical_gradient(fn, point, eps=1e-5):
    """Central differences (f(x + eps e) - f(x - eps e)) / (2 eps) per coordinate, in f64."""
    point = numpy.array(point, dtype=F64)
    gradient = numpy.zeros_like(point)
    with Graph(dtype=F64), no_grad():
        for index in numpy.ndindex(point.shape):
            original = point[index]
            point[index] = original + eps
            plus = fn(Tensor(point.copy(), dtype=F64)).item()
            point[index] = original - eps
            minus = fn(Tensor(point.copy(), dtype=F64)).item()
            point[index] = original
            gradient[index] = (plus - minus) / (2.0 * eps)
    return gradient


def grad_check(fn, x, eps=1e-5):
    """Compare the backward pass of a scalar function with central differences.

    The caller keeps x away from the kinks of max-like operations (within eps).

    Args:
        fn (callable): Maps a Tensor onto a scalar Tensor.
        x (Tensor or ndarray): The point to check at.
        eps (float): The finite-difference step.

    Returns:
        float: max over coordinates of |analytic - numeric| / max(1e-8, |numeric|).
    """
    point = x.data if isinstance(x, Tensor) else numpy.asarray(x)
    analytic = analytic_gradient(fn, point)
    numeric = numerical_gradient(fn, point, eps)
    return float(numpy.max(numpy.abs(analytic - numeric) /
                           numpy.maximum(1e-8, numpy.abs(numeric))))
