"""Package containing the dense tensor engine with reverse-mode differentiation
used by every model component of the pipeline."""
from .tensor import Tensor, Parameter, Graph, Function, DimensionError, GraphError, \
    backward, no_grad, grad_enabled
from . import functional
from .module import Module, Linear, LayerNorm, FeedForward
from .gradcheck import grad_check, analytic_gradient, numerical_gradient
