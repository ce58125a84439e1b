"""Module containing the Module base class and the basic trainable layers."""
import numpy

from .tensor import Parameter
from . import functional


class Module:
    """Base class of every component owning parameters.

    Parameters are discovered by walking the instance attributes in assignment order
    (including lists of modules), which makes the parameter order, and therefore
    checkpoints and optimizer states, deterministic. A parameter reachable twice
    (tied sub-modules) is listed once, under its first name.
    """

    def forward(self, *args, **kwargs):
        raise NotImplementedError("forward() not implemented for " + type(self).__name__)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix="", seen=None):
        """Yield (dotted name, parameter) pairs.

        Args:
            prefix (str): The name prefix of this module.
            seen (set): Ids of the parameters already yielded.

        Yields:
            tuple: The parameter name and the parameter.
        """
        seen = set() if seen is None else seen
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                if id(value) not in seen:
                    seen.add(id(value))
                    yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(prefix + name + ".", seen)
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(prefix + name + "." + str(index) + ".",
                                                         seen)

    def modules(self):
        """Yield this module and every sub-module, depth first in attribute order."""
        yield self
        for value in vars(self).values():
            children = value if isinstance(value, (list, tuple)) else [value]
            for child in children:
                if isinstance(child, Module):
                    yield from child.modules()

    def parameters(self):
        return [parameter for _, parameter in self.named_parameters()]

    def trainable_parameters(self):
        return [(name, parameter) for name, parameter in self.named_parameters()
                if parameter.requires_grad]

    def parameter_count(self):
        return int(numpy.sum([parameter.size for parameter in self.parameters()]))

    def zero_grad(self):
        for parameter in self.parameters():
            parameter.zero_grad()

    def state_dict(self):
        """Return a name -> array copy of every parameter."""
        return {name: parameter.data.copy() for name, parameter in self.named_parameters()}

    def load_state_dict(self, state):
        """Overwrite the parameters with the arrays of a state dictionary.

        Args:
            state (dict): name -> array, covering exactly this module's parameters.

        Raises:
            KeyError: If names are missing or unexpected.
            ValueError: If a shape differs.
        """
        parameters = dict(self.named_parameters())
        if set(parameters) != set(state):
            missing = sorted(set(parameters) - set(state))
            unexpected = sorted(set(state) - set(parameters))
            raise KeyError("State does not match the module: missing " + str(missing) +
                           ", unexpected " + str(unexpected))
        for name, parameter in parameters.items():
            array = numpy.asarray(state[name])
            if array.shape != parameter.shape:
                raise ValueError("Shape mismatch for " + name + ": " + str(array.shape) +
                                 " vs " + str(parameter.shape))
            parameter.data = array.astype(parameter.data.dtype).copy()

    def freeze(self):
        for parameter in self.parameters():
            parameter.requires_grad = False
            parameter.zero_grad()


def uniform_init(rng, fan_in, shape):
    """Uniform initialization in +-1/sqrt(fan_in)."""
    bound = 1.0 / numpy.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    """Affine map x . W + b over the last axis (W stored in x out layout)."""

    def __init__(self, in_features, out_features, rng, bias=True):
        self.weight = Parameter(uniform_init(rng, in_features, (in_features, out_features)))
        self.bias = Parameter(uniform_init(rng, in_features, (out_features,))) if bias else None

    def forward(self, x):
        output = functional.matmul(x, self.weight)
        return output + self.bias if self.bias is not None else output


class LayerNorm(Module):

    def __init__(self, features, eps=1e-5):
        self.gamma = Parameter(numpy.ones(features))
        self.beta = Parameter(numpy.zeros(features))
        self.eps = eps

    def forward(self, x):
        return functional.layer_norm(x, self.gamma, self.beta, self.eps)


class FeedForward(Module):
    """Two linear layers with a GELU in between."""

    def __init__(self, features, hidden, rng, out_features=None):
        self.hidden = Linear(features, hidden, rng)
        self.output = Linear(hidden, features if out_features is None else out_features, rng)

    def forward(self, x):
        return self.output(functional.gelu(self.hidden(x)))
