"""Module containing the Tensor class and the recording Graph of the
reverse-mode differentiation engine."""
import contextlib
import threading
import numpy

DEFAULT_DTYPE = numpy.dtype(numpy.float32)
SUPPORTED_DTYPES = (numpy.dtype(numpy.float32), numpy.dtype(numpy.float64))

_state = threading.local()


class DimensionError(ValueError):
    """Raised when the shapes handed to an operation do not conform."""


class GraphError(RuntimeError):
    """Raised when a backward pass is requested on a missing, mixed or consumed graph."""


def _graph_stack():
    """Return the stack of explicitly opened graphs of the calling thread."""
    if not hasattr(_state, "graphs"):
        _state.graphs = []
    return _state.graphs


def grad_enabled():
    """Tell whether operations executed now are recorded for differentiation.

    Returns:
        bool: False inside a no_grad() block, True otherwise.
    """
    return getattr(_state, "grad_enabled", True)


@contextlib.contextmanager
def no_grad():
    """Context manager disabling the recording of operations (inference mode)."""
    previous = grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Graph:
    """Append-only record of the differentiable operations executed by one forward pass.

    Opening a graph with a ``with`` statement makes it the target of every recorded operation
    and fixes the precision operations compute in. Outside any explicit graph, operations
    record into a per-thread default f32 graph, replaced by a fresh one after each backward.

    Attributes:
        dtype (dtype): The floating point precision of the computation (f32 or f64).
        nodes (list): The executed functions, in execution (topological) order.
        consumed (bool): True once a backward pass has traversed the graph.
    """

    def __init__(self, dtype=DEFAULT_DTYPE):
        """Initializer.

        Args:
            dtype (dtype): numpy.float32 or numpy.float64.

        Raises:
            ValueError: If the precision is not supported.
        """
        self.dtype = numpy.dtype(dtype)
        if self.dtype not in SUPPORTED_DTYPES:
            raise ValueError("Unsupported graph precision " + str(self.dtype))
        self.nodes = []
        self.consumed = False

    def __enter__(self):
        _graph_stack().append(self)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        _graph_stack().pop()
        return False

    def record(self, function, output):
        """Append an executed function and bind its output tensor to the new node.

        Args:
            function (Function): The executed function, holding its inputs and saved activations.
            output (Tensor): The tensor produced by the function.

        Raises:
            GraphError: If the graph was already consumed by a backward pass.
        """
        if self.consumed:
            raise GraphError("The graph was already consumed by a backward pass; "
                             "run a new forward pass on a new graph")
        output.graph = self
        output.node = len(self.nodes)
        self.nodes.append(function)

    def release(self):
        """Drop the saved activations once the graph is consumed."""
        self.nodes = []

    @staticmethod
    def compute_dtype():
        """Return the precision of the innermost explicitly opened graph (f32 otherwise)."""
        stack = _graph_stack()
        return stack[-1].dtype if stack else DEFAULT_DTYPE

    @staticmethod
    def recording_graph():
        """Return the graph new operations are recorded into."""
        stack = _graph_stack()
        if stack:
            return stack[-1]

        default = getattr(_state, "default_graph", None)
        if default is None or default.consumed:
            default = Graph()
            _state.default_graph = default
        return default


class Tensor:
    """Dense n-dimensional array of f32 or f64 values carrying an optional gradient.

    Attributes:
        data (ndarray): The row-major values.
        requires_grad (bool): Whether a backward pass must produce a gradient for this tensor.
        grad (ndarray): The accumulated gradient of a leaf tensor, None until a backward pass.
        graph (Graph): The graph that produced the tensor, None for leaves.
        node (int): The index of the producing node in its graph, None for leaves.
    """

    def __init__(self, data, requires_grad=False, dtype=None):
        if dtype is None:
            if isinstance(data, numpy.ndarray) and data.dtype in SUPPORTED_DTYPES:
                dtype = data.dtype
            else:
                dtype = DEFAULT_DTYPE
        self.data = numpy.asarray(data, dtype=dtype)
        self.requires_grad = requires_grad
        self.grad = None
        self.graph = None
        self.node = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self):
        """Return the values as a numpy array (no copy)."""
        return self.data

    def item(self):
        """Return the value of a single-element tensor as a Python float."""
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def zero_grad(self):
        """Forget the accumulated gradient."""
        self.grad = None

    def accumulate_grad(self, gradient):
        """Add a gradient contribution to a leaf tensor.

        Args:
            gradient (ndarray): A gradient with the tensor's shape.
        """
        gradient = numpy.asarray(gradient, dtype=self.data.dtype)
        if self.grad is None:
            self.grad = gradient.copy()
        else:
            self.grad = self.grad + gradient

    def __repr__(self):
        return "Tensor(shape=" + str(self.shape) + ", dtype=" + str(self.dtype) + \
               ", requires_grad=" + str(self.requires_grad) + ")"


class Parameter(Tensor):
    """Leaf tensor owned by a module; trainable unless frozen."""

    def __init__(self, data, frozen=False):
        super().__init__(numpy.array(data, dtype=DEFAULT_DTYPE), requires_grad=not frozen)


def as_tensor(value):
    """Wrap scalars and arrays into constant tensors, leaving tensors untouched."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def unbroadcast(gradient, shape):
    """Sum a gradient over the axes a broadcast expanded, so that it matches the input shape.

    Args:
        gradient (ndarray): The gradient with the broadcast (output) shape.
        shape (tuple): The shape of the input that was broadcast.

    Returns:
        ndarray: The gradient reduced to the input shape.
    """
    if gradient.shape == tuple(shape):
        return gradient
    while gradient.ndim > len(shape):
        gradient = gradient.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and gradient.shape[axis] != 1:
            gradient = gradient.sum(axis=axis, keepdims=True)
    return gradient


class Function:
    """Base class of the differentiable operations.

    Subclasses implement forward() on numpy arrays and backward(), which maps the gradient
    with respect to the output onto one gradient (or None) per input tensor.
    """

    def __init__(self):
        self.inputs = ()

    def forward(self, *arrays, **kwargs):
        raise NotImplementedError("Forward pass not implemented for " + type(self).__name__)

    def backward(self, gradient):
        raise NotImplementedError("Backward pass not implemented for " + type(self).__name__)

    @classmethod
    def apply(cls, *inputs, **kwargs):
        """Run the function on tensors and record it when a gradient is needed.

        Args:
            *inputs: The input tensors (scalars and arrays are wrapped as constants).
            **kwargs: Non-differentiable arguments forwarded to forward().

        Returns:
            Tensor: The output tensor.

        Raises:
            GraphError: If a non-leaf input belongs to another or an already consumed graph.
        """
        tensors = tuple(as_tensor(value) for value in inputs)
        dtype = Graph.compute_dtype()
        function = cls()
        output = Tensor(function.forward(*(tensor.data.astype(dtype, copy=False)
                                           for tensor in tensors), **kwargs), dtype=dtype)

        if grad_enabled() and any(tensor.requires_grad for tensor in tensors):
            graph = Graph.recording_graph()
            for tensor in tensors:
                if tensor.graph is not None and tensor.graph is not graph:
                    raise GraphError("Input of " + cls.__name__ + " comes from a stale graph; "
                                     "recompute it in the current forward pass")
            function.inputs = tensors
            output.requires_grad = True
            graph.record(function, output)

        return output


def backward(loss):
    """Propagate the gradient of a scalar loss to every leaf of its graph.

    Nodes are visited in exact reverse execution order; gradients reaching the same tensor are
    summed in that order, so two identical runs produce bitwise identical gradients. Leaves that
    take part in the graph without influencing the loss receive a zero gradient.

    Args:
        loss (Tensor): A single-element tensor produced by a recorded computation.

    Raises:
        GraphError: If the loss is not a scalar, was not recorded, or its graph was consumed.
    """
    if loss.size != 1:
        raise GraphError("backward() needs a scalar loss, got shape " + str(loss.shape))
    graph = loss.graph
    if graph is None:
        raise GraphError("The loss was not produced by a recorded computation")
    if graph.consumed:
        raise GraphError("Stale graph: backward() was already called for this forward pass")

    pending = {loss.node: numpy.ones_like(loss.data)}
    for index in range(loss.node, -1, -1):
        function = graph.nodes[index]
        upstream = pending.pop(index, None)
        if upstream is None:
            continue

        for tensor, gradient in zip(function.inputs, function.backward(upstream)):
            if gradient is None or not tensor.requires_grad:
                continue
            gradient = unbroadcast(gradient, tensor.shape)
            if tensor.graph is graph:
                if tensor.node in pending:
                    pending[tensor.node] = pending[tensor.node] + gradient
                else:
                    pending[tensor.node] = gradient
            else:
                tensor.accumulate_grad(gradient)

    for function in graph.nodes:
        for tensor in function.inputs:
            if tensor.requires_grad and tensor.graph is None and tensor.grad is None:
                tensor.grad = numpy.zeros_like(tensor.data)

    graph.consumed = True
    graph.release()
