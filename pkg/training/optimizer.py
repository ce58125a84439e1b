"""Module containing the AdamW optimizer and the warmup-cosine learning-rate schedule."""
from dataclasses import dataclass, field
import math
import numpy

from tensorautodiff import DimensionError


def lr_at(step, total_steps, warmup_steps, lr_peak):
    """Learning rate after step updates: linear warmup from 0, then half-cosine decay to 0.

    Args:
        step (int): 0 <= step <= total_steps.
        total_steps (int): Updates of the whole run.
        warmup_steps (int): Updates of the warmup, at most total_steps.
        lr_peak (float): The rate reached at the end of the warmup.

    Returns:
        float: The learning rate.

    Raises:
        ValueError: If the step lies outside the run.
    """
    if not 0 <= step <= total_steps:
        raise ValueError("step " + str(step) + " outside [0, " + str(total_steps) + "]")
    if step < warmup_steps:
        return lr_peak * step / warmup_steps
    if total_steps == warmup_steps:
        return lr_peak
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return lr_peak * 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass
class AdamWState:
    """Moments of every parameter and the number of updates already applied."""
    step: int = 0
    first_moments: dict = field(default_factory=dict)
    second_moments: dict = field(default_factory=dict)


def adamw_step(params, grads, state, cfg, lr):
    """One AdamW update with decoupled weight decay and bias-corrected moments.

    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * weight_decay * theta

    Args:
        params (dict): name -> array, updated in place.
        grads (dict): name -> gradient array of the same shape.
        state (AdamWState): Moments, created as zeros on first use and updated in place.
        cfg (TrainConfig): betas, eps and weight_decay.
        lr (float): The learning rate of this update.

    Returns:
        AdamWState: The updated state.

    Raises:
        DimensionError: If a gradient or a stored moment does not match its parameter.
    """
    beta1, beta2 = cfg.betas
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for name, theta in params.items():
        gradient = grads[name]
        if gradient.shape != theta.shape:
            raise DimensionError("Gradient of " + name + " has shape " + str(gradient.shape) +
                                 ", parameter has " + str(theta.shape))
        first = state.first_moments.setdefault(name, numpy.zeros_like(theta))
        second = state.second_moments.setdefault(name, numpy.zeros_like(theta))
        if first.shape != theta.shape:
            raise DimensionError("Stored moments of " + name + " do not match the parameter")
        first *= beta1
        first += (1.0 - beta1) * gradient
        second *= beta2
        second += (1.0 - beta2) * gradient * gradient
        update = (first / correction1) / (numpy.sqrt(second / correction2) + cfg.eps)
        theta -= lr * update + lr * cfg.weight_decay * theta
    return state


class AdamW:
    """AdamW over the trainable parameters of a module.

    Attributes:
        parameters (list): (name, Parameter) pairs being optimized.
        cfg (TrainConfig): The optimization settings.
        state (AdamWState): The moments.
    """

    def __init__(self, named_parameters, cfg):
        self.parameters = list(named_parameters)
        self.cfg = cfg
        self.state = AdamWState()

    def step(self, lr):
        """Apply one update with the accumulated gradients (zero when none reached a parameter)."""
        params = {name: parameter.data for name, parameter in self.parameters}
        grads = {name: numpy.zeros_like(parameter.data) if parameter.grad is None
                 else parameter.grad for name, parameter in self.parameters}
        adamw_step(params, grads, self.state, self.cfg, lr)

    def zero_grad(self):
        for _, parameter in self.parameters:
            parameter.zero_grad()

    def state_arrays(self):
        """Moments as flat name -> array entries for a checkpoint."""
        arrays = {"m/" + name: value for name, value in self.state.first_moments.items()}
        arrays.update({"v/" + name: value for name, value in self.state.second_moments.items()})
        return arrays

    def load_state_arrays(self, arrays, step):
        self.state = AdamWState(step,
                                {name[2:]: value.copy() for name, value in arrays.items()
                                 if name.startswith("m/")},
                                {name[2:]: value.copy() for name, value in arrays.items()
                                 if name.startswith("v/")})
