"""Discrete-time leaky integrate-and-fire dynamics and the surrogate spike function.

The membrane update is

    u[k] = u[k-1] * alpha * (1 - theta[k-1]) + I[k]

where ``alpha`` is the per-neuron decay factor and the multiplicative
``(1 - theta)`` gate resets the potential after a spike.  Spikes are
generated by an inclusive threshold comparison; during backprop the
non-differentiable step is replaced by a fast-sigmoid surrogate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

DEFAULT_THRESHOLD = 1.0
DEFAULT_BETA = 10.0
DEFAULT_TAU = 20.0


@dataclass(frozen=True)
class NeuronConfig:
    """Static neuron parameters (the decay itself is a trainable per-neuron value).

    u_th: spike threshold, must be positive.
    tau_init: initial membrane time constant in timesteps; the trainable
        decay parameter is initialised so that alpha = exp(-1/tau_init).
    """

    u_th: float = DEFAULT_THRESHOLD
    tau_init: float = DEFAULT_TAU

    def __post_init__(self):
        if not self.u_th > 0:
            raise ContractError(f"u_th must be positive, got {self.u_th}")
        if not self.tau_init > 0:
            raise ContractError(f"tau_init must be positive, got {self.tau_init}")


@dataclass(frozen=True)
class SurrogateConfig:
    """Shape of the fast-sigmoid spike relaxation.

    beta: slope; larger values sharpen the sigmoid towards the hard step.
    mode: "hard" spikes in the forward pass and uses the surrogate only for
        gradients; "soft" uses the sigmoid in the forward pass as well, which
        makes the whole network differentiable (used for gradient checks).
    """

    beta: float = DEFAULT_BETA
    mode: str = "hard"

    def __post_init__(self):
        if not self.beta > 0:
            raise ContractError(f"beta must be positive, got {self.beta}")
        if self.mode not in ("hard", "soft"):
            raise ContractError(f"mode must be 'hard' or 'soft', got {self.mode!r}")


def fast_sigmoid(x, beta=DEFAULT_BETA):
    """Bounded sigmoid s(x) = 0.5 * (1 + beta*x / (1 + beta*|x|)), values in (0,1)."""
    x = np.asarray(x, dtype=np.float64)
    bx = beta * x
    return 0.5 * (1.0 + bx / (1.0 + np.abs(bx)))


def fast_sigmoid_grad(x, beta=DEFAULT_BETA):
    """Analytic derivative of :func:`fast_sigmoid`: beta / (2 * (1 + beta*|x|)^2)."""
    x = np.asarray(x, dtype=np.float64)
    denom = 1.0 + beta * np.abs(x)
    return beta / (2.0 * denom * denom)


def lif_step(u_prev, theta_prev, input_current, alpha):
    """One membrane update: u = u_prev * alpha * (1 - theta_prev) + input_current.

    All arguments must broadcast to a common shape; alpha entries must lie
    in (0, 1).
    """
    u_prev = np.asarray(u_prev, dtype=np.float64)
    theta_prev = np.asarray(theta_prev, dtype=np.float64)
    input_current = np.asarray(input_current, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if not (u_prev.shape == theta_prev.shape == input_current.shape):
        raise ContractError(
            "lif_step shape mismatch: "
            f"u{u_prev.shape} theta{theta_prev.shape} I{input_current.shape}"
        )
    if alpha.shape not in ((), u_prev.shape) and alpha.shape != u_prev.shape[-1:]:
        raise ContractError(f"alpha shape {alpha.shape} incompatible with u {u_prev.shape}")
    if np.any(alpha <= 0) or np.any(alpha >= 1):
        raise ContractError("alpha entries must lie in (0, 1)")
    return u_prev * alpha * (1.0 - theta_prev) + input_current


def threshold(u, u_th=DEFAULT_THRESHOLD, mode="hard", beta=DEFAULT_BETA):
    """Spike generation from membrane potentials.

    Hard mode emits 1.0 where u >= u_th (inclusive) and 0.0 elsewhere.
    Soft mode evaluates the fast sigmoid at (u - u_th), yielding values
    in (0, 1); it is the relaxation whose exact derivative is
    :func:`surrogate_grad`.
    """
    u = np.asarray(u, dtype=np.float64)
    if mode == "hard":
        return (u >= u_th).astype(np.float64)
    if mode == "soft":
        return fast_sigmoid(u - u_th, beta)
    raise ContractError(f"unknown threshold mode {mode!r}")


def surrogate_grad(u, u_th=DEFAULT_THRESHOLD, beta=DEFAULT_BETA):
    """d theta / d u of the soft threshold; peaks at beta/2 when u == u_th."""
    if not beta > 0:
        raise ContractError(f"beta must be positive, got {beta}")
    return fast_sigmoid_grad(np.asarray(u, dtype=np.float64) - u_th, beta)


def alpha_from_decay_param(p):
    """Map the unconstrained trainable decay parameter to alpha in (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    # exp may overflow to inf for hugely negative p; alpha then saturates
    # to exactly 0.0, which is the correct limit
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-p))


def alpha_grad_wrt_decay_param(alpha):
    """d alpha / d p for the logistic parameterisation, given alpha."""
    return alpha * (1.0 - alpha)


def decay_param_for_tau(tau):
    """Inverse of the parameterisation: the p for which alpha == exp(-1/tau)."""
    if np.any(np.asarray(tau) <= 0):
        raise ContractError("tau must be positive")
    a = np.exp(-1.0 / np.asarray(tau, dtype=np.float64))
    return np.log(a / (1.0 - a))
