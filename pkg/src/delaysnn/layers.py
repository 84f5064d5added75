"""Layer connectivity: plain feedforward, laterally recurrent, and multi-delay synapses.

A delayed projection holds one weight slice per discrete delay value, so the
input current of a post-synaptic neuron at step k is

    I_j[k] = sum_{d in D} sum_i w[i, j, slot(d)] * theta_i[k - d]

with spikes at negative times taken as zero.  The delay set D is shared per
layer (axonal delays: every pre-synaptic neuron exposes the same set of
delayed copies of its spike train); a binary mask selects which (pre, post,
delay) synapses are live, which is how pruning is realised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class DelaySpec:
    """A strictly increasing set of non-negative integer delays (in timesteps).

    ``stride`` is remembered when the spec was generated from a temporal
    window so that later refinement knows the current resolution.
    """

    delays: tuple[int, ...]
    stride: int | None = None

    def __post_init__(self):
        if len(self.delays) < 1:
            raise ContractError("DelaySpec needs at least one delay")
        d = tuple(int(x) for x in self.delays)
        if any(x < 0 for x in d):
            raise ContractError(f"delays must be non-negative, got {d}")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise ContractError(f"delays must be strictly increasing, got {d}")
        object.__setattr__(self, "delays", d)

    @property
    def count(self) -> int:
        return len(self.delays)

    @property
    def max_delay(self) -> int:
        return self.delays[-1]


def delay_spec_from_depth_stride(depth: int, stride: int) -> DelaySpec:
    """Delay set {0, stride, 2*stride, ..., depth - stride} from a temporal window.

    ``depth`` is the extent of the temporal receptive field and ``stride``
    the spacing between delayed taps; depth must be a positive multiple of
    stride.  The resulting set has depth/stride delays with maximum
    depth - stride.
    """
    if stride < 1:
        raise ContractError(f"stride must be >= 1, got {stride}")
    if depth < stride:
        raise ContractError(f"depth ({depth}) must be >= stride ({stride})")
    if depth % stride != 0:
        raise ContractError(f"depth ({depth}) must be a multiple of stride ({stride})")
    return DelaySpec(tuple(range(0, depth, stride)), stride=stride)


# Convenience constructor mirroring the module-level function.
DelaySpec.from_depth_stride = staticmethod(delay_spec_from_depth_stride)


@dataclass
class FeedforwardLayerParams:
    """Dense projection: weights indexed (pre, post)."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ContractError(f"feedforward weights must be 2-D, got {self.weights.shape}")

    @property
    def n_pre(self) -> int:
        return self.weights.shape[0]

    @property
    def n_post(self) -> int:
        return self.weights.shape[1]


@dataclass
class RecurrentLayerParams:
    """Dense projection plus lateral connectivity within the layer."""

    ff_weights: np.ndarray
    rec_weights: np.ndarray

    def __post_init__(self):
        self.ff_weights = np.asarray(self.ff_weights, dtype=np.float64)
        self.rec_weights = np.asarray(self.rec_weights, dtype=np.float64)
        if self.ff_weights.ndim != 2 or self.rec_weights.ndim != 2:
            raise ContractError("recurrent layer weights must be 2-D")
        m = self.ff_weights.shape[1]
        if self.rec_weights.shape != (m, m):
            raise ContractError(
                f"rec_weights must be ({m}, {m}), got {self.rec_weights.shape}"
            )

    @property
    def n_pre(self) -> int:
        return self.ff_weights.shape[0]

    @property
    def n_post(self) -> int:
        return self.ff_weights.shape[1]


@dataclass
class DelayLayerParams:
    """Multi-delay projection: weights and mask indexed (pre, post, delay slot).

    Masked-out synapses carry weight exactly 0 and stay 0 through training.
    """

    weights: np.ndarray
    delay_spec: DelaySpec
    mask: np.ndarray = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 3:
            raise ContractError(f"delay weights must be 3-D, got {self.weights.shape}")
        if self.weights.shape[2] != self.delay_spec.count:
            raise ContractError(
                f"weight slots ({self.weights.shape[2]}) != delays ({self.delay_spec.count})"
            )
        if self.mask is None:
            self.mask = np.ones_like(self.weights)
        else:
            self.mask = np.asarray(self.mask, dtype=np.float64)
            if self.mask.shape != self.weights.shape:
                raise ContractError(
                    f"mask shape {self.mask.shape} != weights shape {self.weights.shape}"
                )

    @property
    def n_pre(self) -> int:
        return self.weights.shape[0]

    @property
    def n_post(self) -> int:
        return self.weights.shape[1]

    def apply_mask(self) -> None:
        """Force masked-out weights to exactly zero (idempotent)."""
        self.weights *= self.mask


class SpikeHistoryBuffer:
    """Circular record of the most recent pre-synaptic spike vectors.

    Reading at lag d returns the spike vector pushed d steps ago (lag 0 is
    the most recent push).  Lags beyond what has been pushed so far read as
    zeros; lags beyond the capacity are a contract violation.
    """

    def __init__(self, width: int, capacity: int):
        if width < 1 or capacity < 1:
            raise ContractError("width and capacity must be >= 1")
        self.width = width
        self.capacity = capacity
        self._ring = np.zeros((capacity, width), dtype=np.float64)
        self._pushes = 0

    @property
    def pushes(self) -> int:
        return self._pushes

    def push(self, theta) -> None:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.width,):
            raise ContractError(f"expected spike vector of shape ({self.width},), got {theta.shape}")
        self._ring[self._pushes % self.capacity] = theta
        self._pushes += 1

    def read(self, lag: int) -> np.ndarray:
        if lag < 0:
            raise ContractError(f"lag must be non-negative, got {lag}")
        if lag >= self.capacity:
            raise ContractError(f"lag {lag} exceeds buffer capacity {self.capacity}")
        if lag >= self._pushes:
            return np.zeros(self.width, dtype=np.float64)
        return self._ring[(self._pushes - 1 - lag) % self.capacity].copy()


def push_spikes(history: SpikeHistoryBuffer, theta) -> None:
    """Append the current step's spike vector to the history ring."""
    history.push(theta)


def feedforward_input(weights, theta_pre) -> np.ndarray:
    """Input current I_j = sum_i w[i, j] * theta_i."""
    weights = np.asarray(weights, dtype=np.float64)
    theta_pre = np.asarray(theta_pre, dtype=np.float64)
    if weights.ndim != 2 or theta_pre.shape != (weights.shape[0],):
        raise ContractError(
            f"shape mismatch: weights {weights.shape}, spikes {theta_pre.shape}"
        )
    return theta_pre @ weights


def recurrent_input(params: RecurrentLayerParams, theta_pre, theta_self_prev) -> np.ndarray:
    """Feedforward drive plus lateral drive from the layer's own previous-step spikes."""
    theta_self_prev = np.asarray(theta_self_prev, dtype=np.float64)
    if theta_self_prev.shape != (params.n_post,):
        raise ContractError(
            f"self spike vector must have shape ({params.n_post},), got {theta_self_prev.shape}"
        )
    return feedforward_input(params.ff_weights, theta_pre) + theta_self_prev @ params.rec_weights


def delayed_input(params: DelayLayerParams, history: SpikeHistoryBuffer, k: int) -> np.ndarray:
    """Input current at step k from all delayed pre-synaptic spike copies.

    The caller must have pushed the pre-synaptic spike vectors for steps
    0..k into ``history`` (so lag d reads theta[k-d]).
    """
    if history.width != params.n_pre:
        raise ContractError(
            f"history width {history.width} != layer fan-in {params.n_pre}"
        )
    if history.capacity < params.delay_spec.max_delay + 1:
        raise ContractError(
            f"history capacity {history.capacity} too small for max delay "
            f"{params.delay_spec.max_delay}"
        )
    if k < 0 or history.pushes != k + 1:
        raise ContractError(
            f"history holds {history.pushes} steps but current step is {k}"
        )
    live = params.weights * params.mask
    out = np.zeros(params.n_post, dtype=np.float64)
    for slot, d in enumerate(params.delay_spec.delays):
        out += history.read(d) @ live[:, :, slot]
    return out
