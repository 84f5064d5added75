"""Network assembly: architecture spec, parameter init, unrolled forward/backward.

A network is an ordered stack of hidden spiking layers followed by a
non-spiking readout integrator (its threshold is effectively infinite, so
it never fires or resets).  Each layer owns one input projection —
feedforward, recurrent (with lateral weights), or delayed (one weight
slice per delay value) — plus a trainable decay parameter per neuron.
The first hidden layer never carries input delays; delays live on
hidden-to-hidden and hidden-to-readout projections.

The forward pass unrolls the dynamics over all T timesteps and records a
tape (currents, potentials, spikes per layer); the backward pass walks the
tape in reverse, differentiating the spike nonlinearity and the reset gate
through the fast-sigmoid surrogate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractError
from .layers import (
    DelayLayerParams,
    DelaySpec,
    FeedforwardLayerParams,
    RecurrentLayerParams,
)
from .neuron import (
    NeuronConfig,
    SurrogateConfig,
    alpha_from_decay_param,
    alpha_grad_wrt_decay_param,
    decay_param_for_tau,
)

LAYER_KINDS = ("feedforward", "recurrent", "delayed")


@dataclass(frozen=True)
class LayerSpec:
    """One hidden layer: its size, input-projection kind, and neuron config."""

    size: int
    kind: str = "feedforward"
    delays: DelaySpec | None = None
    neuron: NeuronConfig = field(default_factory=NeuronConfig)

    def __post_init__(self):
        if self.size < 1:
            raise ContractError(f"layer size must be >= 1, got {self.size}")
        if self.kind not in LAYER_KINDS:
            raise ContractError(f"unknown layer kind {self.kind!r}")
        if self.kind == "delayed" and self.delays is None:
            raise ContractError("delayed layer requires a DelaySpec")
        if self.kind != "delayed" and self.delays is not None:
            raise ContractError(f"{self.kind} layer must not carry delays")


@dataclass(frozen=True)
class NetworkSpec:
    """Full architecture: hidden stack plus non-spiking readout."""

    input_size: int
    hidden: tuple[LayerSpec, ...]
    readout_size: int = 1
    readout_delays: DelaySpec | None = None
    readout_neuron: NeuronConfig = field(default_factory=NeuronConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.input_size < 1:
            raise ContractError(f"input size must be >= 1, got {self.input_size}")
        if self.readout_size < 1:
            raise ContractError(f"readout size must be >= 1, got {self.readout_size}")
        if len(self.hidden) < 1:
            raise ContractError("need at least one hidden layer")
        if self.hidden[0].kind == "delayed":
            raise ContractError("the first hidden layer must not carry input delays")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        """Sizes of all trainable layers, readout last."""
        return tuple(h.size for h in self.hidden) + (self.readout_size,)

    def fan_in(self, idx: int) -> int:
        sizes = (self.input_size,) + self.layer_sizes
        return sizes[idx]


@dataclass
class NetworkParams:
    """Trainable state: one projection per layer (readout last) plus decay params."""

    layers: list
    decay_params: list

    def copy(self) -> "NetworkParams":
        layers = []
        for lp in self.layers:
            if isinstance(lp, DelayLayerParams):
                layers.append(
                    DelayLayerParams(lp.weights.copy(), lp.delay_spec, lp.mask.copy())
                )
            elif isinstance(lp, RecurrentLayerParams):
                layers.append(
                    RecurrentLayerParams(lp.ff_weights.copy(), lp.rec_weights.copy())
                )
            else:
                layers.append(FeedforwardLayerParams(lp.weights.copy()))
        return NetworkParams(layers, [dp.copy() for dp in self.decay_params])


def iter_param_arrays(params: NetworkParams):
    """Yield (name, array) for every trainable array, in a fixed order."""
    for i, lp in enumerate(params.layers):
        if isinstance(lp, RecurrentLayerParams):
            yield f"layer{i}.ff_weights", lp.ff_weights
            yield f"layer{i}.rec_weights", lp.rec_weights
        else:
            yield f"layer{i}.weights", lp.weights
        yield f"layer{i}.decay_param", params.decay_params[i]


def init_params(spec: NetworkSpec, seed: int, gain: float = 1.0) -> NetworkParams:
    """Uniform weight init in [-k, k], k = gain / sqrt(fan_in * n_delay_slots).

    The scaling keeps the input-current variance comparable across delay
    counts; ``gain`` trades off initial spike activity against stability
    (sparse-input tasks usually need gain well above 1 to get the hidden
    layers firing).  Decay parameters start at the value whose transform
    equals exp(-1/tau_init).
    """
    if gain <= 0:
        raise ContractError(f"init gain must be positive, got {gain}")
    rng = np.random.default_rng(seed)
    layers = []
    decay_params = []
    sizes = (spec.input_size,) + spec.layer_sizes
    neurons = tuple(h.neuron for h in spec.hidden) + (spec.readout_neuron,)
    for idx in range(len(spec.hidden) + 1):
        n_pre, n_post = sizes[idx], sizes[idx + 1]
        is_readout = idx == len(spec.hidden)
        if is_readout:
            kind = "delayed" if spec.readout_delays is not None else "feedforward"
            dspec = spec.readout_delays
        else:
            kind = spec.hidden[idx].kind
            dspec = spec.hidden[idx].delays
        if kind == "delayed":
            k = gain / np.sqrt(n_pre * dspec.count)
            w = rng.uniform(-k, k, size=(n_pre, n_post, dspec.count))
            layers.append(DelayLayerParams(w, dspec))
        elif kind == "recurrent":
            k = gain / np.sqrt(n_pre)
            w = rng.uniform(-k, k, size=(n_pre, n_post))
            kr = gain / np.sqrt(n_post)
            v = rng.uniform(-kr, kr, size=(n_post, n_post))
            layers.append(RecurrentLayerParams(w, v))
        else:
            k = gain / np.sqrt(n_pre)
            w = rng.uniform(-k, k, size=(n_pre, n_post))
            layers.append(FeedforwardLayerParams(w))
        p0 = decay_param_for_tau(neurons[idx].tau_init)
        decay_params.append(np.full(n_post, p0, dtype=np.float64))
    return NetworkParams(layers, decay_params)


@dataclass
class Tape:
    """Per-timestep record of one unrolled forward pass.

    All arrays are (T, B, size); ``spikes[-1]`` (readout) is all zeros.
    """

    inputs: np.ndarray
    currents: list
    potentials: list
    spikes: list
    batched: bool

    @property
    def timesteps(self) -> int:
        return self.inputs.shape[0]

    @property
    def batch_size(self) -> int:
        return self.inputs.shape[1]


def _projection_view(lp):
    """Normalise a projection to (live 3-D weights, delay tuple, rec weights)."""
    if isinstance(lp, DelayLayerParams):
        return lp.weights * lp.mask, lp.delay_spec.delays, None
    if isinstance(lp, RecurrentLayerParams):
        return lp.ff_weights[:, :, None], (0,), lp.rec_weights
    return lp.weights[:, :, None], (0,), None


def _drive(theta_pre, w3, delays):
    """Sum of delayed pre-synaptic spike trains through the weight slices."""
    T, B, _ = theta_pre.shape
    n_pre, n_post = w3.shape[0], w3.shape[1]
    out = np.zeros((T, B, n_post), dtype=np.float64)
    for s, d in enumerate(delays):
        if d >= T:
            continue
        src = theta_pre[: T - d].reshape(-1, n_pre)
        out[d:] += (src @ w3[:, :, s]).reshape(T - d, B, n_post)
    return out


def _weight_grad(theta_pre, g_current, delays, n_slots):
    T, B, n_pre = theta_pre.shape
    n_post = g_current.shape[2]
    g = np.zeros((n_pre, n_post, n_slots), dtype=np.float64)
    for s, d in enumerate(delays):
        if d >= T:
            continue
        src = theta_pre[: T - d].reshape(-1, n_pre)
        g[:, :, s] = src.T @ g_current[d:].reshape(-1, n_post)
    return g


def _input_grad(g_current, w3, delays, n_pre):
    T, B, n_post = g_current.shape
    g = np.zeros((T, B, n_pre), dtype=np.float64)
    for s, d in enumerate(delays):
        if d >= T:
            continue
        gc = g_current[d:].reshape(-1, n_post)
        g[: T - d] += (gc @ w3[:, :, s].T).reshape(T - d, B, n_pre)
    return g


def _check_params(spec: NetworkSpec, params: NetworkParams):
    n_layers = len(spec.hidden) + 1
    if len(params.layers) != n_layers or len(params.decay_params) != n_layers:
        raise ContractError(
            f"params have {len(params.layers)} layers, spec wants {n_layers}"
        )
    sizes = (spec.input_size,) + spec.layer_sizes
    for idx, lp in enumerate(params.layers):
        if (lp.n_pre, lp.n_post) != (sizes[idx], sizes[idx + 1]):
            raise ContractError(
                f"layer {idx} shaped ({lp.n_pre}, {lp.n_post}), "
                f"spec wants ({sizes[idx]}, {sizes[idx + 1]})"
            )
        if params.decay_params[idx].shape != (sizes[idx + 1],):
            raise ContractError(f"layer {idx} decay params misshaped")


def _normalize_inputs(spec: NetworkSpec, inputs):
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 2:
        batched = False
        x = x[:, None, :]
    elif x.ndim == 3:
        batched = True
        x = np.ascontiguousarray(np.moveaxis(x, 0, 1))
    else:
        raise ContractError(f"inputs must be (T, C) or (B, T, C), got {x.shape}")
    if x.shape[0] < 1:
        raise ContractError("input sequence must have at least one timestep")
    if x.shape[2] != spec.input_size:
        raise ContractError(
            f"input has {x.shape[2]} channels, spec wants {spec.input_size}"
        )
    return x, batched


def forward(spec: NetworkSpec, params: NetworkParams, inputs):
    """Simulate the network over a full input sequence.

    ``inputs`` is (T, C) for a single sequence or (B, T, C) for a batch.
    Returns (tape, readout potentials), the latter shaped (T, R) or
    (B, T, R) to match the input.
    """
    _check_params(spec, params)
    x, batched = _normalize_inputs(spec, inputs)
    soft = spec.surrogate.mode == "soft"
    beta = spec.surrogate.beta
    theta_pre = x
    currents, potentials, spikes = [], [], []
    n_layers = len(params.layers)
    for idx in range(n_layers):
        lp = params.layers[idx]
        alpha = alpha_from_decay_param(params.decay_params[idx])
        w3, delays, rec_w = _projection_view(lp)
        i_ext = _drive(theta_pre, w3, delays)
        if idx == n_layers - 1:
            u = _kernels.readout_forward(i_ext, alpha)
            th = np.zeros_like(u)
            i_total = i_ext
        else:
            u_th = spec.hidden[idx].neuron.u_th
            u, th = _kernels.spiking_forward(i_ext, alpha, u_th, beta, soft, rec_w)
            if rec_w is None:
                i_total = i_ext
            else:
                i_total = i_ext.copy()
                i_total[1:] += th[:-1] @ rec_w
        currents.append(i_total)
        potentials.append(u)
        spikes.append(th)
        theta_pre = th
    tape = Tape(x, currents, potentials, spikes, batched)
    readout = potentials[-1]
    if batched:
        return tape, np.moveaxis(readout, 0, 1).copy()
    return tape, readout[:, 0, :]


@dataclass
class LayerGrads:
    weights: np.ndarray
    rec_weights: np.ndarray | None
    decay_param: np.ndarray


@dataclass
class NetworkGrads:
    layers: list


def iter_grad_arrays(grads: NetworkGrads):
    """Mirror of :func:`iter_param_arrays` over a gradient structure."""
    for i, lg in enumerate(grads.layers):
        if lg.rec_weights is not None:
            yield f"layer{i}.ff_weights", lg.weights
            yield f"layer{i}.rec_weights", lg.rec_weights
        else:
            yield f"layer{i}.weights", lg.weights
        yield f"layer{i}.decay_param", lg.decay_param


def backward(spec: NetworkSpec, params: NetworkParams, tape: Tape, loss_grad_at_readout):
    """Reverse-mode gradients of a scalar loss through the recorded unroll.

    ``loss_grad_at_readout`` is the adjoint of the readout potentials,
    shaped like the potentials returned by :func:`forward`.  Gradients of
    masked delay synapses are exactly zero.
    """
    _check_params(spec, params)
    n_layers = len(params.layers)
    if len(tape.potentials) != n_layers:
        raise ContractError("tape does not match params (layer count)")
    for idx in range(n_layers):
        if tape.potentials[idx].shape[2] != params.layers[idx].n_post:
            raise ContractError("tape does not match params (layer sizes)")
    g_read = np.asarray(loss_grad_at_readout, dtype=np.float64)
    if g_read.ndim == 2:
        g_read = g_read[:, None, :]
    elif g_read.ndim == 3:
        g_read = np.ascontiguousarray(np.moveaxis(g_read, 0, 1))
    expected = tape.potentials[-1].shape
    if g_read.shape != expected:
        raise ContractError(
            f"loss gradient shaped {g_read.shape}, readout tape is {expected}"
        )

    soft = spec.surrogate.mode == "soft"
    beta = spec.surrogate.beta
    grads: list = [None] * n_layers
    g_theta_next = None
    for idx in range(n_layers - 1, -1, -1):
        lp = params.layers[idx]
        alpha = alpha_from_decay_param(params.decay_params[idx])
        w3, delays, rec_w = _projection_view(lp)
        u = tape.potentials[idx]
        th = tape.spikes[idx]
        theta_pre = tape.spikes[idx - 1] if idx > 0 else tape.inputs
        if idx == n_layers - 1:
            g_current, g_alpha = _kernels.readout_backward(u, g_read, alpha)
        else:
            u_th = spec.hidden[idx].neuron.u_th
            g_current, g_alpha = _kernels.spiking_backward(
                u, th, g_theta_next, alpha, u_th, beta, soft, rec_w
            )
        gw3 = _weight_grad(theta_pre, g_current, delays, w3.shape[2])
        g_decay = g_alpha * alpha_grad_wrt_decay_param(alpha)
        if isinstance(lp, DelayLayerParams):
            gw3 *= lp.mask
            grads[idx] = LayerGrads(gw3, None, g_decay)
        elif isinstance(lp, RecurrentLayerParams):
            g_rec = np.einsum("tbm,tbn->mn", th[:-1], g_current[1:])
            grads[idx] = LayerGrads(gw3[:, :, 0], g_rec, g_decay)
        else:
            grads[idx] = LayerGrads(gw3[:, :, 0], None, g_decay)
        if idx > 0:
            g_theta_next = _input_grad(g_current, w3, delays, lp.n_pre)
    return NetworkGrads(grads)
