"""Shared builders for randomised test networks."""

import numpy as np

from delaysnn.layers import delay_spec_from_depth_stride
from delaysnn.network import LayerSpec, NetworkSpec
from delaysnn.neuron import NeuronConfig, SurrogateConfig


def random_small_spec(rng, mode="hard", beta=5.0):
    """Two-hidden-layer network with randomised sizes, kinds, and delay sets.

    Covers every projection type: the first hidden layer is feedforward or
    recurrent, the second draws from all three kinds, and the readout
    sometimes carries its own delay set.
    """
    n_in = int(rng.integers(2, 5))
    h1_kind = ("feedforward", "recurrent")[int(rng.integers(0, 2))]
    h2_kind = ("feedforward", "recurrent", "delayed")[int(rng.integers(0, 3))]
    delays = None
    if h2_kind == "delayed":
        stride = int(rng.integers(1, 3))
        delays = delay_spec_from_depth_stride(stride * int(rng.integers(2, 5)), stride)
    readout_delays = None
    if rng.random() < 0.4:
        readout_delays = delay_spec_from_depth_stride(2 * int(rng.integers(1, 4)), 2)
    return NetworkSpec(
        input_size=n_in,
        hidden=(
            LayerSpec(
                int(rng.integers(2, 5)),
                h1_kind,
                neuron=NeuronConfig(tau_init=float(rng.uniform(2.0, 30.0))),
            ),
            LayerSpec(
                int(rng.integers(2, 5)),
                h2_kind,
                delays=delays,
                neuron=NeuronConfig(tau_init=float(rng.uniform(2.0, 30.0))),
            ),
        ),
        readout_size=int(rng.integers(1, 4)),
        readout_delays=readout_delays,
        surrogate=SurrogateConfig(beta=beta, mode=mode),
    )


def random_inputs(rng, spec, timesteps, batch=None):
    """Input currents scaled so membranes actually cross the threshold."""
    shape = (timesteps, spec.input_size) if batch is None else (batch, timesteps, spec.input_size)
    return rng.normal(0.6, 0.8, size=shape)
