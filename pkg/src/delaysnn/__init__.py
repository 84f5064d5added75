"""Spiking neural networks with per-synapse axonal delays.

Train leaky integrate-and-fire networks with surrogate-gradient BPTT where
each neuron pair carries one synapse per discrete delay value, prune the
redundant delay synapses by magnitude, and estimate what the result costs
to deploy on a digital neuromorphic processor.
"""

from ._kernels import BACKEND_NAME as backend_name
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    DelaySnnError,
    DivergenceError,
)
from .hwcost import (
    ActivityTrace,
    ArchSpec,
    CostReport,
    EnergyCoeffs,
    LayerArch,
    arch_from_network,
    build_cost_report,
    delay_queue_overhead,
    energy,
    load_energy_coeffs,
    measure_activity,
    op_counts,
    param_count,
    ring_buffer_overhead,
    saving_factors,
    state_words,
)
from .layers import (
    DelayLayerParams,
    DelaySpec,
    FeedforwardLayerParams,
    RecurrentLayerParams,
    SpikeHistoryBuffer,
    delayed_input,
    feedforward_input,
    recurrent_input,
)
from .network import (
    LayerSpec,
    NetworkParams,
    NetworkSpec,
    backward,
    forward,
    init_params,
)
from .neuron import NeuronConfig, SurrogateConfig, lif_step, surrogate_grad, threshold
from .pruning import (
    PruneConfig,
    effective_param_count,
    prune_by_magnitude,
    prune_finetune_loop,
    refine_delays,
)
from .tasks import (
    AddingSample,
    SpikeEventSet,
    bin_events,
    encode_adding,
    gen_adding,
    gen_delay_xor,
)
from .training import Hyperparams, evaluate, loss_classification, loss_mse_readout, train

__version__ = "0.1.0"

__all__ = [
    "ActivityTrace",
    "AddingSample",
    "ArchSpec",
    "ConfigError",
    "ContractError",
    "CostReport",
    "DataError",
    "DelayLayerParams",
    "DelaySnnError",
    "DelaySpec",
    "DivergenceError",
    "EnergyCoeffs",
    "FeedforwardLayerParams",
    "Hyperparams",
    "LayerArch",
    "LayerSpec",
    "NetworkParams",
    "NetworkSpec",
    "NeuronConfig",
    "PruneConfig",
    "RecurrentLayerParams",
    "SpikeEventSet",
    "SpikeHistoryBuffer",
    "SurrogateConfig",
    "arch_from_network",
    "backend_name",
    "backward",
    "bin_events",
    "build_cost_report",
    "delay_queue_overhead",
    "delayed_input",
    "effective_param_count",
    "encode_adding",
    "energy",
    "evaluate",
    "feedforward_input",
    "forward",
    "gen_adding",
    "gen_delay_xor",
    "init_params",
    "lif_step",
    "load_energy_coeffs",
    "loss_classification",
    "loss_mse_readout",
    "measure_activity",
    "op_counts",
    "param_count",
    "prune_by_magnitude",
    "prune_finetune_loop",
    "recurrent_input",
    "refine_delays",
    "ring_buffer_overhead",
    "saving_factors",
    "state_words",
    "surrogate_grad",
    "threshold",
    "train",
    "__version__",
]
