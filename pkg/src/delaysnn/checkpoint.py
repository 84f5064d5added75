"""Checkpoint serialization: network spec + parameters as versioned JSON.

Arrays are stored as row-major flat lists with declared shapes.  Floats go
through repr, so a save/load round trip returns bit-identical tensors.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ConfigError, DataError
from .layers import (
    DelayLayerParams,
    DelaySpec,
    FeedforwardLayerParams,
    RecurrentLayerParams,
)
from .neuron import NeuronConfig, SurrogateConfig
from .network import LayerSpec, NetworkParams, NetworkSpec

FORMAT_VERSION = 1


def _array_out(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(x) for x in a.ravel()]}


def _array_in(d: dict) -> np.ndarray:
    a = np.array(d["data"], dtype=np.float64)
    return a.reshape(d["shape"])


def _delays_out(spec: DelaySpec | None):
    if spec is None:
        return None
    return {"delays": list(spec.delays), "stride": spec.stride}


def _delays_in(d) -> DelaySpec | None:
    if d is None:
        return None
    return DelaySpec(tuple(d["delays"]), stride=d["stride"])


def _neuron_out(nc: NeuronConfig) -> dict:
    return {"u_th": nc.u_th, "tau_init": nc.tau_init}


def _spec_out(spec: NetworkSpec) -> dict:
    return {
        "input_size": spec.input_size,
        "hidden": [
            {
                "size": h.size,
                "kind": h.kind,
                "delays": _delays_out(h.delays),
                "neuron": _neuron_out(h.neuron),
            }
            for h in spec.hidden
        ],
        "readout_size": spec.readout_size,
        "readout_delays": _delays_out(spec.readout_delays),
        "readout_neuron": _neuron_out(spec.readout_neuron),
        "surrogate": {"beta": spec.surrogate.beta, "mode": spec.surrogate.mode},
    }


def _spec_in(d: dict) -> NetworkSpec:
    hidden = tuple(
        LayerSpec(
            size=h["size"],
            kind=h["kind"],
            delays=_delays_in(h["delays"]),
            neuron=NeuronConfig(**h["neuron"]),
        )
        for h in d["hidden"]
    )
    return NetworkSpec(
        input_size=d["input_size"],
        hidden=hidden,
        readout_size=d["readout_size"],
        readout_delays=_delays_in(d["readout_delays"]),
        readout_neuron=NeuronConfig(**d["readout_neuron"]),
        surrogate=SurrogateConfig(**d["surrogate"]),
    )


def _layer_out(lp) -> dict:
    if isinstance(lp, DelayLayerParams):
        return {
            "kind": "delayed",
            "weights": _array_out(lp.weights),
            "mask": _array_out(lp.mask),
            "delays": _delays_out(lp.delay_spec),
        }
    if isinstance(lp, RecurrentLayerParams):
        return {
            "kind": "recurrent",
            "ff_weights": _array_out(lp.ff_weights),
            "rec_weights": _array_out(lp.rec_weights),
        }
    return {"kind": "feedforward", "weights": _array_out(lp.weights)}


def _layer_in(d: dict):
    kind = d.get("kind")
    if kind == "delayed":
        return DelayLayerParams(
            _array_in(d["weights"]), _delays_in(d["delays"]), _array_in(d["mask"])
        )
    if kind == "recurrent":
        return RecurrentLayerParams(_array_in(d["ff_weights"]), _array_in(d["rec_weights"]))
    if kind == "feedforward":
        return FeedforwardLayerParams(_array_in(d["weights"]))
    raise DataError(f"unknown layer kind in checkpoint: {kind!r}")


def save_checkpoint(
    path: str, spec: NetworkSpec, params: NetworkParams, metadata: dict | None = None
) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "spec": _spec_out(spec),
        "layers": [_layer_out(lp) for lp in params.layers],
        "decay_params": [_array_out(dp) for dp in params.decay_params],
        "metadata": metadata or {},
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_checkpoint(path: str):
    """Returns (spec, params, metadata); rejects unknown format versions."""
    if not os.path.exists(path):
        raise DataError(f"checkpoint not found: {path}")
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: not valid JSON: {e}") from e
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(
            f"{path}: checkpoint format version {version!r}, expected {FORMAT_VERSION}"
        )
    try:
        spec = _spec_in(doc["spec"])
        layers = [_layer_in(d) for d in doc["layers"]]
        decay = [_array_in(d) for d in doc["decay_params"]]
    except (KeyError, TypeError) as e:
        raise DataError(f"{path}: malformed checkpoint: {e}") from e
    return spec, NetworkParams(layers, decay), doc.get("metadata", {})
