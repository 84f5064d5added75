"""Save/load round trips for the JSON checkpoint format."""

import json

import numpy as np
import pytest

from delaysnn.checkpoint import FORMAT_VERSION, load_checkpoint, save_checkpoint
from delaysnn.errors import ConfigError, DataError
from delaysnn.layers import DelayLayerParams, delay_spec_from_depth_stride
from delaysnn.network import LayerSpec, NetworkSpec, init_params
from delaysnn.neuron import NeuronConfig, SurrogateConfig


def _spec():
    delays = delay_spec_from_depth_stride(12, 4)
    return NetworkSpec(
        input_size=3,
        hidden=(
            LayerSpec(5, neuron=NeuronConfig(u_th=0.8, tau_init=4.0)),
            LayerSpec(4, "recurrent"),
            LayerSpec(4, "delayed", delays=delays),
        ),
        readout_size=2,
        readout_delays=delay_spec_from_depth_stride(6, 3),
        readout_neuron=NeuronConfig(tau_init=30.0),
        surrogate=SurrogateConfig(beta=7.5, mode="soft"),
    )


def test_round_trip_is_bit_exact(tmp_path):
    spec = _spec()
    params = init_params(spec, seed=11, gain=1.7)
    # knock out a few delay synapses so the mask is nontrivial
    dl = params.layers[2]
    mask = dl.mask.copy()
    mask[0, 1, 2] = 0.0
    mask[3, 0, 0] = 0.0
    pruned = DelayLayerParams(dl.weights, dl.delay_spec, mask)
    pruned.apply_mask()
    params.layers[2] = pruned
    path = str(tmp_path / "ckpt.json")
    save_checkpoint(path, spec, params, metadata={"epoch": 3, "loss": 0.25})
    spec2, params2, meta = load_checkpoint(path)
    assert spec2 == spec
    assert meta == {"epoch": 3, "loss": 0.25}
    assert len(params2.layers) == len(params.layers)
    for a, b in zip(params.layers, params2.layers):
        assert type(a) is type(b)
    assert np.array_equal(params2.layers[0].weights, params.layers[0].weights)
    assert np.array_equal(params2.layers[1].ff_weights, params.layers[1].ff_weights)
    assert np.array_equal(params2.layers[1].rec_weights, params.layers[1].rec_weights)
    assert np.array_equal(params2.layers[2].weights, params.layers[2].weights)
    assert np.array_equal(params2.layers[2].mask, params.layers[2].mask)
    assert params2.layers[2].delay_spec == dl.delay_spec
    assert params2.layers[3].delay_spec == spec.readout_delays
    for a, b in zip(params.decay_params, params2.decay_params):
        assert np.array_equal(a, b)


def test_metadata_defaults_to_empty(tmp_path):
    spec = NetworkSpec(2, (LayerSpec(3),), readout_size=1)
    params = init_params(spec, 0)
    path = str(tmp_path / "c.json")
    save_checkpoint(path, spec, params)
    _, _, meta = load_checkpoint(path)
    assert meta == {}


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_checkpoint(str(tmp_path / "absent.json"))


def test_truncated_json(tmp_path):
    spec = NetworkSpec(2, (LayerSpec(3),), readout_size=1)
    path = str(tmp_path / "c.json")
    save_checkpoint(path, spec, init_params(spec, 0))
    text = open(path).read()
    path2 = str(tmp_path / "cut.json")
    with open(path2, "w") as f:
        f.write(text[: len(text) // 2])
    with pytest.raises(DataError):
        load_checkpoint(path2)


def _rewrite(tmp_path, mutate):
    spec = _spec()
    path = str(tmp_path / "c.json")
    save_checkpoint(path, spec, init_params(spec, 1))
    with open(path) as f:
        doc = json.load(f)
    mutate(doc)
    with open(path, "w") as f:
        json.dump(doc, f)
    return path


def test_unknown_format_version(tmp_path):
    path = _rewrite(tmp_path, lambda doc: doc.update(format_version=99))
    with pytest.raises(ConfigError) as e:
        load_checkpoint(path)
    assert "99" in str(e.value)
    assert FORMAT_VERSION == 1


def test_missing_keys(tmp_path):
    path = _rewrite(tmp_path, lambda doc: doc.pop("decay_params"))
    with pytest.raises(DataError):
        load_checkpoint(path)
    path = _rewrite(tmp_path, lambda doc: doc["layers"][0].pop("weights"))
    with pytest.raises(DataError):
        load_checkpoint(path)


def test_unknown_layer_kind(tmp_path):
    path = _rewrite(tmp_path, lambda doc: doc["layers"][0].update(kind="sparse"))
    with pytest.raises(DataError) as e:
        load_checkpoint(path)
    assert "sparse" in str(e.value)
