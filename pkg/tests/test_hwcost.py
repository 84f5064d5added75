"""Deployment cost accounting: parameters, delay-mechanism memory, ops, energy.

Expected parameter counts below were derived once by hand from the layer
dimensions (fan_in * size * slots, plus size^2 for recurrence, plus time
constants) and are asserted as frozen integers.  The operation counts are
checked against an event-loop oracle that walks explicit spike rasters one
timestep at a time.
"""

import numpy as np
import pytest

from delaysnn.errors import ConfigError, ContractError, DataError
from delaysnn.hwcost import (
    OP_CATEGORIES,
    ActivityTrace,
    ArchSpec,
    EnergyCoeffs,
    LayerActivity,
    LayerArch,
    arch_from_network,
    build_cost_report,
    default_coeffs_path,
    delay_queue_overhead,
    energy,
    load_energy_coeffs,
    measure_activity,
    op_counts,
    param_count,
    report_to_csv,
    report_to_table,
    ring_buffer_overhead,
    saving_factors,
    state_words,
    trace_from_averages,
    trace_from_csv,
    trace_to_csv,
    with_baseline,
)
from delaysnn.layers import DelaySpec, delay_spec_from_depth_stride
from delaysnn.network import LayerSpec, NetworkSpec, init_params
from delaysnn.pruning import refine_delays
from delaysnn.tasks import adding_dataset, gen_adding

D10 = delay_spec_from_depth_stride(100, 10)   # ten slots
D1_SPEC = delay_spec_from_depth_stride(150, 15)  # {0, 15, ..., 135}
D2_SPEC = delay_spec_from_depth_stride(150, 30)  # {0, 30, ..., 120}


def _arch(hidden, readout_delays=None, input_size=700, readout_size=20):
    return ArchSpec(input_size, tuple(hidden), readout_size, readout_delays)


def arch_r(sizes, neuron="lif"):
    return _arch([LayerArch(s, neuron, recurrent=True) for s in sizes])


def arch_ff(sizes):
    return _arch([LayerArch(s) for s in sizes])


def arch_d(sizes, dspec):
    layers = [LayerArch(sizes[0])] + [LayerArch(s, delays=dspec) for s in sizes[1:]]
    return _arch(layers, readout_delays=dspec)


# --- parameter counting ------------------------------------------------------


def test_weight_counts_for_reference_architectures():
    # 700 input channels, 20 output classes throughout
    assert param_count(arch_r([128, 128])).weights == 141312
    assert param_count(arch_r([128])).weights == 108544
    assert param_count(arch_ff([400, 400])).weights == 448000
    assert param_count(arch_r([256, 256])).weights == 380928
    assert param_count(arch_r([256])).weights == 249856
    assert param_count(arch_d([64, 64], D10)).weights == 98560
    assert param_count(arch_d([48, 48], D10)).weights == 66240


def test_total_counts_for_deployment_architectures():
    assert param_count(arch_r([128, 128])).total == 141588
    assert param_count(arch_r([48, 48], neuron="alif")).total == 41684
    assert param_count(arch_d([8, 8], D1_SPEC)).total == 7876
    assert param_count(arch_d([8, 8], D2_SPEC)).total == 6756


def test_param_count_component_breakdown():
    pc = param_count(arch_d([8, 8], D1_SPEC))
    # 700*8 input weights + 8*8*10 delayed + 8*20*10 readout
    assert pc.weights == 5600 + 640 + 1600
    assert pc.time_constants == 8 + 8 + 20
    alif = param_count(arch_r([48, 48], neuron="alif"))
    assert alif.time_constants == 2 * 48 + 2 * 48 + 20


def test_state_words():
    assert state_words(arch_d([8, 8], D1_SPEC)) == 8 + 8 + 20
    assert state_words(arch_r([48, 48], neuron="alif")) == 2 * 96 + 20
    assert state_words(arch_r([128, 128])) == 256 + 20


def test_arch_validation():
    with pytest.raises(ContractError):
        LayerArch(8, neuron="izhikevich")
    with pytest.raises(ContractError):
        LayerArch(0)
    with pytest.raises(ContractError):
        ArchSpec(700, (), 20)
    with pytest.raises(ContractError):
        # input delays on the first layer are not representable
        ArchSpec(700, (LayerArch(8, delays=D10),), 20)
    with pytest.raises(ContractError):
        ArchSpec(0, (LayerArch(8),), 20)


# --- delay mechanism overheads -----------------------------------------------


def _trace(hidden_avgs, hidden_maxes, t=250, in_avg=12.0, in_max=60.0):
    return trace_from_averages([in_avg] + hidden_avgs, [in_max] + hidden_maxes, t)


def test_ring_buffer_words_for_deployment_architectures():
    # (layer-2 posts + readout posts) * max delay
    words, extra = ring_buffer_overhead(arch_d([8, 8], D1_SPEC))
    assert words == (8 + 20) * 135 == 3780
    assert extra == 28
    words2, extra2 = ring_buffer_overhead(arch_d([8, 8], D2_SPEC))
    assert words2 == (8 + 20) * 120 == 3360
    assert extra2 == 28
    # recurrent nets carry no delay hardware
    assert ring_buffer_overhead(arch_r([128, 128])) == (0, 0)


def test_delay_queue_words_for_deployment_architectures():
    d1 = arch_d([8, 8], D1_SPEC)
    trace1 = _trace([1.894, 1.772], [7.0, 7.0])
    words, _ = delay_queue_overhead(d1, trace1)
    assert words == 7 * 135 + 7 * 135 == 1890
    d2 = arch_d([8, 8], D2_SPEC)
    trace2 = _trace([1.686, 2.539], [7.0, 8.0])
    words2, _ = delay_queue_overhead(d2, trace2)
    assert words2 == 7 * 120 + 8 * 120 == 1800


def test_delay_queue_ops_count_push_and_pop_per_nonzero_slot():
    arch = arch_d([2, 2], DelaySpec((0, 4, 8), stride=4))
    # integer totals: 10 spikes from layer 1, 6 from layer 2
    trace = ActivityTrace(
        (
            LayerActivity(1.0, 2.0, 5.0),
            LayerActivity(2.0, 4.0, 10.0),
            LayerActivity(1.2, 3.0, 6.0),
        ),
        timesteps=5,
    )
    _, ops = delay_queue_overhead(arch, trace)
    assert ops == 2 * 10 * 2 + 2 * 6 * 2  # two nonzero delays per projection


def test_queue_capacity_rounds_fractional_maxima_up():
    arch = arch_d([2, 2], DelaySpec((0, 10), stride=10))
    trace = _trace([0.5, 0.5], [2.5, 1.1])
    words, _ = delay_queue_overhead(arch, trace)
    assert words == 3 * 10 + 2 * 10


def test_trace_shape_must_match_arch():
    arch = arch_d([8, 8], D1_SPEC)
    with pytest.raises(ContractError):
        delay_queue_overhead(arch, _trace([1.0], [2.0]))  # one hidden row missing


# --- operation counts vs event-loop oracle ------------------------------------


def event_loop_op_counts(arch, input_raster, hidden_rasters):
    """Walk the rasters step by step, charging each operation as it happens."""
    t_steps = input_raster.shape[0]
    counts = dict.fromkeys(OP_CATEGORIES, 0)
    rasters = [input_raster] + list(hidden_rasters)
    projections = []
    for i, layer in enumerate(arch.layers):
        slots = layer.delays.count if layer.delays is not None else 1
        projections.append((i, layer.size, slots))
    readout_slots = arch.readout_delays.count if arch.readout_delays is not None else 1
    projections.append((len(arch.layers), arch.readout_size, readout_slots))
    n_neurons = sum(l.size for l in arch.layers) + arch.readout_size
    for t in range(t_steps):
        for src, fan_out, slots in projections:
            for spike in range(int(rasters[src][t].sum())):
                counts["spike_read"] += 1
                counts["weight_read"] += fan_out * slots
                counts["accumulate"] += fan_out * slots
        for i, layer in enumerate(arch.layers):
            if layer.recurrent:
                for spike in range(int(rasters[i + 1][t].sum())):
                    counts["spike_read"] += 1
                    counts["weight_read"] += layer.size
                    counts["accumulate"] += layer.size
        counts["state_read"] += n_neurons
        counts["accumulate"] += n_neurons
        counts["compare"] += n_neurons
        counts["state_write"] += n_neurons
        for r in hidden_rasters:
            counts["spike_write"] += int(r[t].sum())
    return counts


def _exact_trace_from_rasters(input_raster, hidden_rasters):
    t_steps = input_raster.shape[0]
    layers = []
    for r in [input_raster] + list(hidden_rasters):
        per_step = r.sum(axis=1)
        layers.append(LayerActivity(per_step.mean(), per_step.max(), float(per_step.sum())))
    return ActivityTrace(tuple(layers), t_steps)


def _random_arch_and_rasters(rng):
    n_layers = int(rng.integers(1, 4))
    layers = []
    for i in range(n_layers):
        size = int(rng.integers(1, 6))
        kind = int(rng.integers(0, 3)) if i > 0 else int(rng.integers(0, 2))
        if kind == 2:
            stride = int(rng.integers(1, 4))
            dspec = delay_spec_from_depth_stride(stride * int(rng.integers(1, 4)), stride)
            layers.append(LayerArch(size, delays=dspec))
        elif kind == 1:
            layers.append(LayerArch(size, recurrent=True))
        else:
            layers.append(LayerArch(size, neuron="alif" if rng.random() < 0.3 else "lif"))
    readout_delays = None
    if rng.random() < 0.5:
        readout_delays = delay_spec_from_depth_stride(int(rng.integers(1, 5)), 1)
    arch = ArchSpec(int(rng.integers(1, 8)), tuple(layers), int(rng.integers(1, 5)), readout_delays)
    t_steps = int(rng.integers(1, 12))
    input_raster = (rng.random((t_steps, arch.input_size)) < 0.4).astype(float)
    hidden = [(rng.random((t_steps, l.size)) < 0.4).astype(float) for l in arch.layers]
    return arch, input_raster, hidden


def test_op_counts_match_event_loop_oracle():
    rng = np.random.default_rng(42)
    for trial in range(100):
        arch, input_raster, hidden = _random_arch_and_rasters(rng)
        trace = _exact_trace_from_rasters(input_raster, hidden)
        got = op_counts(arch, trace)
        want = event_loop_op_counts(arch, input_raster, hidden)
        # integer-valued floats throughout, so the match is exact
        assert got == {k: float(v) for k, v in want.items()}, trial


def test_op_counts_timestep_override():
    arch = arch_ff([4])
    trace = _trace([1.0], [2.0], t=250)
    a = op_counts(arch, trace)
    b = op_counts(arch, trace, timesteps=500)
    n_neurons = 4 + 20
    assert b["state_read"] - a["state_read"] == n_neurons * 250
    assert b["weight_read"] == a["weight_read"]  # synaptic work scales with spikes


# --- energy ------------------------------------------------------------------


def _unit_coeffs(**overrides):
    vals = dict.fromkeys(OP_CATEGORIES, 1.0)
    vals.update(overrides)
    return EnergyCoeffs(**vals)


def test_energy_is_linear_in_counts_and_coeffs():
    rng = np.random.default_rng(7)
    counts1 = {k: float(rng.integers(0, 1000)) for k in OP_CATEGORIES}
    counts2 = {k: float(rng.integers(0, 1000)) for k in OP_CATEGORIES}
    coeffs = _unit_coeffs(weight_read=10.0, spike_read=5.0, compare=0.5)
    e1 = energy(counts1, coeffs)
    e2 = energy(counts2, coeffs)
    summed = {k: counts1[k] + counts2[k] for k in OP_CATEGORIES}
    assert energy(summed, coeffs) == pytest.approx(e1 + e2, rel=1e-12)
    doubled = EnergyCoeffs(**{k: 2.0 * getattr(coeffs, k) for k in OP_CATEGORIES})
    assert energy(counts1, doubled) == pytest.approx(2.0 * e1, rel=1e-12)


def test_energy_rejects_unknown_categories():
    with pytest.raises(ContractError):
        energy({"weight_read": 1.0, "dma_burst": 2.0}, _unit_coeffs())


def test_energy_coeffs_validation():
    with pytest.raises(ContractError):
        _unit_coeffs(compare=-1.0)
    with pytest.raises(ContractError):
        _unit_coeffs(accumulate=float("nan"))


def test_load_energy_coeffs_default_file():
    coeffs = load_energy_coeffs(default_coeffs_path())
    assert coeffs.weight_read == 10.0e-12
    assert coeffs.compare == 0.5e-12


def test_load_energy_coeffs_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_energy_coeffs(str(tmp_path / "none.yaml"))
    short = tmp_path / "short.yaml"
    short.write_text("weight_read: 1.0\n")
    with pytest.raises(ConfigError) as e:
        load_energy_coeffs(str(short))
    assert "missing keys" in str(e.value)
    extra = tmp_path / "extra.yaml"
    extra.write_text(
        "\n".join(f"{k}: 1.0" for k in OP_CATEGORIES) + "\ndma_burst: 2.0\n"
    )
    with pytest.raises(ConfigError) as e:
        load_energy_coeffs(str(extra))
    assert "unknown keys" in str(e.value)
    notmap = tmp_path / "notmap.yaml"
    notmap.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_energy_coeffs(str(notmap))


# --- cost reports -------------------------------------------------------------


def test_build_cost_report_memory_accounting():
    arch = arch_d([8, 8], D1_SPEC)
    trace = _trace([1.894, 1.772], [7.0, 7.0])
    coeffs = load_energy_coeffs(default_coeffs_path())
    ring = build_cost_report(arch, trace, coeffs, mechanism="ring")
    assert ring.params_total == 7876
    assert ring.state_count == 36
    assert ring.overhead_words == 3780
    assert ring.memory_words == 7876 + 36 + 3780
    queue = build_cost_report(arch, trace, coeffs, mechanism="queue")
    assert queue.overhead_words == 1890
    assert queue.memory_words == 7876 + 36 + 1890
    none = build_cost_report(arch, trace, coeffs, mechanism="none")
    assert none.overhead_words == 0
    assert none.overhead_energy == 0.0
    assert none.energy == none.base_energy
    with pytest.raises(ContractError):
        build_cost_report(arch, trace, coeffs, mechanism="fifo")


def test_ring_overhead_energy_is_per_step_accumulates():
    arch = arch_d([4, 4], DelaySpec((0, 5), stride=5))
    trace = _trace([1.0, 1.0], [2.0, 2.0], t=100)
    coeffs = _unit_coeffs(accumulate=3.0)
    report = build_cost_report(arch, trace, coeffs, mechanism="ring")
    _, extra = ring_buffer_overhead(arch)
    assert report.overhead_energy == extra * 100 * 3.0


def test_queue_overhead_energy_uses_push_and_pop_coeffs():
    arch = arch_d([4, 4], DelaySpec((0, 5), stride=5))
    trace = _trace([1.0, 1.0], [2.0, 2.0], t=100)
    coeffs = _unit_coeffs(queue_push=2.0, queue_pop=4.0)
    report = build_cost_report(arch, trace, coeffs, mechanism="queue")
    _, ops = delay_queue_overhead(arch, trace)
    assert report.overhead_energy == (ops / 2) * (2.0 + 4.0)


def test_saving_factors_and_with_baseline():
    coeffs = load_energy_coeffs(default_coeffs_path())
    base = build_cost_report(arch_r([128, 128]), _trace([8.678, 4.582], [14, 10]), coeffs, "queue")
    model = build_cost_report(
        arch_d([8, 8], D1_SPEC), _trace([1.894, 1.772], [7, 7]), coeffs, "queue"
    )
    e, m = saving_factors(base, model)
    assert e == base.energy / model.energy
    assert m == base.memory_words / model.memory_words
    assert e > 1 and m > 1
    tagged = with_baseline(model, base)
    assert tagged.energy_saving_factor == e
    assert tagged.baseline_name == base.name or tagged.baseline_name == "baseline"
    zero = build_cost_report(
        arch_d([8, 8], D1_SPEC), _trace([0.0, 0.0], [0.0, 0.0], in_avg=0.0, in_max=0.0),
        _unit_coeffs(**dict.fromkeys(OP_CATEGORIES, 0.0)), "none",
    )
    with pytest.raises(ContractError):
        saving_factors(base, zero)


def test_report_csv_and_table_contents():
    coeffs = load_energy_coeffs(default_coeffs_path())
    arch = arch_d([8, 8], D2_SPEC)
    report = build_cost_report(arch, _trace([1.686, 2.539], [7, 8]), coeffs, "ring")
    csv = report_to_csv(report)
    assert "memory_words,{}".format(report.memory_words) in csv
    assert "ops.weight_read," in csv
    assert csv.startswith("key,value\n")
    table = report_to_table(report)
    assert "total memory words" in table
    assert str(report.memory_words) in table
    tagged = with_baseline(report, build_cost_report(
        arch_r([128, 128]), _trace([8.678, 4.582], [14, 10]), coeffs, "ring"
    ))
    assert "energy_saving_factor" in report_to_csv(tagged)
    assert "energy saving factor" in report_to_table(tagged)


# --- traces -------------------------------------------------------------------


def test_trace_csv_round_trip():
    trace = _trace([1.894, 1.772], [7.0, 7.0])
    text = trace_to_csv(trace)
    back = trace_from_csv(text)
    assert back.timesteps == trace.timesteps
    for a, b in zip(back.layers, trace.layers):
        assert (a.avg_per_step, a.max_per_step, a.total) == (b.avg_per_step, b.max_per_step, b.total)


def test_trace_csv_rejects_malformed_input():
    good = trace_to_csv(_trace([1.0], [2.0]))
    with pytest.raises(DataError):
        trace_from_csv(good.replace("# timesteps=250\n", ""))
    with pytest.raises(DataError):
        trace_from_csv(good.replace("hidden1", "layer1"))
    with pytest.raises(DataError):
        trace_from_csv(good.replace("input", "hidden0"))
    with pytest.raises(DataError):
        trace_from_csv("# timesteps=10\nlayer,avg_spikes_per_step,max_spikes_per_step,total_spikes\n")
    with pytest.raises(DataError):
        trace_from_csv(good + "hidden2,1.0,2.0\n")  # three columns
    with pytest.raises(DataError):
        trace_from_csv(good + "hidden2,a,b,c\n")


def test_layer_activity_validation():
    with pytest.raises(ContractError):
        LayerActivity(3.0, 2.0, 10.0)  # avg above max
    with pytest.raises(ContractError):
        LayerActivity(1.0, 2.0, -1.0)
    with pytest.raises(ContractError):
        ActivityTrace((), 10)
    with pytest.raises(ContractError):
        ActivityTrace((LayerActivity(1.0, 1.0, 1.0),), 0)


def test_measure_activity_counts_input_packets():
    spec = NetworkSpec(2, (LayerSpec(5), LayerSpec(4)), readout_size=1)
    params = init_params(spec, 0, gain=3.0)
    data = adding_dataset(gen_adding(6, 10, seed=1))
    trace = measure_activity(spec, params, data)
    assert len(trace.layers) == 3  # input + two hidden
    assert trace.timesteps == 6
    x = data[0]
    per_step = (x != 0).sum(axis=2)
    assert trace.layers[0].avg_per_step == pytest.approx(per_step.mean())
    assert trace.layers[0].max_per_step == per_step.max()
    for la in trace.layers[1:]:
        assert 0 <= la.avg_per_step <= la.max_per_step


def test_arch_from_network_tracks_refined_delays():
    delays = delay_spec_from_depth_stride(8, 4)
    spec = NetworkSpec(
        3,
        (LayerSpec(4), LayerSpec(4, "delayed", delays=delays)),
        readout_size=2,
        readout_delays=delays,
    )
    params = init_params(spec, 0)
    params.layers[1] = refine_delays(params.layers[1], 2)
    arch = arch_from_network(spec, params, name="refined")
    assert arch.layers[1].delays == params.layers[1].delay_spec
    assert arch.readout_delays == delays
    assert arch.name == "refined"
    assert arch.layers[0].recurrent is False
    # without params the arch reflects the spec
    bare = arch_from_network(spec)
    assert bare.layers[1].delays == delays
