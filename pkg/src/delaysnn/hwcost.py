"""Deployment cost model for digital neuromorphic processors.

Pure counting, no simulation: trainable parameters and neuron state words
from the architecture, memory and energy overheads of the two commonplace
delay mechanisms (per-neuron ring buffers, shared per-layer delay queues),
and per-category operation counts from a measured or supplied activity
trace.  Energy is a strict linear form over the counts with per-operation
coefficients loaded from a config file; the shipped coefficients are
illustrative relative magnitudes, not measured silicon numbers.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

import numpy as np
import yaml

from .errors import ConfigError, ContractError, DataError
from .layers import DelaySpec
from .network import NetworkParams, NetworkSpec


NEURON_KINDS = ("lif", "alif")

# words and trainable time constants per neuron, by kind
_NEURON_WORDS = {"lif": 1, "alif": 2}


@dataclass(frozen=True)
class LayerArch:
    """One hidden layer for counting: size, neuron kind, wiring of its input."""

    size: int
    neuron: str = "lif"
    recurrent: bool = False
    delays: DelaySpec | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ContractError(f"layer size must be >= 1, got {self.size}")
        if self.neuron not in NEURON_KINDS:
            raise ContractError(f"neuron kind must be one of {NEURON_KINDS}")


@dataclass(frozen=True)
class ArchSpec:
    input_size: int
    layers: tuple[LayerArch, ...]
    readout_size: int
    readout_delays: DelaySpec | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.input_size < 1 or self.readout_size < 1:
            raise ContractError("input_size and readout_size must be >= 1")
        if not self.layers:
            raise ContractError("need at least one hidden layer")
        if self.layers[0].delays is not None:
            raise ContractError("the first hidden layer's input is never delayed")

    @property
    def fan_ins(self) -> tuple[int, ...]:
        sizes = [self.input_size] + [l.size for l in self.layers]
        return tuple(sizes[:-1])


def arch_from_network(
    spec: NetworkSpec, params: NetworkParams | None = None, name: str = ""
) -> ArchSpec:
    """Counting view of a trained network; delay sets come from the params
    when given (they may have been refined past the original spec)."""
    layers = []
    for i, h in enumerate(spec.hidden):
        delays = h.delays
        if params is not None and hasattr(params.layers[i], "delay_spec"):
            delays = params.layers[i].delay_spec
        layers.append(
            LayerArch(h.size, "lif", recurrent=(h.kind == "recurrent"), delays=delays)
        )
    readout_delays = spec.readout_delays
    if params is not None and hasattr(params.layers[-1], "delay_spec"):
        readout_delays = params.layers[-1].delay_spec
    return ArchSpec(spec.input_size, tuple(layers), spec.readout_size, readout_delays, name)


# ---------------------------------------------------------------------------
# Parameter and state counting


@dataclass(frozen=True)
class ParamCount:
    weights: int
    time_constants: int

    @property
    def total(self) -> int:
        return self.weights + self.time_constants


def param_count(arch: ArchSpec) -> ParamCount:
    """Trainable parameters: synaptic weights plus per-neuron time constants.

    Weights per layer: fan_in * size * |D| (+ size^2 when recurrent); the
    first hidden layer always has |D| = 1.  Time constants: one per LIF
    neuron, two per ALIF neuron, one per readout neuron.
    """
    weights = 0
    for fan_in, layer in zip(arch.fan_ins, arch.layers):
        slots = layer.delays.count if layer.delays is not None else 1
        weights += fan_in * layer.size * slots
        if layer.recurrent:
            weights += layer.size * layer.size
    readout_slots = arch.readout_delays.count if arch.readout_delays is not None else 1
    weights += arch.layers[-1].size * arch.readout_size * readout_slots
    taus = sum(_NEURON_WORDS[l.neuron] * l.size for l in arch.layers)
    taus += arch.readout_size
    return ParamCount(weights, taus)


def state_words(arch: ArchSpec) -> int:
    """Neuron state memory: membrane per neuron, plus adaptation for ALIF."""
    words = sum(_NEURON_WORDS[l.neuron] * l.size for l in arch.layers)
    return words + arch.readout_size


# ---------------------------------------------------------------------------
# Activity traces


@dataclass(frozen=True)
class LayerActivity:
    avg_per_step: float
    max_per_step: float
    total: float

    def __post_init__(self):
        if not (0 <= self.avg_per_step <= self.max_per_step):
            raise ContractError("need 0 <= avg spikes/step <= max spikes/step")
        if self.total < 0:
            raise ContractError("total spikes must be >= 0")


@dataclass(frozen=True)
class ActivityTrace:
    """Spike statistics per inference: layers[0] is the input layer, then one
    entry per hidden layer.  The readout never spikes."""

    layers: tuple[LayerActivity, ...]
    timesteps: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.timesteps < 1:
            raise ContractError("timesteps must be >= 1")
        if not self.layers:
            raise ContractError("activity trace needs at least the input layer")


def trace_from_averages(avgs, maxes, timesteps: int) -> ActivityTrace:
    """Build a trace from per-step averages; totals follow as avg * T."""
    layers = tuple(
        LayerActivity(float(a), float(m), float(a) * timesteps)
        for a, m in zip(avgs, maxes)
    )
    return ActivityTrace(layers, timesteps)


def measure_activity(spec, params, dataset) -> ActivityTrace:
    """Run the network over a dataset and record mean per-inference activity.

    Input spikes are counted as nonzero raster entries, so analog input
    channels are charged one packet per active entry.
    """
    from .training import evaluate

    x = np.asarray(dataset[0], dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    loss_kind = "classification" if np.asarray(dataset[1]).dtype.kind in "iu" else "mse"
    ev = evaluate(spec, params, dataset, loss_kind)
    t = ev["timesteps"]
    input_per_step = (x != 0).sum(axis=2)
    avgs = [input_per_step.mean()] + list(ev["avg_spikes_per_step"])
    maxes = [input_per_step.max()] + list(ev["max_spikes_per_step"])
    return trace_from_averages(avgs, maxes, t)


def _check_trace(arch: ArchSpec, activity: ActivityTrace) -> None:
    want = 1 + len(arch.layers)
    if len(activity.layers) != want:
        raise ContractError(
            f"activity trace has {len(activity.layers)} layers, the arch needs {want}"
        )


# ---------------------------------------------------------------------------
# Delay mechanism overheads


def _delayed_projections(arch: ArchSpec):
    """(source layer index into an activity trace, post size, DelaySpec) for
    every delayed projection.  Source index i means trace.layers[i]."""
    out = []
    for i, layer in enumerate(arch.layers):
        if layer.delays is not None:
            out.append((i, layer.size, layer.delays))
    if arch.readout_delays is not None:
        out.append((len(arch.layers), arch.readout_size, arch.readout_delays))
    return out


def ring_buffer_overhead(arch: ArchSpec) -> tuple[int, int]:
    """(memory words, extra accumulate ops per timestep).

    One ring per post-neuron with delayed input, sized by the maximum
    delay; each such neuron spends one extra accumulation per step moving
    the ring head into its membrane.
    """
    words = 0
    extra_ops = 0
    for _, post, spec in _delayed_projections(arch):
        words += post * spec.max_delay
        extra_ops += post
    return words, extra_ops


def delay_queue_overhead(arch: ArchSpec, activity: ActivityTrace) -> tuple[int, int]:
    """(memory words, queue ops per inference).

    Queues are shared per layer; capacity must hold the worst-case step's
    input spikes for the longest delay.  Every source spike is pushed to
    and popped from one queue per nonzero delay in the layer's set.
    """
    _check_trace(arch, activity)
    words = 0
    ops = 0.0
    for src, _, spec in _delayed_projections(arch):
        src_act = activity.layers[src]
        words += int(np.ceil(src_act.max_per_step)) * spec.max_delay
        nonzero = sum(1 for d in spec.delays if d > 0)
        ops += 2.0 * src_act.total * nonzero
    return words, int(round(ops))


# ---------------------------------------------------------------------------
# Operation counting and energy


OP_CATEGORIES = (
    "weight_read",
    "state_read",
    "state_write",
    "spike_read",
    "spike_write",
    "accumulate",
    "compare",
    "queue_push",
    "queue_pop",
)


def op_counts(arch: ArchSpec, activity: ActivityTrace, timesteps: int | None = None) -> dict:
    """Per-category operation counts for one inference.

    Synaptic work: every spike entering a projection costs fan_out * |D|
    weight reads and as many accumulations, plus one spike-packet read.
    Neuron housekeeping: per neuron per step, one state read, one decay
    multiply (counted as an accumulation), one threshold compare, and one
    state write.  Every emitted spike is one packet write.
    """
    _check_trace(arch, activity)
    t = activity.timesteps if timesteps is None else timesteps
    counts = {k: 0.0 for k in OP_CATEGORIES}
    sizes = [l.size for l in arch.layers]
    # feedforward / delayed projections, then the readout projection
    proj = [(i, l.size, l.delays) for i, l in enumerate(arch.layers)]
    proj.append((len(arch.layers), arch.readout_size, arch.readout_delays))
    for src, fan_out, dspec in proj:
        slots = dspec.count if dspec is not None else 1
        src_total = activity.layers[src].total
        counts["weight_read"] += src_total * fan_out * slots
        counts["accumulate"] += src_total * fan_out * slots
        counts["spike_read"] += src_total
    for i, layer in enumerate(arch.layers):
        if layer.recurrent:
            own_total = activity.layers[i + 1].total
            counts["weight_read"] += own_total * layer.size
            counts["accumulate"] += own_total * layer.size
            counts["spike_read"] += own_total
    n_neurons = sum(sizes) + arch.readout_size
    for key in ("state_read", "state_write", "accumulate", "compare"):
        counts[key] += n_neurons * t
    counts["spike_write"] += sum(a.total for a in activity.layers[1:])
    return counts


@dataclass(frozen=True)
class EnergyCoeffs:
    """Joules per operation, all >= 0; loaded from a YAML mapping."""

    weight_read: float
    state_read: float
    state_write: float
    spike_read: float
    spike_write: float
    accumulate: float
    compare: float
    queue_push: float
    queue_pop: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise ContractError(f"coefficient {f.name} must be finite and >= 0")


def load_energy_coeffs(path: str) -> EnergyCoeffs:
    if not os.path.exists(path):
        raise ConfigError(f"coefficient file not found: {path}")
    with open(path) as f:
        try:
            raw = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: not valid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping of coefficient names")
    want = {f.name for f in fields(EnergyCoeffs)}
    got = set(raw)
    if got != want:
        missing, extra = sorted(want - got), sorted(got - want)
        raise ConfigError(f"{path}: missing keys {missing}, unknown keys {extra}")
    try:
        return EnergyCoeffs(**{k: float(v) for k, v in raw.items()})
    except (TypeError, ValueError, ContractError) as e:
        raise ConfigError(f"{path}: {e}") from e


def default_coeffs_path() -> str:
    return os.path.join(os.path.dirname(__file__), "data", "default_energy_coeffs.yaml")


def energy(counts: dict, coeffs: EnergyCoeffs) -> float:
    """Strict linear form: sum over categories of count * coefficient."""
    unknown = set(counts) - set(OP_CATEGORIES)
    if unknown:
        raise ContractError(f"unknown op categories: {sorted(unknown)}")
    return float(sum(counts[k] * getattr(coeffs, k) for k in counts))


# ---------------------------------------------------------------------------
# Reports


MECHANISMS = ("ring", "queue", "none")


@dataclass(frozen=True)
class CostReport:
    name: str
    mechanism: str
    params_weights: int
    params_total: int
    state_count: int
    overhead_words: int
    memory_words: int
    op_counts: dict
    base_energy: float
    overhead_energy: float
    energy: float
    baseline_name: str | None = None
    energy_saving_factor: float | None = None
    memory_saving_factor: float | None = None


def build_cost_report(
    arch: ArchSpec,
    activity: ActivityTrace,
    coeffs: EnergyCoeffs,
    mechanism: str = "ring",
    name: str | None = None,
) -> CostReport:
    """Full per-inference cost: parameters, memory words, ops, energy.

    Memory words = trainable parameters + neuron state words + delay
    mechanism words.  Energy = op-count linear form + mechanism overhead.
    """
    if mechanism not in MECHANISMS:
        raise ContractError(f"mechanism must be one of {MECHANISMS}")
    pc = param_count(arch)
    states = state_words(arch)
    counts = op_counts(arch, activity)
    base = energy(counts, coeffs)
    if mechanism == "ring":
        words, extra_per_step = ring_buffer_overhead(arch)
        over = extra_per_step * activity.timesteps * coeffs.accumulate
    elif mechanism == "queue":
        words, queue_ops = delay_queue_overhead(arch, activity)
        over = (queue_ops / 2) * (coeffs.queue_push + coeffs.queue_pop)
    else:
        words, over = 0, 0.0
    return CostReport(
        name=name if name is not None else arch.name,
        mechanism=mechanism,
        params_weights=pc.weights,
        params_total=pc.total,
        state_count=states,
        overhead_words=words,
        memory_words=pc.total + states + words,
        op_counts=counts,
        base_energy=base,
        overhead_energy=over,
        energy=base + over,
    )


def saving_factors(baseline: CostReport, model: CostReport) -> tuple[float, float]:
    """Baseline-over-model ratios of total energy and total memory words."""
    if model.energy <= 0 or model.memory_words <= 0:
        raise ContractError("model cost must be positive to form saving factors")
    return baseline.energy / model.energy, baseline.memory_words / model.memory_words


def with_baseline(report: CostReport, baseline: CostReport) -> CostReport:
    e, m = saving_factors(baseline, report)
    return replace(
        report,
        baseline_name=baseline.name or "baseline",
        energy_saving_factor=e,
        memory_saving_factor=m,
    )


def report_to_csv(report: CostReport) -> str:
    lines = ["key,value", f"name,{report.name}", f"mechanism,{report.mechanism}"]
    for key in (
        "params_weights",
        "params_total",
        "state_count",
        "overhead_words",
        "memory_words",
    ):
        lines.append(f"{key},{getattr(report, key)}")
    for cat in OP_CATEGORIES:
        lines.append(f"ops.{cat},{report.op_counts.get(cat, 0.0)!r}")
    for key in ("base_energy", "overhead_energy", "energy"):
        lines.append(f"{key},{getattr(report, key)!r}")
    if report.baseline_name is not None:
        lines.append(f"baseline,{report.baseline_name}")
        lines.append(f"energy_saving_factor,{report.energy_saving_factor!r}")
        lines.append(f"memory_saving_factor,{report.memory_saving_factor!r}")
    return "\n".join(lines) + "\n"


def report_to_table(report: CostReport) -> str:
    rows = [
        ("model", report.name or "-"),
        ("delay mechanism", report.mechanism),
        ("weights", f"{report.params_weights}"),
        ("parameters (incl. time constants)", f"{report.params_total}"),
        ("neuron state words", f"{report.state_count}"),
        ("delay overhead words", f"{report.overhead_words}"),
        ("total memory words", f"{report.memory_words}"),
        ("base energy (J)", f"{report.base_energy:.6e}"),
        ("overhead energy (J)", f"{report.overhead_energy:.6e}"),
        ("total energy (J)", f"{report.energy:.6e}"),
    ]
    if report.baseline_name is not None:
        rows.append(("baseline", report.baseline_name))
        rows.append(("energy saving factor", f"{report.energy_saving_factor:.3f}"))
        rows.append(("memory saving factor", f"{report.memory_saving_factor:.3f}"))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


# ---------------------------------------------------------------------------
# Activity trace CSV


def trace_to_csv(trace: ActivityTrace) -> str:
    lines = [
        f"# timesteps={trace.timesteps}",
        "layer,avg_spikes_per_step,max_spikes_per_step,total_spikes",
    ]
    for i, la in enumerate(trace.layers):
        name = "input" if i == 0 else f"hidden{i}"
        lines.append(f"{name},{la.avg_per_step!r},{la.max_per_step!r},{la.total!r}")
    return "\n".join(lines) + "\n"


def trace_from_csv(text: str) -> ActivityTrace:
    timesteps = None
    rows = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "timesteps":
                    timesteps = int(val)
            continue
        if line.startswith("layer,"):
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise DataError(f"activity line {ln}: expected 4 columns, got {line!r}")
        try:
            rows.append((parts[0], float(parts[1]), float(parts[2]), float(parts[3])))
        except ValueError as e:
            raise DataError(f"activity line {ln}: non-numeric value in {line!r}") from e
    if timesteps is None:
        raise DataError("activity CSV is missing the '# timesteps=...' header")
    if not rows:
        raise DataError("activity CSV has no layer rows")
    expected = ["input"] + [f"hidden{i}" for i in range(1, len(rows))]
    names = [r[0] for r in rows]
    if names != expected:
        raise DataError(f"activity layers must be named {expected}, got {names}")
    try:
        layers = tuple(LayerActivity(a, m, t) for _, a, m, t in rows)
        return ActivityTrace(layers, timesteps)
    except ContractError as e:
        raise DataError(str(e)) from e


def load_trace(path: str) -> ActivityTrace:
    if not os.path.exists(path):
        raise DataError(f"activity file not found: {path}")
    with open(path) as f:
        return trace_from_csv(f.read())
