"""Magnitude-based selection of delay synapses, resolution refinement, fine-tuning.

Training over-parameterises every neuron pair with one synapse per delay
value; pruning keeps only the strongest ones.  Selection is by absolute
weight, either capped per (pre, post) pair or by a layer-wide keep
fraction; ties are broken toward the smaller delay, which is the cheaper
one to honour in hardware queues.  Refinement then adds fresh zero-weight
candidate synapses at finer temporal resolution around each survivor, and
fine-tuning re-trains what is live.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractError
from .layers import DelayLayerParams, DelaySpec
from .network import NetworkParams, NetworkSpec
from .training import Hyperparams, evaluate, train


@dataclass(frozen=True)
class PruneConfig:
    """Either ``cap_per_pair`` (keep K slots per neuron pair) or
    ``keep_fraction`` (layer-wide top fraction by magnitude) must be set.

    ``refine_strides`` gives the new delay resolution per round; rounds
    beyond its length prune and fine-tune without refinement.
    """

    cap_per_pair: int | None = None
    keep_fraction: float | None = None
    refine_rounds: int = 1
    finetune_epochs: int = 5
    refine_strides: tuple[int, ...] = ()

    def __post_init__(self):
        if (self.cap_per_pair is None) == (self.keep_fraction is None):
            raise ContractError("set exactly one of cap_per_pair / keep_fraction")
        if self.cap_per_pair is not None and self.cap_per_pair < 1:
            raise ContractError(f"cap_per_pair must be >= 1, got {self.cap_per_pair}")
        if self.keep_fraction is not None and not (0 < self.keep_fraction <= 1):
            raise ContractError(f"keep_fraction must be in (0, 1], got {self.keep_fraction}")
        if self.refine_rounds < 0:
            raise ContractError("refine_rounds must be >= 0")
        object.__setattr__(self, "refine_strides", tuple(self.refine_strides))


def prune_by_magnitude(params: DelayLayerParams, config: PruneConfig) -> np.ndarray:
    """Select surviving delay synapses by |weight|; returns the new mask.

    Dead synapses never come back to life: selection only ranks currently
    live slots, so the operation is idempotent.  Ties go to the smaller
    delay.
    """
    absw = np.abs(params.weights)
    dead = (params.mask == 0).astype(np.float64)
    n_pre, n_post, n_slots = absw.shape
    if config.cap_per_pair is not None:
        k = config.cap_per_pair
        if k > n_slots:
            raise ContractError(
                f"cap_per_pair {k} exceeds the layer's {n_slots} delay slots"
            )
        slot_idx = np.broadcast_to(np.arange(n_slots), absw.shape)
        order = np.lexsort((slot_idx, -absw, dead), axis=-1)
        new_mask = np.zeros_like(params.mask)
        np.put_along_axis(new_mask, order[:, :, :k], 1.0, axis=-1)
    else:
        total = absw.size
        k = int(round(config.keep_fraction * total))
        flat_order = np.lexsort((np.arange(total), -absw.ravel(), dead.ravel()))
        new_mask = np.zeros_like(params.mask)
        new_mask.ravel()[flat_order[:k]] = 1.0
    return new_mask * params.mask


def effective_param_count(params: NetworkParams) -> int:
    """Live trainable parameters: unmasked weights plus decay parameters."""
    count = 0
    for lp in params.layers:
        if isinstance(lp, DelayLayerParams):
            count += int(lp.mask.sum())
        elif hasattr(lp, "rec_weights"):
            count += lp.ff_weights.size + lp.rec_weights.size
        else:
            count += lp.weights.size
    count += sum(dp.size for dp in params.decay_params)
    return count


def refine_delays(params: DelayLayerParams, new_stride: int) -> DelayLayerParams:
    """Add zero-weight candidate synapses at finer resolution around survivors.

    For every live synapse at delay d, candidates appear at d +/- j*new_stride
    strictly inside (d - old_stride, d + old_stride), clipped to
    [0, max delay].  Survivors keep their weights and slots; the layer's
    delay set becomes the union of old delays and all candidates.
    """
    old = params.delay_spec
    if old.stride is None:
        raise ContractError("refine_delays needs a DelaySpec with a known stride")
    if new_stride < 1 or old.stride % new_stride != 0:
        raise ContractError(
            f"new stride {new_stride} must divide the current stride {old.stride}"
        )
    if new_stride == old.stride:
        return params
    ratio = old.stride // new_stride
    offsets = [j * new_stride for j in range(-(ratio - 1), ratio) if j != 0]
    max_d = old.max_delay
    candidate_sets = {}
    for s, d in enumerate(old.delays):
        cands = [d + o for o in offsets if 0 <= d + o <= max_d]
        candidate_sets[s] = cands
    all_delays = sorted(set(old.delays).union(*candidate_sets.values()))
    new_spec = DelaySpec(tuple(all_delays), stride=new_stride)
    slot_of = {d: i for i, d in enumerate(new_spec.delays)}
    n_pre, n_post = params.n_pre, params.n_post
    weights = np.zeros((n_pre, n_post, new_spec.count), dtype=np.float64)
    mask = np.zeros_like(weights)
    for s, d in enumerate(old.delays):
        weights[:, :, slot_of[d]] = params.weights[:, :, s]
        mask[:, :, slot_of[d]] = params.mask[:, :, s]
    for s, cands in candidate_sets.items():
        live = params.mask[:, :, s] > 0
        for c in cands:
            mask[:, :, slot_of[c]] = np.maximum(mask[:, :, slot_of[c]], live)
    return DelayLayerParams(weights, new_spec, mask)


def reconcile_spec(spec: NetworkSpec, params: NetworkParams) -> NetworkSpec:
    """Rebuild the spec's delay fields from the (possibly refined) params."""
    hidden = list(spec.hidden)
    for i, lp in enumerate(params.layers[:-1]):
        if isinstance(lp, DelayLayerParams) and hidden[i].delays != lp.delay_spec:
            hidden[i] = replace(hidden[i], delays=lp.delay_spec)
    readout = params.layers[-1]
    readout_delays = readout.delay_spec if isinstance(readout, DelayLayerParams) else None
    return replace(spec, hidden=tuple(hidden), readout_delays=readout_delays)


@dataclass
class RoundReport:
    round: int
    effective_params: int
    loss: float
    accuracy: float | None
    avg_spikes_per_step: tuple


def prune_finetune_loop(
    spec: NetworkSpec,
    params: NetworkParams,
    dataset,
    prune_config: PruneConfig,
    hp: Hyperparams,
    eval_set=None,
):
    """Prune -> (refine) -> fine-tune, repeated; returns (spec, params, reports).

    The returned spec reflects any delay-set refinement.  Report row 0 is
    the untouched input model; with ``refine_rounds=0`` the params pass
    through unchanged.
    """
    params = params.copy()
    probe_set = eval_set if eval_set is not None else dataset
    reports = [_round_report(0, spec, params, probe_set, hp)]
    for r in range(prune_config.refine_rounds):
        for i, lp in enumerate(params.layers):
            if isinstance(lp, DelayLayerParams):
                lp.mask = prune_by_magnitude(lp, prune_config)
                lp.apply_mask()
        if r < len(prune_config.refine_strides):
            stride = prune_config.refine_strides[r]
            for i, lp in enumerate(params.layers):
                if isinstance(lp, DelayLayerParams):
                    params.layers[i] = refine_delays(lp, stride)
            spec = reconcile_spec(spec, params)
        finetune_hp = replace(hp, epochs=prune_config.finetune_epochs, seed=hp.seed + r + 1)
        params, _ = train(spec, dataset, finetune_hp, params=params)
        reports.append(_round_report(r + 1, spec, params, probe_set, hp))
    return spec, params, reports


def _round_report(round_idx, spec, params, dataset, hp) -> RoundReport:
    ev = evaluate(spec, params, dataset, hp.loss)
    return RoundReport(
        round=round_idx,
        effective_params=effective_param_count(params),
        loss=ev["loss"],
        accuracy=ev["accuracy"],
        avg_spikes_per_step=ev["avg_spikes_per_step"],
    )


def reports_to_csv(reports, seed: int) -> str:
    """Round-by-round pruning report as CSV with the run seed in a comment."""
    lines = [f"# seed={seed}", "round,effective_params,loss,accuracy,avg_spikes_per_step"]
    for r in reports:
        acc = "" if r.accuracy is None else f"{r.accuracy:.6f}"
        spikes = ";".join(f"{s:.6f}" for s in r.avg_spikes_per_step)
        lines.append(f"{r.round},{r.effective_params},{r.loss:.8f},{acc},{spikes}")
    return "\n".join(lines) + "\n"
