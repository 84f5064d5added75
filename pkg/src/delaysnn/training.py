"""Losses, optimizer, and the seeded training loop.

Batch gradients are means over samples; shuffling, init, and the update
rule are all driven by the run seed, so (seed, spec, data) fully
determines the trained parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractError, DivergenceError
from .layers import DelayLayerParams
from .network import (
    NetworkGrads,
    NetworkParams,
    NetworkSpec,
    backward,
    forward,
    init_params,
    iter_grad_arrays,
    iter_param_arrays,
)

LOSS_KINDS = ("mse", "classification")


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 1e-2
    batch_size: int = 64
    epochs: int = 20
    lr_decay: float = 1.0  # per-epoch multiplier on the learning rate
    stop_loss: float | None = None  # end training early once epoch loss dips below
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    loss: str = "mse"

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ContractError(f"learning rate must be >= 0, got {self.learning_rate}")
        if not (0 < self.lr_decay <= 1):
            raise ContractError(f"lr_decay must be in (0, 1], got {self.lr_decay}")
        if self.stop_loss is not None and not self.stop_loss > 0:
            raise ContractError(f"stop_loss must be positive, got {self.stop_loss}")
        if self.batch_size < 1:
            raise ContractError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ContractError(f"epochs must be >= 0, got {self.epochs}")
        if self.loss not in LOSS_KINDS:
            raise ContractError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")


def loss_mse_readout(readout_potentials, target):
    """Squared error between the final-step readout potential and the target.

    ``readout_potentials`` is (T, 1) for one sequence (scalar target) or
    (B, T, 1) for a batch (target vector); the batch loss is the mean.
    Returns (loss, gradient w.r.t. the potentials).
    """
    u = np.asarray(readout_potentials, dtype=np.float64)
    grad = np.zeros_like(u)
    if u.ndim == 2:
        if u.shape[1] != 1:
            raise ContractError(f"mse loss needs readout size 1, got {u.shape[1]}")
        err = u[-1, 0] - float(target)
        grad[-1, 0] = 2.0 * err
        # squaring may overflow to inf on a diverged run; that inf IS the
        # divergence signal (train turns it into DivergenceError)
        with np.errstate(over="ignore"):
            return err * err, grad
    if u.ndim == 3:
        if u.shape[2] != 1:
            raise ContractError(f"mse loss needs readout size 1, got {u.shape[2]}")
        t = np.asarray(target, dtype=np.float64).reshape(u.shape[0])
        err = u[:, -1, 0] - t
        grad[:, -1, 0] = 2.0 * err / u.shape[0]
        with np.errstate(over="ignore"):
            return float(np.mean(err * err)), grad
    raise ContractError(f"readout potentials must be 2-D or 3-D, got {u.shape}")


def classification_scores(readout_potentials):
    """Per-class score = maximum readout membrane potential over time."""
    u = np.asarray(readout_potentials, dtype=np.float64)
    if u.ndim == 2:
        return u.max(axis=0)
    return u.max(axis=1)


def loss_classification(readout_potentials, label):
    """Cross-entropy over max-over-time readout potentials.

    ``label`` is an int for a single (T, C) sequence or an int vector for a
    (B, T, C) batch.  Returns (loss, gradient w.r.t. the potentials); the
    gradient lands on each class's argmax timestep.
    """
    u = np.asarray(readout_potentials, dtype=np.float64)
    squeeze = u.ndim == 2
    if squeeze:
        u = u[None]
    B, T, C = u.shape
    labels = np.atleast_1d(np.asarray(label, dtype=np.int64))
    if labels.shape != (B,):
        raise ContractError(f"labels shaped {labels.shape}, batch is {B}")
    if np.any(labels < 0) or np.any(labels >= C):
        raise ContractError(f"label out of range for {C} classes")
    scores = u.max(axis=1)
    arg = u.argmax(axis=1)
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    nll = -np.log(probs[np.arange(B), labels])
    loss = float(np.mean(nll))
    g_scores = probs.copy()
    g_scores[np.arange(B), labels] -= 1.0
    g_scores /= B
    grad = np.zeros_like(u)
    b_idx = np.repeat(np.arange(B), C)
    c_idx = np.tile(np.arange(C), B)
    grad[b_idx, arg.ravel(), c_idx] = g_scores.ravel()
    if squeeze:
        return loss, grad[0]
    return loss, grad


class AdamState:
    """Adaptive-moment optimizer state over the network's parameter arrays."""

    def __init__(self, params: NetworkParams, hp: Hyperparams):
        self.hp = hp
        self.step_count = 0
        self.m = {name: np.zeros_like(arr) for name, arr in iter_param_arrays(params)}
        self.v = {name: np.zeros_like(arr) for name, arr in iter_param_arrays(params)}

    def apply(
        self, params: NetworkParams, grads: NetworkGrads, learning_rate: float | None = None
    ) -> None:
        """One in-place update; masked delay weights are re-zeroed afterwards."""
        hp = self.hp
        lr = hp.learning_rate if learning_rate is None else learning_rate
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - hp.beta1**t
        bc2 = 1.0 - hp.beta2**t
        grad_map = dict(iter_grad_arrays(grads))
        for name, arr in iter_param_arrays(params):
            g = grad_map[name]
            m = self.m[name]
            v = self.v[name]
            m *= hp.beta1
            m += (1.0 - hp.beta1) * g
            v *= hp.beta2
            v += (1.0 - hp.beta2) * g * g
            arr -= lr * (m / bc1) / (np.sqrt(v / bc2) + hp.adam_eps)
        for lp in params.layers:
            if isinstance(lp, DelayLayerParams):
                lp.apply_mask()


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    accuracy: float | None
    eval_loss: float | None
    eval_accuracy: float | None
    spikes_per_step: tuple


def _check_dataset(spec: NetworkSpec, dataset):
    X, y = dataset
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 3 or X.shape[0] == 0:
        raise ContractError(f"dataset inputs must be (n, T, C) and non-empty, got {X.shape}")
    if X.shape[2] != spec.input_size:
        raise ContractError(
            f"dataset has {X.shape[2]} channels, spec wants {spec.input_size}"
        )
    if y.shape[0] != X.shape[0]:
        raise ContractError("inputs and targets disagree on sample count")
    return X, y


def evaluate(spec, params, dataset, loss_kind, batch_size=256):
    """Loss (and accuracy for classification) plus per-layer spike activity.

    Uses a fixed batching and an ordered reduction, so the result is
    independent of how training batched the same data.
    """
    X, y = _check_dataset(spec, dataset)
    n = X.shape[0]
    total_loss = 0.0
    correct = 0
    n_hidden = len(spec.hidden)
    spike_totals = np.zeros(n_hidden)
    max_per_step = np.zeros(n_hidden)
    steps = 0
    for start in range(0, n, batch_size):
        xb = X[start : start + batch_size]
        yb = y[start : start + batch_size]
        tape, readout = forward(spec, params, xb)
        if loss_kind == "classification":
            loss, _ = loss_classification(readout, yb)
            pred = classification_scores(readout).argmax(axis=1)
            correct += int(np.sum(pred == yb))
        else:
            loss, _ = loss_mse_readout(readout, yb)
        total_loss += loss * xb.shape[0]
        for li in range(n_hidden):
            per_step = tape.spikes[li].sum(axis=2)
            spike_totals[li] += per_step.sum()
            max_per_step[li] = max(max_per_step[li], per_step.max())
        steps += xb.shape[0] * tape.timesteps
    result = {
        "loss": total_loss / n,
        "accuracy": correct / n if loss_kind == "classification" else None,
        "avg_spikes_per_step": tuple(spike_totals / steps),
        "max_spikes_per_step": tuple(max_per_step),
        "timesteps": int(X.shape[1]),
    }
    return result


def train(
    spec: NetworkSpec,
    dataset,
    hp: Hyperparams,
    params: NetworkParams | None = None,
    eval_set=None,
    epoch_callback=None,
):
    """Seeded minibatch training; returns (params, per-epoch metrics).

    ``dataset`` is a pair (X, y) with X shaped (n, T, C).  When ``params``
    is given, training continues from them (used by fine-tuning); otherwise
    they are initialised from the seed.
    """
    X, y = _check_dataset(spec, dataset)
    if params is None:
        params = init_params(spec, hp.seed)
    rng = np.random.default_rng(hp.seed)
    adam = AdamState(params, hp)
    n = X.shape[0]
    metrics: list[EpochMetrics] = []
    n_hidden = len(spec.hidden)
    for epoch in range(hp.epochs):
        order = rng.permutation(n)
        epoch_lr = hp.learning_rate * hp.lr_decay**epoch
        epoch_loss = 0.0
        correct = 0
        spike_totals = np.zeros(n_hidden)
        steps = 0
        for start in range(0, n, hp.batch_size):
            idx = order[start : start + hp.batch_size]
            xb = X[idx]
            yb = y[idx]
            tape, readout = forward(spec, params, xb)
            if hp.loss == "classification":
                loss, grad = loss_classification(readout, yb)
                pred = classification_scores(readout).argmax(axis=1)
                correct += int(np.sum(pred == yb))
            else:
                loss, grad = loss_mse_readout(readout, yb)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss {loss} at epoch {epoch}, sample offset {start}"
                )
            grads = backward(spec, params, tape, grad)
            adam.apply(params, grads, learning_rate=epoch_lr)
            epoch_loss += loss * xb.shape[0]
            for li in range(n_hidden):
                spike_totals[li] += tape.spikes[li].sum()
            steps += xb.shape[0] * tape.timesteps
        eval_loss = None
        eval_acc = None
        if eval_set is not None:
            ev = evaluate(spec, params, eval_set, hp.loss)
            eval_loss = ev["loss"]
            eval_acc = ev["accuracy"]
        em = EpochMetrics(
            epoch=epoch,
            loss=epoch_loss / n,
            accuracy=(correct / n) if hp.loss == "classification" else None,
            eval_loss=eval_loss,
            eval_accuracy=eval_acc,
            spikes_per_step=tuple(spike_totals / steps),
        )
        metrics.append(em)
        if epoch_callback is not None:
            epoch_callback(em)
        if hp.stop_loss is not None and em.loss < hp.stop_loss:
            break
    return params, metrics


def metrics_to_csv(metrics, n_hidden: int, seed: int) -> str:
    """Render per-epoch metrics as CSV with the run seed in a comment."""
    lines = [f"# seed={seed}"]
    spike_cols = ",".join(f"spikes_per_step_l{i + 1}" for i in range(n_hidden))
    lines.append(f"epoch,loss,accuracy,eval_loss,eval_accuracy,{spike_cols}")
    for m in metrics:
        acc = "" if m.accuracy is None else f"{m.accuracy:.6f}"
        el = "" if m.eval_loss is None else f"{m.eval_loss:.8f}"
        ea = "" if m.eval_accuracy is None else f"{m.eval_accuracy:.6f}"
        spikes = ",".join(f"{s:.6f}" for s in m.spikes_per_step)
        lines.append(f"{m.epoch},{m.loss:.8f},{acc},{el},{ea},{spikes}")
    return "\n".join(lines) + "\n"
