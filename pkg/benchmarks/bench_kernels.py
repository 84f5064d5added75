"""Compare the compiled kernel backend against the NumPy reference.

The four time-loop kernels are the sequential hot path of both simulation
and training; everything around them is vectorised NumPy that both backends
share.  This script times each kernel head to head, checks the outputs
agree, and optionally times a full training epoch per backend in
subprocesses (the backend is chosen at import, so a clean process per
backend is the honest way to measure it).

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --timesteps 200 --width 256 --end-to-end
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from delaysnn._kernels import get_backend


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(rng, timesteps, batch, width):
    i_ext = rng.normal(0.0, 1.0, (timesteps, batch, width))
    alpha = rng.uniform(0.5, 0.95, width)
    rec_w = rng.normal(0.0, 0.2, (width, width))
    g_out = rng.normal(0.0, 1.0, (timesteps, batch, width))
    u_th, beta = 1.0, 5.0

    # forward results feed the backward cases so adjoints see realistic state
    u_ff, th_ff = get_backend("reference").spiking_forward(i_ext, alpha, u_th, beta, False)
    u_rec, th_rec = get_backend("reference").spiking_forward(i_ext, alpha, u_th, beta, False, rec_w)
    u_ro = get_backend("reference").readout_forward(i_ext, alpha)

    return [
        ("spiking_forward (ff)", "spiking_forward", (i_ext, alpha, u_th, beta, False)),
        ("spiking_forward (rec)", "spiking_forward", (i_ext, alpha, u_th, beta, False, rec_w)),
        ("spiking_backward (ff)", "spiking_backward", (u_ff, th_ff, g_out, alpha, u_th, beta, False)),
        ("spiking_backward (rec)", "spiking_backward", (u_rec, th_rec, g_out, alpha, u_th, beta, False, rec_w)),
        ("readout_forward", "readout_forward", (i_ext, alpha)),
        ("readout_backward", "readout_backward", (u_ro, g_out, alpha)),
    ]


def agree(a, b):
    if isinstance(a, tuple):
        return all(agree(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-12)


def run_kernel_bench(args):
    rng = np.random.default_rng(args.seed)
    compiled = get_backend("compiled")
    reference = get_backend("reference")
    cases = kernel_cases(rng, args.timesteps, args.batch, args.width)

    print(f"shapes: T={args.timesteps} B={args.batch} M={args.width}, best of {args.repeats}")
    print(f"{'kernel':<26}{'compiled':>12}{'reference':>12}{'speedup':>10}")
    for label, name, inputs in cases:
        fast = best_of(lambda: getattr(compiled, name)(*inputs), args.repeats)
        slow = best_of(lambda: getattr(reference, name)(*inputs), args.repeats)
        if not agree(getattr(compiled, name)(*inputs), getattr(reference, name)(*inputs)):
            raise SystemExit(f"backend outputs disagree for {label}")
        print(f"{label:<26}{fast * 1e3:>10.2f}ms{slow * 1e3:>10.2f}ms{slow / fast:>9.1f}x")


def epoch_worker():
    # runs in a subprocess; backend was fixed by the environment at import
    from delaysnn._kernels import backend_name
    from delaysnn.layers import delay_spec_from_depth_stride
    from delaysnn.network import LayerSpec, NetworkSpec
    from delaysnn.tasks import adding_dataset, gen_adding
    from delaysnn.training import Hyperparams, train

    spec = NetworkSpec(
        input_size=2,
        hidden=(
            LayerSpec(32),
            LayerSpec(32, "delayed", delays=delay_spec_from_depth_stride(20, 4)),
        ),
        readout_size=1,
    )
    data = adding_dataset(gen_adding(30, 256, seed=0))
    hp = Hyperparams(learning_rate=0.01, batch_size=32, epochs=1, seed=0, loss="mse")
    t0 = time.perf_counter()
    train(spec, data, hp)
    print(f"{backend_name()} {time.perf_counter() - t0:.2f}")


def run_end_to_end():
    print("\none training epoch, adding task (T=30, 256 samples, 32+32d hidden):")
    for env_extra in ({}, {"DELAYSNN_FORCE_FALLBACK": "1"}):
        out = subprocess.run(
            [sys.executable, __file__, "--epoch-worker"],
            env={**os.environ, **env_extra},
            capture_output=True,
            text=True,
            check=True,
        )
        name, seconds = out.stdout.split()
        print(f"  {name:<10} {float(seconds):.2f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--timesteps", type=int, default=100)
    ap.add_argument("--batch", type=int, default=32)
    ap.add_argument("--width", type=int, default=128)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--end-to-end", action="store_true", help="also time a training epoch per backend")
    ap.add_argument("--epoch-worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.epoch_worker:
        epoch_worker()
        return
    run_kernel_bench(args)
    if args.end_to_end:
        run_end_to_end()


if __name__ == "__main__":
    main()
