"""NumPy reference implementation of the per-layer time-loop kernels.

These loops are the sequential hot path of simulation and training; the
compiled backend in ``_fast.pyx`` implements the same four entry points
with identical operation order, so both backends produce bit-identical
results.

Shapes: membrane/current/spike records are (T, B, M) float64 arrays,
decay factors are (M,), lateral weights (M, M).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "reference"


def _soft_theta(u, u_th, beta):
    x = beta * (u - u_th)
    return 0.5 * (1.0 + x / (1.0 + np.abs(x)))


def _surrogate(u, u_th, beta):
    denom = 1.0 + beta * np.abs(u - u_th)
    return beta / (2.0 * denom * denom)


def spiking_forward(i_ext, alpha, u_th, beta, soft, rec_w=None):
    """Run a spiking layer over all timesteps.

    u[t] = u[t-1] * alpha * (1 - theta[t-1]) + i_ext[t] (+ theta[t-1] @ rec_w)
    theta[t] = step(u[t] - u_th) or fast-sigmoid in soft mode.
    Returns (u, theta), both (T, B, M).
    """
    T, B, M = i_ext.shape
    u = np.empty((T, B, M), dtype=np.float64)
    theta = np.empty((T, B, M), dtype=np.float64)
    u_row = np.zeros((B, M), dtype=np.float64)
    th_row = np.zeros((B, M), dtype=np.float64)
    for t in range(T):
        drive = i_ext[t]
        if rec_w is not None:
            drive = drive + th_row @ rec_w
        u_row = u_row * alpha * (1.0 - th_row) + drive
        if soft:
            th_row = _soft_theta(u_row, u_th, beta)
        else:
            th_row = (u_row >= u_th).astype(np.float64)
        u[t] = u_row
        theta[t] = th_row
    return u, theta


def readout_forward(i_ext, alpha):
    """Non-spiking integrator: u[t] = u[t-1] * alpha + i_ext[t]."""
    T, B, M = i_ext.shape
    u = np.empty((T, B, M), dtype=np.float64)
    u_row = np.zeros((B, M), dtype=np.float64)
    for t in range(T):
        u_row = u_row * alpha + i_ext[t]
        u[t] = u_row
    return u


def spiking_backward(u, theta, g_theta_out, alpha, u_th, beta, soft, rec_w=None):
    """Reverse sweep through a spiking layer.

    ``g_theta_out[t]`` is the adjoint of theta[t] accumulated from downstream
    consumers.  Returns (g_current, g_alpha) where g_current[t] is the adjoint
    of i_ext[t] (equal to the adjoint of u[t]) and g_alpha the summed adjoint
    of the decay factor.  The spike nonlinearity and the reset gate are both
    differentiated through the fast-sigmoid surrogate.
    """
    T, B, M = u.shape
    g_current = np.empty((T, B, M), dtype=np.float64)
    g_alpha = np.zeros(M, dtype=np.float64)
    gu_next = np.zeros((B, M), dtype=np.float64)
    for t in range(T - 1, -1, -1):
        g_th = g_theta_out[t].copy()
        if t < T - 1:
            g_th += gu_next * (-(alpha * u[t]))
            if rec_w is not None:
                g_th += gu_next @ rec_w.T
        g_u = g_th * _surrogate(u[t], u_th, beta)
        if t < T - 1:
            g_u += gu_next * alpha * (1.0 - theta[t])
        if t > 0:
            g_alpha += np.sum(g_u * (1.0 - theta[t - 1]) * u[t - 1], axis=0)
        g_current[t] = g_u
        gu_next = g_u
    return g_current, g_alpha


def readout_backward(u, g_u_direct, alpha):
    """Reverse sweep through the non-spiking integrator."""
    T, B, M = u.shape
    g_current = np.empty((T, B, M), dtype=np.float64)
    g_alpha = np.zeros(M, dtype=np.float64)
    gu_next = np.zeros((B, M), dtype=np.float64)
    for t in range(T - 1, -1, -1):
        g_u = g_u_direct[t] + gu_next * alpha
        if t > 0:
            g_alpha += np.sum(g_u * u[t - 1], axis=0)
        g_current[t] = g_u
        gu_next = g_u
    return g_current, g_alpha
