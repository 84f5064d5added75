# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of the reference kernels (see reference.py for semantics).

Operation order matches the reference backend exactly so that, compiled
with FP contraction off, both backends produce bit-identical results.
The lateral recurrent term goes through the same per-step BLAS matmul as
the reference; only the elementwise state updates run as C loops.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"

ctypedef cnp.float64_t f64


cdef inline double _soft_theta(double u, double u_th, double beta) nogil:
    cdef double x = beta * (u - u_th)
    cdef double ax = -x if x < 0 else x
    return 0.5 * (1.0 + x / (1.0 + ax))


cdef inline double _surrogate(double u, double u_th, double beta) nogil:
    cdef double d = u - u_th
    cdef double ad = -d if d < 0 else d
    cdef double denom = 1.0 + beta * ad
    return beta / (2.0 * denom * denom)


def spiking_forward(cnp.ndarray[f64, ndim=3] i_ext,
                    cnp.ndarray[f64, ndim=1] alpha,
                    double u_th, double beta, bint soft,
                    rec_w=None):
    cdef Py_ssize_t T = i_ext.shape[0]
    cdef Py_ssize_t B = i_ext.shape[1]
    cdef Py_ssize_t M = i_ext.shape[2]
    cdef cnp.ndarray[f64, ndim=3] u = np.empty((T, B, M), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=3] theta = np.empty((T, B, M), dtype=np.float64)
    cdef Py_ssize_t t, b, m
    cdef double u_prev, th_prev, u_new
    if rec_w is None:
        with nogil:
            for t in range(T):
                for b in range(B):
                    for m in range(M):
                        if t == 0:
                            u_prev = 0.0
                            th_prev = 0.0
                        else:
                            u_prev = u[t - 1, b, m]
                            th_prev = theta[t - 1, b, m]
                        u_new = u_prev * alpha[m] * (1.0 - th_prev) + i_ext[t, b, m]
                        u[t, b, m] = u_new
                        if soft:
                            theta[t, b, m] = _soft_theta(u_new, u_th, beta)
                        else:
                            theta[t, b, m] = 1.0 if u_new >= u_th else 0.0
        return u, theta

    cdef cnp.ndarray[f64, ndim=2] rw = np.ascontiguousarray(rec_w, dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] th_row = np.zeros((B, M), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] drive
    for t in range(T):
        drive = i_ext[t] + np.matmul(th_row, rw)
        with nogil:
            for b in range(B):
                for m in range(M):
                    u_prev = u[t - 1, b, m] if t > 0 else 0.0
                    u_new = u_prev * alpha[m] * (1.0 - th_row[b, m]) + drive[b, m]
                    u[t, b, m] = u_new
                    if soft:
                        theta[t, b, m] = _soft_theta(u_new, u_th, beta)
                    else:
                        theta[t, b, m] = 1.0 if u_new >= u_th else 0.0
        th_row = theta[t]
    return u, theta


def readout_forward(cnp.ndarray[f64, ndim=3] i_ext,
                    cnp.ndarray[f64, ndim=1] alpha):
    cdef Py_ssize_t T = i_ext.shape[0]
    cdef Py_ssize_t B = i_ext.shape[1]
    cdef Py_ssize_t M = i_ext.shape[2]
    cdef cnp.ndarray[f64, ndim=3] u = np.empty((T, B, M), dtype=np.float64)
    cdef Py_ssize_t t, b, m
    cdef double u_prev
    with nogil:
        for t in range(T):
            for b in range(B):
                for m in range(M):
                    u_prev = u[t - 1, b, m] if t > 0 else 0.0
                    u[t, b, m] = u_prev * alpha[m] + i_ext[t, b, m]
    return u


def spiking_backward(cnp.ndarray[f64, ndim=3] u,
                     cnp.ndarray[f64, ndim=3] theta,
                     cnp.ndarray[f64, ndim=3] g_theta_out,
                     cnp.ndarray[f64, ndim=1] alpha,
                     double u_th, double beta, bint soft,
                     rec_w=None):
    cdef Py_ssize_t T = u.shape[0]
    cdef Py_ssize_t B = u.shape[1]
    cdef Py_ssize_t M = u.shape[2]
    cdef cnp.ndarray[f64, ndim=3] g_current = np.empty((T, B, M), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=1] g_alpha = np.zeros(M, dtype=np.float64)
    cdef Py_ssize_t t, b, m
    cdef double g_th, g_u
    if rec_w is None:
        with nogil:
            for t in range(T - 1, -1, -1):
                for b in range(B):
                    for m in range(M):
                        g_th = g_theta_out[t, b, m]
                        if t < T - 1:
                            g_th = g_th + g_current[t + 1, b, m] * (-(alpha[m] * u[t, b, m]))
                        g_u = g_th * _surrogate(u[t, b, m], u_th, beta)
                        if t < T - 1:
                            g_u = g_u + g_current[t + 1, b, m] * alpha[m] * (1.0 - theta[t, b, m])
                        if t > 0:
                            g_alpha[m] = g_alpha[m] + g_u * (1.0 - theta[t - 1, b, m]) * u[t - 1, b, m]
                        g_current[t, b, m] = g_u
        return g_current, g_alpha

    cdef cnp.ndarray[f64, ndim=2] rw = np.ascontiguousarray(rec_w, dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=2] rec_term = np.empty((0, 0), dtype=np.float64)
    for t in range(T - 1, -1, -1):
        if t < T - 1:
            rec_term = np.matmul(g_current[t + 1], rw.T)
        with nogil:
            for b in range(B):
                for m in range(M):
                    g_th = g_theta_out[t, b, m]
                    if t < T - 1:
                        g_th = g_th + g_current[t + 1, b, m] * (-(alpha[m] * u[t, b, m]))
                        g_th = g_th + rec_term[b, m]
                    g_u = g_th * _surrogate(u[t, b, m], u_th, beta)
                    if t < T - 1:
                        g_u = g_u + g_current[t + 1, b, m] * alpha[m] * (1.0 - theta[t, b, m])
                    if t > 0:
                        g_alpha[m] = g_alpha[m] + g_u * (1.0 - theta[t - 1, b, m]) * u[t - 1, b, m]
                    g_current[t, b, m] = g_u
    return g_current, g_alpha


def readout_backward(cnp.ndarray[f64, ndim=3] u,
                     cnp.ndarray[f64, ndim=3] g_u_direct,
                     cnp.ndarray[f64, ndim=1] alpha):
    cdef Py_ssize_t T = u.shape[0]
    cdef Py_ssize_t B = u.shape[1]
    cdef Py_ssize_t M = u.shape[2]
    cdef cnp.ndarray[f64, ndim=3] g_current = np.empty((T, B, M), dtype=np.float64)
    cdef cnp.ndarray[f64, ndim=1] g_alpha = np.zeros(M, dtype=np.float64)
    cdef Py_ssize_t t, b, m
    cdef double g_u
    with nogil:
        for t in range(T - 1, -1, -1):
            for b in range(B):
                for m in range(M):
                    g_u = g_u_direct[t, b, m]
                    if t < T - 1:
                        g_u = g_u + g_current[t + 1, b, m] * alpha[m]
                    if t > 0:
                        g_alpha[m] = g_alpha[m] + g_u * u[t - 1, b, m]
                    g_current[t, b, m] = g_u
    return g_current, g_alpha
