# cython: language_level=3
"""Compiled hot kernels: row-wise simplex projection, inverse-CDF action
sampling, and the regularized projected-ascent update.

Every floating-point expression matches the numpy fallback in
``_fallback.py`` (same accumulation order, same threshold arithmetic), so
results are bit-identical across backends. Built with -ffp-contract=off to
rule out FMA contraction.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


cdef inline void _project_row(double* v, double* scratch, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t i, j, rho
    cdef double key, acc, theta, x
    cdef bint on_simplex = 1
    # already on the simplex: pass through (exact idempotence)
    acc = 0.0
    for i in range(k):
        if v[i] < 0.0:
            on_simplex = 0
        acc += v[i]
    if on_simplex and (acc - 1.0 if acc >= 1.0 else 1.0 - acc) <= 1e-12:
        return
    # insertion sort into descending order
    for i in range(k):
        scratch[i] = v[i]
    for i in range(1, k):
        key = scratch[i]
        j = i - 1
        while j >= 0 and scratch[j] < key:
            scratch[j + 1] = scratch[j]
            j -= 1
        scratch[j + 1] = key
    # running sum; rho = last j with u[j]*(j+1) > css[j]-1
    acc = 0.0
    theta = 0.0
    rho = 0
    for j in range(k):
        acc += scratch[j]
        if scratch[j] * (j + 1) > (acc - 1.0):
            rho = j
            theta = (acc - 1.0) / (rho + 1.0)
    for i in range(k):
        x = v[i] - theta
        v[i] = x if x > 0.0 else 0.0


def project_rows(v):
    """Project each row of ``v`` onto the probability simplex."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.array(v, dtype=np.float64, order="C")
    if out.ndim != 2:
        raise ValueError("expected a 2-d array of row vectors")
    cdef Py_ssize_t m = out.shape[0]
    cdef Py_ssize_t k = out.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scratch = np.empty(k, dtype=np.float64)
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            _project_row(&out[i, 0], &scratch[0], k)
    return out


def sample_from_rows(policies, uniforms):
    """Inverse-CDF sample one action per row: a = #{j : cumsum(p)[j] <= u}."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] p = np.ascontiguousarray(policies, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t m = p.shape[0]
    cdef Py_ssize_t k = p.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] actions = np.empty(m, dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef double acc, ui
    cdef Py_ssize_t count
    with nogil:
        for i in range(m):
            acc = 0.0
            count = 0
            ui = u[i]
            for j in range(k):
                acc += p[i, j]
                if acc <= ui:
                    count += 1
            if count > k - 1:
                count = k - 1
            actions[i] = count
    return actions


def uniform_actions(uniforms, k):
    """Map uniforms in [0,1) to actions {0..k-1} by truncation."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t m = u.shape[0]
    cdef Py_ssize_t kk = k
    cdef cnp.ndarray[cnp.int64_t, ndim=1] actions = np.empty(m, dtype=np.int64)
    cdef Py_ssize_t i
    cdef long long a
    with nogil:
        for i in range(m):
            a = <long long> (u[i] * kk)
            if a > kk - 1:
                a = kk - 1
            actions[i] = a
    return actions


def trpa_update_rows(policies, rewards, double eta, double tau):
    """Row-wise update: project((1 - eta*tau) * pi + eta * r)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] p = np.ascontiguousarray(policies, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] r = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef Py_ssize_t m = p.shape[0]
    cdef Py_ssize_t k = p.shape[1]
    if r.shape[0] != m or r.shape[1] != k:
        raise ValueError("policies and rewards must have the same shape")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, k), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scratch = np.empty(k, dtype=np.float64)
    cdef double alpha = 1.0 - eta * tau
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(m):
            for j in range(k):
                out[i, j] = alpha * p[i, j] + eta * r[i, j]
            _project_row(&out[i, 0], &scratch[0], k)
    return out
