# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled compute kernels (Cython backend).

Arithmetic contract shared with ``_core_py``: float64 differences reduced to
float32 for the photometric weight, float64 spatial weights and accumulation,
rings ascending with offsets in declaration order, support-mean fallback when
every photometric weight underflows.  Compiled with -ffp-contract=off so the
operation sequence matches the numpy backend bit-for-bit (the Exp family may
differ by ~1 float32 ulp: libm's expf vs numpy's exp).

V family codes: 0 = Abs, 1 = Frac, 2 = Quad, 3 = Exp.
Border codes: 0 = clamp (edge replication), 1 = skip (copy the margin).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport expf, fabsf

BACKEND_NAME = "cython"


cdef inline float _v_weight(float u, int v_code) nogil:
    cdef float u2
    if v_code == 0:
        return <float>1.0 / (<float>1.0 + fabsf(u))
    elif v_code == 1:
        return <float>1.0 / (<float>1.0 + u * u)
    elif v_code == 2:
        u2 = u * u
        return <float>1.0 / (<float>1.0 + u2 * u2)
    else:
        return expf(-(u * u))


def v_weights(d, double t, int v_code):
    """Float32 photometric weights for float32 differences ``d`` at scale ``t``."""
    if not 0 <= v_code <= 3:
        raise ValueError(f"unknown V family code {v_code}")
    cdef cnp.ndarray[cnp.float32_t, ndim=1] d1 = np.ascontiguousarray(d, dtype=np.float32).ravel()
    cdef cnp.ndarray[cnp.float32_t, ndim=1] out = np.empty_like(d1)
    cdef Py_ssize_t i, size = d1.shape[0]
    cdef float tf = <float>t
    for i in range(size):
        out[i] = _v_weight(tf * d1[i], v_code)
    return out.reshape(np.shape(d))


def filter_values(
    f,
    double t,
    int v_code,
    dxs,
    dys,
    ring_starts,
    ring_weights,
    int border_code,
    double gate_lo,
    double gate_hi,
    bint has_gate,
):
    """Ring-separated bilateral filter over a float64 image (see _core_py)."""
    if not 0 <= v_code <= 3:
        raise ValueError(f"unknown V family code {v_code}")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] fa = np.ascontiguousarray(f, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] dx = np.ascontiguousarray(dxs, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] dy = np.ascontiguousarray(dys, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] starts = np.ascontiguousarray(ring_starts, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rw = np.ascontiguousarray(ring_weights, dtype=np.float64)

    cdef Py_ssize_t h = fa.shape[0], w = fa.shape[1]
    cdef int margin = int(max(np.max(np.abs(dx)), np.max(np.abs(dy))))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pad = np.pad(fa, margin, mode="edge")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((h, w), dtype=np.float64)

    cdef int n_rings = rw.shape[0]
    cdef int support_size = starts[n_rings]
    cdef float tf = <float>t
    cdef Py_ssize_t x, y, y_lo = 0, y_hi = h, x_lo = 0, x_hi = w
    cdef int i, j
    cdef double f0, nb, num, den, sv, sfv, supsum
    cdef float df, v

    if border_code == 1:
        out[:, :] = fa
        y_lo = x_lo = margin
        y_hi = h - margin
        x_hi = w - margin

    for y in range(y_lo, y_hi):
        for x in range(x_lo, x_hi):
            f0 = fa[y, x]
            if has_gate and (f0 < gate_lo or f0 > gate_hi):
                out[y, x] = f0
                continue
            num = 0.0
            den = 0.0
            supsum = 0.0
            for i in range(n_rings):
                sv = 0.0
                sfv = 0.0
                for j in range(starts[i], starts[i + 1]):
                    nb = pad[margin + y + dy[j], margin + x + dx[j]]
                    df = <float>(nb - f0)
                    v = _v_weight(tf * df, v_code)
                    sv += <double>v
                    sfv += <double>v * nb
                    supsum += nb
                num += rw[i] * sfv
                den += rw[i] * sv
            if den > 0.0:
                out[y, x] = num / den
            else:
                out[y, x] = supsum / support_size
    return out


def ensemble_filter(vals, double t, int v_code, ring_starts, ring_weights):
    """Filter the center of each trial row (see _core_py)."""
    if not 0 <= v_code <= 3:
        raise ValueError(f"unknown V family code {v_code}")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] va = np.ascontiguousarray(vals, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] starts = np.ascontiguousarray(ring_starts, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rw = np.ascontiguousarray(ring_weights, dtype=np.float64)

    cdef Py_ssize_t n_trials = va.shape[0], trial
    cdef int n_rings = rw.shape[0]
    cdef int support_size = starts[n_rings]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n_trials, dtype=np.float64)
    cdef float tf = <float>t
    cdef int i, j
    cdef double f0, nb, num, den, sv, sfv, supsum
    cdef float df, v

    for trial in range(n_trials):
        f0 = va[trial, 0]
        num = 0.0
        den = 0.0
        supsum = 0.0
        for i in range(n_rings):
            sv = 0.0
            sfv = 0.0
            for j in range(starts[i], starts[i + 1]):
                nb = va[trial, 1 + j]
                df = <float>(nb - f0)
                v = _v_weight(tf * df, v_code)
                sv += <double>v
                sfv += <double>v * nb
                supsum += nb
            num += rw[i] * sfv
            den += rw[i] * sv
        if den > 0.0:
            out[trial] = num / den
        else:
            out[trial] = supsum / support_size
    return out
