# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: spherical beamformer power and specular accumulation.

Contracts match plarray._kernels_np exactly; see that module for the
reference semantics.  Complex arithmetic is hand-expanded into real/imag
parts (avoids libgcc complex-multiply calls) and the uniform-grid phase
recurrence runs four interleaved chains to hide multiply latency.
"""

import numpy as np

from libc.math cimport cos, sin, sqrt

cdef double TWO_PI = 6.283185307179586476925287
cdef double TWO_PI_OVER_C = TWO_PI / 299792458.0


def spherical_power(const double complex[:, ::1] H,
                    const double[:, ::1] pos,
                    const double[:, ::1] points,
                    const double[::1] freqs,
                    double df):
    cdef Py_ssize_t M = H.shape[0]
    cdef Py_ssize_t N = H.shape[1]
    cdef Py_ssize_t G = points.shape[0]
    out_arr = np.empty(G, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t g, m, n
    cdef double dx, dy, dz, d, ph, dph
    cdef double acc_r, acc_i, hr, hi
    cdef double sr, si, s2r, s2i, s4r, s4i, tr
    cdef double p0r, p0i, p1r, p1i, p2r, p2i, p3r, p3i
    cdef double r0r, r0i, r1r, r1i, r2r, r2i, r3r, r3i
    cdef double scale = 1.0 / (<double> M * <double> N)
    cdef double f0 = freqs[0]
    for g in range(G):
        acc_r = 0.0
        acc_i = 0.0
        for m in range(M):
            dx = points[g, 0] - pos[m, 0]
            dy = points[g, 1] - pos[m, 1]
            dz = points[g, 2] - pos[m, 2]
            d = sqrt(dx * dx + dy * dy + dz * dz)
            if d < 1e-12:
                raise ValueError(
                    "beamforming grid point coincides with an array element"
                )
            if df > 0.0:
                ph = TWO_PI_OVER_C * f0 * d
                dph = TWO_PI_OVER_C * df * d
                p0r = cos(ph)
                p0i = sin(ph)
                sr = cos(dph)
                si = sin(dph)
                p1r = p0r * sr - p0i * si
                p1i = p0r * si + p0i * sr
                p2r = p1r * sr - p1i * si
                p2i = p1r * si + p1i * sr
                p3r = p2r * sr - p2i * si
                p3i = p2r * si + p2i * sr
                s2r = sr * sr - si * si
                s2i = 2.0 * sr * si
                s4r = s2r * s2r - s2i * s2i
                s4i = 2.0 * s2r * s2i
                r0r = r0i = r1r = r1i = 0.0
                r2r = r2i = r3r = r3i = 0.0
                n = 0
                while n + 4 <= N:
                    hr = H[m, n].real
                    hi = H[m, n].imag
                    r0r += hr * p0r - hi * p0i
                    r0i += hr * p0i + hi * p0r
                    tr = p0r * s4r - p0i * s4i
                    p0i = p0r * s4i + p0i * s4r
                    p0r = tr
                    hr = H[m, n + 1].real
                    hi = H[m, n + 1].imag
                    r1r += hr * p1r - hi * p1i
                    r1i += hr * p1i + hi * p1r
                    tr = p1r * s4r - p1i * s4i
                    p1i = p1r * s4i + p1i * s4r
                    p1r = tr
                    hr = H[m, n + 2].real
                    hi = H[m, n + 2].imag
                    r2r += hr * p2r - hi * p2i
                    r2i += hr * p2i + hi * p2r
                    tr = p2r * s4r - p2i * s4i
                    p2i = p2r * s4i + p2i * s4r
                    p2r = tr
                    hr = H[m, n + 3].real
                    hi = H[m, n + 3].imag
                    r3r += hr * p3r - hi * p3i
                    r3i += hr * p3i + hi * p3r
                    tr = p3r * s4r - p3i * s4i
                    p3i = p3r * s4i + p3i * s4r
                    p3r = tr
                    n += 4
                while n < N:
                    hr = H[m, n].real
                    hi = H[m, n].imag
                    r0r += hr * p0r - hi * p0i
                    r0i += hr * p0i + hi * p0r
                    p0r = p1r
                    p0i = p1i
                    p1r = p2r
                    p1i = p2i
                    p2r = p3r
                    p2i = p3i
                    n += 1
                acc_r += r0r + r1r + r2r + r3r
                acc_i += r0i + r1i + r2i + r3i
            else:
                for n in range(N):
                    ph = TWO_PI_OVER_C * freqs[n] * d
                    p0r = cos(ph)
                    p0i = sin(ph)
                    hr = H[m, n].real
                    hi = H[m, n].imag
                    acc_r += hr * p0r - hi * p0i
                    acc_i += hr * p0i + hi * p0r
        out[g] = (acc_r * acc_r + acc_i * acc_i) * scale * scale
    return out_arr


def accumulate_specular(double complex[:, ::1] out,
                        const double complex[::1] amps,
                        const double[::1] delays,
                        const unsigned char[::1] visible,
                        const double[::1] freqs):
    cdef Py_ssize_t M = out.shape[0]
    cdef Py_ssize_t N = out.shape[1]
    cdef Py_ssize_t m, n
    cdef double ph, tau, ar, ai, cr, ci
    for m in range(M):
        if visible[m] == 0:
            continue
        ar = amps[m].real
        ai = amps[m].imag
        if ar == 0.0 and ai == 0.0:
            continue
        tau = delays[m]
        for n in range(N):
            ph = -TWO_PI * freqs[n] * tau
            cr = cos(ph)
            ci = sin(ph)
            out[m, n].real = out[m, n].real + ar * cr - ai * ci
            out[m, n].imag = out[m, n].imag + ar * ci + ai * cr
    return None
