# Compiled evolution kernels. Semantics identical to fallback.py; see the
# package docstring there for the band decomposition of the interval map.

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, sin, sqrt

BACKEND_NAME = "compiled"

DEF MAXD = 16


cdef inline double complex _cexp(double complex z) noexcept nogil:
    cdef double e = exp(z.real)
    return e * cos(z.imag) + 1j * (e * sin(z.imag))


cdef inline double _cabs(double complex z) noexcept nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef void _interval(double complex* rho, int d, double* omegas,
                    double g1, double gphi, double dt) noexcept nogil:
    cdef double complex a[MAXD]
    cdef double complex ex[MAXD]
    cdef double complex x[MAXD]
    cdef double complex newx[MAXD]
    cdef double b[MAXD]
    cdef double complex s, den
    cdef double pb
    cdef int m, J, j, l, r, q

    for m in range(d):
        J = d - m
        for j in range(J):
            a[j] = 1j * (omegas[j + m] - omegas[j]) \
                - 0.5 * g1 * (2 * j + m) - gphi * (<double> (m * m))
            ex[j] = _cexp(a[j] * dt)
            x[j] = rho[j * d + j + m]
        if g1 > 0.0 and J > 1:
            for j in range(J - 1):
                b[j] = g1 * sqrt((j + 1.0) * (j + 1.0 + m))
            for j in range(J):
                newx[j] = ex[j] * x[j]
                pb = 1.0
                for l in range(j + 1, J):
                    pb *= b[l - 1]
                    s = 0
                    for r in range(j, l + 1):
                        den = 1
                        for q in range(j, l + 1):
                            if q != r:
                                den = den * (a[r] - a[q])
                        s = s + ex[r] / den
                    newx[j] = newx[j] + pb * s * x[l]
        else:
            for j in range(J):
                newx[j] = ex[j] * x[j]
        for j in range(J):
            rho[j * d + j + m] = newx[j]
            if m > 0:
                rho[(j + m) * d + j] = newx[j].conjugate()


def apply_interval(double complex[:, ::1] rho, double[::1] omegas,
                   double gamma1, double gamma_phi, double dt):
    """Exact in-place constant-rate interval map on a d x d density matrix."""
    cdef int d = rho.shape[0]
    if d > MAXD:
        raise ValueError(f"compiled kernel supports dim <= {MAXD}, got {d}")
    if dt == 0.0:
        return
    _interval(&rho[0, 0], d, &omegas[0], gamma1, gamma_phi, dt)


cdef int _evolve(double complex* prho, int d, double* pomegas,
                 double complex* pkick,
                 double* dts, double* g1s, double* gphis, double* domegas,
                 signed char* kicks, long long* records,
                 double* out_pops, Py_ssize_t n_events,
                 long check_every, double trace_tol) noexcept nogil:
    cdef double om[MAXD]
    cdef double complex tmp[MAXD * MAXD]
    cdef double complex acc
    cdef double dt, tr, drift, asym, dom, mag
    cdef long n_channels = 0
    cdef Py_ssize_t i
    cdef long long r
    cdef int j, k, l

    for i in range(n_events):
        dt = dts[i]
        if dt > 0.0:
            dom = domegas[i]
            for j in range(d):
                om[j] = pomegas[j] + j * dom
            _interval(prho, d, om, g1s[i], gphis[i], dt)
            n_channels += 1
            if n_channels % check_every == 0:
                tr = 0.0
                for j in range(d):
                    tr += prho[j * d + j].real
                drift = fabs(tr - 1.0)
                asym = 0.0
                for j in range(d):
                    for k in range(j + 1, d):
                        mag = _cabs(prho[j * d + k] - prho[k * d + j].conjugate())
                        if mag > asym:
                            asym = mag
                if drift >= trace_tol or asym >= trace_tol:
                    return 1
                for j in range(d * d):
                    prho[j] = prho[j] / tr
        r = records[i]
        if r >= 0:
            for j in range(d):
                out_pops[r * d + j] = prho[j * d + j].real
        if kicks[i]:
            # tmp = kick @ rho
            for j in range(d):
                for k in range(d):
                    acc = 0
                    for l in range(d):
                        acc = acc + pkick[j * d + l] * prho[l * d + k]
                    tmp[j * d + k] = acc
            # rho = tmp @ kick^dagger; exactly Hermitian by mirroring
            for j in range(d):
                for k in range(j, d):
                    acc = 0
                    for l in range(d):
                        acc = acc + tmp[j * d + l] * pkick[k * d + l].conjugate()
                    if k == j:
                        prho[j * d + j] = acc.real
                    else:
                        prho[j * d + k] = acc
                        prho[k * d + j] = acc.conjugate()
    tr = 0.0
    for j in range(d):
        tr += prho[j * d + j].real
    if not (fabs(tr - 1.0) < trace_tol):
        return 1
    for j in range(d * d):
        prho[j] = prho[j] / tr
    return 0


def evolve_timeline(double complex[:, ::1] rho, double[::1] omegas,
                    double complex[:, ::1] kick,
                    double[::1] dts, double[::1] gamma1s, double[::1] gamma_phis,
                    double[::1] domegas,
                    cnp.int8_t[::1] kicks, cnp.int64_t[::1] records,
                    double[:, ::1] out_pops,
                    long check_every, double trace_tol):
    """Event loop over precompiled intervals; returns 0 ok, 1 trace abort."""
    cdef int d = rho.shape[0]
    if d > MAXD:
        raise ValueError(f"compiled kernel supports dim <= {MAXD}, got {d}")
    cdef Py_ssize_t n_events = dts.shape[0]
    if n_events == 0:
        return 0
    cdef double* pout = NULL
    if out_pops.shape[0] > 0:
        pout = &out_pops[0, 0]
    cdef int status
    with nogil:
        status = _evolve(
            &rho[0, 0], d, &omegas[0], &kick[0, 0],
            &dts[0], &gamma1s[0], &gamma_phis[0], &domegas[0],
            <signed char*> &kicks[0], <long long*> &records[0],
            pout, n_events, check_every, trace_tol,
        )
    return status
