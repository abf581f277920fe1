"""Pure-NumPy reference implementation of the evolution kernels.

The interval map exploits the band structure of the generator: with a
diagonal Hamiltonian, ladder damping and number dephasing, each superdiagonal
of rho evolves independently under an upper-bidiagonal generator

    dx_j/dt = a_j x_j + b_j x_{j+1},
    a_j = i (w_{j+m} - w_j) - gamma1 (2j + m)/2 - gamma_phi m^2,
    b_j = gamma1 sqrt((j+1)(j+1+m)),

whose matrix exponential has the closed decay-chain form.  The a_j within a
band always have distinct real parts when gamma1 > 0 (they differ by integer
multiples of gamma1), so the partial-fraction denominators never vanish.
"""

import numpy as np

BACKEND_NAME = "python"


def _band_propagate(x, a, b, ex):
    # x: band values, a: diagonal generator entries, b: couplings, ex = exp(a*dt)
    J = x.shape[0]
    new = ex * x
    for j in range(J):
        prodb = 1.0
        for l in range(j + 1, J):
            prodb *= b[l - 1]
            s = 0.0 + 0.0j
            for r in range(j, l + 1):
                den = 1.0 + 0.0j
                for q in range(j, l + 1):
                    if q != r:
                        den *= a[r] - a[q]
                s += ex[r] / den
            new[j] += prodb * s * x[l]
    return new


def apply_interval(rho, omegas, gamma1, gamma_phi, dt):
    """Exact in-place constant-rate interval map on a d x d density matrix."""
    if dt == 0.0:
        return
    d = rho.shape[0]
    for m in range(d):
        J = d - m
        j = np.arange(J)
        a = (
            1j * (omegas[j + m] - omegas[j])
            - 0.5 * gamma1 * (2 * j + m)
            - gamma_phi * float(m * m)
        )
        x = np.diagonal(rho, offset=m).copy()
        ex = np.exp(a * dt)
        if gamma1 > 0.0 and J > 1:
            b = gamma1 * np.sqrt((j[:-1] + 1.0) * (j[:-1] + 1.0 + m))
            new = _band_propagate(x, a, b, ex)
        else:
            new = ex * x
        idx = np.arange(J)
        rho[idx, idx + m] = new
        if m > 0:
            rho[idx + m, idx] = new.conj()


def evolve_timeline(
    rho,
    omegas,
    kick,
    dts,
    gamma1s,
    gamma_phis,
    domegas,
    kicks,
    records,
    out_pops,
    check_every,
    trace_tol,
):
    """Event loop over precompiled intervals; see package docstring."""
    d = rho.shape[0]
    klev = np.arange(d, dtype=float)
    kick_dag = kick.conj().T
    n_channels = 0
    for i in range(dts.shape[0]):
        dt = dts[i]
        if dt > 0.0:
            apply_interval(rho, omegas + klev * domegas[i], gamma1s[i], gamma_phis[i], dt)
            n_channels += 1
            if n_channels % check_every == 0:
                tr = np.trace(rho).real
                drift = abs(tr - 1.0)
                asym = np.max(np.abs(rho - rho.conj().T))
                # written so NaN drift also aborts
                if not (drift < trace_tol and asym < trace_tol):
                    return 1
                rho *= 1.0 / tr
        r = records[i]
        if r >= 0:
            out_pops[r, :] = np.real(np.diagonal(rho))
        if kicks[i]:
            tmp = kick @ rho @ kick_dag
            rho[...] = 0.5 * (tmp + tmp.conj().T)
    tr = np.trace(rho).real
    if not (abs(tr - 1.0) < trace_tol):
        return 1
    rho *= 1.0 / tr
    return 0
