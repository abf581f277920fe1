"""Evolution kernels: compiled Cython core with a pure-NumPy fallback.

Both backends expose the same two functions:

``apply_interval(rho, omegas, gamma1, gamma_phi, dt)``
    In-place exact map for one constant-rate interval (Hamiltonian phases +
    ladder amplitude damping + number-operator dephasing).

``evolve_timeline(rho, omegas, kick, dts, gamma1s, gamma_phis, domegas,
kicks, records, out_pops, check_every, trace_tol)``
    Hot loop over a precompiled event list: per event, evolve the interval,
    optionally record populations, optionally apply the kick unitary.
    Returns 0 on success, 1 on trace-drift abort.
"""
