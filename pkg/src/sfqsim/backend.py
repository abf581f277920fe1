"""Kernel backend selection: compiled Cython core or pure-NumPy fallback.

The compiled extension is preferred when importable.  Set the environment
variable ``SFQSIM_BACKEND`` to ``python`` or ``compiled`` to force a choice,
or call :func:`set_backend` at runtime (used by the benchmark and the
cross-backend tests).
"""

from __future__ import annotations

import os

from ._kernels import fallback as _fallback

try:
    from ._kernels import _core as _compiled
except ImportError:
    _compiled = None

_COMPILED_MAXD = 16


def available_backends() -> tuple[str, ...]:
    return ("python",) if _compiled is None else ("python", "compiled")


def _select_default():
    requested = os.environ.get("SFQSIM_BACKEND", "").strip().lower()
    if requested == "python":
        return _fallback
    if requested == "compiled":
        if _compiled is None:
            raise ImportError(
                "SFQSIM_BACKEND=compiled but the compiled kernel is not built; "
                "install with the Cython extension or unset the variable"
            )
        return _compiled
    if requested:
        raise ValueError(f"unknown SFQSIM_BACKEND value {requested!r}")
    return _compiled if _compiled is not None else _fallback


_impl = _select_default()


def backend_name() -> str:
    return _impl.BACKEND_NAME


def set_backend(name: str) -> None:
    """Switch kernels at runtime ('python' or 'compiled')."""
    global _impl
    if name == "python":
        _impl = _fallback
    elif name == "compiled":
        if _compiled is None:
            raise ValueError("compiled kernel is not available in this install")
        _impl = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


def apply_interval(rho, omegas, gamma1, gamma_phi, dt):
    if _impl is _compiled and rho.shape[0] > _COMPILED_MAXD:
        return _fallback.apply_interval(rho, omegas, gamma1, gamma_phi, dt)
    return _impl.apply_interval(rho, omegas, gamma1, gamma_phi, dt)


def evolve_timeline(rho, omegas, kick, dts, gamma1s, gamma_phis, domegas,
                    kicks, records, out_pops, check_every, trace_tol):
    impl = _impl
    if impl is _compiled and rho.shape[0] > _COMPILED_MAXD:
        impl = _fallback
    return impl.evolve_timeline(
        rho, omegas, kick, dts, gamma1s, gamma_phis, domegas,
        kicks, records, out_pops, check_every, trace_tol,
    )
