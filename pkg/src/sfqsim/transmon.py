"""d-level transmon model: Duffing ladder, SFQ kicks, free evolution, decoherence.

The qubit is a weakly anharmonic oscillator truncated to ``dim`` levels with
ladder energies ``E_k/hbar = k*omega10 + alpha*k*(k-1)/2``.  A single SFQ
pulse is modeled as an instantaneous unitary kick generated by the charge
coupling, ``U = exp((delta_theta/2) * (a_dag - a))``; between kicks the state
precesses freely and (optionally) decoheres.  All operations are pure
functions on immutable values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from . import backend
from .constants import HBAR, PHI0

# Validity tolerances for density matrices.
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-10


@dataclass(frozen=True)
class TransmonParams:
    """Duffing-ladder spectrum of the transmon.

    Parameters
    ----------
    omega10 : float
        Fundamental (0 -> 1) transition angular frequency, rad/s.
    alpha : float
        Anharmonicity as an angular frequency, rad/s.  Negative for a
        transmon.
    dim : int
        Number of ladder levels kept in the truncation (>= 2).
    """

    omega10: float
    alpha: float
    dim: int = 4

    def __post_init__(self):
        if not self.omega10 > 0:
            raise ValueError(f"omega10 must be positive, got {self.omega10}")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        if not abs(self.alpha) < self.omega10:
            raise ValueError(
                f"|alpha| must be smaller than omega10 (got alpha={self.alpha}, omega10={self.omega10})"
            )


@dataclass(frozen=True)
class CouplingParams:
    """Capacitive coupling between the pulse driver and the qubit.

    Parameters
    ----------
    c_c : float
        Driver-qubit coupling capacitance, F.
    c : float
        Qubit self-capacitance, F.
    phi0 : float
        Flux quantum, Wb.  Fixed physical constant; exposed for testability.
    """

    c_c: float
    c: float
    phi0: float = PHI0

    def __post_init__(self):
        if not self.c_c >= 0:
            raise ValueError(f"c_c must be non-negative, got {self.c_c}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.c_c / self.c > 0.1:
            warnings.warn(
                f"c_c/c = {self.c_c / self.c:.3g} exceeds 0.1; the weak-coupling "
                "kick model assumes c_c << c",
                stacklevel=2,
            )


@dataclass(frozen=True)
class DecoherenceParams:
    """Open-system rates of the qubit.

    ``t1_residual`` and ``t2_star_residual`` are the relaxation and dephasing
    times with the pulse driver idle.  ``t1_per_qp`` converts a mean
    quasiparticle number into an added relaxation rate (rate = n_qp/t1_per_qp).
    ``qp_dispersion_factor`` is an extra multiplier on the quasiparticle
    frequency-shift-to-decay ratio; the empirical scale factor itself lives in
    ``DispersionParams``, so the default here is 1.0 to avoid applying it
    twice.
    """

    t1_residual: float
    t2_star_residual: float
    t1_per_qp: float
    qp_dispersion_factor: float = 1.0

    def __post_init__(self):
        if not self.t1_residual > 0:
            raise ValueError(f"t1_residual must be positive, got {self.t1_residual}")
        if not self.t2_star_residual > 0:
            raise ValueError(f"t2_star_residual must be positive, got {self.t2_star_residual}")
        if self.t2_star_residual > 2 * self.t1_residual * (1 + 1e-12):
            raise ValueError(
                f"t2_star_residual ({self.t2_star_residual}) exceeds 2*t1_residual "
                f"({2 * self.t1_residual})"
            )
        if not self.t1_per_qp > 0:
            raise ValueError(f"t1_per_qp must be positive, got {self.t1_per_qp}")
        if not self.qp_dispersion_factor > 0:
            raise ValueError(
                f"qp_dispersion_factor must be positive, got {self.qp_dispersion_factor}"
            )


def dephasing_rate(params: DecoherenceParams) -> float:
    """Pure dephasing rate 1/s implied by the residual T1 and T2*.

    gamma_phi = 1/T2* - 1/(2 T1), clamped at zero (with a warning) when the
    measured times are inconsistent with positive pure dephasing.
    """
    gp = 1.0 / params.t2_star_residual - 0.5 / params.t1_residual
    if gp < 0:
        warnings.warn(
            f"1/T2* - 1/(2 T1) is negative ({gp:.3g} 1/s); clamping the pure "
            "dephasing rate to zero",
            stacklevel=2,
        )
        return 0.0
    return gp


def level_energies(params: TransmonParams) -> np.ndarray:
    """Ladder energies E_k/hbar (rad/s), with E_0 = 0."""
    k = np.arange(params.dim, dtype=float)
    return k * params.omega10 + params.alpha * k * (k - 1) / 2.0


def delta_theta(coupling: CouplingParams, omega10: float) -> float:
    """Tip angle per SFQ pulse, rad.

    delta_theta = C_c * Phi_0 * sqrt(2 omega10 / (hbar C)).  Linear in the
    coupling capacitance and proportional to 1/sqrt(C).
    """
    if not omega10 > 0:
        raise ValueError(f"omega10 must be positive, got {omega10}")
    return coupling.c_c * coupling.phi0 * np.sqrt(2.0 * omega10 / (HBAR * coupling.c))


def invert_self_capacitance(coupling_c_c: float, omega10: float, target_delta_theta: float) -> float:
    """Self-capacitance C that makes ``delta_theta`` equal the target angle.

    Closed-form inversion of the kick-angle relation; used to recover the
    (unpublished) qubit capacitance from a calibrated pulses-per-pi count.
    """
    if not target_delta_theta > 0:
        raise ValueError("target_delta_theta must be positive")
    return (coupling_c_c * PHI0 / target_delta_theta) ** 2 * 2.0 * omega10 / HBAR


class DensityMatrix:
    """Immutable d x d density matrix.

    Valid instances are Hermitian (to 1e-12), unit trace (to 1e-10) and
    positive semidefinite (eigenvalues >= -1e-10).  Operations in this module
    return new instances; the wrapped array is read-only.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix, *, validate: bool = True):
        arr = np.array(matrix, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("density matrix must have dimension >= 2")
        arr.setflags(write=False)
        object.__setattr__(self, "_matrix", arr)
        if validate:
            self.validate()

    @classmethod
    def _from_trusted(cls, arr: np.ndarray) -> "DensityMatrix":
        # Internal fast path: takes ownership of arr, skips validation.
        obj = object.__new__(cls)
        arr.setflags(write=False)
        object.__setattr__(obj, "_matrix", arr)
        return obj

    @classmethod
    def ground(cls, dim: int) -> "DensityMatrix":
        """|0><0| in a dim-level space."""
        arr = np.zeros((dim, dim), dtype=complex)
        arr[0, 0] = 1.0
        return cls._from_trusted(arr)

    @classmethod
    def from_state_vector(cls, vec) -> "DensityMatrix":
        """Pure state |psi><psi| from a (normalized) state vector."""
        v = np.asarray(vec, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("state vector must be nonzero")
        v = v / norm
        return cls._from_trusted(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Read-only view of the underlying array."""
        return self._matrix

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self._matrix)).copy()

    def population(self, k: int) -> float:
        return float(np.real(self._matrix[k, k]))

    @property
    def purity(self) -> float:
        """Tr(rho^2)."""
        return float(np.real(np.sum(self._matrix * self._matrix.conj().T)))

    def validate(self) -> None:
        """Raise ValueError if the matrix is not a valid quantum state."""
        m = self._matrix
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"density matrix is not Hermitian (max asymmetry {herm:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -EIGENVALUE_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min():.3e}")

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, populations={np.round(self.populations, 6)})"


@lru_cache(maxsize=64)
def kick_unitary(delta_theta: float, dim: int) -> np.ndarray:
    """Unitary of one instantaneous SFQ kick, truncated to ``dim`` levels.

    U = expm((delta_theta/2) (a_dag - a)) with a the lowering operator.  For
    dim = 2 this is exactly a rotation about the y axis by ``delta_theta``.
    The returned array is cached and read-only.
    """
    a = np.zeros((dim, dim))
    for k in range(1, dim):
        a[k - 1, k] = np.sqrt(k)
    u = expm(0.5 * delta_theta * (a.T - a)).astype(complex)
    u.setflags(write=False)
    return u


def free_evolve(state: DensityMatrix, params: TransmonParams, dt: float) -> DensityMatrix:
    """Free precession for time dt: rho -> U rho U+, U = diag(exp(-i E_k dt))."""
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    if state.dim != params.dim:
        raise ValueError(f"state dim {state.dim} != params dim {params.dim}")
    ph = np.exp(-1j * level_energies(params) * dt)
    return DensityMatrix._from_trusted(ph[:, None] * state.matrix * ph.conj()[None, :])


def sfq_kick(state: DensityMatrix, delta_theta: float, params: TransmonParams) -> DensityMatrix:
    """Apply one instantaneous SFQ kick to the state."""
    if state.dim != params.dim:
        raise ValueError(f"state dim {state.dim} != params dim {params.dim}")
    u = kick_unitary(float(delta_theta), params.dim)
    out = u @ state.matrix @ u.conj().T
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix._from_trusted(out)


def apply_decoherence(
    state: DensityMatrix,
    dt: float,
    gamma1: float,
    gamma_phi: float,
    dphase: float = 0.0,
) -> DensityMatrix:
    """Exact constant-rate decoherence channel over an interval of length dt.

    Applies multi-level amplitude damping (lowering ladder, decay rate
    k*gamma1 from level k), pure dephasing via the number operator (the 0-1
    coherence decays at gamma_phi) and a coherent frequency shift: level k
    acquires phase at k*dphase, i.e. the 0-1 transition frequency shifts by
    dphase for this interval.  The map is the exact exponential of the
    combined generator, so it composes additively in dt.
    """
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    if gamma1 < 0 or gamma_phi < 0:
        raise ValueError(f"rates must be non-negative, got gamma1={gamma1}, gamma_phi={gamma_phi}")
    out = np.array(state.matrix, dtype=complex)
    omegas = np.arange(state.dim, dtype=float) * dphase
    backend.apply_interval(out, omegas, float(gamma1), float(gamma_phi), float(dt))
    return DensityMatrix._from_trusted(out)
