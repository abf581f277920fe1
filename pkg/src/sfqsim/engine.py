"""Lab-frame pulse-level evolution engine.

Simulation runs in the lab frame: free precession between pulses is explicit,
so control-axis selection by pulse timing emerges without rotating-frame
bookkeeping.  Pulses are instantaneous kicks (picosecond SFQ pulses against a
200 ps qubit period); decoherence is applied as the exact constant-rate
channel on each interpulse interval, with quasiparticle-dependent rates
evaluated at the interval midpoint from the closed-form trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend
from .quasiparticles import DispersionParams, QPModel, dispersion_ratio, qp_trajectory
from .sequencer import GateDef, PulseTrain, pulse_times
from .transmon import (
    CouplingParams,
    DecoherenceParams,
    DensityMatrix,
    TransmonParams,
    dephasing_rate,
    delta_theta,
    kick_unitary,
    level_energies,
)

TWO_PI = 2.0 * math.pi

# Trace/Hermiticity bookkeeping: check every 1000 channel applications,
# renormalize while the drift stays below 1e-8, abort otherwise.
CHECK_EVERY = 1000
TRACE_TOL = 1e-8

# Qubit self-capacitance recovered by inverting the per-pulse tip angle
# against the 46-pulses-per-pi calibration (C_c = 400 aF): approximately 86.66 fF.
C_SELF_DEFAULT = 8.665774948475416e-14

# Lifetime per unit quasiparticle number.  Fitted, not measured: chosen so the
# simulated n=3 interleaved benchmarking fidelities land mid-band (~95%);
# see scripts/calibrate_t1_per_qp.py for the calibration run.
T1_PER_QP_DEFAULT = 4.53e-7


@dataclass(frozen=True)
class Physics:
    """Device model bundle consumed by the simulation engine.

    ``decoherence`` and ``qp`` are optional: omit both for ideal unitary
    dynamics.  Quasiparticles affect the qubit only through the decoherence
    block (added decay at n_qp/t1_per_qp and the dispersive frequency shift),
    so a ``qp`` model without ``decoherence`` is inert.
    """

    transmon: TransmonParams
    coupling: CouplingParams
    decoherence: DecoherenceParams | None = None
    qp: QPModel | None = None
    dispersion: DispersionParams | None = None

    def delta_theta(self) -> float:
        """Tip angle per pulse from the coupling and qubit frequency."""
        return delta_theta(self.coupling, self.transmon.omega10)

    def gamma_phi(self) -> float:
        return dephasing_rate(self.decoherence) if self.decoherence else 0.0

    def kick(self) -> np.ndarray:
        return kick_unitary(self.delta_theta(), self.transmon.dim)

    def trigger_frequency(self, n: int, detuning: float = 0.0) -> float:
        """omega_d for subharmonic n, plus an angular detuning (rad/s)."""
        return self.transmon.omega10 / n + detuning


def paper_device(dim: int = 4) -> Physics:
    """Device model with the measured parameters of the reference hardware:
    4.958 GHz transmon, -220 MHz anharmonicity, 400 aF coupling, residual
    T1 = 23.6 us / T2* = 24.4 us, quasiparticle yield 1.6e-3 per slip with
    17.6 us trapping, 180 ueV aluminum gap with the 1.5x empirical dispersion
    factor."""
    return Physics(
        transmon=TransmonParams(omega10=TWO_PI * 4.958e9, alpha=-TWO_PI * 220e6, dim=dim),
        coupling=CouplingParams(c_c=400e-18, c=C_SELF_DEFAULT),
        decoherence=DecoherenceParams(
            t1_residual=23.6e-6,
            t2_star_residual=24.4e-6,
            t1_per_qp=T1_PER_QP_DEFAULT,
        ),
        qp=QPModel(),
        dispersion=DispersionParams(),
    )


class Timeline:
    """Pulse trains on a shared clock, built gate by gate.

    Gates occupy an integer number of trigger cycles; consecutive gates abut,
    so a contiguous gate sequence keeps the interpulse spacing uniform across
    gate boundaries.  ``advance`` inserts an idle gap.  Trains may also be
    placed explicitly with ``add_train``.
    """

    def __init__(self):
        self.trains: list[PulseTrain] = []
        self.cursor: float = 0.0

    def add_train(self, train: PulseTrain) -> PulseTrain:
        self.trains.append(train)
        self.cursor = max(self.cursor, train.end_time)
        return train

    def add_gate(self, gate: GateDef, omega_d: float) -> PulseTrain | None:
        """Place a gate at the cursor; the cursor advances by its window.

        A pulse-free gate (identity with configured idle) just advances the
        clock and returns None.
        """
        if gate.pulse_count == 0:
            self.cursor += gate.idle_cycles * TWO_PI / omega_d
            return None
        train = PulseTrain(
            n=gate.n,
            omega_d=omega_d,
            trigger_phase=gate.trigger_phase,
            pulse_count=gate.pulse_count,
            start_time=self.cursor,
        )
        self.trains.append(train)
        self.cursor = train.end_time
        return train

    def add_gates(self, gates, omega_d: float) -> None:
        for g in gates:
            self.add_gate(g, omega_d)

    def advance(self, duration: float) -> None:
        if duration < 0:
            raise ValueError(f"duration must be non-negative, got {duration}")
        self.cursor += duration

    @property
    def end_time(self) -> float:
        return self.cursor

    def all_pulse_times(self) -> np.ndarray:
        if not self.trains:
            return np.zeros(0)
        return np.concatenate([pulse_times(t) for t in self.trains])

    def drive_windows(self) -> list:
        """(start, end, omega_d) spans with the trigger active."""
        return [(t.start_time, t.end_time, t.omega_d) for t in self.trains if t.pulse_count > 0]

    def total_trigger_cycles(self) -> int:
        return sum(t.pulse_count for t in self.trains)


@dataclass(frozen=True)
class SimulationResult:
    populations: np.ndarray | None
    final_state: DensityMatrix
    n_qp_final: float


def simulate(
    timeline: Timeline,
    physics: Physics,
    sample_times=None,
    *,
    rho0: DensityMatrix | None = None,
    n_qp_initial: float | None = None,
) -> SimulationResult:
    """Evolve a state through a timeline, recording populations at sample times.

    Sample times must be non-decreasing and non-negative.  A sample taken
    exactly at a pulse arrival records the pre-kick (left-limit) state, so a
    recording at time T matches a separate run whose drive window is [0, T).
    """
    dim = physics.transmon.dim
    rho = np.array((rho0 or DensityMatrix.ground(dim)).matrix, dtype=complex)
    if rho.shape[0] != dim:
        raise ValueError(f"initial state dim {rho.shape[0]} != transmon dim {dim}")

    samples = np.asarray([] if sample_times is None else sample_times, dtype=float)
    if samples.size and (np.any(np.diff(samples) < 0) or samples[0] < 0):
        raise ValueError("sample_times must be non-negative and non-decreasing")

    pulses = timeline.all_pulse_times()
    windows = timeline.drive_windows()
    edges = np.asarray([w[0] for w in windows] + [w[1] for w in windows], dtype=float)
    end = max(
        timeline.end_time,
        samples[-1] if samples.size else 0.0,
        pulses.max() if pulses.size else 0.0,
    )

    # Merge events; at equal times the order is boundary < record < kick, so a
    # coincident sample sees the pre-kick state.
    times = np.concatenate([edges, np.array([end]), samples, pulses])
    prio = np.concatenate(
        [
            np.zeros(edges.size + 1, dtype=np.int8),
            np.ones(samples.size, dtype=np.int8),
            np.full(pulses.size, 2, dtype=np.int8),
        ]
    )
    payload = np.concatenate(
        [
            np.full(edges.size + 1, -1, dtype=np.int64),
            np.arange(samples.size, dtype=np.int64),
            np.full(pulses.size, -1, dtype=np.int64),
        ]
    )
    order = np.lexsort((prio, times))
    times, prio, payload = times[order], prio[order], payload[order]
    if times.size and times[0] < 0:
        raise ValueError("events before t = 0")

    dts = np.diff(times, prepend=0.0)
    kicks = (prio == 2).astype(np.int8)
    records = np.where(prio == 1, payload, -1).astype(np.int64)

    omegas = level_energies(physics.transmon)
    mids = times - 0.5 * dts

    dec = physics.decoherence
    n_qp_final = 0.0
    if dec is not None:
        gamma_phi = physics.gamma_phi()
        if physics.qp is not None:
            traj = qp_trajectory(windows, physics.qp, n_initial=n_qp_initial)
            n_mid = traj.value(mids) if mids.size else np.zeros(0)
            n_qp_final = float(traj.value(end))
            gamma_qp = n_mid / dec.t1_per_qp
            g1s = 1.0 / dec.t1_residual + gamma_qp
            if physics.dispersion is not None:
                ratio = dispersion_ratio(physics.transmon.omega10, physics.dispersion)
                domegas = ratio * dec.qp_dispersion_factor * gamma_qp
            else:
                domegas = np.zeros_like(g1s)
        else:
            g1s = np.full(times.size, 1.0 / dec.t1_residual)
            domegas = np.zeros(times.size)
        gphis = np.full(times.size, gamma_phi)
    else:
        g1s = np.zeros(times.size)
        gphis = np.zeros(times.size)
        domegas = np.zeros(times.size)
        if physics.qp is not None:
            traj = qp_trajectory(windows, physics.qp, n_initial=n_qp_initial)
            n_qp_final = float(traj.value(end))

    out_pops = np.empty((samples.size, dim), dtype=float)
    status = backend.evolve_timeline(
        rho,
        omegas,
        np.array(physics.kick(), dtype=complex, order="C"),
        np.ascontiguousarray(dts),
        np.ascontiguousarray(g1s),
        np.ascontiguousarray(gphis),
        np.ascontiguousarray(domegas),
        kicks,
        records,
        out_pops,
        CHECK_EVERY,
        TRACE_TOL,
    )
    if status != 0:
        raise RuntimeError(
            f"density-matrix trace/Hermiticity drift exceeded {TRACE_TOL:g} during "
            "evolution; the schedule or rates are numerically unsound"
        )
    return SimulationResult(
        populations=out_pops if samples.size else None,
        final_state=DensityMatrix._from_trusted(rho),
        n_qp_final=n_qp_final,
    )


# ---------------------------------------------------------------------------
# Ideal (unitary, exactly resonant) gate propagators
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _propagator(dim, omega10, alpha, dtheta, omega_d, phase, count, idle_cycles):
    params = TransmonParams(omega10=omega10, alpha=alpha, dim=dim)
    omegas = level_energies(params)
    td = TWO_PI / omega_d
    off = phase / omega_d
    kick = kick_unitary(dtheta, dim)

    def free(tau):
        return np.diag(np.exp(-1j * omegas * tau))

    if count == 0:
        u = free(idle_cycles * td) if idle_cycles else np.eye(dim, dtype=complex)
    else:
        u = free(off)
        for k in range(count):
            u = kick @ u
            gap = td if k < count - 1 else td - off
            u = free(gap) @ u
    u.setflags(write=False)
    return u


def gate_propagator(gate: GateDef, physics: Physics, omega_d: float) -> np.ndarray:
    """Lab-frame unitary of one gate over its trigger window.

    Valid for closed (decoherence-free) dynamics.  At exact resonance the
    propagator is independent of which trigger cycle the gate starts on, so
    a gate sequence composes as the product of per-gate propagators.
    """
    t = physics.transmon
    return _propagator(
        t.dim, t.omega10, t.alpha, physics.delta_theta(),
        omega_d, gate.trigger_phase, gate.pulse_count, gate.idle_cycles,
    )


def sequence_propagator(gates, physics: Physics, omega_d: float) -> np.ndarray:
    """Product of gate propagators, first gate applied first."""
    u = np.eye(physics.transmon.dim, dtype=complex)
    for g in gates:
        u = gate_propagator(g, physics, omega_d) @ u
    return u
