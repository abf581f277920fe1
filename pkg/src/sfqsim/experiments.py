"""Experiment suite: Rabi, chevron, Ramsey, polar (2D) Rabi, and staircase.

Every experiment sweeps a grid, simulates each point through the pulse-level
engine, and returns an :class:`ExperimentResult` holding the populations of
all levels (exposing leakage, not just P1).  Results are exact expectation
values by default; an optional binomial readout layer with per-point derived
seeds emulates finite-shot scatter without making results depend on the
evaluation order of the grid.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .engine import Physics, Timeline, simulate
from .sequencer import PulseTrain, make_gate, pulses_in_window

TWO_PI = 2.0 * math.pi

_POPULATION_TOL = 1e-9


@dataclass(frozen=True)
class SweepSpec:
    """One sweep axis: a name, an ordered value grid, and repetitions."""

    name: str
    values: np.ndarray
    repetitions: int = 1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"sweep '{self.name}' needs a non-empty 1-d value grid")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"sweep '{self.name}' contains non-finite values")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ExperimentResult:
    """Population grid over one or two sweep axes, plus the run configuration."""

    axes: tuple
    populations: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = tuple(len(ax) for ax in self.axes)
        if self.populations.shape[: len(expected)] != expected:
            raise ValueError(
                f"populations shape {self.populations.shape} does not match axes {expected}"
            )
        if self.populations.min() < -_POPULATION_TOL or self.populations.max() > 1 + _POPULATION_TOL:
            raise ValueError("populations outside [0, 1]")
        clipped = np.clip(self.populations, 0.0, 1.0)
        clipped.setflags(write=False)
        object.__setattr__(self, "populations", clipped)

    @property
    def dim(self) -> int:
        return self.populations.shape[-1]

    @property
    def p1(self) -> np.ndarray:
        return self.populations[..., 1]

    def write_csv(self, path) -> None:
        """Long-format CSV: one row per grid point, axis values then P0..P_{d-1}."""
        dim = self.dim
        header = [ax.name for ax in self.axes] + [f"p{k}" for k in range(dim)]
        grids = np.meshgrid(*[ax.values for ax in self.axes], indexing="ij")
        flat_axes = [g.reshape(-1) for g in grids]
        flat_pops = self.populations.reshape(-1, dim)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for i in range(flat_pops.shape[0]):
                cells = [f"{v:.17g}" for v in (a[i] for a in flat_axes)]
                cells += [f"{p:.17g}" for p in flat_pops[i]]
                fh.write(",".join(cells) + "\n")

    def write_metadata(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _physics_snapshot(physics: Physics) -> dict:
    out = {}
    for name in ("transmon", "coupling", "decoherence", "qp", "dispersion"):
        block = getattr(physics, name)
        out[name] = None if block is None else dataclasses.asdict(block)
    return out


def _base_metadata(physics: Physics, experiment: str, **extra) -> dict:
    md = {
        "experiment": experiment,
        "backend": backend.backend_name(),
        "physics": _physics_snapshot(physics),
        "delta_theta": physics.delta_theta(),
    }
    md.update(extra)
    return md


def _readout(populations: np.ndarray, shots, repetitions: int, seed) -> np.ndarray:
    """Optional binomial readout layer.

    Draws ``shots`` multinomial samples per repetition with a per-point
    pseudorandom stream derived from (seed, flat point index, repetition), so
    results are independent of any parallel evaluation schedule.
    """
    if shots is None:
        return populations
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    flat = populations.reshape(-1, populations.shape[-1])
    out = np.empty_like(flat)
    for idx in range(flat.shape[0]):
        p = np.clip(flat[idx], 0.0, None)
        p = p / p.sum()
        acc = np.zeros_like(p)
        for rep in range(repetitions):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx, rep)))
            acc += rng.multinomial(shots, p) / shots
        out[idx] = acc / repetitions
    return out.reshape(populations.shape)


def _rabi_populations(physics, durations, n, detuning, trigger_phase):
    """Shared single-column Rabi sweep (also the chevron inner loop)."""
    omega_d = physics.trigger_frequency(n, detuning)
    durations = np.asarray(durations, dtype=float)
    if np.any(np.diff(durations) < 0) or np.any(durations < 0):
        raise ValueError("durations must be non-negative and non-decreasing")
    count = pulses_in_window(float(durations.max(initial=0.0)), omega_d, trigger_phase)
    timeline = Timeline()
    timeline.add_train(
        PulseTrain(n=n, omega_d=omega_d, trigger_phase=trigger_phase, pulse_count=count)
    )
    result = simulate(timeline, physics, sample_times=durations)
    return result.populations


def run_rabi(
    physics: Physics,
    durations,
    *,
    n: int = 3,
    detuning: float = 0.0,
    trigger_phase: float = 0.0,
    shots=None,
    repetitions: int = 1,
    seed: int = 0,
) -> ExperimentResult:
    """Rabi oscillation vs drive duration at subharmonic n.

    ``detuning`` is the angular offset of the trigger from omega10/n (rad/s).
    A duration window of T delivers every pulse arriving in [0, T).
    """
    pops = _rabi_populations(physics, durations, n, detuning, trigger_phase)
    pops = _readout(pops, shots, repetitions, seed)
    axis = SweepSpec("duration_s", np.asarray(durations, dtype=float), repetitions)
    md = _base_metadata(
        physics, "rabi", subharmonic=n, detuning_rad_s=detuning,
        trigger_phase_rad=trigger_phase, shots=shots, seed=seed,
    )
    return ExperimentResult(axes=(axis,), populations=pops, metadata=md)


def run_rabi_bias(
    physics: Physics,
    bias_values,
    durations,
    *,
    n: int = 3,
    detuning: float = 0.0,
    bias_window=(0.7, 0.9),
    shots=None,
    repetitions: int = 1,
    seed: int = 0,
) -> ExperimentResult:
    """Rabi map vs driver bias current and duration.

    The converter bias axis is phenomenological: the driver emits its pulse
    train only while the bias (in units of the critical current) sits inside
    ``bias_window``, and is silent otherwise.  Converter electromagnetics are
    not modeled; the window edges are configuration values.
    """
    bias_values = np.asarray(bias_values, dtype=float)
    lo, hi = bias_window
    if not lo < hi:
        raise ValueError(f"bias_window must satisfy lo < hi, got {bias_window}")
    on_column = _rabi_populations(physics, durations, n, detuning, 0.0)
    off_column = np.zeros_like(on_column)
    off_column[:, 0] = 1.0
    rows = [on_column if lo <= b <= hi else off_column for b in bias_values]
    pops = _readout(np.stack(rows, axis=0), shots, repetitions, seed)
    axes = (
        SweepSpec("bias", bias_values, repetitions),
        SweepSpec("duration_s", np.asarray(durations, dtype=float), repetitions),
    )
    md = _base_metadata(
        physics, "rabi", subharmonic=n, detuning_rad_s=detuning,
        bias_window=list(bias_window), bias_model="binary window (phenomenological)",
        shots=shots, seed=seed,
    )
    return ExperimentResult(axes=axes, populations=pops, metadata=md)


def run_chevron(
    physics: Physics,
    detunings,
    durations,
    *,
    n: int = 3,
    shots=None,
    repetitions: int = 1,
    seed: int = 0,
) -> ExperimentResult:
    """2D Rabi interference map vs trigger detuning and duration.

    Each detuning column runs through the same code path as :func:`run_rabi`,
    so the zero-detuning column matches a run_rabi result bit for bit.
    """
    detunings = np.asarray(detunings, dtype=float)
    cols = [_rabi_populations(physics, durations, n, d, 0.0) for d in detunings]
    pops = np.stack(cols, axis=0)
    pops = _readout(pops, shots, repetitions, seed)
    axes = (
        SweepSpec("detuning_rad_s", detunings, repetitions),
        SweepSpec("duration_s", np.asarray(durations, dtype=float), repetitions),
    )
    md = _base_metadata(physics, "chevron", subharmonic=n, shots=shots, seed=seed)
    return ExperimentResult(axes=axes, populations=pops, metadata=md)


def _phase_matched_gap(delay, omega10, n_delta, t_ref_pulse, gap_start, trigger_offset):
    """Idle duration realizing an ideal Ramsey delay.

    The second pulse train is placed so that the qubit phase at its first
    pulse advances by exactly (n*omega_d - omega10)*delay relative to the
    first train's pulse: the sub-period placement residue is absorbed into
    the trigger phase program, which is how phase-coherent heterodyne control
    realizes fractional-period timing shifts.  The returned gap differs from
    the requested delay by at most half a qubit period.
    """
    target = (omega10 * (t_ref_pulse - gap_start - trigger_offset) + n_delta * delay) % TWO_PI
    k = round((omega10 * delay - target) / TWO_PI)
    gap = (TWO_PI * k + target) / omega10
    while gap < 0:
        gap += TWO_PI / omega10
    return gap


def run_ramsey(
    physics: Physics,
    delays,
    *,
    n: int = 3,
    detuning: float = 0.0,
    shots=None,
    repetitions: int = 1,
    seed: int = 0,
) -> ExperimentResult:
    """Ramsey fringes: two pi/2 trains separated by a variable idle.

    With the trigger detuned by ``detuning`` (rad/s) from omega10/n the
    fringe oscillates at n*detuning; residual dephasing damps the envelope.
    """
    delays = np.asarray(delays, dtype=float)
    if np.any(delays < 0):
        raise ValueError("delays must be non-negative")
    omega10 = physics.transmon.omega10
    omega_d = physics.trigger_frequency(n, detuning)
    half_pi = make_gate("X/2", physics.delta_theta(), n)
    n_delta = n * omega_d - omega10
    trigger_offset = half_pi.trigger_phase / omega_d

    dim = physics.transmon.dim
    pops = np.empty((delays.size, dim))
    for i, delay in enumerate(delays):
        timeline = Timeline()
        first = timeline.add_gate(half_pi, omega_d)
        t_ref = first.start_time + trigger_offset
        gap = _phase_matched_gap(float(delay), omega10, n_delta, t_ref, timeline.cursor, trigger_offset)
        timeline.advance(gap)
        timeline.add_gate(half_pi, omega_d)
        pops[i] = simulate(timeline, physics).final_state.populations
    pops = _readout(pops, shots, repetitions, seed)
    axis = SweepSpec("delay_s", delays, repetitions)
    md = _base_metadata(
        physics, "ramsey", subharmonic=n, detuning_rad_s=detuning, shots=shots, seed=seed,
    )
    return ExperimentResult(axes=(axis,), populations=pops, metadata=md)


def run_rabi2d(
    physics: Physics,
    phases,
    durations,
    *,
    n: int = 3,
    shots=None,
    repetitions: int = 1,
    seed: int = 0,
) -> ExperimentResult:
    """Polar Rabi map: pi/2 - variable rotation - pi/2.

    The middle train's trigger phase (polar angle) and window duration
    (radius) are swept while the bracketing pi/2 gates stay phase-fixed.  The
    control axis rotates n times faster than the trigger phase, and the
    sequence cannot tell positive from negative rotations, so the map carries
    a 2n-fold symmetry.
    """
    phases = np.asarray(phases, dtype=float)
    durations = np.asarray(durations, dtype=float)
    if np.any(durations < 0):
        raise ValueError("durations must be non-negative")
    omega_d = physics.trigger_frequency(n)
    period = TWO_PI / omega_d
    half_pi = make_gate("X/2", physics.delta_theta(), n)

    dim = physics.transmon.dim
    pops = np.empty((phases.size, durations.size, dim))
    for i, phase in enumerate(phases):
        for j, dur in enumerate(durations):
            timeline = Timeline()
            timeline.add_gate(half_pi, omega_d)
            count = pulses_in_window(float(dur), omega_d, float(phase))
            slot_cycles = pulses_in_window(float(dur), omega_d, 0.0)
            timeline.add_train(
                PulseTrain(
                    n=n, omega_d=omega_d, trigger_phase=float(phase),
                    pulse_count=count, start_time=timeline.cursor,
                )
            )
            timeline.cursor = timeline.trains[-1].start_time + slot_cycles * period
            timeline.add_gate(half_pi, omega_d)
            pops[i, j] = simulate(timeline, physics).final_state.populations
    pops = _readout(pops, shots, repetitions, seed)
    axes = (
        SweepSpec("trigger_phase_rad", phases, repetitions),
        SweepSpec("duration_s", durations, repetitions),
    )
    md = _base_metadata(physics, "rabi2d", subharmonic=n, shots=shots, seed=seed)
    return ExperimentResult(axes=axes, populations=pops, metadata=md)


def run_staircase(
    physics: Physics,
    durations,
    *,
    n: int = 41,
    detuning: float = 0.0,
    shots=None,
    repetitions: int = 1,
    seed: int = 0,
) -> ExperimentResult:
    """Dilute-train Rabi flop resolving single-pulse population steps.

    With decoherence disabled P1(t) is exactly flat between pulse arrivals;
    every step coincides with a pulse time.
    """
    result = run_rabi(
        physics, durations, n=n, detuning=detuning,
        shots=shots, repetitions=repetitions, seed=seed,
    )
    md = dict(result.metadata)
    md["experiment"] = "staircase"
    return ExperimentResult(axes=result.axes, populations=result.populations, metadata=md)
