"""SFQ pulse scheduling, gate calibration, and Clifford compilation.

A gate is realized as a resonant train of identical kicks: ``pulse_count``
pulses at the subharmonic trigger frequency ``omega_d = omega10/n``, with the
equatorial control axis selected by the trigger phase.  A trigger-phase shift
``dphi`` rotates the control axis by ``n*dphi``; the zero-phase train is
labeled X by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# Canonical single-qubit gate labels.  Positive kick angle tips |0> toward |1>
# about the zero-phase axis; negative-axis gates use a trigger-phase offset of
# pi/n (axis angle pi), never a negative kick angle.
GATE_LABELS = ("I", "X", "-X", "X/2", "-X/2", "Y", "-Y", "Y/2", "-Y/2")

# Rotation magnitude and control-axis angle (relative to X) per label.
_GATE_ANGLE = {
    "I": 0.0,
    "X": math.pi,
    "-X": math.pi,
    "X/2": math.pi / 2,
    "-X/2": math.pi / 2,
    "Y": math.pi,
    "-Y": math.pi,
    "Y/2": math.pi / 2,
    "-Y/2": math.pi / 2,
}
_GATE_AXIS = {
    "I": 0.0,
    "X": 0.0,
    "-X": math.pi,
    "X/2": 0.0,
    "-X/2": math.pi,
    "Y": math.pi / 2,
    "-Y": 3 * math.pi / 2,
    "Y/2": math.pi / 2,
    "-Y/2": 3 * math.pi / 2,
}

# Cost of one gate in a Clifford decomposition, in units of a pi/2 train.
_GATE_COST = {"X": 2, "Y": 2, "X/2": 1, "-X/2": 1, "Y/2": 1, "-Y/2": 1}

# Basis available to the Clifford compiler ("I" is free).
CLIFFORD_BASIS = ("X", "Y", "X/2", "-X/2", "Y/2", "-Y/2")

CLIFFORD_COUNT = 24


@dataclass(frozen=True)
class PulseTrain:
    """Uniform train of SFQ pulses from a triggered dc/SFQ converter.

    Pulse k arrives at ``start_time + (2 pi k + trigger_phase)/omega_d`` for
    k = 0..pulse_count-1; the interpulse spacing is exactly ``2 pi/omega_d``.

    Parameters
    ----------
    n : int
        Subharmonic index (pulses arrive every n qubit periods on resonance).
    omega_d : float
        Trigger angular frequency, rad/s.
    trigger_phase : float
        Trigger phase in [0, 2 pi); values outside are wrapped.
    pulse_count : int
        Number of pulses (>= 0).
    start_time : float
        Time origin of the train, s.
    """

    n: int
    omega_d: float
    trigger_phase: float = 0.0
    pulse_count: int = 0
    start_time: float = 0.0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"subharmonic index must be an integer >= 1, got {self.n}")
        if not self.omega_d > 0:
            raise ValueError(f"omega_d must be positive, got {self.omega_d}")
        if not isinstance(self.pulse_count, (int, np.integer)) or self.pulse_count < 0:
            raise ValueError(f"pulse_count must be an integer >= 0, got {self.pulse_count}")
        object.__setattr__(self, "trigger_phase", float(self.trigger_phase) % TWO_PI)

    @property
    def period(self) -> float:
        return TWO_PI / self.omega_d

    @property
    def end_time(self) -> float:
        """End of the triggered window: pulse_count full trigger cycles."""
        return self.start_time + self.pulse_count * self.period

    @property
    def trigger_cycles(self) -> int:
        return self.pulse_count


def pulse_times(train: PulseTrain) -> np.ndarray:
    """Strictly increasing pulse arrival times of the train, s."""
    k = np.arange(train.pulse_count, dtype=float)
    return train.start_time + (TWO_PI * k + train.trigger_phase) / train.omega_d


def pulses_in_window(duration: float, omega_d: float, trigger_phase: float = 0.0) -> int:
    """Number of pulses with arrival time inside [0, duration).

    A pulse landing exactly on the window edge (within 1e-9 relative) is
    excluded, so a window of exactly k trigger periods at zero phase holds k
    pulses.
    """
    if duration <= 0:
        return 0
    x = duration * omega_d / TWO_PI - (trigger_phase % TWO_PI) / TWO_PI
    count = math.ceil(x - 1e-9 * max(1.0, abs(x)))
    return max(0, count)


def axis_angle(n: int, omega10: float, tau: float) -> float:
    """Equatorial control-axis angle (rad, relative to X) for a timing shift.

    A train shifted in time by ``tau`` meets the qubit phase ``omega10*tau``
    later, so the control axis rotates by ``(omega10*tau) mod 2 pi``.  With
    the shift programmed as a trigger-phase offset ``dphi`` (tau = dphi /
    omega_d at omega_d = omega10/n) this equals ``n*dphi``: subharmonic drive
    gives the phase knob an n-fold lever arm, and a shift by one full qubit
    period (dphi = 2 pi/n) maps the train back onto the same axis.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"subharmonic index must be an integer >= 1, got {n}")
    return (omega10 * tau) % TWO_PI


class GateCalibration(NamedTuple):
    pulse_count: int
    residual: float


def calibrate_gate(target_angle: float, delta_theta: float) -> GateCalibration:
    """Pulse count realizing a target rotation, plus the rounding residual.

    Returns ``round(target_angle/delta_theta)`` and the leftover rotation
    ``pulse_count*delta_theta - target_angle`` (magnitude at most
    delta_theta/2).  The residual is carried so benchmarking can separate
    rounding error from decoherence.
    """
    if delta_theta <= 0:
        raise ValueError(f"delta_theta must be positive, got {delta_theta}")
    if target_angle < 0:
        raise ValueError(f"target_angle must be non-negative, got {target_angle}")
    count = int(round(target_angle / delta_theta))
    return GateCalibration(count, count * delta_theta - target_angle)


@dataclass(frozen=True)
class GateDef:
    """A calibrated SFQ gate: label, pulse count, trigger phase, subharmonic.

    ``idle_cycles`` gives the identity gate a nonzero duration (in trigger
    cycles) when hardware-matched timing is wanted; it is ignored for gates
    that emit pulses.
    """

    label: str
    pulse_count: int
    trigger_phase: float
    n: int
    idle_cycles: int = 0

    def __post_init__(self):
        if self.label not in GATE_LABELS:
            raise ValueError(f"unknown gate label {self.label!r}")
        if self.pulse_count < 0:
            raise ValueError(f"pulse_count must be >= 0, got {self.pulse_count}")
        if self.idle_cycles < 0:
            raise ValueError(f"idle_cycles must be >= 0, got {self.idle_cycles}")
        object.__setattr__(self, "trigger_phase", float(self.trigger_phase) % TWO_PI)

    @property
    def window_cycles(self) -> int:
        """Trigger cycles the gate occupies on the clock."""
        return self.pulse_count if self.pulse_count > 0 else self.idle_cycles


def gate_angle(label: str) -> float:
    """Rotation magnitude of a gate label, rad."""
    try:
        return _GATE_ANGLE[label]
    except KeyError:
        raise ValueError(f"unknown gate label {label!r}") from None


def gate_axis(label: str) -> float:
    """Control-axis angle of a gate label relative to X, rad."""
    try:
        return _GATE_AXIS[label]
    except KeyError:
        raise ValueError(f"unknown gate label {label!r}") from None


def make_gate(label: str, delta_theta: float, n: int, identity_cycles: int = 0) -> GateDef:
    """Calibrate one gate: counts from the kick angle, phase from the axis."""
    angle = gate_angle(label)
    count = 0 if label == "I" else calibrate_gate(angle, delta_theta).pulse_count
    phase = gate_axis(label) / n
    idle = identity_cycles if label == "I" else 0
    return GateDef(label=label, pulse_count=count, trigger_phase=phase, n=n,
                   idle_cycles=idle)


def make_gateset(delta_theta: float, n: int, identity_cycles: int = 0) -> dict:
    """All nine labeled gates calibrated for one kick angle and subharmonic."""
    return {label: make_gate(label, delta_theta, n, identity_cycles)
            for label in GATE_LABELS}


def count_phase_slips(trigger_cycles: int, slips_per_cycle: int = 4) -> int:
    """Driver phase slips for a number of trigger cycles (4 per cycle: one
    per junction of the dc/SFQ converter)."""
    if trigger_cycles < 0:
        raise ValueError(f"trigger_cycles must be >= 0, got {trigger_cycles}")
    if slips_per_cycle < 1:
        raise ValueError(f"slips_per_cycle must be >= 1, got {slips_per_cycle}")
    return slips_per_cycle * trigger_cycles


# ---------------------------------------------------------------------------
# Single-qubit Clifford group (24 elements) over the SFQ gate basis.
# ---------------------------------------------------------------------------


def _rot(axis: str, angle: float) -> np.ndarray:
    c = math.cos(angle / 2)
    s = math.sin(angle / 2)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    raise ValueError(axis)


# Ideal two-level unitary of each gate label in the control frame (X = zero
# trigger phase).
_GATE_UNITARY = {
    "I": np.eye(2, dtype=complex),
    "X": _rot("x", math.pi),
    "-X": _rot("x", -math.pi),
    "X/2": _rot("x", math.pi / 2),
    "-X/2": _rot("x", -math.pi / 2),
    "Y": _rot("y", math.pi),
    "-Y": _rot("y", -math.pi),
    "Y/2": _rot("y", math.pi / 2),
    "-Y/2": _rot("y", -math.pi / 2),
}


def gate_unitary_ideal(label: str) -> np.ndarray:
    """Ideal two-level unitary of a gate label (control frame)."""
    try:
        return _GATE_UNITARY[label].copy()
    except KeyError:
        raise ValueError(f"unknown gate label {label!r}") from None


def _canonical_key(u: np.ndarray) -> tuple:
    """Phase-invariant rounded key for a 2x2 unitary.

    The phase reference is the first entry within 1e-6 of the maximum
    magnitude, so equal-magnitude entries (ubiquitous in the Clifford group)
    pick the same pivot for every representative of an element.
    """
    flat = u.ravel()
    mags = np.abs(flat)
    k = int(np.argmax(mags >= mags.max() - 1e-6))
    phase = flat[k] / mags[k]
    v = np.round(flat / phase, 6) + 0.0  # +0.0 normalizes -0.0
    return tuple((z.real, z.imag) for z in v)


@lru_cache(maxsize=1)
def _clifford_group():
    """Generate the 24 Cliffords by closure of {X/2, Y/2}, BFS order.

    Index 0 is the identity.  Returns (unitaries, key->index dict).
    """
    gens = [_GATE_UNITARY["X/2"], _GATE_UNITARY["Y/2"]]
    unitaries = [np.eye(2, dtype=complex)]
    index = {_canonical_key(unitaries[0]): 0}
    frontier = [unitaries[0]]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                w = g @ u
                key = _canonical_key(w)
                if key not in index:
                    index[key] = len(unitaries)
                    unitaries.append(w)
                    nxt.append(w)
        frontier = nxt
    if len(unitaries) != CLIFFORD_COUNT:
        raise RuntimeError(f"Clifford closure produced {len(unitaries)} elements")
    return tuple(unitaries), index


def clifford_unitaries() -> tuple:
    """The 24 Clifford unitaries (2x2, defined up to global phase)."""
    return _clifford_group()[0]


def clifford_index_of(u: np.ndarray) -> int:
    """Index of a 2x2 unitary in the Clifford table (up to global phase)."""
    key = _canonical_key(np.asarray(u, dtype=complex))
    try:
        return _clifford_group()[1][key]
    except KeyError:
        raise ValueError("unitary is not an element of the Clifford group") from None


@lru_cache(maxsize=1)
def clifford_product_table() -> np.ndarray:
    """table[i, j] = index of C_i @ C_j."""
    us, index = _clifford_group()
    table = np.empty((CLIFFORD_COUNT, CLIFFORD_COUNT), dtype=np.int64)
    for i, ui in enumerate(us):
        for j, uj in enumerate(us):
            table[i, j] = index[_canonical_key(ui @ uj)]
    table.setflags(write=False)
    return table


@lru_cache(maxsize=1)
def clifford_inverse_table() -> np.ndarray:
    us, index = _clifford_group()
    inv = np.empty(CLIFFORD_COUNT, dtype=np.int64)
    for i, u in enumerate(us):
        inv[i] = index[_canonical_key(u.conj().T)]
    inv.setflags(write=False)
    return inv


@lru_cache(maxsize=1)
def clifford_decompositions() -> tuple:
    """Fixed decomposition of each Clifford into at most 3 basis gates.

    Words are chosen to minimize total pulse cost (pi/2 trains count 1, pi
    trains count 2), then word length, then lexicographic order over the
    basis; ties are therefore deterministic.  The identity is the empty word.
    Word order is circuit order: the first gate is applied first.
    """
    us, index = _clifford_group()
    best: list = [None] * CLIFFORD_COUNT

    def consider(word, u):
        idx = index[_canonical_key(u)]
        cost = sum(_GATE_COST[g] for g in word)
        cand = (cost, len(word), tuple(CLIFFORD_BASIS.index(g) for g in word))
        cur = best[idx]
        if cur is None or cand < cur[0]:
            best[idx] = (cand, tuple(word))

    best[0] = ((0, 0, ()), ())
    for g1 in CLIFFORD_BASIS:
        u1 = _GATE_UNITARY[g1]
        consider([g1], u1)
        for g2 in CLIFFORD_BASIS:
            u2 = _GATE_UNITARY[g2] @ u1
            consider([g1, g2], u2)
            for g3 in CLIFFORD_BASIS:
                u3 = _GATE_UNITARY[g3] @ u2
                consider([g1, g2, g3], u3)
    words = tuple(entry[1] for entry in best)
    if any(w is None for w in best):
        raise RuntimeError("Clifford decomposition table incomplete")
    return words


def compile_clifford(index: int, basis_gates) -> list:
    """Physical gates realizing Clifford ``index`` (0..23), at most 3.

    ``basis_gates`` is a collection of GateDef covering the compiler basis
    {X, Y, +/-X/2, +/-Y/2}; gates are matched by label.  The identity
    Clifford compiles to an empty list.
    """
    if not 0 <= index < CLIFFORD_COUNT:
        raise ValueError(f"Clifford index must be in 0..{CLIFFORD_COUNT - 1}, got {index}")
    by_label = {g.label: g for g in basis_gates}
    word = clifford_decompositions()[index]
    missing = sorted(set(word) - set(by_label))
    if missing:
        raise ValueError(f"basis_gates is missing labels {missing}")
    return [by_label[label] for label in word]


def clifford_label_index(label: str) -> int:
    """Clifford index of a basis gate label (for interleaved benchmarking)."""
    return clifford_index_of(_GATE_UNITARY[label])


@dataclass(frozen=True)
class CliffordSequence:
    """An RB sequence: Clifford indices (recovery last) and compiled gates.

    ``indices`` contains the random Cliffords, interleaved-gate Cliffords when
    applicable, and the final recovery; ``compiled`` is the flattened list of
    physical gates in application order.  ``boundaries[i]`` is the index into
    ``compiled`` where Clifford i ends (used to inject per-Clifford error
    channels in tests).
    """

    indices: tuple
    compiled: tuple
    boundaries: tuple
    m: int
    interleaved: Optional[str] = None


def sequence_product_index(indices: Sequence[int]) -> int:
    """Group product of a Clifford index sequence (first applied first)."""
    table = clifford_product_table()
    acc = 0
    for idx in indices:
        acc = table[idx, acc]
    return int(acc)


# ---------------------------------------------------------------------------
# Audit exports
# ---------------------------------------------------------------------------


def gate_table_text(gateset: dict) -> str:
    """Deterministic structured-text table of a calibrated gate set."""
    lines = ["label      pulses  trigger_phase_rad     axis_angle_rad"]
    for label in GATE_LABELS:
        g = gateset[label]
        lines.append(
            f"{label:<10s} {g.pulse_count:>6d}  {g.trigger_phase:<20.12f}  {gate_axis(label):<.12f}"
        )
    return "\n".join(lines) + "\n"


def clifford_table_text() -> str:
    """Deterministic structured-text table of the Clifford decompositions."""
    words = clifford_decompositions()
    inv = clifford_inverse_table()
    lines = ["index  inverse  decomposition"]
    for i, word in enumerate(words):
        text = " ".join(word) if word else "(identity)"
        lines.append(f"{i:<6d} {int(inv[i]):<8d} {text}")
    return "\n".join(lines) + "\n"
