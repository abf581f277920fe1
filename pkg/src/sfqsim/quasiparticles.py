"""Quasiparticle poisoning: generation by driver phase slips, trapping-limited
recovery, the Poisson-averaged decay law, and the loss-dispersion relation.

Each trigger cycle of the driver slips the phase of all four converter
junctions, generating quasiparticles that couple to the qubit at a fixed
yield per slip; excess quasiparticles are removed by single-particle trapping
at rate ``s``.  The mean number n(t) obeys the linear rate equation

    dn/dt = eta * r_slip(t) - s * (n - background),

which is solved exactly as a piecewise exponential.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import ELEMENTARY_CHARGE, HBAR
from .fitting import FitError, FitResult, solve_least_squares
from .transmon import DecoherenceParams

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QPModel:
    """Quasiparticle generation and trapping parameters.

    eta : quasiparticles coupled to the qubit per junction phase slip.
    turn_on_slips : slips before generation becomes effective (0 = pure
        linear model; the threshold variant models the slow initial turn-on
        of phonon-mediated poisoning).
    trapping_rate : single-particle trapping rate s, 1/s.
    slips_per_cycle : phase slips per trigger cycle (one per converter JJ).
    n_qp_background : equilibrium mean quasiparticle number.
    """

    eta: float = 1.6e-3
    turn_on_slips: int = 0
    trapping_rate: float = 1.0 / 17.6e-6
    slips_per_cycle: int = 4
    n_qp_background: float = 0.10

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.turn_on_slips < 0:
            raise ValueError(f"turn_on_slips must be >= 0, got {self.turn_on_slips}")
        if not self.trapping_rate > 0:
            raise ValueError(f"trapping_rate must be positive, got {self.trapping_rate}")
        if self.slips_per_cycle < 1:
            raise ValueError(f"slips_per_cycle must be >= 1, got {self.slips_per_cycle}")
        if self.n_qp_background < 0:
            raise ValueError(f"n_qp_background must be >= 0, got {self.n_qp_background}")

    @property
    def model_name(self) -> str:
        return "threshold" if self.turn_on_slips > 0 else "linear"


@dataclass(frozen=True)
class QPDecayModel:
    """Parameters of the poisoned energy-decay law.

    P1(t) = exp[n_qp (exp(-t/t1_qp) - 1) - t/t1_r]: a Poisson-distributed
    number of quasiparticles each adds decay rate 1/t1_qp on top of the
    residual rate 1/t1_r.  P1(0) = 1 by construction.
    """

    n_qp: float
    t1_qp: float
    t1_r: float

    def __post_init__(self):
        if self.n_qp < 0:
            raise ValueError(f"n_qp must be >= 0, got {self.n_qp}")
        if not self.t1_qp > 0:
            raise ValueError(f"t1_qp must be positive, got {self.t1_qp}")
        if not self.t1_r > 0:
            raise ValueError(f"t1_r must be positive, got {self.t1_r}")


@dataclass(frozen=True)
class DispersionParams:
    """Gap energy and empirical scale for the loss-dispersion ratio.

    delta : superconducting gap energy, J (default: 180 ueV, thin-film Al).
    empirical_factor : measured slope excess over the low-energy theory.
    """

    delta: float = 180e-6 * ELEMENTARY_CHARGE
    empirical_factor: float = 1.5

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.empirical_factor > 0:
            raise ValueError(f"empirical_factor must be positive, got {self.empirical_factor}")


def qp_added(n_slips: int, model: QPModel) -> float:
    """Mean quasiparticle number added by a burst of phase slips.

    Linear model: eta*n_slips.  With ``turn_on_slips`` N0 > 0 the first N0
    slips contribute nothing: eta*max(0, n_slips - N0).
    """
    if n_slips < 0:
        raise ValueError(f"n_slips must be >= 0, got {n_slips}")
    return model.eta * max(0, n_slips - model.turn_on_slips)


def qp_relax(n_qp: float, dt: float, model: QPModel):
    """Trapping-limited relaxation toward the background over time dt."""
    if np.any(np.asarray(dt) < 0):
        raise ValueError("dt must be non-negative")
    bg = model.n_qp_background
    return bg + (n_qp - bg) * np.exp(-model.trapping_rate * np.asarray(dt, dtype=float))


class QPTrajectory:
    """Exact piecewise-exponential solution of the quasiparticle rate equation.

    Built from drive windows (t_start, t_end, omega_d); within a window the
    slip rate is ``slips_per_cycle * omega_d/(2 pi)``, outside it is zero.
    """

    def __init__(self, windows, model: QPModel, n_initial: float | None = None, t_start: float = 0.0):
        self.model = model
        n0 = model.n_qp_background if n_initial is None else float(n_initial)
        edges = [float(t_start)]
        for (a, b, _w) in windows:
            if b < a:
                raise ValueError(f"window end {b} before start {a}")
        # clip to the trajectory start; drop windows that end before it
        windows = sorted(
            ((max(a, t_start), b, w) for (a, b, w) in windows if b > t_start),
            key=lambda w: w[0],
        )
        for (a, b, _w) in windows:
            if a < edges[-1] - 1e-30:
                raise ValueError("drive windows must not overlap")
            edges.extend((a, b))
        # segment i spans [edges[i], edges[i+1]) with constant slip rate
        rates = []
        wi = 0
        for i in range(len(edges) - 1):
            mid = 0.5 * (edges[i] + edges[i + 1])
            rate = 0.0
            for (a, b, w) in windows:
                if a <= mid < b:
                    rate = model.slips_per_cycle * w / TWO_PI
                    break
            rates.append(rate)
        self._edges = np.asarray(edges, dtype=float)
        self._rates = np.asarray(rates, dtype=float)
        # steady state per segment and exact value at each edge
        s = model.trapping_rate
        self._n_ss = model.n_qp_background + model.eta * self._rates / s
        n_edge = np.empty(len(edges))
        n_edge[0] = n0
        for i in range(len(rates)):
            dt = self._edges[i + 1] - self._edges[i]
            n_edge[i + 1] = self._n_ss[i] + (n_edge[i] - self._n_ss[i]) * math.exp(-s * dt)
        self._n_edge = n_edge

    @property
    def end_time(self) -> float:
        return float(self._edges[-1])

    def value(self, t):
        """Mean quasiparticle number at time(s) t (scalar or array)."""
        t = np.asarray(t, dtype=float)
        s = self.model.trapping_rate
        if self._rates.size == 0:
            # no drive at all: pure relaxation from the initial value
            bg = self.model.n_qp_background
            out = bg + (self._n_edge[0] - bg) * np.exp(-s * (t - self._edges[0]))
            return out if out.ndim else float(out)
        idx = np.clip(np.searchsorted(self._edges, t, side="right") - 1, 0, len(self._edges) - 2)
        # beyond the last edge the drive is off: relax toward background
        n_ss = np.where(t >= self._edges[-1], self.model.n_qp_background, self._n_ss[idx])
        n0 = np.where(t >= self._edges[-1], self._n_edge[-1], self._n_edge[idx])
        t0 = np.where(t >= self._edges[-1], self._edges[-1], self._edges[idx])
        out = n_ss + (n0 - n_ss) * np.exp(-s * (t - t0))
        return out if out.ndim else float(out)


def qp_trajectory(schedule, model: QPModel, *, n_initial: float | None = None, t_start: float = 0.0) -> QPTrajectory:
    """Trajectory of the mean quasiparticle number for a pulse schedule.

    ``schedule`` is an iterable of PulseTrain (drive active over the
    triggered window of each train) or of raw (t_start, t_end, omega_d)
    tuples.
    """
    windows = []
    for item in schedule:
        if isinstance(item, tuple):
            windows.append(item)
        else:
            windows.append((item.start_time, item.end_time, item.omega_d))
    return QPTrajectory(windows, model, n_initial=n_initial, t_start=t_start)


def decay_law(t, model: QPDecayModel):
    """Excited-state survival after poisoning: Poisson-averaged decay."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    out = np.exp(model.n_qp * (np.exp(-t / model.t1_qp) - 1.0) - t / model.t1_r)
    return out if out.ndim else float(out)


def dispersion_ratio(omega10: float, params: DispersionParams) -> float:
    """Ratio of quasiparticle-induced frequency shift to added decay rate.

    Returns empirical_factor * (-1/2) (1 + pi sqrt(hbar omega10/(2 delta))).
    Negative: quasiparticles both damp and red-shift the qubit.
    """
    if not omega10 > 0:
        raise ValueError(f"omega10 must be positive, got {omega10}")
    x = HBAR * omega10 / (2.0 * params.delta)
    if x >= 1.0:
        warnings.warn(
            "hbar*omega10 >= 2*delta: the quasiparticle dispersion relation is "
            "outside its validity range",
            stacklevel=2,
        )
    return params.empirical_factor * (-0.5) * (1.0 + math.pi * math.sqrt(x))


def rates_from_nqp(
    n_qp: float,
    dec: DecoherenceParams,
    disp: DispersionParams,
    omega10: float,
) -> tuple:
    """(gamma1, delta_omega) for a given mean quasiparticle number.

    gamma1 = 1/t1_residual + n_qp/t1_per_qp; the frequency shift is the
    loss-dispersion ratio times the quasiparticle decay contribution.
    """
    gamma_qp = n_qp / dec.t1_per_qp
    gamma1 = 1.0 / dec.t1_residual + gamma_qp
    delta_omega = dispersion_ratio(omega10, disp) * dec.qp_dispersion_factor * gamma_qp
    return gamma1, delta_omega


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------

_DECAY_PARAMS = ("n_qp", "t1_qp", "t1_r")


def _decay_curve(t, n_qp, t1_qp, t1_r):
    return np.exp(n_qp * (np.exp(-t / t1_qp) - 1.0) - t / t1_r)


def _decay_initial_guess(t, p):
    p = np.clip(p, 1e-12, None)
    y = np.log(p)
    # residual rate from the tail
    ntail = max(3, len(t) // 3)
    slope = np.polyfit(t[-ntail:], y[-ntail:], 1)[0]
    t1_r0 = -1.0 / slope if slope < 0 else 10.0 * (t[-1] - t[0] + 1e-30)
    t1_r0 = max(t1_r0, 1e-3 * (t[-1] + 1e-30))
    # quasiparticle part saturates at -n_qp
    z = y + t / t1_r0
    n0 = max(1e-3, -float(np.min(z)))
    # time constant from where z falls to (1 - 1/e) of its depth
    target = -n0 * (1.0 - math.exp(-1.0))
    below = np.nonzero(z <= target)[0]
    t1_qp0 = float(t[below[0]]) if below.size else 0.3 * float(t[-1])
    t1_qp0 = max(t1_qp0, 1e-6 * float(t[-1]))
    return n0, t1_qp0, t1_r0


def fit_decay(times, p1, *, fix: dict | None = None) -> FitResult:
    """Fit the poisoned decay law to (t, P1) samples.

    ``fix`` maps any of {"n_qp", "t1_qp", "t1_r"} to a frozen value; the
    remaining parameters are fitted with positivity bounds.  At least five
    samples are required, and the three-parameter problem needs data spanning
    a substantial decay to be identifiable; non-convergence raises FitError
    with diagnostics.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(p1, dtype=float)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("times and p1 must be 1-d arrays of equal length")
    if t.size < 5:
        raise FitError(f"need at least 5 samples, got {t.size}")
    fix = dict(fix or {})
    unknown = set(fix) - set(_DECAY_PARAMS)
    if unknown:
        raise ValueError(f"unknown fixed parameters {sorted(unknown)}")
    free = [name for name in _DECAY_PARAMS if name not in fix]
    if not free:
        raise ValueError("at least one parameter must be free")
    if np.ptp(p) < 1e-12:
        raise FitError("degenerate data: P1 has no variation over the time span")

    guess = dict(zip(_DECAY_PARAMS, _decay_initial_guess(t, p)))
    guess.update(fix)
    x0 = [guess[name] for name in free]
    lower = [0.0 if name == "n_qp" else 1e-30 for name in free]
    upper = [np.inf] * len(free)

    def residual(x):
        full = dict(fix)
        full.update(zip(free, x))
        return _decay_curve(t, full["n_qp"], full["t1_qp"], full["t1_r"]) - p

    result = solve_least_squares(residual, x0, (lower, upper), free, x_scale=np.abs(x0))
    params = dict(fix)
    params.update(result.params)
    stderr = {name: 0.0 for name in fix}
    stderr.update(result.stderr)
    return FitResult(
        params={name: params[name] for name in _DECAY_PARAMS},
        stderr={name: stderr[name] for name in _DECAY_PARAMS},
        residual_norm=result.residual_norm,
        n_points=result.n_points,
        n_free=result.n_free,
        success=result.success,
        message=result.message,
        covariance=result.covariance,
    )


def fit_decay_pair(times_a, p1_a, times_b, p1_b, *, fix: dict | None = None) -> FitResult:
    """Joint fit of a poisoned and an unpoisoned decay curve.

    The two curves share t1_qp and t1_r; each keeps its own quasiparticle
    number (``n_qp_a``, ``n_qp_b``).  This is the identifiable way to extract
    a weak poisoning signal: the pair pins the shared time constants.
    """
    ta = np.asarray(times_a, dtype=float)
    pa = np.asarray(p1_a, dtype=float)
    tb = np.asarray(times_b, dtype=float)
    pb = np.asarray(p1_b, dtype=float)
    if ta.size < 5 or tb.size < 5:
        raise FitError("need at least 5 samples per curve")
    fix = dict(fix or {})
    names = ["n_qp_a", "n_qp_b", "t1_qp", "t1_r"]
    free = [n for n in names if n not in fix]

    ga = _decay_initial_guess(ta, pa)
    gb = _decay_initial_guess(tb, pb)
    guess = {"n_qp_a": ga[0], "n_qp_b": gb[0], "t1_qp": ga[1], "t1_r": gb[2]}
    guess.update(fix)
    x0 = [guess[n] for n in free]
    lower = [0.0 if n.startswith("n_qp") else 1e-30 for n in free]

    def residual(x):
        full = dict(fix)
        full.update(zip(free, x))
        ra = _decay_curve(ta, full["n_qp_a"], full["t1_qp"], full["t1_r"]) - pa
        rb = _decay_curve(tb, full["n_qp_b"], full["t1_qp"], full["t1_r"]) - pb
        return np.concatenate([ra, rb])

    result = solve_least_squares(residual, x0, (lower, [np.inf] * len(free)), free, x_scale=np.abs(x0))
    params = dict(fix)
    params.update(result.params)
    stderr = {n: 0.0 for n in fix}
    stderr.update(result.stderr)
    return FitResult(
        params={n: params[n] for n in names},
        stderr={n: stderr[n] for n in names},
        residual_norm=result.residual_norm,
        n_points=result.n_points,
        n_free=result.n_free,
        success=result.success,
        message=result.message,
        covariance=result.covariance,
    )


def fit_recovery(times, n_qp_values) -> FitResult:
    """Fit an exponential trapping recovery n(t) = bg + A exp(-s t).

    Returns parameters {"amplitude", "trapping_rate", "background"}.
    """
    t = np.asarray(times, dtype=float)
    n = np.asarray(n_qp_values, dtype=float)
    if t.size < 4:
        raise FitError(f"need at least 4 samples, got {t.size}")
    bg0 = max(float(np.min(n)), 1e-6)
    a0 = max(float(n[0] - bg0), 1e-6)
    span = float(t[-1] - t[0])
    s0 = 2.0 / span if span > 0 else 1.0

    def residual(x):
        a, s, bg = x
        return bg + a * np.exp(-s * t) - n

    return solve_least_squares(
        residual,
        [a0, s0, bg0],
        ([0.0, 1e-30, 0.0], [np.inf, np.inf, np.inf]),
        ("amplitude", "trapping_rate", "background"),
        x_scale=[max(a0, 1e-6), s0, max(bg0, 1e-6)],
    )
