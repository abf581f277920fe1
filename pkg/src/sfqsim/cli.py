"""Command-line front end: one subcommand per experiment.

Every run writes, inside the requested output directory only: a long-format
CSV of results, a JSON metadata sidecar embedding the full normalized
configuration (round-trippable through the config parser), and a
human-readable summary.  Identical (config, seed) reruns produce identical
CSV bytes on one platform.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

import numpy as np

from . import __version__, backend
from .config import EXPERIMENTS, ConfigError, RunConfig, parse_config
from .experiments import (
    run_chevron,
    run_rabi,
    run_rabi_bias,
    run_rabi2d,
    run_ramsey,
    run_staircase,
)
from .fitting import FitError
from .quasiparticles import (
    fit_decay,
    fit_recovery,
    qp_added,
    qp_relax,
    qp_trajectory,
    dispersion_ratio,
    rates_from_nqp,
)
from .rb import RBConfig, extract_fidelity, fit_depolarizing, rb_report, run_rb
from .sequencer import clifford_table_text, gate_table_text


def _write_csv(path, header, columns) -> None:
    rows = zip(*columns)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row) + "\n")


def _write_metadata(config: RunConfig, out_dir: str, artifacts) -> str:
    meta = {
        "config": config.raw,
        "experiment": config.experiment,
        "seed": config.seed,
        "backend": backend.backend_name(),
        "version": __version__,
        "artifacts": sorted(artifacts),
    }
    path = os.path.join(out_dir, f"{config.experiment}.meta.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_summary(out_dir, experiment, lines) -> str:
    path = os.path.join(out_dir, f"{experiment}_summary.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _sweep_result_runner(config, result, extra_summary=()):
    out = config.output_dir
    csv_path = os.path.join(out, f"{config.experiment}.csv")
    result.write_csv(csv_path)
    lines = [
        f"experiment: {config.experiment}",
        f"grid shape: {result.populations.shape[:-1]}",
        f"levels recorded: {result.dim}",
        f"P1 range: [{result.p1.min():.6f}, {result.p1.max():.6f}]",
        *extra_summary,
    ]
    return [csv_path], lines


def _run_rabi_family(config: RunConfig):
    p = config.params
    if config.experiment == "rabi" and p.get("bias"):
        result = run_rabi_bias(
            config.physics, p["bias"]["values"], p["durations"],
            n=p["subharmonic"], detuning=p["detuning"],
            bias_window=p["bias"]["window"], shots=config.shots, seed=config.seed,
        )
        return _sweep_result_runner(
            config, result, [f"bias window: {list(p['bias']['window'])} (phenomenological)"]
        )
    runner = {"rabi": run_rabi, "staircase": run_staircase}[config.experiment]
    result = runner(
        config.physics, p["durations"], n=p["subharmonic"], detuning=p["detuning"],
        shots=config.shots, seed=config.seed,
    )
    return _sweep_result_runner(config, result)


def _run_chevron(config: RunConfig):
    p = config.params
    result = run_chevron(
        config.physics, p["detunings"], p["durations"], n=p["subharmonic"],
        shots=config.shots, seed=config.seed,
    )
    return _sweep_result_runner(config, result)


def _run_ramsey(config: RunConfig):
    p = config.params
    result = run_ramsey(
        config.physics, p["delays"], n=p["subharmonic"], detuning=p["detuning"],
        shots=config.shots, seed=config.seed,
    )
    fringe = p["subharmonic"] * p["detuning"] / (2 * np.pi)
    return _sweep_result_runner(
        config, result, [f"expected fringe frequency: {fringe:.17g} Hz"]
    )


def _run_rabi2d(config: RunConfig):
    p = config.params
    result = run_rabi2d(
        config.physics, p["phases"], p["durations"], n=p["subharmonic"],
        shots=config.shots, seed=config.seed,
    )
    return _sweep_result_runner(config, result)


def _run_rb(config: RunConfig):
    p = config.params
    out = config.output_dir
    artifacts = []
    rb_config = RBConfig(
        sequence_lengths=p["sequence_lengths"],
        randomizations=p["randomizations"],
        seed=config.seed,
    )
    reference = run_rb(rb_config, config.physics, subharmonic=p["subharmonic"], shots=config.shots)
    ref_csv = os.path.join(out, "rb_reference_survivals.csv")
    reference.write_csv(ref_csv)
    artifacts.append(ref_csv)
    ms, means, variances = reference.mean_survivals()
    ref_fit = fit_depolarizing(ms, means, variances=None if rb_config.randomizations < 5 else variances)

    interleaved_fits = {}
    if p["interleaved_gate"]:
        int_config = RBConfig(
            sequence_lengths=p["sequence_lengths"],
            randomizations=p["randomizations"],
            interleaved_gate=p["interleaved_gate"],
            seed=config.seed + 1,
        )
        inter = run_rb(int_config, config.physics, subharmonic=p["subharmonic"], shots=config.shots)
        int_csv = os.path.join(out, "rb_interleaved_survivals.csv")
        inter.write_csv(int_csv)
        artifacts.append(int_csv)
        ims, imeans, ivars = inter.mean_survivals()
        interleaved_fits[p["interleaved_gate"]] = fit_depolarizing(
            ims, imeans, variances=None if int_config.randomizations < 5 else ivars
        )

    report = rb_report(ref_fit, interleaved_fits)
    report_path = os.path.join(out, "rb_report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(report)
    artifacts.append(report_path)

    fits_path = os.path.join(out, "rb_fits.csv")
    with open(fits_path, "w", encoding="utf-8") as fh:
        fh.write("role,label,A,B,p,A_err,B_err,p_err,residual_norm\n")
        rows = [("reference", "", ref_fit)]
        rows += [("interleaved", label, fit) for label, fit in interleaved_fits.items()]
        for role, label, fit in rows:
            fh.write(
                f"{role},{label},{fit.A:.17g},{fit.B:.17g},{fit.p:.17g},"
                f"{fit.A_err:.17g},{fit.B_err:.17g},{fit.p_err:.17g},{fit.residual_norm:.17g}\n"
            )
    artifacts.append(fits_path)

    gate_path = os.path.join(out, "gate_table.txt")
    with open(gate_path, "w", encoding="utf-8") as fh:
        fh.write(gate_table_text(reference.gateset))
    artifacts.append(gate_path)
    cliff_path = os.path.join(out, "clifford_table.txt")
    with open(cliff_path, "w", encoding="utf-8") as fh:
        fh.write(clifford_table_text())
    artifacts.append(cliff_path)

    ref_fid = extract_fidelity(ref_fit)
    lines = [
        "experiment: rb",
        f"reference p = {ref_fit.p:.8f} +/- {ref_fit.p_err:.2g}",
        f"average Clifford fidelity = {ref_fid.value:.6f} +/- {ref_fid.stderr:.2g}",
    ]
    for label, fit in interleaved_fits.items():
        est = extract_fidelity(ref_fit, fit, mode="interleaved")
        lines.append(f"gate {label}: fidelity = {est.value:.6f} +/- {est.stderr:.2g}")
    return artifacts, lines


def _poison_window(slips, rate_hz, model):
    cycles = slips / model.slips_per_cycle
    duration = cycles / rate_hz
    return (0.0, duration, 2 * np.pi * rate_hz)


def _run_qp_poison(config: RunConfig):
    p = config.params
    model = config.physics.qp
    if model is None:
        raise ConfigError(["qp: block required for qp-poison"])
    counts = list(p["slip_counts"])
    added = [qp_added(c, model) for c in counts]
    ends = []
    for c in counts:
        if c == 0:
            ends.append(model.n_qp_background)
            continue
        window = _poison_window(c, p["trigger_rate_hz"], model)
        traj = qp_trajectory([window], model)
        ends.append(traj.value(window[1]))
    csv_path = os.path.join(config.output_dir, "qp-poison.csv")
    _write_csv(csv_path, ["n_slips", "n_qp_added", "n_qp_end"],
               [counts, [float(a) for a in added], [float(e) for e in ends]])
    lines = [
        "experiment: qp-poison",
        f"generation model: {model.model_name} (eta = {model.eta:.17g}/slip)",
        f"largest excess: {max(added):.6g}",
    ]
    return [csv_path], lines


def _run_qp_recovery(config: RunConfig):
    p = config.params
    model = config.physics.qp
    if model is None:
        raise ConfigError(["qp: block required for qp-recovery"])
    window = _poison_window(p["poison_slips"], p["trigger_rate_hz"], model)
    traj = qp_trajectory([window], model)
    n_end = traj.value(window[1])
    times = np.asarray(p["recovery_times"], dtype=float)
    values = qp_relax(n_end, times, model)
    csv_path = os.path.join(config.output_dir, "qp-recovery.csv")
    _write_csv(csv_path, ["recovery_time_s", "n_qp"], [list(times), list(map(float, values))])
    lines = [
        "experiment: qp-recovery",
        f"n_qp after poisoning pulse: {n_end:.6g}",
        f"trapping time constant: {1.0 / model.trapping_rate:.17g} s",
    ]
    try:
        fit = fit_recovery(times, values)
        lines.append(f"fitted trapping time: {1.0 / fit['trapping_rate']:.6g} s")
        lines.append(f"fitted background: {fit['background']:.6g}")
    except FitError as exc:
        lines.append(f"recovery fit failed: {exc}")
    return [csv_path], lines


def _run_fit_decay(config: RunConfig):
    p = config.params
    path = p["input_csv"]
    if not os.path.isabs(path):
        path = os.path.join(os.getcwd(), path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
        skip = 1 if any(c.isalpha() for c in first) else 0
        data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    except OSError as exc:
        raise ConfigError([f"fit-decay.input_csv: cannot read {path}: {exc}"]) from exc
    if data.shape[1] < 2:
        raise ConfigError(["fit-decay.input_csv: expected two columns (time_s, p1)"])
    result = fit_decay(data[:, 0], data[:, 1], fix=p["fix"])
    report_path = os.path.join(config.output_dir, "fit-decay_report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(result.report())
    json_path = os.path.join(config.output_dir, "fit-decay.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump({"params": result.params, "stderr": result.stderr,
                   "residual_norm": result.residual_norm}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    lines = [
        "experiment: fit-decay",
        f"n_qp = {result['n_qp']:.6g} +/- {result.stderr['n_qp']:.3g}",
        f"t1_qp = {result['t1_qp']:.6g} s, t1_r = {result['t1_r']:.6g} s",
        f"residual norm = {result.residual_norm:.4g}",
    ]
    return [report_path, json_path], lines


def _run_dispersion(config: RunConfig):
    p = config.params
    physics = config.physics
    model = physics.qp
    dec = physics.decoherence
    disp = physics.dispersion
    if model is None or dec is None or disp is None:
        raise ConfigError(["dispersion: qp, decoherence and dispersion blocks are all required"])
    omega10 = physics.transmon.omega10
    ratio = dispersion_ratio(omega10, disp)
    window = _poison_window(p["poison_slips"], p["trigger_rate_hz"], model)
    traj = qp_trajectory([window], model)
    n_end = traj.value(window[1])
    times = np.asarray(p["recovery_times"], dtype=float)
    n_qps = qp_relax(n_end, times, model)
    gammas, shifts = [], []
    for n in n_qps:
        g1, dw = rates_from_nqp(float(n), dec, disp, omega10)
        gammas.append(g1 - 1.0 / dec.t1_residual)
        shifts.append(dw)
    csv_path = os.path.join(config.output_dir, "dispersion.csv")
    _write_csv(
        csv_path,
        ["recovery_time_s", "n_qp", "gamma_qp_per_s", "delta_omega_rad_s"],
        [list(times), list(map(float, n_qps)), gammas, shifts],
    )
    slope = np.polyfit(gammas, shifts, 1)[0] if len(gammas) > 1 else float("nan")
    lines = [
        "experiment: dispersion",
        f"dispersion ratio (with empirical factor {disp.empirical_factor}): {ratio:.6f}",
        f"parametric slope delta_omega vs gamma_qp: {slope:.6f}",
    ]
    return [csv_path], lines


_RUNNERS = {
    "rabi": _run_rabi_family,
    "staircase": _run_rabi_family,
    "chevron": _run_chevron,
    "ramsey": _run_ramsey,
    "rabi2d": _run_rabi2d,
    "rb": _run_rb,
    "qp-poison": _run_qp_poison,
    "qp-recovery": _run_qp_recovery,
    "fit-decay": _run_fit_decay,
    "dispersion": _run_dispersion,
}


def dispatch(config: RunConfig) -> int:
    """Run the configured experiment; writes artifacts into its output dir.

    Returns a process exit status.  On failure, partial outputs are marked
    with a ``<experiment>.FAILED`` file carrying the diagnostic.
    """
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    try:
        artifacts, summary_lines = _RUNNERS[config.experiment](config)
        summary = _write_summary(out, config.experiment, summary_lines)
        artifacts.append(summary)
        meta = _write_metadata(config, out, [os.path.basename(a) for a in artifacts])
        print(f"{config.experiment}: ok ({len(artifacts) + 1} artifacts in {out})")
        for line in summary_lines[1:]:
            print("  " + line)
        return 0
    except Exception as exc:
        marker = os.path.join(out, f"{config.experiment}.FAILED")
        with open(marker, "w", encoding="utf-8") as fh:
            fh.write(f"{type(exc).__name__}: {exc}\n")
            fh.write(traceback.format_exc())
        print(f"{config.experiment}: FAILED: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sfqsim",
        description="Pulse-level simulator for SFQ-driven transmon qubit control",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=str, default=None, help="YAML/JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", type=str, default=None, help="override the output directory")
        p.add_argument(
            "--preset", type=str, default=None, choices=["paper-defaults"],
            help="merge a named defaults preset under the config",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    document = ""
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                document = fh.read()
        except OSError as exc:
            print(f"cannot read config file: {exc}", file=sys.stderr)
            return 2
    elif not args.preset:
        print("either --config or --preset is required", file=sys.stderr)
        return 2
    overrides = {"experiment": args.experiment}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    try:
        config = parse_config(document, preset=args.preset, overrides=overrides)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    return dispatch(config)


if __name__ == "__main__":
    sys.exit(main())
