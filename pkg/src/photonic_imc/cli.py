"""``photonic-imc`` command line: figure reproductions and solve demos.

Every subcommand writes RFC 4180 CSV (header row, ``\\n`` line ends) plus
SVG figures into ``--out``. On failure a single ``photonic-imc: error:
<kind>: <message>`` line goes to stderr and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .array import load_matrix, load_vector
from .calibration import DeviceProfile, builtin_profile, load_profile
from .errors import DimensionError, NotSPDError, ProfileError, ProtocolError
from .noise import NoiseModel, child_rng, make_rng
from .solver import SolverConfig, random_nonsymmetric, random_spd
from .svg import Figure

PROG = "photonic-imc"
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_RUNTIME):
        super().__init__(message)
        self.kind, self.code = kind, code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message.replace("\n", " "), EXIT_USAGE)


def _f(v) -> str:
    return f"{float(v):.10g}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _profile(arg: str | None, default: str) -> DeviceProfile:
    name = arg or default
    if Path(name).is_file():
        return load_profile(name)
    try:
        return builtin_profile(name)
    except ProfileError:
        raise CliError("config", f"profile {name!r} is neither a file nor a built-in name", EXIT_USAGE)


def _noise(args, profile: DeviceProfile) -> NoiseModel:
    return profile.noise if args.noise == "on" else NoiseModel.off()


def _rng(args, stochastic: bool) -> np.random.Generator:
    if args.seed is None:
        if stochastic:
            raise CliError("config", "--seed is required for stochastic runs (or use --noise off)",
                           EXIT_USAGE)
        return make_rng(0)
    return make_rng(args.seed)


def _out(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("io", f"cannot create output directory {out}: {exc.strerror}")
    return out


def cmd_sweep_width(args) -> dict:
    profile = _profile(args.profile, "fig4")
    noise = _noise(args, profile)
    rng = _rng(args, noise.write_sd > 0)
    widths = np.arange(args.min_width, args.max_width + 0.5 * args.step, args.step)
    if widths.size == 0 or widths[0] <= 0:
        raise CliError("config", "width range must be positive and non-empty", EXIT_USAGE)
    res = ex.sweep_width(profile, noise, rng, widths, args.power)
    out = _out(args)
    _write_csv(out / "sweep_width.csv",
               ["width_ns", "power_mW", "energy_pJ", "switching_energy_pJ", "delta_t", "relative_to_saturated"],
               [[_f(w), _f(res.power), _f(e), _f(s), _f(d), _f(r)] for w, e, s, d, r in
                zip(res.widths, res.energies, res.switching_energies, res.delta_t, res.relative)])
    cal = profile.calibration
    fig = Figure("Transmission change vs pump width", "pulse width (ns)", "delta T / saturated")
    fig.line(res.widths, res.relative, "constant power")
    fig.vline(cal.width_reference, f"{cal.width_reference:g} ns")
    fig.vline(cal.width_saturation, f"saturation {cal.width_saturation:g} ns")
    (out / "sweep_width.svg").write_text(fig.render())
    i25 = np.argmin(np.abs(res.widths - 25.0))
    return {"points": res.widths.size, "relative_at_25ns": float(res.relative[i25])}


def cmd_condition_levels(args) -> dict:
    profile = _profile(args.profile, "fig4")
    noise = _noise(args, profile)
    rng = _rng(args, not noise.is_zero)
    run = ex.condition_levels(profile, noise, rng, args.levels, args.repeats, args.sequences,
                              args.per_sequence)
    out = _out(args)
    _write_csv(out / "levels.csv",
               ["transition", "repeat", "sequence", "level", "programmed", "achieved", "error"],
               [[i, r, s, k, _f(p), _f(a), _f(e)] for i, (r, s, k, p, a, e) in enumerate(
                   zip(run.repeat, run.sequence, run.level_index, run.programmed, run.achieved, run.errors))])
    summary = run.summary()
    _write_csv(out / "levels_summary.csv", ["metric", "value"], [[k, _f(v)] for k, v in summary.items()])
    cent = run.centroids()
    _write_csv(out / "levels_centroids.csv", ["level", "programmed", "centroid"],
               [[k, _f(k / (run.n_levels - 1)), _f(c)] for k, c in enumerate(cent)])

    fig = Figure("Multilevel conditioning", "transition", "level / full range")
    fig.points(np.arange(run.achieved.size), run.achieved / run.t_prog_max, r=1.5)
    (out / "levels.svg").write_text(fig.render())
    span = max(float(np.max(np.abs(run.errors))), 1e-12)
    counts, edges = np.histogram(run.errors, bins=31, range=(-span, span))
    hist = Figure("Level error over transitions", "error (fraction of range)", "count")
    hist.bars(edges, counts, "errors")
    sd = summary["error_sd"]
    if sd > 0:
        xs = np.linspace(-span, span, 121)
        pdf = np.exp(-0.5 * ((xs - summary["error_mean"]) / sd) ** 2) / (sd * np.sqrt(2 * np.pi))
        hist.line(xs, pdf * run.errors.size * (edges[1] - edges[0]), "normal fit")
    (out / "levels_hist.svg").write_text(hist.render())
    return summary


def cmd_drift(args) -> dict:
    profile_ab = _profile(args.profile, "fig3a")
    profile_c = _profile(args.profile, "fig4")
    noise = _noise(args, profile_ab)
    rng = _rng(args, True)
    drift = replace(profile_ab.drift, probe_hold_power=args.probe_power,
                    probe_safe_power=args.safe_power)
    panels = ex.drift_experiment(profile_ab, profile_c, noise, rng, drift, args.interval)
    out = _out(args)
    rows = []
    for p in panels:
        for t, tr, on, ev in zip(p.times, p.transmittance, p.probe_on, p.events):
            rows.append([p.name, _f(t), _f(p.probe_power), int(on), _f(tr), ev])
    _write_csv(out / "drift.csv", ["panel", "time_s", "probe_mW", "probe_on", "transmittance", "event"], rows)
    metrics = {f"{p.name}.{k}": v for p in panels for k, v in p.metrics.items()}
    _write_csv(out / "drift_summary.csv", ["metric", "value"], [[k, _f(v)] for k, v in metrics.items()])
    fig = Figure("Transmission traces", "time (s)", "transmittance")
    for p in panels:
        fig.line(p.times, p.transmittance, f"{p.name}: probe {p.probe_power:g} mW")
    (out / "drift.svg").write_text(fig.render())
    return metrics


def cmd_multiply_grid(args) -> dict:
    profile = _profile(args.profile, "fig4")
    noise = _noise(args, profile)
    if args.noise == "on" and args.pump_sd is not None:
        noise = replace(noise, pump_fluctuation_sd=args.pump_sd)
    rng = _rng(args, not noise.is_zero)
    run = ex.multiply_grid(profile, noise, rng, args.n_a, args.n_b, args.e_in_max,
                           write_per_op=args.write_per_op, measured_offset=args.measured_offset)
    out = _out(args)
    _write_csv(out / "multiply_grid.csv",
               ["a", "b", "e_write_pJ", "e_in_pJ", "e_out_pJ", "c_measured", "c_exact", "error"],
               [[_f(r.a), _f(r.b), _f(r.e_write), _f(r.e_in), _f(r.raw_output_energy),
                 _f(r.c_measured), _f(r.c_exact), _f(r.error)] for r in run.records])
    st = run.stats
    summary = {"records": len(run.records), "error_mean": st.mean, "error_sd": st.sd,
               "corr_abs_error_a": run.corr_abs_error_a, "corr_abs_error_b": run.corr_abs_error_b}
    _write_csv(out / "multiply_stats.csv", ["metric", "value"], [[k, _f(v)] for k, v in summary.items()])
    _write_csv(out / "multiply_hist.csv", ["bin_low", "bin_high", "count"],
               [[_f(lo), _f(hi), int(c)] for lo, hi, c in zip(st.edges[:-1], st.edges[1:], st.counts)])
    sc = Figure("Measured vs exact product", "c exact", "c measured")
    sc.points([r.c_exact for r in run.records], [r.c_measured for r in run.records], "products")
    sc.line([0, 1], [0, 1], "ideal", dash=True)
    (out / "multiply_scatter.svg").write_text(sc.render())
    hist = Figure("Multiplication error", "c exact - c measured", "count")
    hist.bars(st.edges, st.counts, "errors")
    (out / "multiply_hist.svg").write_text(hist.render())
    return summary


def _load_system(args, rng):
    if args.matrix:
        try:
            A = load_matrix(args.matrix)
        except (OSError, ValueError) as exc:
            raise CliError("input", f"cannot read matrix {args.matrix}: {exc}")
    else:
        if args.seed is None:
            raise CliError("config", "--seed is required to generate a matrix", EXIT_USAGE)
        gen = child_rng(args.seed, 0)
        A = (random_spd(args.generate, gen, args.cond) if args.method == "cg"
             else random_nonsymmetric(args.generate, gen))
    if args.rhs:
        try:
            b = load_vector(args.rhs)
        except (OSError, ValueError) as exc:
            raise CliError("input", f"cannot read rhs {args.rhs}: {exc}")
    elif args.seed is not None:
        b = child_rng(args.seed, 3).normal(size=A.shape[0])
    else:
        b = np.ones(A.shape[0])
    return A, b


def cmd_solve(args) -> dict:
    profile = _profile(args.profile, "fig4")
    noise = _noise(args, profile)
    rng = _rng(args, not noise.is_zero)
    A, b = _load_system(args, rng)
    config = SolverConfig(tol=args.tol, max_iter=args.max_iter, inner_iter=args.inner_iter,
                          restart=args.restart, method=args.method)
    reports = ex.solve_modes(A, b, profile, noise, rng, config, seed=args.seed or 0)
    out = _out(args)
    fig = Figure("Relative residual history", "iteration", "relative residual", logy=True)
    summary = {}
    text = []
    for mode, rep in reports.items():
        (out / f"solve_{mode}.csv").write_text(rep.to_csv())
        fig.line(range(len(rep.residuals)), rep.relative_residuals, mode)
        text.append(f"[{mode}]\n{rep.summary()}")
        summary[f"{mode}.relative_residual"] = rep.relative_residual
        summary[f"{mode}.iterations"] = rep.iterations
        summary[f"{mode}.energy_pJ"] = rep.energy
    (out / "solve_summary.txt").write_text("\n".join(text))
    (out / "solve.svg").write_text(fig.render())
    return summary


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", help="profile file, or built-in name (fig4, fig3a)")
    common.add_argument("--seed", type=int, help="64-bit seed; required whenever noise is on")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--noise", choices=("on", "off"), default="on")

    p = _Parser(prog=PROG, description="Photonic in-memory computing simulator: figure reproductions and solve demos.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep-width", parents=[common], help="level vs pump width at constant power")
    s.add_argument("--min-width", type=float, default=5.0)
    s.add_argument("--max-width", type=float, default=100.0)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--power", type=float, help="pump power in mW (default: peak Write power)")
    s.set_defaults(func=cmd_sweep_width)

    s = sub.add_parser("condition-levels", parents=[common], help="multilevel programming error")
    s.add_argument("--levels", type=int, default=13)
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--sequences", type=int, default=20)
    s.add_argument("--per-sequence", type=int, default=10)
    s.set_defaults(func=cmd_condition_levels)

    s = sub.add_parser("drift", parents=[common], help="probe ON/OFF drift and correction")
    s.add_argument("--probe-power", type=float, default=0.1, help="heating probe power, mW")
    s.add_argument("--safe-power", type=float, default=0.05, help="reduced probe power, mW")
    s.add_argument("--interval", type=float, default=60.0, help="trace sampling interval, s")
    s.set_defaults(func=cmd_drift)

    s = sub.add_parser("multiply-grid", parents=[common], help="grid of scalar multiplications")
    s.add_argument("--n-a", type=int, default=13)
    s.add_argument("--n-b", type=int, default=33)
    s.add_argument("--e-in-max", type=float, default=112.8, help="full-scale read energy, pJ")
    s.add_argument("--pump-sd", type=float, default=0.001,
                   help="relative pulse-energy fluctuation when noise is on (default 0.001)")
    s.add_argument("--write-per-op", action="store_true", help="Erase/Write before every product")
    s.add_argument("--measured-offset", action="store_true", help="measure the baseline offset")
    s.set_defaults(func=cmd_multiply_grid)

    s = sub.add_parser("solve", parents=[common], help="exact, analog and mixed-precision Ax=b")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--matrix", help="CSV or 'rows cols' dense text matrix")
    src.add_argument("--generate", type=int, default=8, help="random system size (default 8)")
    s.add_argument("--rhs", help="right-hand side vector file")
    s.add_argument("--cond", type=float, default=10.0, help="condition number of generated SPD matrix")
    s.add_argument("--method", choices=("cg", "gmres"), default="cg")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--max-iter", type=int, default=50)
    s.add_argument("--inner-iter", type=int, default=5)
    s.add_argument("--restart", type=int, default=20)
    s.set_defaults(func=cmd_solve)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        summary = args.func(args)
    except CliError as exc:
        print(f"{PROG}: error: {exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    except NotSPDError as exc:
        print(f"{PROG}: error: not-spd: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ProfileError, ProtocolError, DimensionError, ValueError, OSError) as exc:
        kind = {ProfileError: "profile", ProtocolError: "protocol", DimensionError: "dimension"}.get(
            type(exc), "runtime")
        msg = str(exc).replace("\n", " ")
        print(f"{PROG}: error: {kind}: {msg}", file=sys.stderr)
        return EXIT_RUNTIME
    for key, value in summary.items():
        print(f"{key}={_f(value) if isinstance(value, float) else value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
