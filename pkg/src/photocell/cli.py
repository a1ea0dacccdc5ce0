"""``photocell`` command-line front end."""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Optional

import numpy as np

from . import acceptance, experiments
from .config import ConfigError, RunConfig, parse_config, serialize_config
from .kinetics import build_generator, evolve, ground_state, relaxation_time, steady_state
from .observables import UndefinedVoltageError, current, relative_efficiency, voltage
from .positivity import audit_positivity, evolve_density_matrix, load_superoperator, pauli_superoperator
from .tables import TIMESTAMP_KEY, ResultTable, parse_csv, render_csv, table_from_columns

COMMANDS = ("steady", "evolve", "sweep-rates", "sweep-temp", "iv", "audit", "validate")

log = logging.getLogger("photocell")


def say(*args):
    """Human-readable summary; stdout is reserved for CSV output."""
    print(*args, file=sys.stderr)


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def load_config(path: Optional[str]) -> RunConfig:
    """Read a config file, or the config embedded in a CSV written by this tool."""
    if path is None:
        return parse_config("")
    text = Path(path).read_text()
    if path.endswith(".csv"):
        table = parse_csv(text)
        # the output path is a property of that run, not of the model
        text = "\n".join(line for line in table.meta("config") if not line.startswith("out ="))
    return parse_config(text)


def metadata(command: str, config: RunConfig) -> list[tuple[str, str]]:
    meta = [("tool", f"photocell {tool_version()}"), ("command", command)]
    meta += [("config", line) for line in serialize_config(config).splitlines()]
    meta.append((TIMESTAMP_KEY, datetime.now(timezone.utc).isoformat(timespec="seconds")))
    return meta


def emit(table: ResultTable, config: RunConfig) -> str:
    text = render_csv(table)
    if config.out:
        Path(config.out).write_text(text)
        say(f"wrote {len(table.rows)} rows to {config.out}")
    else:
        sys.stdout.write(text)
    return text


PLOT_TEMPLATES = {
    "evolve": "for name in table.columns[1:]:\n    plt.plot(table['t'], table[name], label=name)\nplt.xscale('log')\nplt.xlabel('t (hbar/eV)')\nplt.legend()",
    "sweep-rates": (
        "gx = np.unique(table['gamma_x']); gc = np.unique(table['gamma_c'])\n"
        "z = table['enhancement'].to_numpy().reshape(len(gx), len(gc))\n"
        "cs = plt.contourf(gx * 1e3, gc * 1e3, 100 * z.T, levels=20)\nplt.colorbar(cs, label='enhancement (%)')\n"
        "plt.xlabel('gamma_x (meV)'); plt.ylabel('gamma_c (meV)')"
    ),
    "sweep-temp": "plt.plot(table['T'], table['enhancement'], label='enhancement')\nplt.plot(table['T'], table['n_x'], label='n_x')\nplt.xlabel('T (K)')\nplt.legend()",
    "iv": "plt.plot(table['V'], table['j_over_e'], label='j/e')\nplt.plot(table['V'], table['P'], label='P')\nplt.xlabel('V (volts)')\nplt.legend()",
}


def write_plot_script(command: str, csv_path: str, script_path: str):
    body = PLOT_TEMPLATES.get(command)
    if body is None:
        raise ValueError(f"no plot script for command {command!r}")
    script = (
        "import matplotlib.pyplot as plt\nimport numpy as np\nimport pandas as pd\n\n"
        f"table = pd.read_csv({csv_path!r}, comment='#')\n{body}\nplt.savefig({csv_path!r} + '.png', dpi=150)\n"
    )
    Path(script_path).write_text(script)


def cmd_steady(config: RunConfig) -> ResultTable:
    p = config.params
    rho = steady_state(build_generator(p, config.coupled))
    j = current(rho["alpha"], p.Gamma)
    try:
        V = voltage(p, rho["alpha"], rho["beta"])
    except UndefinedVoltageError:
        V = float("nan")
    for label, value in rho.as_dict().items():
        say(f"rho_{label:<6} {value:.10e}")
    say(f"sum        {rho.rho.sum():.15f}")
    say(f"j/e        {j:.10e} eV")
    say(f"V          {V:.10f} V")
    names = [f"rho_{lab}" for lab in rho.levels] + ["j_over_e", "V"]
    return table_from_columns(names, *([v] for v in rho.rho), [j], [V])


def cmd_evolve(config: RunConfig) -> ResultTable:
    gen = build_generator(config.params, config.coupled)
    t_end = config.t_end or 40.0 * relaxation_time(gen)
    traj = evolve(gen, ground_state(gen.levels), t_end=t_end, dt_out=t_end / config.samples)
    ss = steady_state(gen)
    say(f"evolved to t={t_end:.6g} hbar/eV; max |rho(t_end) - rho_ss| = {np.abs(traj.final.rho - ss.rho).max():.3e}")
    names = ["t"] + [f"rho_{lab}" for lab in gen.levels]
    return table_from_columns(names, traj.times, *traj.populations.T)


def cmd_sweep_rates(config: RunConfig) -> ResultTable:
    grid = experiments.sweep_rate_grid(
        config.params,
        (config.gamma_x_min, config.gamma_x_max),
        (config.gamma_c_min, config.gamma_c_max),
        config.grid_n,
        config.grid_n,
    )
    gx, gc = np.meshgrid(grid.gamma_x, grid.gamma_c, indexing="ij")
    i, j = np.unravel_index(np.nanargmax(grid.cells), grid.cells.shape)
    say(f"{grid.cells.size} cells, {len(grid.failures)} failed; max enhancement {grid.cells[i, j]:.4f} "
          f"at gamma_x={grid.gamma_x[i]:.4g} eV, gamma_c={grid.gamma_c[j]:.4g} eV")
    return table_from_columns(
        ["gamma_x", "gamma_c", "enhancement", "stable"], gx.ravel(), gc.ravel(), grid.cells.ravel(), grid.stability_mask.ravel()
    )


def cmd_sweep_temp(config: RunConfig) -> ResultTable:
    pts = experiments.sweep_temperature(config.params, (config.T_min, config.T_max), config.points)
    for pt in (pts[0], pts[-1]):
        say(f"T={pt.T:g} K: enhancement {pt.enhancement:.4f}, n_x {pt.n_x:.4f}")
    return table_from_columns(["T", "enhancement", "n_x"], [p.T for p in pts], [p.enhancement for p in pts], [p.n_x for p in pts])


def cmd_iv(config: RunConfig) -> ResultTable:
    sweep = dict(Gamma_min=config.Gamma_min, Gamma_max=config.Gamma_max, n_points=config.points)
    curve = experiments.iv_curve(config.params, coupled=config.coupled, **sweep)
    other = experiments.iv_curve(config.params, coupled=not config.coupled, **sweep)
    peak = curve.peak
    eta = relative_efficiency(*((peak.power, other.peak.power) if config.coupled else (other.peak.power, peak.power)))
    label = "coupled" if config.coupled else "uncoupled"
    say(f"{label}: peak power {peak.power:.6e} at V={peak.voltage:.4f} V (Gamma={peak.Gamma_load:.4g} eV); "
          f"dropped {curve.dropped} points")
    say(f"relative efficiency eta_R = {eta:.4f}")
    return table_from_columns(
        ["V", "j_over_e", "P", "Gamma"], curve.voltages, curve.currents, curve.powers, [p.Gamma_load for p in curve.points]
    )


def cmd_audit(config: RunConfig, superop: Optional[str] = None) -> tuple[ResultTable, bool]:
    if superop:
        L = load_superoperator(Path(superop).read_text())
        t_end = config.t_end or 10.0
    else:
        gen = build_generator(config.params, config.coupled)
        L = pauli_superoperator(gen)
        t_end = config.t_end or 20.0 * relaxation_time(gen)
    if config.initial_level >= L.d:
        raise ConfigError(f"initial_level {config.initial_level} outside dimension {L.d}")
    rho0 = np.zeros((L.d, L.d), dtype=complex)
    rho0[config.initial_level, config.initial_level] = 1.0
    traj = evolve_density_matrix(L, rho0, t_end, t_end / config.samples)
    report = audit_positivity(traj, tolerance=config.tolerance)
    if report.negative:
        say(f"NEGATIVE eigenvalue first at t={report.first_negative_time:.6g} (min {report.min_eigenvalues.min():.3e})")
    else:
        say(f"no negativity below -{config.tolerance:g}; min eigenvalue {report.min_eigenvalues.min():.3e}")
    say(f"final min eigenvalue {report.steady_min_eigenvalue:.3e}; diverged={report.diverged}; "
          f"hermiticity drift {traj.hermiticity_drift.max():.2e}")
    table = table_from_columns(
        ["t", "min_eigenvalue", "trace", "hermiticity_drift"], traj.times, report.min_eigenvalues, traj.traces, traj.hermiticity_drift
    )
    return table, report.negative


def cmd_validate() -> bool:
    results = acceptance.run_checks()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return not failed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photocell", description="Exciton-coupled photocell simulator")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value file, or a CSV written by photocell")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    sel = parser.add_mutually_exclusive_group()
    sel.add_argument("--coupled", dest="coupled", action="store_const", const=True)
    sel.add_argument("--uncoupled", dest="coupled", action="store_const", const=False)
    parser.add_argument("--grid-n", type=int, help="points per axis of the rate grid")
    parser.add_argument("--t-min", type=float, help="lowest temperature (K)")
    parser.add_argument("--t-max", type=float, help="highest temperature (K)")
    parser.add_argument("--gamma-min", type=float, help="lower rate bound (eV): load rate for iv, both axes for sweep-rates")
    parser.add_argument("--gamma-max", type=float, help="upper rate bound (eV)")
    parser.add_argument("--points", type=int, help="number of sweep points")
    parser.add_argument("--superop", help="superoperator table to audit instead of the Pauli model")
    parser.add_argument("--plot-script", help="also write a matplotlib script that plots the CSV")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args) -> RunConfig:
    config = load_config(args.config)
    overrides = dict(out=args.out, coupled=args.coupled, grid_n=args.grid_n, T_min=args.t_min, T_max=args.t_max, points=args.points)
    if args.command == "sweep-rates":
        overrides.update(gamma_x_min=args.gamma_min, gamma_c_min=args.gamma_min, gamma_x_max=args.gamma_max, gamma_c_max=args.gamma_max)
    else:
        overrides.update(Gamma_min=args.gamma_min, Gamma_max=args.gamma_max)
    return config.updated(**overrides)


def dispatch(command: str, config: RunConfig, superop: Optional[str] = None, plot_script: Optional[str] = None) -> int:
    if command == "validate":
        return 0 if cmd_validate() else 1
    status = 0
    if command == "audit":
        table, negative = cmd_audit(config, superop)
        status = 1 if negative else 0
    else:
        handler = {
            "steady": cmd_steady,
            "evolve": cmd_evolve,
            "sweep-rates": cmd_sweep_rates,
            "sweep-temp": cmd_sweep_temp,
            "iv": cmd_iv,
        }[command]
        table = handler(config)
    table.metadata = metadata(command, config)
    emit(table, config)
    if plot_script:
        if not config.out:
            raise ConfigError("--plot-script needs --out")
        write_plot_script(command, config.out, plot_script)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        return dispatch(args.command, config, args.superop, args.plot_script)
    except (ConfigError, ValueError, ArithmeticError, OSError) as exc:
        print(f"photocell: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
