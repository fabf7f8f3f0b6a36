"""Command-line interface.

Subcommands: ``equilibria``, ``continue``, ``simulate``, ``portrait``, ``critical``.

Option values are resolved in order: built-in defaults, the config file
(``--config`` or the ``PURSUIT_CONFIG`` environment variable; top-level keys
first, then the ``[subcommand]`` section), then command-line flags. Config
keys are option names with dashes replaced by underscores.

Exit codes: 0 success, 2 invalid arguments or config, 3 continuation failure,
4 integration failure. Partial results are still written on 3 and 4.
"""

import argparse
import math
import os
import sys

from . import io as pio
from .continuation import ContinuationSettings, continue_branch
from .errors import ConfigError, ContinuationError, IntegrationError, PursuitError
from .integrators import IntegratorSettings
from .models import (
    REFERENCE_PURSUER,
    REFERENCE_TARGET,
    PursuerPhysical,
    TargetParams,
    ThrustState,
    critical_speed_ratio,
    critical_throttle,
    derived_coeffs,
    engagement_throttle,
    equilibria_planar,
    equilibria_thrust,
    jacobian_planar,
    jacobian_thrust,
    max_engagement_speed,
)
from .simulate import Scenario, integrate, phase_portrait, run_scenario
from .spectral import classify, eig

EXIT_OK, EXIT_USAGE, EXIT_CONTINUATION, EXIT_INTEGRATION = 0, 2, 3, 4

DELAYED_STEP_SCHEDULE = [(10.0, 0.66)]
CONSTANT_SCHEDULE = [(0.0, 0.65)]


def _pair(text):
    parts = [float(x) for x in str(text).split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return tuple(parts)


def _grid(text):
    parts = [int(x) for x in str(text).replace("x", ",").split(",")]
    if len(parts) != 2 or min(parts) < 1:
        raise ValueError(f"expected N,M with N, M >= 1, got {text!r}")
    return tuple(parts)


def _step(text):
    t, eta = str(text).split(":")
    return float(t), float(eta)


def _steps(value):
    if isinstance(value, list):
        return value
    return [_step(s) for s in str(value).replace(";", ",").split(",") if s.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# name -> (type, default, help). Booleans become store_true flags.
_PHYSICAL = {
    "table1": (bool, False, "use the reference aircraft and target parameter set"),
    "m": (float, None, "pursuer mass [kg]"),
    "T_max": (float, None, "maximum thrust [N]"),
    "S": (float, None, "reference area [m^2]"),
    "C_D": (float, None, "drag coefficient"),
    "rho": (float, None, "air density [kg/m^3]"),
    "g": (float, None, "gravitational acceleration [m/s^2]"),
    "a": (float, None, "target circle radius [m]"),
    "omega": (float, None, "target angular speed [rad/s]"),
}
_COMMON = {
    "out": (str, None, "output file (CSV); sidecars are written next to it"),
    "deg": (bool, False, "print angles in degrees"),
    "emit_plot": (bool, False, "also write a gnuplot script next to the output"),
}
_CONT = {
    "h0": (float, 0.01, "initial arclength step"),
    "h_min": (float, 1e-6, "minimum arclength step"),
    "h_max": (float, 0.05, "maximum arclength step"),
    "newton_tol": (float, 1e-10, "corrector residual tolerance"),
    "max_newton_iters": (int, 10, "corrector iteration limit"),
    "max_points": (int, 5000, "maximum number of branch points"),
    "r_min": (float, 1e-3, "singular clip on |r|"),
}
_INTEG = {
    "method": (str, "adaptive-rk45", "fixed-rk4 or adaptive-rk45"),
    "dt": (float, 0.01, "fixed step (fixed-rk4)"),
    "rtol": (float, 1e-7, "relative tolerance (adaptive-rk45)"),
    "atol": (float, 1e-9, "absolute tolerance (adaptive-rk45)"),
    "r_engage": (float, 1e-3, "engagement threshold on r"),
    "max_steps": (int, 1_000_000, "step limit"),
}

OPTIONS = {
    "equilibria": {
        "model": (str, "planar", "planar or thrust"),
        "k": (float, None, "speed ratio (planar)"),
        "eta": (float, None, "throttle (thrust)"),
        "degenerate_tol": (float, 2e-4, "band around |k| = 1 reported as degenerate"),
        **_PHYSICAL, **_COMMON,
    },
    "continue": {
        "model": (str, "planar", "planar or thrust"),
        "start": (float, None, "parameter value where the branch starts (k or eta)"),
        "stop": (float, None, "parameter value where the branch stops"),
        "branch": (str, "positive", "starting equilibrium family: positive or negative"),
        **_CONT, **_PHYSICAL, **_COMMON,
    },
    "simulate": {
        "model": (str, "thrust", "thrust or planar"),
        "preset": (str, None, "delayed-step (0.66 from t = 10 s) or constant (0.65 from t = 0)"),
        "r0": (float, 1.0, "initial r"),
        "phi0": (float, 0.0, "initial phi [rad]"),
        "k0": (float, 0.0, "initial speed ratio (thrust)"),
        "k": (float, None, "speed ratio (planar)"),
        "eta": (float, None, "constant throttle from t = 0"),
        "step": (_steps, None, "throttle steps T:ETA[,T:ETA...] (t in seconds)"),
        "horizon": (float, 200.0, "simulated time [s]"),
        "dt_out": (float, 0.1, "output sampling interval [s]"),
        **_INTEG, **_PHYSICAL, **_COMMON,
    },
    "portrait": {
        "model": (str, "planar", "planar or thrust"),
        "k": (float, 0.5, "speed ratio (planar)"),
        "eta": (float, None, "throttle (thrust)"),
        "k0": (float, 0.0, "initial speed ratio (thrust)"),
        "r_range": (_pair, (0.2, 2.0), "LO,HI range of initial r"),
        "phi_range": (_pair, (-1.2, 1.5), "LO,HI range of initial phi [rad]"),
        "grid": (_grid, (7, 7), "N,M grid points in r and phi"),
        "horizon": (float, 60.0, "nondimensional integration span"),
        "workers": (int, 1, "parallel trajectories"),
        **_INTEG, **_PHYSICAL, **_COMMON,
    },
    "critical": {**_PHYSICAL, "deg": _COMMON["deg"]},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="circpursuit", description="Circular pursuit bifurcation analysis")
    parser.add_argument("--config", help="config file (default: $PURSUIT_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, opts in OPTIONS.items():
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="config file (default: $PURSUIT_CONFIG)")
        for key, (typ, default, help_) in opts.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, dest=key, action="store_true", help=help_)
            else:
                shown = "" if default is None else f" (default: {default})"
                p.add_argument(flag, dest=key, type=typ if typ is not _steps else _step,
                               action="append" if typ is _steps else "store", help=help_ + shown)
    return parser


def _convert(command, key, value):
    typ = OPTIONS[command][key][0]
    try:
        return _bool(value) if typ is bool else typ(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for {key!r}: {exc}") from exc


def resolve(command, cli_values, config_text=None):
    """Merge defaults, config file and CLI values for ``command``."""
    opts = OPTIONS[command]
    values = {key: default for key, (_, default, _) in opts.items()}
    if config_text:
        sections = pio.parse_config(config_text)
        unknown_sections = set(sections) - {""} - set(OPTIONS)
        if unknown_sections:
            raise ConfigError(f"unknown config sections: {sorted(unknown_sections)}")
        all_keys = set().union(*OPTIONS.values())
        for key in sections.get("", {}):
            if key not in all_keys:
                raise ConfigError(f"unknown config key {key!r}")
        for key, raw in sections.get("", {}).items():
            if key in opts:
                values[key] = _convert(command, key, raw)
        for key, raw in sections.get(command, {}).items():
            if key not in opts:
                raise ConfigError(f"unknown config key {key!r} in [{command}]")
            values[key] = _convert(command, key, raw)
    for key, value in cli_values.items():
        if key in ("command", "config"):
            continue
        values[key] = value
    return values


def _physical(values, required):
    names = ("m", "T_max", "S", "C_D", "rho", "g")
    base_p = REFERENCE_PURSUER if values.get("table1") else None
    base_t = REFERENCE_TARGET if values.get("table1") else None
    pvals = {n: values.get(n) if values.get(n) is not None else (getattr(base_p, n) if base_p else None)
             for n in names}
    tvals = {n: values.get(n) if values.get(n) is not None else (getattr(base_t, n) if base_t else None)
             for n in ("a", "omega")}
    pursuer = target = None
    if all(v is not None for v in pvals.values()) or (base_p is None and all(
            pvals[n] is not None for n in ("m", "T_max", "S", "C_D"))):
        pursuer = PursuerPhysical(**{n: v for n, v in pvals.items() if v is not None})
    if all(v is not None for v in tvals.values()):
        target = TargetParams(**tvals)
    if required and (pursuer is None or target is None):
        raise ConfigError("pursuer and target parameters are required (use --table1 or give --m, --T-max, "
                          "--S, --C-D, --a, --omega)")
    return pursuer, target


def _angle(x, deg):
    return f"{math.degrees(x):.6f} deg" if deg else f"{x:.6f}"


def _fmt_eigs(spectrum):
    out = []
    for ev in spectrum.eigenvalues:
        out.append(f"{ev.real:.6g}" if ev.imag == 0 else f"{ev.real:.6g}{ev.imag:+.6g}i")
    return " ".join(out)


def _write_meta(path, command, values):
    if not path:
        return
    with open(path + ".meta", "w", encoding="utf-8", newline="\n") as f:
        f.write(f"command = {command}\n")
        f.write(pio.format_config({k: v for k, v in values.items() if v is not None}))


def cmd_equilibria(values, out=None):
    out = out or sys.stdout
    model = values["model"]
    deg = values["deg"]
    tol = values["degenerate_tol"]
    if model == "planar":
        if values["k"] is None:
            raise ConfigError("--k is required for the planar model")
        states = equilibria_planar(values["k"], tol)
        coeffs = None
        print(f"planar model, k = {values['k']}", file=out)
    elif model == "thrust":
        if values["eta"] is None:
            raise ConfigError("--eta is required for the thrust model")
        pursuer, target = _physical(values, required=True)
        coeffs = derived_coeffs(pursuer, target)
        states = equilibria_thrust(values["eta"], coeffs, tol)
        print(f"thrust model, eta = {values['eta']}, C1 = {coeffs.C1:.7g}, C2 = {coeffs.C2:.7g}", file=out)
    else:
        raise ConfigError(f"unknown model {model!r}")

    if not states:
        print("no real equilibria", file=out)
        return EXIT_OK

    rows = []
    for s in states:
        flags = []
        if s.non_physical:
            flags.append("non-physical")
        if states.degenerate and abs(s.r) == 0.0:
            flags.append("degenerate")
        try:
            J = jacobian_planar(s) if model == "planar" else jacobian_thrust(s, coeffs)
            spectrum = eig(J)
            eigs, kind = _fmt_eigs(spectrum), classify(spectrum).kind
        except PursuitError:
            spectrum, eigs, kind = None, "n/a (r = 0)", "singular"
        k_txt = f"  k = {s.k:.6f}" if model == "thrust" else ""
        print(f"r = {s.r:.6f}  phi = {_angle(s.phi, deg)}{k_txt}  eig = [{eigs}]  {kind}"
              + (f"  [{', '.join(flags)}]" if flags else ""), file=out)
        rows.append((s, spectrum, kind, flags))

    if values["out"]:
        cols = ["r", "phi"] + (["k"] if model == "thrust" else []) + ["eigenvalues", "class", "flags"]
        with open(values["out"], "w", encoding="utf-8", newline="") as f:
            w = pio._writer(f)
            w.writerow(cols)
            for s, spectrum, kind, flags in rows:
                vals = [s.r, s.phi] + ([s.k] if model == "thrust" else [])
                eigs = "" if spectrum is None else " ".join(
                    f"{pio.fmt(ev.real)}{'+' if ev.imag >= 0 else '-'}{pio.fmt(abs(ev.imag))}j"
                    for ev in spectrum.eigenvalues)
                w.writerow([*map(pio.fmt, vals), eigs, kind, ";".join(flags)])
        _write_meta(values["out"], "equilibria", values)
    return EXIT_OK


def _start_state(model, param, family, coeffs):
    if model == "planar":
        eqs = equilibria_planar(param, degenerate_tol=0.0)
    else:
        eqs = [s for s in equilibria_thrust(param, coeffs, degenerate_tol=0.0) if s.k >= 0]
    if not eqs:
        raise ConfigError(f"no equilibrium at the start parameter {param}")
    eqs = sorted(eqs, key=lambda s: -s.r)
    return eqs[0] if family == "positive" else eqs[-1]


def cmd_continue(values, out=None):
    out = out or sys.stdout
    model = values["model"]
    if model not in ("planar", "thrust"):
        raise ConfigError(f"unknown model {model!r}")
    if values["branch"] not in ("positive", "negative"):
        raise ConfigError("--branch must be positive or negative")
    start = values["start"] if values["start"] is not None else (0.0 if model == "planar" else 0.05)
    stop = values["stop"] if values["stop"] is not None else (1.0 if model == "planar" else 0.99)
    coeffs = None
    if model == "thrust":
        pursuer, target = _physical(values, required=True)
        coeffs = derived_coeffs(pursuer, target)
    settings = ContinuationSettings(
        h0=values["h0"], h_min=values["h_min"], h_max=values["h_max"], newton_tol=values["newton_tol"],
        max_newton_iters=values["max_newton_iters"], max_points=values["max_points"],
        r_min=values["r_min"], direction=1 if stop >= start else -1,
    )
    x0 = _start_state(model, start, values["branch"], coeffs)
    status = EXIT_OK
    try:
        branch = continue_branch(model, (x0, start), settings, param_range=(min(start, stop), max(start, stop)),
                                 coeffs=coeffs)
    except ContinuationError as exc:
        print(f"continuation failed: {exc}", file=sys.stderr)
        branch = exc.branch
        status = EXIT_CONTINUATION
        if branch is None:
            return status

    target = values["out"]
    if target:
        pio.write_branch_csv(branch, target)
        pio.write_events_summary(branch, target + ".events")
        _write_meta(target, "continue", values)
        if values["emit_plot"]:
            with open(target + ".gp", "w", encoding="utf-8", newline="\n") as f:
                f.write(pio.branch_plot_script(os.path.basename(target), model))
    else:
        pio.write_branch_csv(branch, out)
    deg = values["deg"]
    print(f"{len(branch.points)} points, termination: {branch.termination}", file=sys.stderr)
    for e in branch.events:
        print(f"{e.kind} at param = {e.param:.7f}, r = {e.state.r:.6f}, phi = {_angle(e.state.phi, deg)}",
              file=sys.stderr)
    return status


def cmd_simulate(values, out=None):
    out = out or sys.stdout
    model = values["model"]
    settings = IntegratorSettings(method=values["method"], dt=values["dt"], rtol=values["rtol"],
                                  atol=values["atol"], r_engage=values["r_engage"],
                                  max_steps=values["max_steps"])
    status = EXIT_OK
    if model == "thrust":
        pursuer, target = _physical(values, required=True)
        if values["preset"] == "delayed-step":
            schedule = DELAYED_STEP_SCHEDULE
        elif values["preset"] == "constant":
            schedule = CONSTANT_SCHEDULE
        elif values["preset"] is not None:
            raise ConfigError(f"unknown preset {values['preset']!r}")
        else:
            schedule = []
            if values["eta"] is not None:
                schedule.append((0.0, values["eta"]))
            schedule += sorted(values["step"] or [])
            if not schedule:
                raise ConfigError("give --eta, --step or --preset")
        scenario = Scenario(
            initial=ThrustState(values["r0"], values["phi0"], values["k0"]),
            schedule=schedule, horizon=values["horizon"], target=target, pursuer=pursuer, settings=settings,
        )
        try:
            traj = run_scenario(scenario)
        except IntegrationError as exc:
            print(f"integration failed: {exc}", file=sys.stderr)
            traj, status = exc.trajectory, EXIT_INTEGRATION
    elif model == "planar":
        if values["k"] is None:
            raise ConfigError("--k is required for the planar model")
        _, target = _physical(values, required=False)
        target = target or TargetParams(1.0, 1.0)
        try:
            traj = integrate("planar", (values["r0"], values["phi0"]), values["k"], settings,
                             horizon=target.omega * values["horizon"], target=target)
        except IntegrationError as exc:
            print(f"integration failed: {exc}", file=sys.stderr)
            traj, status = exc.trajectory, EXIT_INTEGRATION
    else:
        raise ConfigError(f"unknown model {model!r}")
    if traj is None:
        return status

    sampled = traj.resample(target.omega * values["dt_out"]) if len(traj) > 1 else traj
    if values["out"]:
        pio.write_trajectory_csv(sampled, values["out"])
        _write_meta(values["out"], "simulate", values)
    else:
        pio.write_trajectory_csv(sampled, out)
    final = traj.final.state
    print(f"termination: {traj.termination} at t = {traj.psi[-1] / target.omega:.6g} s, "
          f"r = {final.r:.6g}, phi = {_angle(final.phi, values['deg'])}", file=sys.stderr)
    return status


def cmd_portrait(values, out=None):
    out = out or sys.stdout
    model = values["model"]
    settings = IntegratorSettings(method=values["method"], dt=values["dt"], rtol=values["rtol"],
                                  atol=values["atol"], r_engage=values["r_engage"],
                                  max_steps=values["max_steps"])
    n, m = values["grid"]
    grid = (values["r_range"], values["phi_range"], n, m)
    if model == "planar":
        param, coeffs = values["k"], None
        equilibria = list(equilibria_planar(param))
    elif model == "thrust":
        if values["eta"] is None:
            raise ConfigError("--eta is required for the thrust model")
        pursuer, target = _physical(values, required=True)
        coeffs = derived_coeffs(pursuer, target)
        param = values["eta"]
        equilibria = [s.planar for s in equilibria_thrust(param, coeffs)]
    else:
        raise ConfigError(f"unknown model {model!r}")
    trajs = phase_portrait(model, param, grid, settings, horizon=values["horizon"], coeffs=coeffs,
                           k0=values["k0"], workers=values["workers"])
    target = values["out"]
    if target:
        pio.write_portrait_csv(trajs, target)
        _write_meta(target, "portrait", values)
        if values["emit_plot"]:
            label = f"k = {param}" if model == "planar" else f"eta = {param}"
            with open(target + ".gp", "w", encoding="utf-8", newline="\n") as f:
                f.write(pio.portrait_plot_script(os.path.basename(target), len(trajs), equilibria, label))
    else:
        pio.write_portrait_csv(trajs, out)
    failed = sum(t.termination == "failed" for t in trajs)
    print(f"{len(trajs)} trajectories, {failed} failed", file=sys.stderr)
    return EXIT_OK


def cmd_critical(values, out=None):
    out = out or sys.stdout
    print(f"critical_speed_ratio = {critical_speed_ratio():.10f}", file=out)
    pursuer, target = _physical(values, required=False)
    if pursuer is not None and target is not None:
        c = derived_coeffs(pursuer, target)
        print(f"C1 = {c.C1:.10g}", file=out)
        print(f"C2 = {c.C2:.10g}", file=out)
        print(f"critical_throttle = {critical_throttle(c):.10f}", file=out)
        print(f"engagement_throttle = {engagement_throttle(c):.10f}", file=out)
    if pursuer is not None:
        print(f"max_target_speed_mps = {max_engagement_speed(pursuer):.10g}", file=out)
    return EXIT_OK


COMMANDS = {
    "equilibria": cmd_equilibria,
    "continue": cmd_continue,
    "simulate": cmd_simulate,
    "portrait": cmd_portrait,
    "critical": cmd_critical,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cli_values = vars(args)
        config_path = cli_values.get("config") or os.environ.get("PURSUIT_CONFIG")
        config_text = None
        if config_path:
            try:
                with open(config_path, encoding="utf-8") as f:
                    config_text = f.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config {config_path!r}: {exc}") from exc
        values = resolve(args.command, cli_values, config_text)
        return COMMANDS[args.command](values)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
