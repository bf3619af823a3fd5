"""``isochrone`` command line.

Each subcommand runs one analysis on one model and writes any number of
outputs chosen by suffix: ``.json`` (canonical), ``.csv`` (table regenerated
from the JSON), ``.svg``/``.png``/``.pdf`` (matplotlib figure). A run
metadata sidecar ``<stem>.run.json`` carries timestamps and versions so the
data files stay byte-identical across runs.

Exit codes: 0 analysis completed (whatever the verdict), 1 usage error,
2 numerical or IO failure, 3 invalid model parameters.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import plots
from .core import SystemDef
from .criteria import (
    build_involution_potential,
    mobius_involution,
    reflection,
    sabatini_tau,
    sabatini_verdict,
)
from .errors import (
    DomainExit,
    InsufficientPoints,
    InvalidModel,
    NoReturn,
    NumericalFailure,
    SingularTransformation,
)
from .field import (
    InitialProfile,
    constant_profile,
    detect_crossing,
    gaussian_profile,
    reconstruct_field,
)
from .integrate import IntegratorConfig, integrate
from .isochrony import classify_isochronous, monodromy, period_derivative, period_map
from .models import build_model, involution_hamiltonian, plasma_lienard, relativistic_lienard
from .report import FIGURE_SUFFIXES, Report, emit, write_run_metadata
from .variational import detect_blowup

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_MODEL = 0, 1, 2, 3

COMMANDS = ("simulate", "period-map", "monodromy", "blowup", "sabatini", "involution",
            "field", "crossing")

CONFIG_SECTIONS = {
    "analysis": {"command"},
    "model": {"model", "d", "gamma", "c", "example", "a", "omega"},
    "integrator": {"rtol", "atol", "h_init", "h_min", "t_max", "max_steps"},
    "initial": {"h", "x0", "Y0", "y0", "z", "horizon", "samples"},
    "field": {"profile", "amplitude", "component", "window", "nx", "t", "history"},
    "output": {"out"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_range(text: str):
    """``"a:b:N"`` -> ``(a, b, N)``; a single number ``v`` -> ``(v, v, 1)``."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return v, v, 1
        if len(parts) == 3:
            return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        pass
    raise UsageError(f"expected a number or a:b:N range, got {text!r}")


def parse_interval(text: str):
    parts = str(text).split(":")
    try:
        if len(parts) == 2:
            return float(parts[0]), float(parts[1])
    except ValueError:
        pass
    raise UsageError(f"expected an interval a:b, got {text!r}")


def parse_floats(text: str):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text: str) -> np.ndarray:
    a, b, n = parse_range(text)
    if n < 1:
        raise UsageError(f"range {text!r} needs at least one point")
    return np.linspace(a, b, n)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isochrone", description="Isochronicity and blow-up analysis "
                     "of characteristic systems.")
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="key=value config file with [section] headers")

    model = parser.add_argument_group("model")
    model.add_argument("--model", help="plasma, calibrated, relativistic, hopf, harmonic, "
                       "transformed or involution")
    model.add_argument("--d", type=int, help="plasma dimension")
    model.add_argument("--gamma", type=float, help="calibrating force coefficient")
    model.add_argument("--c", type=float, help="constant doping for the relativistic plasma")
    model.add_argument("--example", help="transformation for --model transformed "
                       "(identity, quadratic, swap)")
    model.add_argument("--a", type=float, help="involution H(x) = -x/(1+a x); 0 gives H(x) = -x")
    model.add_argument("--omega", type=float, help="involution angular frequency")

    init = parser.add_argument_group("initial data")
    init.add_argument("--h", help="family parameter: value or a:b:N")
    init.add_argument("--x0", type=float, help="override the family's starting position")
    init.add_argument("--Y0", help="override the family's starting state (comma-separated)")
    init.add_argument("--y0", help="initial gradient data Y0'(x0) (comma-separated)")
    init.add_argument("--z", help="Sabatini evaluation points: value or a:b:N")
    init.add_argument("--horizon", type=float, help="blow-up search horizon")
    init.add_argument("--samples", type=int, help="output samples for simulate")

    fld = parser.add_argument_group("field")
    fld.add_argument("--profile", choices=("gaussian", "constant"))
    fld.add_argument("--amplitude", type=float)
    fld.add_argument("--component", type=int, help="profile component (0-based)")
    fld.add_argument("--window", help="seed interval a:b (write --window=-3:3)")
    fld.add_argument("--nx", type=int, help="number of seeded characteristics")
    fld.add_argument("--t", help="snapshot times a:b:N")
    fld.add_argument("--history", type=int, help="monitor samples for crossing output")

    integ = parser.add_argument_group("integrator")
    integ.add_argument("--rtol", type=float)
    integ.add_argument("--atol", type=float)
    integ.add_argument("--h-init", dest="h_init", type=float)
    integ.add_argument("--h-min", dest="h_min", type=float)
    integ.add_argument("--t-max", dest="t_max", type=float)
    integ.add_argument("--max-steps", dest="max_steps", type=int)

    parser.add_argument("--out", action="append", help="output file, repeatable; "
                        "format from suffix (.json .csv .svg .png .pdf)")
    return parser


def load_config(path) -> dict:
    """Flatten a config file to ``{dest: raw string}``; unknown keys are usage errors."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None
    values = {}
    for section in cp.sections():
        if section not in CONFIG_SECTIONS:
            raise UsageError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            dest = key.replace("-", "_")
            if dest not in CONFIG_SECTIONS[section]:
                raise UsageError(f"unknown key {key!r} in [{section}]")
            values[dest] = raw
    return values


def merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    if not args.config:
        return args
    conv = {a.dest: a.type for a in parser._actions if a.type is not None}
    for dest, raw in load_config(args.config).items():
        if dest == "command":
            if args.command is None:
                if raw not in COMMANDS:
                    raise UsageError(f"unknown command {raw!r} in config")
                args.command = raw
        elif dest == "out":
            if not args.out:
                args.out = [p.strip() for p in raw.split(",") if p.strip()]
        elif getattr(args, dest, None) is None:
            try:
                setattr(args, dest, conv[dest](raw) if dest in conv else raw)
            except ValueError:
                raise UsageError(f"bad value {raw!r} for {dest}") from None
    return args


def integrator_config(args) -> IntegratorConfig:
    overrides = {k: getattr(args, k) for k in ("rtol", "atol", "h_init", "h_min", "t_max",
                                                "max_steps") if getattr(args, k) is not None}
    try:
        return IntegratorConfig().replace(**overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def model_from_args(args) -> SystemDef:
    if not args.model:
        raise UsageError("--model is required")
    params = {k: getattr(args, k) for k in ("d", "gamma", "c", "example", "a", "omega")
              if getattr(args, k) is not None}
    return build_model(args.model, **params)


def model_echo(sys_: SystemDef) -> dict:
    echo = {"name": sys_.name, "n": sys_.n}
    echo.update(sys_.params)
    return echo


def default_family(sys_: SystemDef):
    """``h -> (x0, Y0)`` suited to each built-in model kind."""
    kind = sys_.params.get("kind", "")
    n = sys_.n
    if kind in ("plasma_radial", "plasma_calibrated"):
        return lambda h: (1.0, np.array([0.0, h]))
    if kind == "relativistic":
        return lambda h: (0.0, np.array([h, 0.0]))
    if n == 1:
        return lambda h: (h, np.array([0.0]))
    return lambda h: (1.0, np.concatenate([[h], np.zeros(n - 1)]))


def _start(args, sys_, h):
    x0, Y0 = default_family(sys_)(h)
    if args.x0 is not None:
        x0 = args.x0
    if args.Y0 is not None:
        Y0 = np.array(parse_floats(args.Y0))
    if len(Y0) != sys_.n:
        raise UsageError(f"--Y0 needs {sys_.n} components")
    return float(x0), np.asarray(Y0, dtype=float)


def _single_h(args, default: float) -> float:
    if args.h is None:
        return default
    a, b, n = parse_range(args.h)
    if n != 1:
        raise UsageError("this analysis takes a single --h value")
    return a


def _y_names(n):
    return [f"Y{i + 1}" for i in range(n)]


def cmd_simulate(args, sys_, cfg) -> Report:
    x0, Y0 = _start(args, sys_, _single_h(args, 0.2))
    samples = args.samples or 201
    t_eval = np.linspace(0.0, cfg.t_max, samples)
    traj = integrate(sys_, np.concatenate([[x0], Y0]), cfg, dense=False, t_eval=t_eval)
    cols = ["t", "x"] + _y_names(sys_.n)
    data = [[t] + list(s) for t, s in zip(traj.t_eval, traj.y_eval)]
    final = traj.y_final
    results = {"x0": x0, "Y0": Y0, "t_final": traj.t_final, "state_final": final,
               "status": traj.status, "steps": len(traj.t) - 1}

    def figure():
        ys = np.asarray(traj.y_eval)
        return plots.trajectory_figure(traj.t_eval, dict(zip(cols[1:], ys.T)),
                                       title=sys_.name)

    return Report("simulate", model_echo(sys_), results, cols, data, figure=figure,
                  summary=f"simulate {sys_.name}: t={traj.t_final:.6g}, status={traj.status}")


def cmd_period_map(args, sys_, cfg) -> Report:
    a, b, N = parse_range(args.h or "0.05:0.3:6")
    family = default_family(sys_)
    if N >= 3 and args.x0 is None and args.Y0 is None:
        verdict = classify_isochronous(sys_, family, (a, b), N, cfg)
        pm = verdict.period_map
        extra = {"verdict": verdict.verdict, "max_dev_identity": verdict.max_dev,
                 "max_multiplier_modulus": verdict.max_multiplier_modulus}
    else:
        pm = period_map(sys_, family, (a, b), N, cfg)
        extra = {}
    data = [[e.h, e.T, e.return_error] for e in pm.entries]
    results = {"spread": pm.spread, "closed": [e.closed for e in pm.entries]}
    if N >= 3:
        results["T_prime"] = [d for _, d in period_derivative(pm)]
    results.update(extra)
    summary = f"period-map {sys_.name}: {N} entries, spread={pm.spread:.3e}"
    if extra:
        summary += f", verdict={extra['verdict']}"

    def figure():
        return plots.period_map_figure(pm.h, pm.T, reference=2 * math.pi, title=sys_.name)

    return Report("period-map", model_echo(sys_), results, ["h", "T", "return_error"], data,
                  figure=figure, summary=summary)


def cmd_monodromy(args, sys_, cfg) -> Report:
    x0, Y0 = _start(args, sys_, _single_h(args, 0.2))
    res = monodromy(sys_, x0, Y0, cfg)
    mu = res.multipliers
    data = [[i, float(m.real), float(m.imag), float(abs(m))] for i, m in enumerate(mu)]
    results = {"x0": x0, "Y0": Y0, "T": res.period.T, "return_error": res.period.return_error,
               "dev_identity": res.dev_identity, "M": res.M}
    return Report("monodromy", model_echo(sys_), results, ["index", "re", "im", "modulus"], data,
                  figure=lambda: plots.multiplier_figure(mu, title=sys_.name),
                  summary=f"monodromy {sys_.name}: T={res.period.T:.10g}, "
                          f"|M-I|={res.dev_identity:.3e}")


def cmd_blowup(args, sys_, cfg) -> Report:
    x0, Y0 = _start(args, sys_, _single_h(args, 0.0))
    y0 = np.array(parse_floats(args.y0)) if args.y0 is not None else np.zeros(sys_.n)
    if y0.size != sys_.n:
        raise UsageError(f"--y0 needs {sys_.n} components")
    rep = detect_blowup(sys_, x0, Y0, y0, cfg, args.horizon)
    m = sys_.n + 1
    traj = rep.trajectory
    data = [] if traj is None else [[t, z[m]] for t, z in zip(traj.t, traj.y)]
    results = rep.as_dict()
    results.update({"x0": x0, "Y0": Y0, "y0": y0})
    verdict = f"blown at t*={rep.t_star:.10g}" if rep.blown else f"no blow-up by t={rep.horizon:g}"

    def figure():
        arr = np.asarray(data).reshape(-1, 2)
        return plots.q_figure(arr[:, 0], arr[:, 1], rep.t_star, title=sys_.name)

    return Report("blowup", model_echo(sys_), results, ["t", "q"], data, figure=figure,
                  summary=f"blowup {sys_.name}: {verdict}")


def lienard_for(sys_: SystemDef):
    """Lienard form of a built-in model, plus the half-normalized tau if one exists."""
    kind = sys_.params.get("kind")
    if kind in ("plasma_radial", "plasma_calibrated"):
        d = sys_.params["d"]
        a = 1.0 - sys_.params.get("gamma", 0.0)
        coeff = (2 * a + d) ** 2 - 9 * a * d
        return plasma_lienard(d, 1.0 - a), (lambda z: coeff * z**6 / 2.0)
    if kind == "relativistic":
        c = sys_.params.get("c")
        if c is None:
            raise InvalidModel("Lienard form needs a constant doping profile")
        return relativistic_lienard(c), None
    raise InvalidModel(f"model {sys_.name} has no Lienard form")


def cmd_sabatini(args, sys_, cfg) -> Report:
    spec, half_form = lienard_for(sys_)
    zs = _grid(args.z or "1")
    taus = [sabatini_tau(spec, z) for z in zs]
    verdict = sabatini_verdict(spec)
    data = []
    for z, tau in zip(zs, taus):
        data.append([z, tau, tau / z**6 if z != 0 else float("nan")])
    results = {"z": zs, "tau": taus[0] if len(taus) == 1 else taus, "verdict": verdict}
    if half_form is not None:
        half = [half_form(z) for z in zs]
        results["tau_half_normalization"] = half[0] if len(half) == 1 else half
    return Report("sabatini", model_echo(sys_), results, ["z", "tau", "tau_over_z6"], data,
                  figure=lambda: plots.tau_figure(zs, taus, title=spec.name),
                  summary=f"sabatini {spec.name}: tau({zs[0]:g})={taus[0]:.10g}, "
                          f"verdict={verdict}")


def cmd_involution(args, sys_, cfg) -> Report:
    a = args.a if args.a is not None else 0.3
    omega = args.omega if args.omega is not None else 1.0
    spec = reflection(omega) if a == 0 else mobius_involution(a, omega)
    osc = involution_hamiltonian(spec)
    lo, hi, N = parse_range(args.h or "0.2:0.8:3")
    pm = period_map(osc, lambda h: (h, np.array([0.0])), (lo, hi), N, cfg)
    expected = 2 * math.pi / omega
    dev = float(np.nanmax(np.abs(pm.T - expected))) if pm.entries else float("nan")
    V, _ = build_involution_potential(spec)
    results = {"H": spec.name, "omega": omega, "expected_period": expected,
               "max_period_deviation": dev, "isochronous": bool(dev <= 1e-6),
               "V_at_h": [V(h) for h in pm.h]}
    data = [[e.h, e.T, e.return_error] for e in pm.entries]
    return Report("involution", model_echo(osc), results, ["h", "T", "return_error"], data,
                  figure=lambda: plots.period_map_figure(pm.h, pm.T, expected, title=spec.name),
                  summary=f"involution {spec.name}: max |T - 2pi/omega| = {dev:.3e}")


def profile_from_args(args, sys_: SystemDef) -> InitialProfile:
    window = parse_interval(args.window) if args.window else (-3.0, 3.0)
    nx = args.nx or 64
    kind = sys_.params.get("kind", "")
    component = args.component
    if component is None:
        component = 1 if kind.startswith("plasma") else 0
    if not 0 <= component < sys_.n:
        raise UsageError(f"--component must be in [0, {sys_.n})")
    amplitude = args.amplitude if args.amplitude is not None else 0.2
    try:
        if (args.profile or "gaussian") == "constant":
            value = np.zeros(sys_.n)
            value[component] = amplitude
            return constant_profile(value, window, nx)
        return gaussian_profile(amplitude, sys_.n, component, window, nx)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_field(args, sys_, cfg) -> Report:
    profile = profile_from_args(args, sys_)
    t_grid = _grid(args.t or "0:10:11")
    snaps = reconstruct_field(sys_, profile, t_grid, cfg)
    n = sys_.n
    cols = ["t", "i", "X"] + _y_names(n) + ["q"] + [f"y{k + 1}" for k in range(n)]
    data = []
    for s in snaps:
        for i in range(len(s.X)):
            data.append([s.t, i, s.X[i], *s.Y[i], s.q[i], *s.y[i]])
    ordered = [s.ordered for s in snaps]
    results = {"t": [s.t for s in snaps], "ordered": ordered,
               "min_q": [float(s.q.min()) for s in snaps], "N_x": profile.N_x,
               "window": list(profile.window)}

    def figure():
        return plots.fan_figure([s.t for s in snaps], np.array([s.X for s in snaps]),
                                title=sys_.name)

    return Report("field", model_echo(sys_), results, cols, data, figure=figure,
                  summary=f"field {sys_.name}: {len(snaps)} snapshots, "
                          f"ordered throughout={all(ordered)}")


def cmd_crossing(args, sys_, cfg) -> Report:
    profile = profile_from_args(args, sys_)
    t_max = args.t_max if args.t_max is not None else 500.0
    rep = detect_crossing(sys_, profile, t_max, cfg.replace(t_max=t_max),
                          history_points=args.history or 201)
    h = rep.history
    data = [] if not h else [list(r) for r in zip(h["t"], h["min_gap"], h["min_q"])]
    results = {"found": rep.found, "pair": rep.pair, "t_cross": rep.t_cross,
               "t_q_zero": rep.t_q_zero, "min_q_at_cross": rep.min_q_at_cross,
               "agree": rep.agree, "bound": rep.bound, "t_max": rep.t_max}
    what = f"crossing at t={rep.t_cross:.10g}" if rep.found else f"no crossing by t={t_max:g}"

    def figure():
        return plots.crossing_figure(h["t"], h["min_gap"], h["min_q"], rep.t_cross,
                                     title=sys_.name)

    return Report("crossing", model_echo(sys_), results, ["t", "min_gap", "min_q"], data,
                  figure=figure if h else None, summary=f"crossing {sys_.name}: {what}")


HANDLERS = {
    "simulate": cmd_simulate,
    "period-map": cmd_period_map,
    "monodromy": cmd_monodromy,
    "blowup": cmd_blowup,
    "sabatini": cmd_sabatini,
    "involution": cmd_involution,
    "field": cmd_field,
    "crossing": cmd_crossing,
}


def _config_echo(cfg: IntegratorConfig) -> dict:
    return {k: getattr(cfg, k) for k in ("rtol", "atol", "h_init", "h_min", "t_max",
                                         "max_steps")}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = datetime.now(timezone.utc).isoformat()
    clock = time.perf_counter()
    parser = build_parser()
    try:
        args = merge_config(parser.parse_args(argv), parser)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        outputs = [Path(p) for p in (args.out or [])]
        for p in outputs:
            if p.suffix.lower() not in {".json", ".csv"} | FIGURE_SUFFIXES:
                raise UsageError(f"unsupported output suffix for {p}")
        cfg = integrator_config(args)
        if args.command == "involution" and not args.model:
            args.model = "involution"
        sys_ = model_from_args(args)
        report = HANDLERS[args.command](args, sys_, cfg)
        report.config = _config_echo(cfg)
        for p in outputs:
            emit(report, p)
        if outputs:
            write_run_metadata(outputs[0].with_suffix(".run.json"), argv, outputs, started,
                               time.perf_counter() - clock)
    except UsageError as exc:
        print(f"isochrone: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidModel, SingularTransformation) as exc:
        print(f"isochrone: invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (NumericalFailure, NoReturn, DomainExit, InsufficientPoints) as exc:
        print(f"isochrone: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"isochrone: IO failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"isochrone: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(report.summary)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
