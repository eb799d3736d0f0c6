"""
Command-line front end.

Subcommands: ``rates``, ``evolve``, ``concurrence``, ``birth`` and ``sweep``.
Times are in units of 1/gamma everywhere. Options can also be supplied in a
JSON file via ``--config``; explicit flags take precedence over the file.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .collective import collective_rates, gamma12_ratio, omega12_ratio
from .core import DensityMatrix, DickeBlock, DipoleOrientation, PhysicalConfig, dicke_to_product, product_to_dicke
from .detection import DEFAULT_T_MAX, birth_for_config, resolve_params, sweep_birth_map
from .dynamics import DEFAULT_STEP, EvolutionKind, EvolutionMode, block_series, evolve
from .entanglement import concurrence_dicke, concurrence_x, wootters_c_tilde
from .errors import NumericalError, SuddenBirthError
from .scenarios import INITIAL_STATES, build_initial_state

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

EVOLVE_COLUMNS = ("t", "concurrence", "c_tilde", "rho44", "rho_ss", "rho_aa", "abs_rho_sa", "threshold_factor")
SWEEP_COLUMNS = ("theta", "separation", "t", "concurrence")
BIRTH_COLUMNS = (
    "theta",
    "separation",
    "gamma12",
    "omega12",
    "birth_time",
    "death_time",
    "death_asymptotic",
    "peak_concurrence",
    "peak_time",
    "error",
)
RATES_COLUMNS = ("separation", "x", "gamma12_over_gamma", "omega12_over_gamma")

MODES = {
    "analytic": EvolutionKind.ANALYTIC_BLOCK,
    "ode-block": EvolutionKind.ODE_BLOCK,
    "ode-full": EvolutionKind.ODE_FULL,
}

#: Built-in values of every option that may come from flags or the config file.
DEFAULTS = {
    "separation": 0.25,
    "orientation": "parallel",
    "theta": 0.0,
    "init": "pi-half",
    "mode": "analytic",
    "keep_coherences": False,
    "dicke": False,
    "t_max": None,  # per-subcommand, see _T_MAX
    "steps": None,  # per-subcommand, see _STEPS
    "step": DEFAULT_STEP,
    "gamma12_override": None,
    "omega12_override": None,
    "format": None,  # per-subcommand, see _FORMAT
    "out": None,
    "figure": None,
    "thetas": None,
    "separations": None,
    "workers": 1,
    "births_out": None,
    "scan": None,
}
_T_MAX = {"evolve": 10.0, "birth": DEFAULT_T_MAX, "sweep": 10.0}
_STEPS = {"evolve": 1000, "sweep": 200}
_FORMAT = {"rates": "text", "evolve": "csv", "concurrence": "text", "birth": "text", "sweep": "csv"}

FIGURES = {
    "fig2": {"init": "pi-half", "thetas": "0:90:5", "separations": "0.25"},
    "fig4": {"init": "pi", "thetas": "0", "separations": "0.05:2.0:0.01"},
}


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return repr(float(v))


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def _dump_json(obj) -> str:
    return json.dumps(_json_value(obj), indent=2) + "\n"


def _csv_text(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def parse_range(text: str) -> list:
    """``"a:b:step"`` (inclusive of b) or a comma-separated list of numbers."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9))
            # round to the step's decimal precision so grids print cleanly
            digits = max(0, -int(math.floor(math.log10(step))) + 6)
            return [round(start + k * step, digits) for k in range(n + 1)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected 'start:stop:step' or 'v1,v2,...'") from None


# -- argument handling ----------------------------------------------------


def _physics_flags(p: argparse.ArgumentParser, with_theta: bool = True):
    p.add_argument("--separation", type=float, help="interatomic distance r12/lambda (default 0.25)")
    p.add_argument("--orientation", choices=[o.value for o in DipoleOrientation], help="dipole vs interatomic axis")
    if not with_theta:
        return
    p.add_argument("--theta", type=float, help="excitation angle to the axis, degrees (default 0)")
    p.add_argument("--gamma12-override", type=float, help="replace the computed gamma12/gamma")
    p.add_argument("--omega12-override", type=float, help="replace the computed Omega12/gamma")


def _evolution_flags(p: argparse.ArgumentParser):
    p.add_argument("--init", choices=INITIAL_STATES, help="initial state (default pi-half)")
    p.add_argument("--mode", choices=list(MODES), help="evolution route (default analytic)")
    p.add_argument(
        "--keep-coherences",
        action="store_const",
        const=True,
        help="ode-full only: keep the optical coherences of the initial state",
    )
    p.add_argument("--dicke", action="store_const", const=True, help="small-sample Dicke model (analytic only)")
    p.add_argument("--t-max", type=float, help="end time in units of 1/gamma")
    p.add_argument("--step", type=float, help="integrator step, at most 1e-3 (default 1e-3)")


def _output_flags(p: argparse.ArgumentParser, formats=("csv", "json")):
    p.add_argument("--out", help="write output to this path instead of stdout")
    p.add_argument("--format", choices=formats, help=f"output format (default {formats[0]})")
    p.add_argument("--config", help="JSON file with option values; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="suddenbirth",
        description="Delayed sudden birth of entanglement between two collectively decaying qubits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="collective damping gamma12 and dipole-dipole shift Omega12")
    _physics_flags(p, with_theta=False)
    p.add_argument("--scan", help="separation range 'start:stop:step' or list; emits CSV")
    _output_flags(p, formats=("text", "csv", "json"))

    p = sub.add_parser("evolve", help="populations and concurrence versus time")
    _physics_flags(p)
    _evolution_flags(p)
    p.add_argument("--steps", type=int, help="number of time intervals on [0, t-max] (default 1000)")
    _output_flags(p)

    p = sub.add_parser("concurrence", help="concurrence of a state read from a JSON file")
    p.add_argument("state", help="JSON file with 'rho' ([[re, im], ...] 4x4), 'rho_real'/'rho_imag', or 'dicke'")
    _output_flags(p, formats=("text", "json"))

    p = sub.add_parser("birth", help="threshold time of entanglement creation for one configuration")
    _physics_flags(p)
    _evolution_flags(p)
    _output_flags(p, formats=("text", "json"))

    p = sub.add_parser("sweep", help="concurrence surfaces over angle or separation")
    _physics_flags(p)
    _evolution_flags(p)
    p.add_argument("--figure", choices=sorted(FIGURES), help="preset grid: fig2 (theta sweep) or fig4 (separation sweep)")
    p.add_argument("--thetas", help="theta grid 'start:stop:step' or list (degrees)")
    p.add_argument("--separations", help="separation grid 'start:stop:step' or list")
    p.add_argument("--steps", type=int, help="number of time intervals on [0, t-max] (default 200)")
    p.add_argument("--workers", type=int, help="parallel sweep cells (output order is unaffected)")
    p.add_argument("--births-out", help="also write a per-cell birth/death table (CSV) to this path")
    _output_flags(p, formats=("csv",))
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over built-in defaults."""
    file_values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config!r}: {exc}") from None
        if not isinstance(file_values, dict):
            raise UsageError("config file must hold a JSON object")
        file_values = {k.replace("-", "_"): v for k, v in file_values.items()}
        unknown = sorted(set(file_values) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    opts = {}
    explicit = set()
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            opts[key] = flag
            explicit.add(key)
        elif key in file_values:
            opts[key] = file_values[key]
            explicit.add(key)
        else:
            opts[key] = default
    cmd = args.command
    for key, table in (("t_max", _T_MAX), ("steps", _STEPS), ("format", _FORMAT)):
        if opts[key] is None:
            opts[key] = table.get(cmd)
    opts["explicit"] = explicit
    return opts


def _mode(opts) -> EvolutionMode:
    if opts["mode"] not in MODES:
        raise UsageError(f"unknown mode {opts['mode']!r}")
    kind = MODES[opts["mode"]]
    if opts["keep_coherences"] and kind is not EvolutionKind.ODE_FULL:
        raise UsageError("--keep-coherences needs the full density matrix; use --mode ode-full")
    if opts["dicke"]:
        if kind is not EvolutionKind.ANALYTIC_BLOCK:
            raise UsageError("--dicke is only available with --mode analytic")
        if opts["gamma12_override"] is not None or opts["omega12_override"] is not None:
            raise UsageError("--dicke fixes the rates; drop the gamma12/omega12 overrides")
    return EvolutionMode(kind, paper_reduced=not opts["keep_coherences"])


def _config(opts, theta=None, separation=None) -> PhysicalConfig:
    try:
        return PhysicalConfig(
            separation_over_lambda=float(opts["separation"] if separation is None else separation),
            dipole_orientation=opts["orientation"],
            theta_deg=float(opts["theta"] if theta is None else theta),
        )
    except (SuddenBirthError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _time_grid(opts) -> np.ndarray:
    t_max, steps = float(opts["t_max"]), int(opts["steps"])
    if not math.isfinite(t_max) or t_max < 0:
        raise UsageError("--t-max must be >= 0")
    if t_max == 0:
        return np.array([0.0])
    if steps < 1:
        raise UsageError("--steps must be >= 1")
    return np.linspace(0.0, t_max, steps + 1)


def _resolved_config_dict(opts, config: Optional[PhysicalConfig], params, mode: Optional[EvolutionMode]) -> dict:
    out = {k: v for k, v in opts.items() if k not in ("explicit", "out", "config")}
    if config is not None:
        out["physical"] = {
            "separation_over_lambda": config.separation_over_lambda,
            "dipole_orientation": config.dipole_orientation.value,
            "theta_deg": config.theta_deg,
            "gamma": config.gamma,
            "kr": config.kr,
            "excitation_phase": config.excitation_phase,
        }
    if params is not None:
        out["collective"] = {"gamma": params.gamma, "gamma12": params.gamma12, "omega12": params.omega12}
    if mode is not None:
        out["evolution_mode"] = {"kind": mode.kind.value, "paper_reduced": mode.paper_reduced}
    return out


def _params(opts, config: PhysicalConfig):
    params = resolve_params(config, opts["gamma12_override"], opts["omega12_override"])
    if params.omega12_divergent and not opts["dicke"]:
        raise UsageError("Omega12 diverges at this separation; pass --omega12-override or --dicke")
    return params


# -- subcommands ----------------------------------------------------------


def cmd_rates(opts) -> int:
    orientation = DipoleOrientation(opts["orientation"])
    fmt = opts["format"]
    if opts["scan"] is not None:
        seps = parse_range(opts["scan"])
        if not seps or min(seps) <= 0:
            raise UsageError("--scan separations must be > 0")
        x = 2 * math.pi * np.asarray(seps)
        rows = list(
            zip(
                seps,
                x,
                np.atleast_1d(gamma12_ratio(x, orientation.alignment)),
                np.atleast_1d(omega12_ratio(x, orientation.alignment)),
            )
        )
    else:
        if "separation" not in opts["explicit"]:
            raise UsageError("rates needs --separation (or --scan)")
        config = _config(opts)
        params = collective_rates(config)
        rows = [(config.separation_over_lambda, config.kr, params.gamma12 / params.gamma, params.omega12 / params.gamma)]
    if fmt == "json":
        payload = {"orientation": orientation.value, "columns": list(RATES_COLUMNS), "rows": rows}
        _emit(_dump_json(payload), opts["out"])
    elif fmt == "csv" or opts["scan"] is not None:
        _emit(_csv_text(RATES_COLUMNS, rows), opts["out"])
    else:
        sep, _, g, o = rows[0]
        text = (
            f"separation r12/lambda = {_fmt(sep)}\n"
            f"orientation           = {orientation.value}\n"
            f"gamma12/gamma         = {_fmt(g)}\n"
            f"omega12/gamma         = {_fmt(o)}\n"
        )
        _emit(text, opts["out"])
    return 0


def _evolve_rows(opts, config: PhysicalConfig, mode: EvolutionMode, times: np.ndarray):
    params = _params(opts, config)
    rho0 = build_initial_state(opts["init"], config)
    traj = evolve(rho0, params, times, mode, dicke_model=bool(opts["dicke"]), step=float(opts["step"]))
    cols = block_series(traj)
    rows = [
        (
            traj.times[i],
            traj.concurrence[i],
            traj.c_tilde[i],
            cols["rho44"][i],
            cols["rho_ss"][i],
            cols["rho_aa"][i],
            abs(cols["rho_sa"][i]),
            cols["threshold_factor"][i],
        )
        for i in range(len(traj))
    ]
    return params, rows


def cmd_evolve(opts) -> int:
    mode = _mode(opts)
    config = _config(opts)
    times = _time_grid(opts)
    params, rows = _evolve_rows(opts, config, mode, times)
    if opts["format"] == "json":
        payload = {
            "config": _resolved_config_dict(opts, config, params, mode),
            "columns": list(EVOLVE_COLUMNS),
            "rows": rows,
        }
        _emit(_dump_json(payload), opts["out"])
    else:
        _emit(_csv_text(EVOLVE_COLUMNS, rows), opts["out"])
    return 0


def _read_state(path: str):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read state file {path!r}: {exc}") from None
    try:
        if "dicke" in data:
            d = dict(data["dicke"])
            sa = d.get("rho_sa", 0.0)
            if isinstance(sa, (list, tuple)):
                sa = complex(sa[0], sa[1])
            d["rho_sa"] = sa
            return dicke_to_product(DickeBlock(**d))
        if "rho" in data:
            arr = np.asarray(data["rho"], dtype=float)
            if arr.shape == (4, 4):
                m = arr.astype(complex)
            elif arr.shape == (4, 4, 2):
                m = arr[..., 0] + 1j * arr[..., 1]
            else:
                raise UsageError(f"'rho' must be 4x4 or 4x4x2, got shape {arr.shape}")
        elif "rho_real" in data:
            m = np.asarray(data["rho_real"], dtype=float) + 1j * np.asarray(data.get("rho_imag", np.zeros((4, 4))))
        else:
            raise UsageError("state file needs one of 'rho', 'rho_real' or 'dicke'")
        return DensityMatrix(m)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid state: {exc}") from None


def cmd_concurrence(args, opts) -> int:
    rho = _read_state(args.state)
    c_tilde = wootters_c_tilde(rho)
    result = {"concurrence": min(1.0, max(0.0, c_tilde)), "c_tilde": c_tilde, "block_form": rho.is_block_form(1e-12)}
    if result["block_form"]:
        m = rho.matrix
        result["c_tilde_x"] = concurrence_x(m[0, 0].real, m[1, 1].real, m[2, 2].real, m[3, 3].real, m[1, 2])[1]
        result["c_tilde_dicke"] = concurrence_dicke(product_to_dicke(rho))[1]
    if opts["format"] == "json":
        _emit(_dump_json(result), opts["out"])
    else:
        lines = [f"{k} = {_fmt(v)}" for k, v in result.items()]
        _emit("\n".join(lines) + "\n", opts["out"])
    return 0


def cmd_birth(opts) -> int:
    mode = _mode(opts)
    config = _config(opts)
    t_max = float(opts["t_max"])
    if not (math.isfinite(t_max) and t_max > 0):
        raise UsageError("--t-max must be > 0")
    params = _params(opts, config)
    _, report = birth_for_config(
        opts["init"],
        config,
        t_max,
        mode,
        dicke_model=bool(opts["dicke"]),
        gamma12_override=params.gamma12 if opts["gamma12_override"] is not None else None,
        omega12_override=params.omega12 if opts["omega12_override"] is not None else None,
        step=float(opts["step"]),
    )
    payload = {"config": _resolved_config_dict(opts, config, params, mode), "report": report.to_dict()}
    if opts["format"] == "json":
        _emit(_dump_json(payload), opts["out"])
        return 0
    r = report
    lines = [
        f"birth_time       = {_fmt(r.birth_time) or 'none'}",
        f"death_time       = {_fmt(r.death_time) or 'none'}{' (asymptotic)' if r.death_asymptotic else ''}",
        f"peak_concurrence = {_fmt(r.peak_concurrence)}",
        f"peak_time        = {_fmt(r.peak_time)}",
        f"t_max            = {_fmt(r.t_max)}",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    if opts["out"]:
        _emit(_dump_json(payload), opts["out"])
    return 0


def _sweep_grid(opts):
    preset = FIGURES.get(opts["figure"]) if opts["figure"] else None
    if opts["figure"] and preset is None:
        raise UsageError(f"unknown figure {opts['figure']!r}; expected one of {sorted(FIGURES)}")
    if preset:
        if "init" in opts["explicit"] and opts["init"] != preset["init"]:
            raise UsageError(f"--figure {opts['figure']} uses --init {preset['init']}")
        opts["init"] = preset["init"]
    thetas = opts["thetas"] or (preset["thetas"] if preset else None)
    separations = opts["separations"] or (preset["separations"] if preset else None)
    thetas = parse_range(thetas) if thetas is not None else [float(opts["theta"])]
    separations = parse_range(separations) if separations is not None else [float(opts["separation"])]
    if not thetas or not separations:
        raise UsageError("empty sweep grid")
    return thetas, separations


def cmd_sweep(opts) -> int:
    mode = _mode(opts)
    thetas, separations = _sweep_grid(opts)
    times = _time_grid(opts)
    workers = int(opts["workers"] or 1)
    cells = [(th, sep) for th in thetas for sep in separations]
    configs = [_config(opts, theta=th, separation=sep) for th, sep in cells]

    def surface(config):
        return _evolve_rows(opts, config, mode, times)[1]

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(surface, configs))
    else:
        results = [surface(c) for c in configs]
    rows = []
    for (th, sep), cell_rows in zip(cells, results):
        rows.extend((th, sep, r[0], r[1]) for r in cell_rows)
    _emit(_csv_text(SWEEP_COLUMNS, rows), opts["out"])

    if opts["births_out"]:
        t_max = float(opts["t_max"])
        if t_max <= 0:
            raise UsageError("--births-out needs --t-max > 0")
        report_cells = sweep_birth_map(
            opts["init"],
            thetas,
            separations,
            t_max=t_max,
            mode=mode,
            orientation=DipoleOrientation(opts["orientation"]),
            gamma12_override=opts["gamma12_override"],
            omega12_override=opts["omega12_override"],
            dicke_model=bool(opts["dicke"]),
            step=float(opts["step"]),
            workers=workers,
        )
        brows = []
        for c in report_cells:
            r = c.report
            brows.append(
                (
                    c.theta_deg,
                    c.separation_over_lambda,
                    c.params.gamma12 if c.params else None,
                    c.params.omega12 if c.params else None,
                    r.birth_time if r else None,
                    r.death_time if r else None,
                    r.death_asymptotic if r else None,
                    r.peak_concurrence if r else None,
                    r.peak_time if r else None,
                    c.error or "",
                )
            )
        _emit(_csv_text(BIRTH_COLUMNS, brows), opts["births_out"])
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    commands = {
        "rates": cmd_rates,
        "evolve": cmd_evolve,
        "concurrence": lambda opts: cmd_concurrence(args, opts),
        "birth": cmd_birth,
        "sweep": cmd_sweep,
    }
    try:
        code = commands[args.command](resolve_options(args))
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"{parser.prog} {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SuddenBirthError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
