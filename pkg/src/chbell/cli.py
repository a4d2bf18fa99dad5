"""Command-line front end.

Subcommands: predict | optimize | threshold | simulate | visibility.

Configuration comes from an optional flat ``key = value`` file (``#`` starts a
comment) given with --config, overridden by command-line flags.  A JSON
document produced by a previous run with --json is also accepted as a config
file (its "config" object is read back), so any result can be reproduced from
its own output.

Output: an aligned table with 6 significant digits by default, a fixed-key
JSON document with --json, and plot-ready CSV (full precision, '.' decimal,
newline-terminated rows) with --csv.  Angles are degrees everywhere.

Exit codes: 0 success, 1 usage error, 2 domain or validation error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from .errors import DomainError
from .inequality import LHVStrategy, ch_probability_sum
from .model import (
    NO_POLARIZER,
    AnalyzerSetting,
    EntangledState,
    SettingsQuad,
    coincidence_probability,
    make_state,
    single_probability,
)
from .montecarlo import (
    DetectionModel,
    LHVMixture,
    simulate_ch_experiment,
    simulate_lhv_source,
    visibility_scan,
)
from .optimize import efficiency_curve, optimize_angles

_EXIT_OK = 0
_EXIT_USAGE = 1
_EXIT_DOMAIN = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(message)


@dataclass
class RunConfig:
    """Merged file + flag configuration; None means not provided."""

    f: float | None = None
    phi: float | None = None
    v: float | None = None
    quad: tuple[float, float, float, float] | None = None
    eta1: float | None = None
    eta2: float | None = None
    pair_rate: float | None = None
    duration: float | None = None
    dark_rate1: float | None = None
    dark_rate2: float | None = None
    coincidence_window: float | None = None
    seed: int | None = None
    lhv_mixture: str | None = None
    theta1: float | None = None
    points: int | None = None
    span: float | None = None
    start: float | None = None
    f_values: tuple[float, ...] | None = None
    simulated: bool | None = None
    csv: str | None = None


def _parse_quad(raw) -> tuple[float, float, float, float]:
    if isinstance(raw, (list, tuple)):
        parts = [float(x) for x in raw]
    else:
        parts = [float(x) for x in str(raw).split(",") if str(x).strip() != ""]
    if len(parts) != 4:
        raise _UsageError(f"quad needs four comma-separated angles, got {raw!r}")
    return tuple(parts)


def _parse_float_list(raw) -> tuple[float, ...]:
    if isinstance(raw, (list, tuple)):
        return tuple(float(x) for x in raw)
    text = str(raw).strip()
    if text == "":
        return ()
    return tuple(float(x) for x in text.split(","))


def _parse_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise _UsageError(f"expected a boolean, got {raw!r}")


_CASTS = {
    "f": float,
    "phi": float,
    "v": float,
    "quad": _parse_quad,
    "eta1": float,
    "eta2": float,
    "pair_rate": float,
    "duration": float,
    "dark_rate1": float,
    "dark_rate2": float,
    "coincidence_window": float,
    "seed": lambda x: int(str(x), 10),
    "lhv_mixture": str,
    "theta1": float,
    "points": lambda x: int(str(x), 10),
    "span": float,
    "start": float,
    "f_values": _parse_float_list,
    "simulated": _parse_bool,
    "csv": str,
}


def _read_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _UsageError(f"cannot read config file {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise _UsageError(f"config file {path} is not valid JSON: {exc}") from exc
        data = doc.get("config", doc)
        if not isinstance(data, dict):
            raise _UsageError(f"JSON config in {path} must be an object")
        return data
    data = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        data[key.strip()] = value.strip()
    return data


def _resolve(args: argparse.Namespace) -> RunConfig:
    file_data = _read_config_file(args.config) if getattr(args, "config", None) else {}
    cfg = RunConfig()
    for field in fields(RunConfig):
        key = field.name
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            raw = flag_value
        elif key in file_data and file_data[key] is not None:
            raw = file_data[key]
        else:
            continue
        try:
            setattr(cfg, key, _CASTS[key](raw))
        except (ValueError, TypeError) as exc:
            raise _UsageError(f"bad value for {key}: {raw!r} ({exc})") from exc
    return cfg


def _require(cfg: RunConfig, *keys: str):
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise _UsageError("missing required option(s): " + ", ".join(f"--{k.replace('_', '-')}" for k in missing))
    values = tuple(getattr(cfg, k) for k in keys)
    return values[0] if len(values) == 1 else values


def _state_from(cfg: RunConfig) -> EntangledState:
    f = _require(cfg, "f")
    phi_deg = cfg.phi if cfg.phi is not None else 0.0
    v = cfg.v if cfg.v is not None else 1.0
    return make_state(f=f, phi=math.radians(phi_deg), v=v)


def _model_from(cfg: RunConfig) -> DetectionModel:
    kwargs = {}
    for key in ("eta1", "eta2", "pair_rate", "duration", "dark_rate1", "dark_rate2",
                "coincidence_window"):
        if getattr(cfg, key) is not None:
            kwargs[key] = getattr(cfg, key)
    return DetectionModel(**kwargs)


def _ensure_seed(cfg: RunConfig) -> int:
    """Explicit seed, or a fresh one recorded in the output."""
    if cfg.seed is None:
        cfg.seed = int(np.random.SeedSequence().entropy)
    return cfg.seed


def _echo(cfg: RunConfig, keys: tuple[str, ...]) -> dict:
    doc = {}
    for key in keys:
        value = getattr(cfg, key)
        if value is None:
            continue
        doc[key] = list(value) if isinstance(value, tuple) else value
    return doc


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _print_json(doc: dict) -> None:
    print(json.dumps(doc, indent=2))


def _write_csv(path: str, header: str, rows: list[str], append: bool) -> None:
    exists = os.path.exists(path) and os.path.getsize(path) > 0
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8", newline="") as fh:
        if not (append and exists):
            fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _csv_num(x) -> str:
    return repr(float(x))


_STATE_KEYS = ("f", "phi", "v")
_MODEL_KEYS = ("eta1", "eta2", "pair_rate", "duration", "dark_rate1", "dark_rate2",
               "coincidence_window")

_TERM_KEYS = ("n_ab", "n_ab_prime", "n_a_prime_b", "n_a_prime_b_prime",
              "n_a_prime_inf", "n_inf_b")
_TERM_LABELS = (
    "N(theta1,theta2)",
    "N(theta1,theta2')",
    "N(theta1',theta2)",
    "N(theta1',theta2')",
    "N(theta1',inf)",
    "N(inf,theta2)",
)


def _term_settings(quad: SettingsQuad) -> list[tuple[AnalyzerSetting, AnalyzerSetting]]:
    a = AnalyzerSetting(quad.theta1)
    ap = AnalyzerSetting(quad.theta1_prime)
    b = AnalyzerSetting(quad.theta2)
    bp = AnalyzerSetting(quad.theta2_prime)
    return [(a, b), (a, bp), (ap, b), (ap, bp), (ap, NO_POLARIZER), (NO_POLARIZER, b)]


def cmd_predict(cfg: RunConfig, as_json: bool) -> int:
    state = _state_from(cfg)
    quad = SettingsQuad(*_require(cfg, "quad"))
    pairs = _term_settings(quad)
    probs = []
    for s1, s2 in pairs[:4]:
        probs.append(coincidence_probability(state, s1, s2))
    probs.append(single_probability(state, pairs[4][0], side=1))
    probs.append(single_probability(state, pairs[5][1], side=2))
    ch = ch_probability_sum(state, quad)
    if as_json:
        _print_json(
            {
                "command": "predict",
                "config": _echo(cfg, _STATE_KEYS + ("quad",)),
                "terms": dict(zip(_TERM_KEYS, probs)),
                "ch": ch,
            }
        )
    else:
        print(f"{'term':<20}{'theta1':>8}{'theta2':>8}  {'probability'}")
        for label, (s1, s2), p in zip(_TERM_LABELS, pairs, probs):
            print(f"{label:<20}{str(s1):>8}{str(s2):>8}  {_fmt(p)}")
        print(f"{'CH':<20}{'':>8}{'':>8}  {_fmt(ch)}")
    if cfg.csv:
        rows = [
            f"{label},{s1},{s2},{_csv_num(p)}"
            for label, (s1, s2), p in zip(_TERM_LABELS, pairs, probs)
        ]
        rows.append(f"CH,,,{_csv_num(ch)}")
        _write_csv(cfg.csv, "term,theta1,theta2,value", rows, append=True)
    return _EXIT_OK


def cmd_optimize(cfg: RunConfig, as_json: bool) -> int:
    state = _state_from(cfg)
    eta1 = cfg.eta1 if cfg.eta1 is not None else 1.0
    eta2 = cfg.eta2 if cfg.eta2 is not None else 1.0
    report = optimize_angles(state, eta1, eta2)
    if as_json:
        _print_json(
            {
                "command": "optimize",
                "config": _echo(cfg, _STATE_KEYS + ("eta1", "eta2")),
                "best_quad": list(report.best_quad.as_tuple()),
                "best_value": report.best_value,
                "starts": report.starts,
                "converged": report.converged,
                "iterations": report.iterations,
            }
        )
    else:
        t1, t1p, t2, t2p = report.best_quad.as_tuple()
        print(f"best CH value : {_fmt(report.best_value)}")
        print(
            "best quad     : "
            f"theta1={_fmt(t1)} theta1'={_fmt(t1p)} theta2={_fmt(t2)} theta2'={_fmt(t2p)}"
        )
        print(f"starts        : {report.starts}")
        print(f"iterations    : {report.iterations}")
        print(f"converged     : {report.converged}")
    return _EXIT_OK


def cmd_threshold(cfg: RunConfig, as_json: bool) -> int:
    if cfg.f_values is None and cfg.f is not None:
        cfg.f_values = (cfg.f,)
    if cfg.f_values is None:
        raise _UsageError("missing required option(s): --f (one value or a comma list)")
    points = efficiency_curve(list(cfg.f_values))
    if as_json:
        _print_json(
            {
                "command": "threshold",
                "config": _echo(cfg, ("f_values",)),
                "points": [
                    {
                        "f": p.f,
                        "eta_crit": p.eta_crit,
                        "quad": list(p.quad_at_crit.as_tuple()),
                    }
                    for p in points
                ],
            }
        )
    else:
        print("f,eta_crit")
        for p in points:
            print(f"{_csv_num(p.f)},{_csv_num(p.eta_crit)}")
    if cfg.csv:
        rows = [f"{_csv_num(p.f)},{_csv_num(p.eta_crit)}" for p in points]
        _write_csv(cfg.csv, "f,eta_crit", rows, append=False)
    return _EXIT_OK


def _read_lhv_mixture(path: str) -> LHVMixture:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise _UsageError(f"cannot read LHV mixture file {path}: {exc}") from exc
    weights, strategies = [], []
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise DomainError(
                f"{path}:{lineno}: expected 'weight a a_prime b b_prime', got {line!r}"
            )
        weights.append(float(parts[0]))
        strategies.append(LHVStrategy(*(int(p) for p in parts[1:])))
    return LHVMixture(strategies=tuple(strategies), weights=tuple(weights))


def cmd_simulate(cfg: RunConfig, as_json: bool) -> int:
    state = _state_from(cfg)
    quad = SettingsQuad(*_require(cfg, "quad"))
    _require(cfg, "pair_rate")
    model = _model_from(cfg)
    seed = _ensure_seed(cfg)
    if cfg.lhv_mixture:
        mixture = _read_lhv_mixture(cfg.lhv_mixture)
        outcome = simulate_lhv_source(mixture, quad, model, seed)
        source = "lhv"
    else:
        outcome = simulate_ch_experiment(state, quad, model, seed)
        source = "quantum"
    counts = outcome.counts
    result = outcome.result
    echo_keys = _STATE_KEYS + ("quad",) + _MODEL_KEYS + ("seed", "lhv_mixture")
    if as_json:
        _print_json(
            {
                "command": "simulate",
                "config": _echo(cfg, echo_keys),
                "source": source,
                "counts": dict(zip(_TERM_KEYS, counts.as_tuple())),
                "value": result.value,
                "sigma": result.sigma,
                "z": result.z,
            }
        )
    else:
        print(f"{'cell':<20}{'theta1':>8}{'theta2':>8}  {'count'}")
        for label, record in zip(_TERM_LABELS, outcome.cells):
            s1, s2 = record.settings
            print(f"{label:<20}{str(s1):>8}{str(s2):>8}  {record.counts}")
        print(f"source : {source}")
        print(f"CH     : {_fmt(result.value)}")
        print(f"sigma  : {_fmt(result.sigma)}")
        print(f"z      : {_fmt(result.z)}")
        print(f"seed   : {seed}")
    if cfg.csv:
        rows = [
            f"{label},{record.settings[0]},{record.settings[1]},{record.counts}"
            for label, record in zip(_TERM_LABELS, outcome.cells)
        ]
        _write_csv(cfg.csv, "cell,theta1,theta2,count", rows, append=True)
    return _EXIT_OK


def cmd_visibility(cfg: RunConfig, as_json: bool) -> int:
    state = _state_from(cfg)
    theta1 = cfg.theta1 if cfg.theta1 is not None else 45.0
    points = cfg.points if cfg.points is not None else 16
    span = cfg.span if cfg.span is not None else 180.0
    start = cfg.start if cfg.start is not None else 0.0
    if points < 1:
        raise DomainError(f"points must be positive, got {points}")
    grid = [start + span * k / points for k in range(points)]
    cfg.theta1, cfg.points, cfg.span, cfg.start = theta1, points, span, start
    simulated = bool(cfg.simulated)
    if simulated:
        _require(cfg, "pair_rate")
        model = _model_from(cfg)
        seed = _ensure_seed(cfg)
        scan = visibility_scan(state, theta1, grid, mode="simulated", model=model, seed=seed)
    else:
        scan = visibility_scan(state, theta1, grid, mode="analytic")
    echo_keys = _STATE_KEYS + ("theta1", "points", "span", "start", "simulated")
    if simulated:
        echo_keys += _MODEL_KEYS + ("seed",)
    if as_json:
        _print_json(
            {
                "command": "visibility",
                "config": _echo(cfg, echo_keys),
                "visibility": scan.visibility,
                "sigma_visibility": scan.sigma_visibility,
                "n_max": scan.n_max,
                "n_min": scan.n_min,
                "theta2_deg": list(scan.theta2_deg),
                "values": list(scan.values),
            }
        )
    else:
        print(f"visibility : {_fmt(scan.visibility)}")
        print(f"sigma      : {_fmt(scan.sigma_visibility)}")
        print(f"N_max      : {_fmt(scan.n_max)}")
        print(f"N_min      : {_fmt(scan.n_min)}")
        if simulated:
            print(f"seed       : {cfg.seed}")
    if cfg.csv:
        rows = [
            f"{_csv_num(t)},{_csv_num(y)}" for t, y in zip(scan.theta2_deg, scan.values)
        ]
        _write_csv(cfg.csv, "theta2,value", rows, append=False)
    return _EXIT_OK


_COMMANDS = {
    "predict": cmd_predict,
    "optimize": cmd_optimize,
    "threshold": cmd_threshold,
    "simulate": cmd_simulate,
    "visibility": cmd_visibility,
}


def build_parser() -> _Parser:
    parser = _Parser(
        prog="chbell",
        description="Predict, optimize, and simulate Clauser-Horne Bell tests "
        "with non-maximally entangled photon pairs.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    specs = {
        "predict": "six CH probabilities and the CH sum for one quad",
        "optimize": "search analyzer angles maximizing the CH sum",
        "threshold": "critical detection efficiency per amplitude ratio f",
        "simulate": "Monte Carlo CH experiment (quantum or LHV source)",
        "visibility": "fringe visibility scan with one polarizer fixed",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", metavar="PATH", help="flat key=value or JSON config file")
        p.add_argument("--json", action="store_true", help="emit a JSON document")
        p.add_argument("--csv", metavar="PATH", help="write plot-ready CSV")
        p.add_argument("--seed", type=int, help="seed for randomized commands")
        if name == "threshold":
            p.add_argument("--f", dest="f_values", metavar="LIST",
                           help="comma-separated amplitude ratios")
        else:
            p.add_argument("--f", type=float, help="amplitude ratio of the state")
        p.add_argument("--phi", type=float, help="relative phase, degrees (default 0)")
        p.add_argument("--v", type=float, help="pure-state fraction in [0,1] (default 1)")
        p.add_argument("--quad", metavar="T1,T1P,T2,T2P",
                       help="the four analyzer angles, degrees")
        p.add_argument("--eta1", type=float, help="arm-1 detection efficiency")
        p.add_argument("--eta2", type=float, help="arm-2 detection efficiency")
        p.add_argument("--pair-rate", dest="pair_rate", type=float,
                       help="emitted pairs per second")
        p.add_argument("--duration", type=float, help="accumulation time per cell, seconds")
        p.add_argument("--dark-rate1", dest="dark_rate1", type=float,
                       help="arm-1 dark counts per second")
        p.add_argument("--dark-rate2", dest="dark_rate2", type=float,
                       help="arm-2 dark counts per second")
        p.add_argument("--coincidence-window", dest="coincidence_window", type=float,
                       help="coincidence window, seconds")
        p.add_argument("--lhv-mixture", dest="lhv_mixture", metavar="PATH",
                       help="simulate a local strategy mixture instead of the quantum state")
        if name == "visibility":
            p.add_argument("--theta1", type=float, help="fixed polarizer angle (default 45)")
            p.add_argument("--points", type=int, help="grid points (default 16)")
            p.add_argument("--span", type=float, help="grid span, degrees (default 180)")
            p.add_argument("--start", type=float, help="grid start, degrees (default 0)")
            p.add_argument("--simulated", action="store_const", const=True,
                           help="count simulated coincidences instead of probabilities")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise _UsageError("a subcommand is required")
        cfg = _resolve(args)
        return _COMMANDS[args.command](cfg, as_json=bool(getattr(args, "json", False)))
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return _EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
