"""Command-line front end: ``kppspeed <command> [options]``.

Options may also come from a flat ``key=value`` file given with ``--config``;
flags on the command line win.  Exit status is 0 on success, 1 on a
numerical failure and 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .constraints import ConstraintSpec, constraint_value
from .eigen import principal_eigenpair
from .errors import ConfigError, KPPError, PreconditionError
from .grid import CoefField, PeriodicGrid, read_coef_csv, write_coef_csv
from .optimize import maximize_cstar
from .pdesim import SimConfig, run_front, write_track_csv
from .speed import minimal_speed
from .stepfn import StepProfile, cstar_step, sweep_theta, write_sweep_csv
from .verify import SUITES, run_suites

COMMANDS = ("speed", "eigen", "maximize", "sweep-theta", "sweep-L", "simulate", "verify")


def _floats(text):
    try:
        return [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


# key -> (type, default, help)
OPTIONS = {
    "L": (float, 1.0, "period length"),
    "N": (int, 256, "grid samples per period"),
    "beta": (float, 1.0, "constraint level"),
    "constraint": (str, "p:2", "p:<float> or box:<alpha>,<h>"),
    "normalized": (lambda s: str(s).lower() in ("1", "true", "yes"), True, "divide the constraint integral by L"),
    "seed": (int, 42, "random seed"),
    "out": (str, "out", "output directory"),
    "coef": (str, None, "coefficient CSV (header L=..,N=..)"),
    "constant": (float, None, "use the constant coefficient b = value"),
    "step": (str, None, "two-valued coefficient theta,mu_plus,mu_minus"),
    "lam": (float, None, "lambda for the eigen command (default lam(b))"),
    "gap_tol": (float, 1e-3, "criticality-gap stopping tolerance"),
    "max_iter": (int, 5000, "ascent iteration cap"),
    "multistart": (str, "auto", "auto, yes or no"),
    "p": (float, 2.0, "exponent for the theta sweeps"),
    "thetas": (int, 60, "number of log-spaced duty cycles in [1e-3, 1]"),
    "Ls": (str, "5,10,20,50,100", "periods for sweep-L"),
    "T": (float, 100.0, "simulated time"),
    "dt": (float, 0.02, "time step"),
    "level": (float, 0.5, "front level set"),
    "half_width": (float, None, "half width of the simulated domain"),
    "suite": (str, "all", "comma-separated verify suites"),
    "n_random": (int, 5, "random cases per verify check"),
}


def read_config(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment.  Raises :class:`ConfigError`."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    for i, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"{path}:{i}: expected key=value, got {raw.strip()!r}")
        if key not in OPTIONS:
            raise ConfigError(f"{path}:{i}: unknown key {key!r}")
        out[key] = _convert(key, value.strip(), f"{path}:{i}")
    return out


def _convert(key, value, where):
    typ = OPTIONS[key][0]
    try:
        return typ(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad value {value!r} for {key}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kppspeed", description="Minimal KPP front speeds in periodic media.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key=value file; flags override it")
    for key, (_, default, text) in OPTIONS.items():
        parser.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            help=f"{text} (default {default})")
    return parser


def resolve(argv) -> dict:
    args = build_parser().parse_args(argv)
    cfg = {k: v[1] for k, v in OPTIONS.items()}
    if args.config:
        cfg.update(read_config(args.config))
    for key in OPTIONS:
        val = getattr(args, key)
        if val is not None:
            cfg[key] = _convert(key, val, "--" + key.replace("_", "-"))
    cfg["command"] = args.command
    return cfg


def _coefficient(cfg) -> CoefField:
    given = [k for k in ("coef", "constant", "step") if cfg[k] is not None]
    if len(given) > 1:
        raise ConfigError(f"choose one of coef, constant, step (got {', '.join(given)})")
    if cfg["coef"] is not None:
        return read_coef_csv(cfg["coef"])
    grid = PeriodicGrid(cfg["L"], cfg["N"])
    if cfg["step"] is not None:
        return _step(cfg).to_coef(cfg["N"])
    value = 1.0 if cfg["constant"] is None else cfg["constant"]
    return CoefField.constant(grid, value)


def _step(cfg) -> StepProfile:
    vals = _floats(cfg["step"])
    if len(vals) not in (2, 3):
        raise ConfigError("step needs theta,mu_plus[,mu_minus]")
    return StepProfile(vals[0], vals[1], vals[2] if len(vals) == 3 else 0.0, cfg["L"])


def _spec(cfg) -> ConstraintSpec:
    return ConstraintSpec.parse(cfg["constraint"], cfg["L"], cfg["beta"], cfg["normalized"])


def _speed_record(res):
    return {"c_star": res.c_star, "lambda_star": res.lambda_star, "k": res.k_at_min,
            "alpha": res.alpha, "lower_bound": res.lower_bound, "upper_bound": res.upper_bound}


def cmd_speed(cfg, out):
    b = _coefficient(cfg)
    res = minimal_speed(b)
    rec = _speed_record(res)
    rec["eigen_residual"] = res.pair.residual if res.pair is not None else 0.0
    if cfg["step"] is not None:
        rec["c_star_exact"] = cstar_step(_step(cfg)).c_star
    write_coef_csv(out / "coef.csv", b)
    return rec


def cmd_eigen(cfg, out):
    b = _coefficient(cfg)
    lam = cfg["lam"]
    if lam is None:
        lam = minimal_speed(b).lambda_star
        if math.isnan(lam):
            raise ConfigError("lam(b) is undefined for b = 0; pass --lam")
    pair = principal_eigenpair(b, lam)
    write_coef_csv(out / "coef.csv", b)
    return {"lambda": lam, "k": pair.k, "residual": pair.residual, "iterations": pair.iterations,
            "psi_min": float(pair.psi.values.min()), "psi_tilde_min": float(pair.psi_tilde.values.min())}


def cmd_maximize(cfg, out):
    spec = _spec(cfg)
    init = read_coef_csv(cfg["coef"]) if cfg["coef"] is not None else None
    multi = {"auto": None, "yes": True, "no": False}.get(cfg["multistart"])
    if cfg["multistart"] not in ("auto", "yes", "no"):
        raise ConfigError("multistart must be auto, yes or no")
    rep = maximize_cstar(spec, init=init, N=cfg["N"], gap_tol=cfg["gap_tol"], max_iter=cfg["max_iter"],
                         multistart=multi, seed=cfg["seed"])
    write_coef_csv(out / "coef.csv", rep.b_final)
    rec = _speed_record(rep.result)
    rec.update({"iterations": rep.iterations, "converged": rep.converged, "reason": rep.reason,
                "start": rep.start, "criticality_gap": rep.criticality_gap, "el_residual": rep.el_residual,
                "c_history": rep.c_history, "constraint_value": constraint_value(rep.b_final, spec)})
    return rec


def _thetas(cfg):
    return np.geomspace(1e-3, 1.0, cfg["thetas"])


def cmd_sweep_theta(cfg, out):
    sw = sweep_theta(cfg["L"], cfg["beta"], cfg["p"], _thetas(cfg))
    write_sweep_csv(out / "sweep.csv", sw.table)
    return {"theta_star": sw.theta_star, "c_star": sw.c_star}


def cmd_sweep_L(cfg, out):
    rows, best = [], []
    for L in _floats(cfg["Ls"]):
        sw = sweep_theta(L, cfg["beta"], cfg["p"], _thetas(cfg))
        rows.extend(sw.table)
        best.append({"L": L, "theta_star": sw.theta_star, "c_star": sw.c_star})
    write_sweep_csv(out / "sweep.csv", rows)
    return {"optima": best}


def cmd_simulate(cfg, out):
    b = _coefficient(cfg)
    sim = SimConfig(b, T=cfg["T"], dt=cfg["dt"], domain_half_width=cfg["half_width"], level=cfg["level"])
    res = run_front(sim)
    target = minimal_speed(b).c_star
    write_track_csv(out / "front.csv", res.track)
    rel = (res.speed_estimate - target) / target if target > 0 else math.nan
    return {"speed_estimate": res.speed_estimate, "c_star": target, "relative_error": rel,
            "domain_half_width": res.config.domain_half_width, "h_sim": res.config.h_sim}


def cmd_verify(cfg, out):
    names = [s.strip() for s in cfg["suite"].split(",") if s.strip()]
    unknown = [s for s in names if s != "all" and s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; choose from all, {', '.join(SUITES)}")
    records = run_suites(names, seed=cfg["seed"], n=cfg["n_random"])
    for r in records:
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['suite']}.{r['check']}: {r['detail']}")
    return {"checks": records, "all_passed": all(r["passed"] for r in records)}


HANDLERS = {
    "speed": cmd_speed, "eigen": cmd_eigen, "maximize": cmd_maximize, "sweep-theta": cmd_sweep_theta,
    "sweep-L": cmd_sweep_L, "simulate": cmd_simulate, "verify": cmd_verify,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve(argv)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        record = HANDLERS[cfg["command"]](cfg, out)
    except (ConfigError, PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KPPError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    record["config"] = cfg
    text = json.dumps(_jsonable(record), sort_keys=True, indent=2)
    (out / "summary.json").write_text(text + "\n")
    if cfg["command"] != "verify":
        print(text)
    if cfg["command"] == "verify" and not record["all_passed"]:
        return 1
    return 0


def main():
    sys.exit(run())
