"""Command line harness: ``simulate | identify | bootstrap | lobes | bench``.

Every command reads an optional plain-text config file of ``key = value``
lines (``#`` starts a comment), applies command-line flags on top of it,
validates the result and writes CSV outputs plus ``manifest.json`` into the
output directory. Files are written to a temporary name and renamed so a
partially written file is never visible.

Exit status is 0 on success, 1 for invalid configuration or input and 2 for
numerical failures (blow-up, non-convergence, rank deficiency, no L-curve
corner).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .chatter import (TERMS, lobes_to_csv, propagate_uncertainty, stability_boundary)
from .experiments import (DEFAULT_SELECTION, ESTIMATORS, chatter_problem, coefficient_matrix,
                          derive_seed, identify, lorenz_problem, lorenz_trial)
from .library import poly_library
from .metrics import TrialResult, aggregate, coeff_error, support_recovery, write_table
from .numerics import RankDeficiencyError
from .selection import METHODS, NoCornerError
from .solvers import ConvergenceError
from .systems import (BoucWenParams, ChatterParams, SimulationError, TimeSeries,
                      boucwen_simulate, dde_simulate, simulate_lorenz)
from .uq import MODES, bootstrap

NUMERICAL_ERRORS = (SimulationError, ConvergenceError, RankDeficiencyError, NoCornerError,
                    np.linalg.LinAlgError, FloatingPointError)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key or line."""


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Option:
    parse: Callable[[str], Any]
    default: Any
    help: str
    check: Optional[Callable[[Any], bool]] = None
    check_msg: str = ""
    is_path: bool = False


def _float_list(text: str) -> List[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _int_list(text: str) -> List[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _str_list(text: str) -> List[str]:
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _noise(text: str):
    """``none``, ``awgn:<percent>`` or ``correlated:<percent>``."""
    text = str(text).strip().lower()
    if text in ("", "none", "0"):
        return ("awgn", 0.0)
    kind, _, level = text.partition(":")
    if kind not in ("awgn", "correlated") or not level:
        raise ValueError("expected none, awgn:<percent> or correlated:<percent>")
    value = float(level)
    if value < 0:
        raise ValueError("noise level must be non-negative")
    return (kind, value)


def _positive(v):
    return v > 0


def _opt_path(text):
    return None if str(text).strip().lower() in ("", "none") else Path(text)


SYSTEMS = ("lorenz", "boucwen", "chatter")

COMMON = {
    "seed": Option(int, 0, "top-level random seed", lambda v: v >= 0, "must be >= 0"),
    "jobs": Option(int, 1, "worker threads", _positive, "must be positive"),
}

SCHEMAS: Dict[str, Dict[str, Option]] = {
    "simulate": {
        "system": Option(str, "lorenz", "lorenz, boucwen or chatter", lambda v: v in SYSTEMS,
                         f"must be one of {SYSTEMS}"),
        "T": Option(float, None, "duration in seconds (system default when omitted)",
                    lambda v: v is None or v > 0, "must be positive"),
        "dt": Option(float, None, "sampling step (system default when omitted)",
                     lambda v: v is None or v > 0, "must be positive"),
        "noise": Option(_noise, ("awgn", 0.0), "none, awgn:<percent> or correlated:<percent>"),
    },
    "identify": {
        "data": Option(_opt_path, None, "CSV time series (simulated Lorenz data when omitted)",
                       is_path=True),
        "states": Option(_str_list, ["x", "y", "z"], "library channels"),
        "targets": Option(_str_list, ["dx", "dy", "dz"], "regression target channels"),
        "truth": Option(_opt_path, None, "CSV of true coefficients (term + one column per target)",
                        is_path=True),
        "T": Option(float, 4.0, "Lorenz duration when simulating", _positive, "must be positive"),
        "dt": Option(float, 0.01, "Lorenz step when simulating", _positive, "must be positive"),
        "noise": Option(_noise, ("awgn", 0.0), "noise applied to simulated data"),
        "degree": Option(int, 2, "polynomial library degree", lambda v: 1 <= v <= 6,
                         "must lie in 1..6"),
        "estimator": Option(str, "trim", "trim, stls, estls or irl1", lambda v: v in ESTIMATORS,
                            f"must be one of {ESTIMATORS}"),
        "select": Option(str, "default", "selection method or 'default'",
                         lambda v: v in METHODS + ("default",), "unknown selection method"),
        "grid": Option(_float_list, None, "comma separated grid (k values for trim)"),
        "k_max": Option(int, 8, "largest sparsity on the default trim grid", _positive,
                        "must be positive"),
    },
    "bootstrap": {
        "system": Option(str, "chatter", "chatter or lorenz", lambda v: v in ("chatter", "lorenz"),
                         "must be chatter or lorenz"),
        "B": Option(int, 100, "bootstrap draws", _positive, "must be positive"),
        "mode": Option(str, "resample", "resample, wild_sign or wild_gaussian",
                       lambda v: v in MODES, f"must be one of {MODES}"),
        "refit": Option(str, "ls", "ls or trim", lambda v: v in ("ls", "trim"),
                        "must be ls or trim"),
        "T": Option(float, None, "duration (system default when omitted)",
                    lambda v: v is None or v > 0, "must be positive"),
        "noise": Option(float, None, "noise percent (system default when omitted)",
                        lambda v: v is None or v >= 0, "must be >= 0"),
        "degree": Option(int, None, "library degree (system default when omitted)",
                         lambda v: v is None or 1 <= v <= 6, "must lie in 1..6"),
        "k_max": Option(int, 8, "largest sparsity considered", _positive, "must be positive"),
    },
    "lobes": {
        "coefficients": Option(_opt_path, None,
                               "CSV of term,value (true chatter coefficients when omitted)",
                               is_path=True),
        "quantiles": Option(_opt_path, None, "bootstrap quantile CSV (p5/p95 columns)",
                            is_path=True),
        "omega_min": Option(float, None, "lowest chatter frequency in rad/s (default omega_n)",
                            lambda v: v is None or v > 0, "must be positive"),
        "omega_max": Option(float, None, "highest chatter frequency in rad/s (default 1.5 omega_n)",
                            lambda v: v is None or v > 0, "must be positive"),
        "n_omega": Option(int, 2000, "chatter-frequency grid size", lambda v: v >= 0,
                          "must be >= 0"),
        "lobes": Option(int, 8, "number of lobes", _positive, "must be positive"),
    },
    "bench": {
        "noise_levels": Option(_float_list, [0.0, 1.0, 2.0, 3.0], "noise percents"),
        "lengths": Option(_float_list, [2.0, 6.0, 10.0], "data lengths in seconds"),
        "estimators": Option(_str_list, list(ESTIMATORS), "estimators to compare",
                             lambda v: bool(v) and all(e in ESTIMATORS for e in v),
                             f"entries must be among {ESTIMATORS}"),
        "trials": Option(int, 20, "noise realisations per cell", _positive, "must be positive"),
        "degree": Option(int, 2, "library degree", lambda v: 1 <= v <= 6, "must lie in 1..6"),
        "dt": Option(float, 0.01, "sampling step", _positive, "must be positive"),
        "resume": Option(lambda s: str(s).lower() in ("1", "true", "yes"), False,
                         "skip cells already recorded in the manifest"),
    },
}


def parse_config_file(path: Path, schema: Dict[str, Option]) -> Dict[str, Any]:
    """Read ``key = value`` lines; unknown keys and bad values cite the line number."""
    out: Dict[str, Any] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in schema:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = schema[key].parse(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return out


def resolve_config(command: str, args: argparse.Namespace) -> Dict[str, Any]:
    """Defaults, then the config file, then explicit flags; validated."""
    schema = {**SCHEMAS[command], **COMMON}
    cfg = {k: opt.default for k, opt in schema.items()}
    if args.config is not None:
        if not Path(args.config).is_file():
            raise ConfigError(f"config file {args.config} does not exist")
        cfg.update(parse_config_file(Path(args.config), schema))
    for key, opt in schema.items():
        raw = getattr(args, key, None)
        if raw is None:
            continue
        try:
            cfg[key] = opt.parse(raw) if isinstance(raw, str) else raw
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"--{key}: {exc}") from None
    for key, opt in schema.items():
        value = cfg[key]
        if opt.check is not None and value is not None and not opt.check(value):
            raise ConfigError(f"{key}: {opt.check_msg} (got {value!r})")
        if opt.is_path and value is not None and not Path(value).is_file():
            raise ConfigError(f"{key}: file {value} does not exist")
    return cfg


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


@contextlib.contextmanager
def atomic_path(final: Path):
    """Yield a temporary path in the target directory; rename onto ``final`` on success."""
    final = Path(final)
    final.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{final.name}.", dir=final.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, final)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_text(path: Path, text: str) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text(text)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def write_manifest(out: Path, command: str, cfg: dict, outputs: List[Path],
                   extra: Optional[dict] = None) -> Path:
    """``manifest.json``: config echo, seed, output hashes and command-specific notes."""
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.get("seed"),
        "config": {k: _jsonable(v) for k, v in sorted(cfg.items())},
        "outputs": {p.name: sha256_file(p) for p in outputs},
    }
    if extra:
        manifest.update({k: _jsonable(v) for k, v in extra.items()})
    path = out / "manifest.json"
    write_text(path, json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _write_rows(path: Path, header: List[str], rows) -> None:
    with atomic_path(path) as tmp:
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                            for v in r])


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_simulate(cfg: dict, out: Path) -> dict:
    system = cfg["system"]
    kind, level = cfg["noise"]
    extra = {}
    if system == "lorenz":
        ts = simulate_lorenz(cfg["T"] or 10.0, cfg["dt"] or 0.01)
    elif system == "boucwen":
        ts = boucwen_simulate(BoucWenParams(), cfg["dt"] or 1e-3, cfg["T"] or 12.0)
    else:
        ts = dde_simulate(ChatterParams(), cfg["dt"] or 1e-5, cfg["T"] or 0.2)
        extra = {"unstable": ts.meta["unstable"], "growth": ts.meta["growth"]}
    outputs = []
    if level > 0:
        from .experiments import add_noise

        noisy = TimeSeries(ts.t, add_noise(ts.data, level, derive_seed(cfg["seed"], "simulate"),
                                           kind), ts.names)
        path = out / "data.csv"
        with atomic_path(path) as tmp:
            noisy.to_csv(tmp)
        outputs.append(path)
        clean = out / "clean.csv"
    else:
        clean = out / "data.csv"
    with atomic_path(clean) as tmp:
        ts.to_csv(tmp)
    outputs.append(clean)
    extra.update({"system": system, "samples": ts.M, "channels": ts.names})
    return {"outputs": outputs, "extra": extra}


def _truth_from_csv(path: Path, labels: List[str], targets: List[str]) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    missing = [t for t in targets if t not in header]
    if missing:
        raise ConfigError(f"truth file lacks target columns {missing}")
    Xi = np.zeros((len(labels), len(targets)))
    for r in body:
        if r[0] not in labels:
            raise ConfigError(f"truth file term {r[0]!r} is not in the library")
        for j, t in enumerate(targets):
            Xi[labels.index(r[0]), j] = float(r[header.index(t)])
    return Xi


def _select(cfg):
    sel = cfg["select"]
    if sel == "default":
        return DEFAULT_SELECTION[cfg["estimator"]]
    if cfg["estimator"] == "trim" and sel == "lcurve":
        return "trim_lcurve"
    return sel


def cmd_identify(cfg: dict, out: Path) -> dict:
    truth = None
    if cfg["data"] is not None:
        ts = TimeSeries.from_csv(cfg["data"])
        for ch in cfg["states"] + cfg["targets"]:
            if ch not in ts.names:
                raise ConfigError(f"channel {ch!r} not found in {cfg['data']}")
        lib = poly_library(np.column_stack([ts[c] for c in cfg["states"]]), cfg["states"],
                           cfg["degree"])
        Y = np.column_stack([ts[c] for c in cfg["targets"]])
        targets = cfg["targets"]
    else:
        kind, level = cfg["noise"]
        prob = lorenz_problem(cfg["T"], cfg["dt"], level, cfg["seed"], cfg["degree"], kind)
        lib, Y, targets, truth = prob.library, prob.targets, prob.target_names, prob.truth
    if cfg["truth"] is not None:
        truth = _truth_from_csv(cfg["truth"], lib.labels, targets)
    grid = cfg["grid"]
    if grid is not None and cfg["estimator"] == "trim":
        grid = np.asarray(grid, dtype=int)
    elif grid is None and cfg["estimator"] == "trim":
        grid = np.arange(1, min(cfg["k_max"], lib.P) + 1)
    if grid is not None and len(grid) == 0:
        raise ConfigError("grid: empty hyperparameter grid")
    if cfg["estimator"] == "irl1" and grid is not None:
        grid = np.column_stack([grid, np.full(len(grid), 2.0)])
    paths = identify(lib, Y, cfg["estimator"], _select(cfg), grid, seed=cfg["seed"],
                     n_jobs=cfg["jobs"])
    est = coefficient_matrix(paths)
    outputs = []
    coef_path = out / "coefficients.csv"
    _write_rows(coef_path, ["term"] + targets,
                ([lab] + [float(v) for v in est[i]] for i, lab in enumerate(lib.labels)))
    outputs.append(coef_path)
    for name, p in zip(targets, paths):
        path = out / f"selection_{name}.csv"
        with atomic_path(path) as tmp:
            p.to_csv(tmp)
        outputs.append(path)
    lines = [f"estimator: {cfg['estimator']}  selection: {_select(cfg)}", ""]
    for name, p in zip(targets, paths):
        best = p.best
        hyper = p.grid[p.chosen]
        lines.append(f"{name} = {best.equation()}")
        lines.append(f"    chosen grid value: {np.array2string(np.asarray(hyper))}"
                     f"  residual: {best.residual_norm:.6g}  terms: {best.card}")
        if p.errors:
            lines.append(f"    failed grid points: {sorted(p.errors)}")
    extra = {"chosen": {n: int(p.chosen) for n, p in zip(targets, paths)}}
    if truth is not None:
        es = support_recovery(est, truth)
        ec = coeff_error(est, truth)
        lines += ["", "metrics", f"    exact support recovery: {es}",
                  f"    coefficient error: {ec:.6g}"]
        extra["metrics"] = {"E_S": es, "E_c": ec}
    report = out / "report.txt"
    write_text(report, "\n".join(lines) + "\n")
    outputs.append(report)
    return {"outputs": outputs, "extra": extra}


def cmd_bootstrap(cfg: dict, out: Path) -> dict:
    seed = cfg["seed"]
    if cfg["system"] == "chatter":
        kw = {k: cfg[k] for k in ("T", "noise", "degree") if cfg[k] is not None}
        prob = chatter_problem(seed=seed, **kw)
        lib, Y, names = prob.library, prob.target[:, None], ["xddot"]
        extra = {"snr_db": prob.snr_db, "lambdas": prob.lambdas}
    else:
        prob = lorenz_problem(cfg["T"] or 4.0, 0.01, 2.0 if cfg["noise"] is None else cfg["noise"],
                              seed, cfg["degree"] or 2)
        lib, Y, names = prob.library, prob.targets, prob.target_names
        extra = {}
    grid = np.arange(1, min(cfg["k_max"], lib.P) + 1)
    paths = identify(lib, Y, "trim", grid=grid, seed=seed, n_jobs=cfg["jobs"])
    outputs = []
    extra["excluded"] = {}
    for j, (name, p) in enumerate(zip(names, paths)):
        ens = bootstrap(p.best, lib, Y[:, j], cfg["B"], cfg["mode"],
                        derive_seed(seed, "bootstrap", j), cfg["refit"], n_jobs=cfg["jobs"])
        if ens.draws.shape[0] == 0:
            raise ConvergenceError(f"every bootstrap draw failed for {name}")
        e_path, q_path = out / f"ensemble_{name}.csv", out / f"quantiles_{name}.csv"
        with atomic_path(e_path) as tmp:
            ens.to_csv(tmp)
        with atomic_path(q_path) as tmp:
            ens.quantiles_to_csv(tmp, (5, 50, 95))
        outputs += [e_path, q_path]
        extra["excluded"][name] = ens.excluded
    return {"outputs": outputs, "extra": extra}


def _read_term_values(path: Path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    out = {}
    for r in rows[1:]:
        try:
            out[r[0]] = float(r[1])
        except (IndexError, ValueError):
            raise ConfigError(f"{path}: malformed row {r}") from None
    return out


def _read_quantiles(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    for col in ("p5", "p95"):
        if col not in header:
            raise ConfigError(f"{path}: missing column {col}")
    lo = {r[0]: float(r[header.index("p5")]) for r in rows[1:]}
    hi = {r[0]: float(r[header.index("p95")]) for r in rows[1:]}
    return {5: {t: lo.get(t, 0.0) for t in TERMS}, 95: {t: hi.get(t, 0.0) for t in TERMS}}


def cmd_lobes(cfg: dict, out: Path) -> dict:
    from .chatter import ChatterModel

    if cfg["coefficients"] is not None:
        coeffs = _read_term_values(cfg["coefficients"])
        missing = [t for t in TERMS if t not in coeffs]
        if missing:
            raise ConfigError(f"coefficients file lacks terms {missing}")
        coeffs = {t: coeffs[t] for t in TERMS}
    else:
        coeffs = ChatterParams().coefficients()
    model = ChatterModel.from_coefficients(coeffs)
    lo = cfg["omega_min"] or model.omega_n
    hi = cfg["omega_max"] or 1.5 * model.omega_n
    if cfg["n_omega"] == 0 or not hi > lo:
        raise ConfigError("empty chatter-frequency grid (check n_omega, omega_min, omega_max)")
    omega = lo + (hi - lo) * np.geomspace(1e-6, 1.0, cfg["n_omega"])
    lobes = stability_boundary(coeffs, omega, range(cfg["lobes"]))
    if not lobes:
        raise ConvergenceError("no verified stability-boundary points")
    bounds = None
    if cfg["quantiles"] is not None:
        bounds = propagate_uncertainty(_read_quantiles(cfg["quantiles"]), omega,
                                       range(cfg["lobes"]))
        bounds = {k: v for k, v in bounds.items() if v} or None
    path = out / "lobes.csv"
    with atomic_path(path) as tmp:
        lobes_to_csv(lobes, tmp, bounds)
    extra = {"max_residual": max(float(lb.residual.max()) for lb in lobes),
             "min_kappa": float(min(lb.kappa.min() for lb in lobes)),
             "model": {"omega_n": model.omega_n, "kappa": model.kappa, "c1": model.c1}}
    return {"outputs": [path], "extra": extra}


def _cell_key(cfg: dict, noise: float, T: float) -> str:
    cell = {"noise": noise, "T": T, "estimators": cfg["estimators"], "trials": cfg["trials"],
            "degree": cfg["degree"], "dt": cfg["dt"], "seed": cfg["seed"]}
    return hashlib.sha256(json.dumps(cell, sort_keys=True).encode()).hexdigest()[:16]


def _run_cell(cfg, noise, T):
    trials = []
    for i in range(cfg["trials"]):
        seed = derive_seed(cfg["seed"], f"bench:{noise}:{T}", i)
        trials += lorenz_trial(T, noise, seed, cfg["degree"], cfg["estimators"], cfg["dt"])
    return trials


def cmd_bench(cfg: dict, out: Path) -> dict:
    cells_dir = out / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    old = {}
    man = out / "manifest.json"
    if cfg["resume"] and man.is_file():
        old = json.loads(man.read_text()).get("cells", {})
    cells = [(n, T) for n in cfg["noise_levels"] for T in cfg["lengths"]]
    done, skipped = {}, []

    def work(cell):
        noise, T = cell
        key = _cell_key(cfg, noise, T)
        path = cells_dir / f"{key}.json"
        if key in old and path.is_file() and sha256_file(path) == old[key]:
            return key, path, True
        trials = _run_cell(cfg, noise, T)
        payload = [{"support_exact": t.support_exact, "rmse": t.rmse,
                    "coeff_error": t.coeff_error, "estimator": t.estimator,
                    "scenario": t.scenario} for t in trials]
        write_text(path, json.dumps(payload, sort_keys=True) + "\n")
        return key, path, False

    if cfg["jobs"] > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(cfg["jobs"]) as ex:
            results = list(ex.map(work, cells))
    else:
        results = [work(c) for c in cells]
    trials = []
    for key, path, was_skipped in results:
        done[key] = sha256_file(path)
        if was_skipped:
            skipped.append(key)
        trials += [TrialResult(**d) for d in json.loads(path.read_text())]
    rows = aggregate(trials)
    summary = out / "summary.csv"
    with atomic_path(summary) as tmp:
        write_table(rows, tmp)
    return {"outputs": [summary], "extra": {"cells": done, "skipped_cells": skipped}}


COMMANDS = {"simulate": cmd_simulate, "identify": cmd_identify, "bootstrap": cmd_bootstrap,
            "lobes": cmd_lobes, "bench": cmd_bench}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trimsindy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"{name} command")
        p.add_argument("--config", help="plain-text key = value config file")
        p.add_argument("--out", default="out", help="output directory")
        for key, opt in {**SCHEMAS[name], **COMMON}.items():
            flag = f"--{key}"
            if key == "resume":
                p.add_argument(flag, action="store_const", const=True, default=None,
                               help=opt.help)
            else:
                p.add_argument(flag, dest=key, default=None, help=opt.help)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    out = Path(args.out)
    try:
        cfg = resolve_config(args.command, args)
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](cfg, out)
        write_manifest(out, args.command, cfg, result["outputs"], result.get("extra"))
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
