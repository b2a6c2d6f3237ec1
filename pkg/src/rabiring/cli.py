"""Command-line front end: sweeps, CSV/JSON emission, validation runner.

Commands: spectrum | phase-diagram | displacement | scaling | validate.
Configuration comes from an optional YAML file plus flag overrides; the
resolved merge is archived next to the results together with a hash so a
run can be reproduced exactly.  Exit codes: 0 success, 1 validation
failure, 2 solver non-convergence, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__, analytic, ed, observables, scaling, validate
from .params import MOMENTA, ModelParams, Q_MINUS, Q_PLUS, Q_ZERO

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NONCONVERGED = 2
EXIT_CONFIG = 3

CACHE_ENV = "RABIRING_CACHE"

_COMMON_DEFAULTS = {
    "omega": 0.2,
    "delta": 10.0,
    "g1": 0.1,
    "j": 0.01,
    "theta": 0.0,
    "n_tr": 15,
    "k": 4,
    "tol": 1e-9,
    "seed": 0,
    "out": "results",
    "threads": 1,
    "cache": False,
}

_DEFAULTS = {
    "spectrum": dict(_COMMON_DEFAULTS, theta_grid=None),
    "phase-diagram": dict(
        _COMMON_DEFAULTS, theta_grid="-3.141592653589793:3.141592653589793:101",
        g1_grid="0.0:1.0:51",
    ),
    "displacement": dict(_COMMON_DEFAULTS, g1=0.7, theta_grid=None),
    "scaling": dict(
        _COMMON_DEFAULTS,
        eta_grid="25,50,100,200,400,800",
        theta_grid=None,
        fit_window=None,
        energy_tol=1e-6,
        n_tr_max=75,
    ),
}


class ConfigError(ValueError):
    pass


def parse_grid(spec, dtype=float) -> np.ndarray:
    """Grid syntax: 'start:stop:num' (inclusive linspace) or 'v1,v2,...'."""
    if spec is None:
        raise ConfigError("missing grid specification")
    if isinstance(spec, (list, tuple, np.ndarray)):
        return np.asarray(spec, dtype=dtype)
    text = str(spec).strip()
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return np.linspace(float(start), float(stop), int(num)).astype(dtype)
        return np.array([dtype(v) for v in text.split(",") if v.strip() != ""])
    except (ValueError, TypeError) as err:
        raise ConfigError(f"cannot parse grid {text!r}: {err}") from err


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults <- YAML file <- command-line flags; unknown keys rejected."""
    cfg = dict(_DEFAULTS[command])
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as err:
            raise ConfigError(f"cannot read config {args.config}: {err}") from err
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a key/value mapping")
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    flag_map = {
        "omega": "omega", "delta": "delta", "g1": "g1", "j": "j",
        "theta": "theta", "ntr": "n_tr", "k": "k", "tol": "tol",
        "seed": "seed", "out": "out", "threads": "threads", "cache": "cache",
        "eta_grid": "eta_grid", "theta_grid": "theta_grid",
        "g1_grid": "g1_grid", "fit_window": "fit_window",
    }
    for flag, key in flag_map.items():
        val = getattr(args, flag, None)
        if val is not None and key in cfg:
            cfg[key] = val
    try:
        for key in ("omega", "delta", "g1", "j", "theta", "tol"):
            if key in cfg:
                cfg[key] = float(cfg[key])
        for key in ("n_tr", "k", "seed", "threads"):
            if key in cfg:
                cfg[key] = int(cfg[key])
        cfg["cache"] = bool(cfg.get("cache", False))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad config value: {err}") from err
    return cfg


def config_hash(cfg: dict) -> str:
    """Hash of the resolved config; thread count and output path excluded."""
    payload = {k: v for k, v in cfg.items() if k not in ("threads", "out")}
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _model(cfg: dict, **overrides) -> ModelParams:
    kw = dict(omega=cfg["omega"], delta=cfg["delta"], g1=cfg["g1"],
              j=cfg["j"], theta=cfg["theta"])
    kw.update(overrides)
    try:
        return ModelParams(**kw)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_envelope(out: Path, command: str, cfg: dict, payloads: list[str],
                    wall: float, extra: dict | None = None) -> None:
    env = {
        "tool": "rabiring",
        "version": __version__,
        "command": command,
        "resolved_config": {k: str(v) if isinstance(v, Path) else v
                            for k, v in cfg.items()},
        "config_hash": config_hash(cfg),
        "wall_time_s": wall,
        "payloads": payloads,
    }
    if extra:
        env.update(extra)
    with open(out / "envelope.json", "w", encoding="utf-8") as fh:
        json.dump(env, fh, indent=2, default=float)
        fh.write("\n")


class PointCache:
    """Optional per-point result cache keyed by (config hash, point index)."""

    def __init__(self, cfg: dict):
        base = os.environ.get(CACHE_ENV)
        self.dir = None
        if cfg.get("cache") and base:
            self.dir = Path(base) / config_hash(cfg)
            self.dir.mkdir(parents=True, exist_ok=True)

    def load(self, idx: int):
        if self.dir is None:
            return None
        path = self.dir / f"point_{idx:06d}.json"
        if not path.exists():
            return None
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def store(self, idx: int, rows) -> None:
        if self.dir is None:
            return
        path = self.dir / f"point_{idx:06d}.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, default=float)


_Q_LABELS = {Q_ZERO: "0", Q_PLUS: "+2pi/3", Q_MINUS: "-2pi/3"}


def _nearest_q(q: float) -> float:
    return min(MOMENTA, key=lambda m: abs(
        (q - m + math.pi) % (2 * math.pi) - math.pi))


def _spectrum_point(cfg: dict, theta: float) -> tuple[list[list], bool]:
    p = _model(cfg, theta=theta)
    t = ed.Truncation(cfg["n_tr"])
    sol = ed.lowest_eigenpairs(p, t, k=cfg["k"], tol=cfg["tol"],
                               seed=cfg["seed"])
    # rotate each (near-)degenerate group into translation eigenstates so
    # chirality and momentum labels are well defined
    vecs = sol.vectors.copy()
    vals = sol.values
    start = 0
    q_per_state = np.zeros(vals.size)
    while start < vals.size:
        stop = start + 1
        while stop < vals.size and vals[stop] - vals[start] < 1e-8:
            stop += 1
        try:
            rotated, qs = observables.resolve_multiplet(vecs[:, start:stop], t)
            vecs[:, start:stop] = rotated
            q_per_state[start:stop] = qs
        except ValueError:
            for off in range(stop - start):
                q_raw = -np.angle(ed.translation_expectation(vecs[:, start + off], t))
                q_per_state[start + off] = _nearest_q(q_raw)
        start = stop
    cls = analytic.classify_phase(p)
    rows = []
    for i in range(vals.size):
        psi = vecs[:, i]
        q = _nearest_q(q_per_state[i])
        e_analytic = ""
        if cls.label.name == "ICP":
            e0 = analytic.ground_energy(p)
            if i == 0:
                e_analytic = e0
            elif i <= 3:
                # a state with translation label q is built on the momentum
                # -q photon in the hopping-dispersion convention, so it pairs
                # with the excitation branch at -q
                e_analytic = e0 + analytic.icp_excitation(p, -q)
        elif i == 0:
            e_analytic = analytic.ground_energy(p)
        rows.append([
            theta, i, vals[i],
            observables.photon_number(psi, t),
            observables.photon_current(psi, t, p.theta),
            observables.chirality(psi, t),
            round(float(np.real(ed.parity_expectation(psi, t)))),
            _Q_LABELS[q],
            e_analytic,
            sol.converged,
        ])
    return rows, sol.converged


def cmd_spectrum(cfg: dict) -> int:
    t0 = time.perf_counter()
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    thetas = (parse_grid(cfg["theta_grid"]) if cfg["theta_grid"] is not None
              else np.array([cfg["theta"]]))
    cache = PointCache(cfg)

    def worker(item):
        idx, theta = item
        cached = cache.load(idx)
        if cached is not None:
            return idx, cached["rows"], cached["converged"]
        rows, converged = _spectrum_point(cfg, float(theta))
        cache.store(idx, {"rows": rows, "converged": converged})
        return idx, rows, converged

    with ThreadPoolExecutor(max_workers=cfg["threads"]) as pool:
        results = list(pool.map(worker, enumerate(thetas)))
    results.sort(key=lambda r: r[0])
    all_rows = [row for _, rows, _ in results for row in rows]
    all_converged = all(conv for _, _, conv in results)
    _write_csv(out / "spectrum.csv",
               ["theta", "index", "energy", "n_photon", "current",
                "chirality", "parity", "q_label", "energy_analytic",
                "converged"],
               all_rows)
    _write_envelope(out, "spectrum", cfg, ["spectrum.csv"],
                    time.perf_counter() - t0,
                    {"all_converged": all_converged})
    return EXIT_OK if all_converged else EXIT_NONCONVERGED


def cmd_phase_diagram(cfg: dict) -> int:
    t0 = time.perf_counter()
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    thetas = parse_grid(cfg["theta_grid"])
    g1s = parse_grid(cfg["g1_grid"])
    rows = []
    for theta in thetas:
        for g1 in g1s:
            p = _model(cfg, theta=float(theta), g1=float(g1))
            cls = analytic.classify_phase(p)
            rows.append([float(theta), float(g1), cls.label.name,
                         _Q_LABELS[_nearest_q(cls.q_star)], cls.g1c_at_theta])
    _write_csv(out / "phases.csv",
               ["theta", "g1", "phase", "q_star", "g1c"], rows)
    boundary_rows = []
    for theta in thetas:
        p = _model(cfg, theta=float(theta), g1=0.1)
        boundary_rows.append(
            [float(theta)]
            + [analytic.critical_coupling(p, q) for q in MOMENTA])
    _write_csv(out / "boundaries.csv",
               ["theta", "g1c_q0", "g1c_qplus", "g1c_qminus"], boundary_rows)
    p_ref = _model(cfg, g1=0.1, theta=0.0)
    tc = analytic.tricritical_point(p_ref)
    _write_envelope(out, "phase-diagram", cfg,
                    ["phases.csv", "boundaries.csv"],
                    time.perf_counter() - t0,
                    {"theta_c": tc.theta_c, "g_tc": tc.g_tc})
    return EXIT_OK


def cmd_displacement(cfg: dict) -> int:
    t0 = time.perf_counter()
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    thetas = (parse_grid(cfg["theta_grid"]) if cfg["theta_grid"] is not None
              else np.array([cfg["theta"]]))
    rows = []
    all_ok = True
    for theta in thetas:
        p = _model(cfg, theta=float(theta))
        try:
            d = analytic.ccp_displacement(p)
            modes = analytic.ccp_excitations(p, d)
            e_mf = analytic.meanfield_energy(p, d.alpha)
            e_coh = analytic.coherent_ground_energy(p, d)
            rows.append([float(theta), *d.a, *d.b, d.residual, d.converged,
                         e_mf, e_coh, *modes])
            all_ok = all_ok and d.converged
        except (analytic.DomainError, analytic.StabilityError) as err:
            rows.append([float(theta)] + [""] * 6 + ["", False, "", ""]
                        + [""] * 3)
            all_ok = False
            print(f"theta={theta:.6f}: {err}", file=sys.stderr)
    _write_csv(out / "displacement.csv",
               ["theta", "a1", "a2", "a3", "b1", "b2", "b3", "residual",
                "converged", "e_meanfield", "e_coherent",
                "mode1", "mode2", "mode3"],
               rows)
    _write_envelope(out, "displacement", cfg, ["displacement.csv"],
                    time.perf_counter() - t0)
    return EXIT_OK if all_ok else EXIT_NONCONVERGED


def cmd_scaling(cfg: dict) -> int:
    t0 = time.perf_counter()
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    etas = parse_grid(cfg["eta_grid"])
    if cfg["theta_grid"] is not None:
        thetas = parse_grid(cfg["theta_grid"])
    else:
        p_ref = ModelParams(omega=cfg["omega"], delta=1.0, g1=0.1,
                            j=cfg["j"], theta=0.0)
        tc = analytic.tricritical_point(p_ref).theta_c
        thetas = np.array([0.96 * tc, tc, 1.2 * tc])
    n_window = int(cfg["fit_window"]) if cfg["fit_window"] else None
    energy_rows, photon_rows, fits = [], [], {}
    all_ok = True
    for theta in thetas:
        e_series, n_series = scaling.critical_sweep(
            omega=cfg["omega"], j=cfg["j"], theta=float(theta),
            eta_list=list(map(float, etas)), k=cfg["k"],
            energy_tol=cfg["energy_tol"], n_tr_max=cfg["n_tr_max"],
            seed=cfg["seed"])
        for series, rows in ((e_series, energy_rows), (n_series, photon_rows)):
            for (eta, value), n_used, conv in zip(
                    series.points, series.n_tr_used, series.converged):
                rows.append([float(theta), eta, series.g1_rule, value,
                             n_used, conv])
        all_ok = all_ok and bool(np.all(e_series.converged))
        key = f"theta={theta:.6f}"
        fits[key] = {}
        for name, series in (("energy", e_series), ("photon", n_series)):
            window = None
            if n_window:
                kept = sorted(series.etas)[-n_window:]
                window = (float(kept[0]), float(kept[-1]))
            try:
                fit = scaling.loglog_slope(series, window=window)
            except ValueError as err:
                fits[key][name] = {"error": str(err)}
                continue
            fits[key][name] = {
                "slope": fit.slope, "intercept": fit.intercept,
                "stderr": fit.stderr, "window": list(fit.window),
                "local_slopes": [list(map(float, ls))
                                 for ls in fit.local_slopes],
            }
    header = ["theta", "eta", "g1_rule", "value", "n_tr_used", "converged"]
    _write_csv(out / "energy_series.csv", header, energy_rows)
    _write_csv(out / "photon_series.csv", header, photon_rows)
    with open(out / "fits.json", "w", encoding="utf-8") as fh:
        json.dump(fits, fh, indent=2)
        fh.write("\n")
    _write_envelope(out, "scaling", cfg,
                    ["energy_series.csv", "photon_series.csv", "fits.json"],
                    time.perf_counter() - t0)
    return EXIT_OK if all_ok else EXIT_NONCONVERGED


def cmd_validate(corrupt_hopping: bool = False, seed: int = 0) -> int:
    checks = validate.run_checks(corrupt_hopping=corrupt_hopping, seed=seed)
    print(validate.report(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabiring",
        description="Three-cavity Rabi ring: spectra, phases, and scaling.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", type=str, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--cache", action="store_const", const=True,
                        default=None)
        for flag in ("omega", "delta", "g1", "j", "theta", "tol"):
            sp.add_argument(f"--{flag}", type=float, default=None)
        sp.add_argument("--ntr", type=int, default=None)
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--theta-grid", dest="theta_grid", type=str,
                        default=None)
        return sp

    add_common(sub.add_parser("spectrum", help="eigenpairs + observables"))
    pd = add_common(sub.add_parser("phase-diagram",
                                   help="phase labels and boundary curves"))
    pd.add_argument("--g1-grid", dest="g1_grid", type=str, default=None)
    add_common(sub.add_parser("displacement",
                              help="coherent-phase displacements and modes"))
    sc = add_common(sub.add_parser("scaling",
                                   help="critical finite-frequency scaling"))
    sc.add_argument("--eta-grid", dest="eta_grid", type=str, default=None)
    sc.add_argument("--fit-window", dest="fit_window", type=int, default=None)
    val = sub.add_parser("validate", help="run the invariant suite")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--corrupt-hopping", action="store_true",
                     help="debug fault injection: flip one bond's hopping sign")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(corrupt_hopping=args.corrupt_hopping,
                                seed=args.seed)
        cfg = resolve_config(args.command, args)
        dispatch = {
            "spectrum": cmd_spectrum,
            "phase-diagram": cmd_phase_diagram,
            "displacement": cmd_displacement,
            "scaling": cmd_scaling,
        }
        return dispatch[args.command](cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
