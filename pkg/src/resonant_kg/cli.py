"""Command-line front end.

    resonant-kg {solve,sweep,multiplicity,verify,evolve,selftest}
                [--config PATH] [--out DIR] [--seed N] [--jobs N]

Config files are INI-style (sections mirror RunConfig below) or JSON.
Values in INI files are parsed as JSON literals when possible, so lists
are written ``eps = [0.01, 0.001]``.  Unknown sections or keys are errors.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (a
solver diverged or stalled, a residual exceeded its tolerance, or a hard
verification check failed).  Failures also write ``error.json``.
"""
import argparse
import configparser
import copy
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .basis import BasisKind
from .diophantine import admissible_eps_grid
from .errors import ConfigError, ResonantKGError
from .field import norm_V, write_coeff_csv, write_realspace_csv

SCHEMA_VERSION = 1

SUITES = ("exact_identities", "strichartz", "resolvent_margin", "resolvent_difference",
          "evolution", "scaling", "regularity")

# section -> key -> (allowed types, default)
SCHEMA = {
    "problem": {"p": (int, 5), "symmetry": (str, "spherical"), "mu1": (int, 0), "mu2": (int, 0)},
    "frequency": {"gamma": (float, 0.1), "eps": ((list, float), None), "eps_min": (float, 1e-4),
                  "eps_max": (float, 1e-2), "count": (int, 5), "ell_max": ((int, type(None)), None)},
    "truncation": {"Lmax": (int, 64), "Jmax": (int, 32), "N_split": (int, 8)},
    "solver": {"fp_tol": (float, 1e-12), "grad_tol": (float, 1e-10), "max_iter": (int, 200),
               "R": (float, 4.0), "residual_tol": (float, 1e-8), "subspace_n": (int, 1),
               "restarts": (int, 8)},
    "multiplicity": {"k_star": (int, 2), "beta": (float, 0.9)},
    "verify": {"suites": (list, list(SUITES)), "seed": (int, 0), "n_samples": (int, 50)},
    "evolve": {"steps_per_period": (int, 2 ** 14), "periods": (int, 1)},
    "output": {"directory": (str, "out"), "formats": (list, ["json", "csv"])},
}


class NumericalFailure(ResonantKGError):
    """A run finished but did not meet its acceptance tolerance."""


# config

def default_config():
    return {sec: {k: copy.deepcopy(d) for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def _coerce(sec, key, val):
    types, _ = SCHEMA[sec][key]
    types = types if isinstance(types, tuple) else (types,)
    if float in types and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if list in types and float in types and isinstance(val, list):
        val = [float(x) for x in val]
    if isinstance(val, bool) or not isinstance(val, types):
        names = "/".join(t.__name__ for t in types)
        raise ConfigError(f"[{sec}] {key}: expected {names}, got {val!r}")
    return val


def _ini_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path=None):
    """Read, merge with defaults and validate a config file."""
    cfg = default_config()
    if path is None:
        raw = {}
    elif path.endswith(".json"):
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON config: {exc}") from None
    else:
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            if not cp.read(path):
                raise ConfigError(f"cannot read config file {path}")
        except configparser.Error as exc:
            raise ConfigError(f"invalid config file: {exc}") from None
        raw = {s: {k: _ini_value(v) for k, v in cp.items(s)} for s in cp.sections()}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    for sec, vals in raw.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        if not isinstance(vals, dict):
            raise ConfigError(f"section [{sec}] must be a mapping")
        for key, val in vals.items():
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key [{sec}] {key}")
            cfg[sec][key] = _coerce(sec, key, val)
    return validate_config(cfg)


def validate_config(cfg):
    pr = cfg["problem"]
    if pr["symmetry"] not in ("spherical", "hopf"):
        raise ConfigError(f"unknown symmetry {pr['symmetry']!r}")
    bad = [s for s in cfg["verify"]["suites"] if s not in SUITES]
    if bad:
        raise ConfigError(f"unknown verify suites {bad}")
    fmt = [f for f in cfg["output"]["formats"] if f not in ("json", "csv")]
    if fmt:
        raise ConfigError(f"unknown output formats {fmt}")
    fr = cfg["frequency"]
    if isinstance(fr["eps"], float):
        fr["eps"] = [fr["eps"]]
    if fr["eps"] is not None and not all(e > 0 for e in fr["eps"]):
        raise ConfigError("eps values must be positive")
    for sec in ("truncation", "evolve"):
        for k, v in cfg[sec].items():
            if v < 1:
                raise ConfigError(f"[{sec}] {k} must be positive")
    return cfg


def make_spec(cfg, eps):
    from .field import default_truncation
    from .ls_solver import ProblemSpec
    pr, tr, so, fr = cfg["problem"], cfg["truncation"], cfg["solver"], cfg["frequency"]
    kind = BasisKind.spherical() if pr["symmetry"] == "spherical" else BasisKind.hopf(pr["mu1"], pr["mu2"])
    try:
        trunc = default_truncation(kind, tr["Lmax"], tr["Jmax"], tr["N_split"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        return ProblemSpec(pr["p"], float(eps), kind, gamma=fr["gamma"], trunc=trunc, R=so["R"],
                           fp_tol=so["fp_tol"], grad_tol=so["grad_tol"], max_iter=so["max_iter"],
                           ell_max=fr["ell_max"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def eps_list(cfg):
    fr = cfg["frequency"]
    if fr["eps"] is not None:
        return list(fr["eps"])
    p = cfg["problem"]["p"]
    horizon = fr["ell_max"] or cfg["truncation"]["Lmax"]
    try:
        return [e for e, _ in admissible_eps_grid(p, fr["gamma"], fr["eps_min"], fr["eps_max"],
                                                  fr["count"], horizon)]
    except ResonantKGError as exc:
        raise ConfigError(str(exc)) from None


# output

def _fmt(x):
    if isinstance(x, (bool, np.bool_)) or x is None:
        x = None if x is None else bool(x)
        return json.dumps(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return '"NaN"'
        if math.isinf(x):
            return '"Infinity"' if x > 0 else '"-Infinity"'
        s = format(x, ".17g")
        return s if any(c in s for c in ".en") else s + ".0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        items = (f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj):
    """JSON text with every float at 17 significant digits."""
    return _fmt(obj) + "\n"


class Output:
    """Writes files under one directory and keeps a hash manifest."""

    def __init__(self, directory, formats):
        self.dir = directory
        self.formats = set(formats)
        self.files = []
        os.makedirs(directory, exist_ok=True)

    def path(self, name):
        full = os.path.join(self.dir, name)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        self.files.append(name)
        return full

    def json(self, name, obj):
        with open(self.path(name), "w") as fh:
            fh.write(dumps(obj))

    def solution(self, prefix, state):
        if "csv" not in self.formats:
            return
        for name, u in (("v1", state.v1), ("v2", state.v2), ("w", state.w)):
            write_coeff_csv(self.path(f"{prefix}{name}.csv"), u)
        write_realspace_csv(self.path(f"{prefix}u_realspace.csv"), state.u)

    def manifest(self, command, status):
        entries = []
        for name in sorted(set(self.files)):
            with open(os.path.join(self.dir, name), "rb") as fh:
                entries.append({"file": name, "sha256": hashlib.sha256(fh.read()).hexdigest()})
        with open(os.path.join(self.dir, "manifest.json"), "w") as fh:
            fh.write(dumps({"schema_version": SCHEMA_VERSION, "command": command,
                            "status": status, "files": entries}))


def _envelope(command, cfg, result):
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg, "result": result}


# commands

def _solve_one(spec, n, restarts, seed):
    from .mountain_pass import find_critical_point
    return find_critical_point(spec, n, restarts=restarts, seed=seed)


def _map(fn, args, jobs):
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, *zip(*args)))
    return [fn(*a) for a in args]


def cmd_solve(cfg, out, seed, jobs):
    so = cfg["solver"]
    eps = eps_list(cfg)
    specs = [make_spec(cfg, e) for e in eps]
    reps = _map(_solve_one, [(s, so["subspace_n"], so["restarts"], seed + i) for i, s in enumerate(specs)], jobs)
    worst = 0.0
    for i, (spec, mp) in enumerate(zip(specs, reps)):
        prefix = "" if len(eps) == 1 else f"eps_{i}/"
        res = {"spec": spec.snapshot(), "solution": mp.summary(spec), "seed": seed + i}
        out.json(prefix + "report.json", _envelope("solve", cfg, res))
        out.solution(prefix, mp.state)
        worst = max(worst, mp.residual)
    if worst > so["residual_tol"]:
        raise NumericalFailure(f"residual {worst:.3e} above tolerance {so['residual_tol']:g}")


def cmd_sweep(cfg, out, seed, jobs):
    from .verify import expected_slope, fit_slope
    so = cfg["solver"]
    eps = eps_list(cfg)
    if len(eps) < 2:
        raise ConfigError("a sweep needs at least two eps values")
    specs = [make_spec(cfg, e) for e in eps]
    reps = _map(_solve_one, [(s, so["subspace_n"], so["restarts"], seed) for s in specs], jobs)
    rows = [{"eps": s.eps, "omega": s.omega, "v1_V1": norm_V(mp.v1_star, 1), "residual": mp.residual,
             "action": mp.action_value, "expected_level": mp.expected_level,
             "minimal_divisor": mp.minimal_divisor} for s, mp in zip(specs, reps)]
    k, se = fit_slope([r["eps"] for r in rows], [r["v1_V1"] for r in rows])
    res = {"rows": rows, "slope": k, "stderr": se, "expected_slope": expected_slope(cfg["problem"]["p"])}
    out.json("report.json", _envelope("sweep", cfg, res))
    worst = max(r["residual"] for r in rows)
    if worst > so["residual_tol"]:
        raise NumericalFailure(f"residual {worst:.3e} above tolerance {so['residual_tol']:g}")


def cmd_multiplicity(cfg, out, seed, jobs):
    from .mountain_pass import multiplicity_sweep
    spec = make_spec(cfg, eps_list(cfg)[0])
    mu = cfg["multiplicity"]
    branches = multiplicity_sweep(spec, mu["k_star"], cfg["solver"]["restarts"], seed,
                                  beta=mu["beta"], strict=True)
    for k, mp in enumerate(branches):
        res = {"spec": spec.snapshot(), "solution": mp.summary(spec), "gate": mp.gate}
        out.json(f"branch_{k}/report.json", _envelope("multiplicity", cfg, res))
        out.solution(f"branch_{k}/", mp.state)
    divs = [mp.minimal_divisor for mp in branches]
    out.json("summary.json", _envelope("multiplicity", cfg, {"minimal_divisors": divs,
                                                             "notes": list(branches.notes)}))
    worst = max(mp.residual for mp in branches)
    if worst > cfg["solver"]["residual_tol"]:
        raise NumericalFailure(f"residual {worst:.3e} above tolerance")


def _run_suite(name, cfg, seed):
    from . import verify as V
    vc = cfg["verify"]
    n = vc["n_samples"]
    if name == "exact_identities":
        return V.check_exact_identities(seed, n)
    if name == "strichartz":
        return V.check_strichartz(seed, max(n, 10))
    if name == "resolvent_margin":
        om = [w for _, w in admissible_eps_grid(cfg["problem"]["p"], cfg["frequency"]["gamma"],
                                                1e-4, 1e-2, 10, cfg["truncation"]["Lmax"])]
        return V.check_resolvent_bounds(om, cfg["frequency"]["gamma"])
    if name == "resolvent_difference":
        return V.check_resolvent_difference(seed, 4 * n)
    if name == "evolution":
        rep = V.linear_calibration(cfg["evolve"]["steps_per_period"])
        rep.check("linear_calibration", 1e-10 - rep.evolution["mismatch"])
        spec = make_spec(cfg, eps_list(cfg)[0])
        mp = _solve_one(spec, cfg["solver"]["subspace_n"], cfg["solver"]["restarts"], seed)
        rt = V.evolve_and_compare(mp.state.u, spec, cfg["evolve"]["steps_per_period"], cfg["evolve"]["periods"])
        rep.evolution = {"calibration": rep.evolution, "round_trip": rt.evolution}
        rep.check("round_trip", 1e-4 - rt.evolution["mismatch"])
        return rep
    if name == "scaling":
        grid = eps_list(cfg)
        if len(grid) < 5 or max(grid) / min(grid) < 10:
            grid = [e for e, _ in admissible_eps_grid(cfg["problem"]["p"], cfg["frequency"]["gamma"],
                                                      1e-4, 1e-2, 5, cfg["truncation"]["Lmax"])]
        return V.scaling_sweep(make_spec(cfg, grid[0]), grid, cfg["solver"]["subspace_n"],
                               restarts=cfg["solver"]["restarts"], seed=seed)
    if name == "regularity":
        spec = make_spec(cfg, eps_list(cfg)[0])
        mp = _solve_one(spec, cfg["solver"]["subspace_n"], cfg["solver"]["restarts"], seed)
        grid = [(r, s) for r in (0.0, 0.5, 1.0) for s in (0.5, 1.0, 1.5, 2.0)]
        return V.regularity_sweep(mp.state, grid, spec.N)
    raise ConfigError(f"unknown suite {name}")


def cmd_verify(cfg, out, seed, jobs, suites=None):
    suites = suites or cfg["verify"]["suites"]
    reps = _map(_run_suite, [(s, cfg, seed) for s in suites], jobs)
    failed = []
    for name, rep in zip(suites, reps):
        d = rep.to_dict()
        if name == "strichartz":
            d["extra"].pop("ratios", None)
        out.json(f"verify_{name}.json", _envelope("verify", cfg, d))
        if name == "strichartz" and "csv" in out.formats:
            with open(out.path("strichartz_ratios.csv"), "w") as fh:
                fh.write("estimate,Jmax,ratio\n")
                for est, J, r in rep.extra["ratios"]:
                    fh.write(f"{est},{J},{r:.17g}\n")
        if not rep.passed:
            failed.append(name)
    if failed:
        raise NumericalFailure(f"verification suites failed: {failed}")


def cmd_evolve(cfg, out, seed, jobs):
    from .verify import evolve_and_compare
    spec = make_spec(cfg, eps_list(cfg)[0])
    mp = _solve_one(spec, cfg["solver"]["subspace_n"], cfg["solver"]["restarts"], seed)
    ev = cfg["evolve"]
    rep = evolve_and_compare(mp.state.u, spec, ev["steps_per_period"], ev["periods"])
    out.json("report.json", _envelope("evolve", cfg, {"spec": spec.snapshot(), "solution": mp.summary(spec),
                                                       "evolution": rep.evolution}))
    out.solution("", mp.state)
    if rep.evolution["mismatch"] > 1e-4:
        raise NumericalFailure(f"round-trip mismatch {rep.evolution['mismatch']:.3e} above 1e-4")


def selftest_report(seed=0):
    """Basis oracles on small index sets plus the exact-identity suite."""
    import itertools

    from .basis import (hopf_operator_residual, integral_space4, integral_space6, make_basis,
                        omega, quadrature_product_integral)
    from .verify import VerifyReport, check_exact_identities
    rep = VerifyReport("selftest", seed=seed)
    b = make_basis(BasisKind.spherical(), 6, 5, extra_nodes=4)
    for js in itertools.combinations_with_replacement(range(6), 6):
        rep.check_close("space6_vs_quadrature", integral_space6(js) - quadrature_product_integral(b, js), 1e-10)
    for js in itertools.combinations_with_replacement(range(6), 4):
        rep.check_close("space4_vs_quadrature", integral_space4(js) - quadrature_product_integral(b, js), 1e-10)
    for mu in ((0, 0), (1, 2), (3, 0)):
        kind = BasisKind.hopf(*mu)
        hb = make_basis(kind, 8, 3)
        rep.check_close("hopf_orthonormality", np.max(np.abs(hb.gram() - np.eye(9))), 1e-10)
        eta = np.linspace(0.05, np.pi / 2 - 0.05, 17)
        for j in range(6):
            r = np.max(np.abs(hopf_operator_residual(j, *mu, eta))) / omega(kind, j) ** 2
            rep.check_close("hopf_eigen_residual", r, 1e-10)
    ident = check_exact_identities(seed, 20)
    rep.cases_run += ident.cases_run
    rep.cases_passed += ident.cases_passed
    rep.worst_margin.update({f"identities.{k}": v for k, v in ident.worst_margin.items()})
    rep.failures += ident.failures
    return rep


def cmd_selftest(cfg, out, seed, jobs):
    rep = selftest_report(seed)
    out.json("selftest.json", _envelope("selftest", cfg, rep.to_dict()))
    if not rep.passed:
        raise NumericalFailure("selftest failed")


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "multiplicity": cmd_multiplicity,
            "verify": cmd_verify, "evolve": cmd_evolve, "selftest": cmd_selftest}


def build_parser():
    ap = argparse.ArgumentParser(prog="resonant-kg", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI or JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides [output] directory)")
    ap.add_argument("--seed", type=int, help="base seed (overrides [verify] seed)")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for independent tasks")
    return ap


def _error(out_dir, kind, exc, code, out=None):
    err = {"schema_version": SCHEMA_VERSION, "error": kind, "type": type(exc).__name__,
           "reason": str(exc), "exit_code": code}
    for attr in ("equation", "ell", "j", "divisor"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    text = dumps(err)
    sys.stderr.write(text)
    if out is not None:
        with open(out.path("error.json"), "w") as fh:
            fh.write(text)
    elif out_dir:
        try:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, "error.json"), "w") as fh:
                fh.write(text)
        except OSError:
            pass
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = args.out
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg["output"]["directory"] = args.out
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            cfg["verify"]["seed"] = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out_dir = cfg["output"]["directory"]
        make_spec(cfg, eps_list(cfg)[0])  # reject bad problems before any work
    except ConfigError as exc:
        return _error(out_dir, "config", exc, 1)
    out = Output(out_dir, cfg["output"]["formats"])
    status, code = "ok", 0
    try:
        COMMANDS[args.command](cfg, out, cfg["verify"]["seed"], args.jobs)
    except ConfigError as exc:
        status, code = "config error", _error(out_dir, "config", exc, 1, out)
    except ResonantKGError as exc:
        status, code = "numerical failure", _error(out_dir, "numerical", exc, 2, out)
    out.manifest(args.command, status)
    return code


if __name__ == "__main__":
    sys.exit(main())
