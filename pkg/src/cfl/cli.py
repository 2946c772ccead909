"""Command-line front end: ``cfl <command> [options]``.

Every command prints one JSON document (with ``schema_version``) and, with
``--out DIR``, also writes it to ``DIR/<command>.json`` together with any
CSV tables. Exit codes: 0 all checks pass, 1 a check failed, 2 usage or
configuration error.

Options may also come from an INI file (``--config``); keys in the
``[cfl]`` section apply to every command and keys in a section named after
the command override them. Command-line flags override both.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CFLError, DomainError, ParameterError

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("cfl")

MODEL_KEYS = {"katok": ("a",), "revolution": ("m", "c"), "ellipsoid": ("a", "b")}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    params: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    out: Path | None = None
    tol: float | None = None
    seed: int = 0
    points: int | None = None

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.points is not None and self.points < 1:
            raise UsageError("--points must be positive")
        if self.out is not None:
            try:
                self.out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise UsageError(f"cannot create output directory {self.out}: {exc}") from exc
            if not os.access(self.out, os.W_OK):
                raise UsageError(f"output directory {self.out} is not writable")

    def build_model(self):
        from .models import make_model

        if self.model is None:
            raise UsageError("--model is required")
        keys = MODEL_KEYS.get(self.model.lower(), ())
        return make_model(self.model, **{k: v for k, v in self.params.items() if k in keys})


# -- helpers -----------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x


def _emit(cfg: RunConfig, doc: dict, tables=None):
    doc = {"schema_version": SCHEMA_VERSION, "command": cfg.command, "cfl_version": __version__, **doc}
    text = json.dumps(_jsonable(doc), indent=2, ensure_ascii=False)
    print(text)
    if cfg.out is not None:
        (cfg.out / f"{cfg.command}.json").write_text(text + "\n", encoding="utf-8")
        for name, body in (tables or {}).items():
            (cfg.out / name).write_text(body, encoding="utf-8")
    return EXIT_OK if doc.get("pass", True) else EXIT_FAIL


def _parse_point(text, n=3):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}") from exc
    if len(vals) != n:
        raise UsageError(f"point needs {n} comma-separated values")
    return vals


# -- commands ------------------------------------------------------------------------


def cmd_verify(cfg: RunConfig):
    from .calculus import dlambda_array
    from .core import sample_points
    from .frame_check import FD_TOL, check_convergence, check_jacobi_relations, check_structure_equations
    from .geometry import curvature_array, curvature_oracle_array, metric_array
    from .models import ellipsoid_K

    model = cfg.build_model()
    n = cfg.points or 200
    tol = cfg.tol or FD_TOL
    X = sample_points(model, n, seed=cfg.seed)
    checks = []

    # Reeb conditions hold on every model: λ(R) = 1 and dλ(R, ·) = 0
    R = model.reeb_array(X)
    lamR = np.abs((model.contact_form_array(X) * R).sum(1) - 1.0)
    dl = max(float(np.max(np.abs(dlambda_array(model, R, np.eye(3)[i], X, 0).value))) for i in range(3))
    checks.append({"check": "reeb", "lambda_R_residual": float(lamR.max()), "dlambda_R_residual": dl,
                   "pass": bool(lamR.max() < tol and dl < tol)})

    if not model.has_frame:
        checks.append({"check": "frame", "status": "delegated to cover",
                       "detail": "X1, X2 are not available in closed form on this model", "pass": True})
        if model.name == "ellipsoid":
            a, b = model.parameters["a"], model.parameters["b"]
            s = 2 * np.pi * (a + b) / (a * b)
            K = float(model.constant_scalars["K"])
            err = abs(K - s * s) / max(1.0, abs(K))
            checks.append({"check": "K metadata", "K": K, "formula": float(ellipsoid_K(a, b)),
                           "from_scaling": s * s, "relative_error": err, "pass": bool(err < 1e-12)})
    else:
        for r in check_structure_equations(model, X, tol=tol) + check_jacobi_relations(model, X, tol=tol):
            checks.append({"check": "frame", **r.to_dict()})
        for r in check_convergence(model, X[: min(n, 50)]):
            checks.append({"check": "convergence", "relation_id": r.relation_id, "ratio": r.ratio,
                           "at_floor": r.at_floor, "pass": r.passed})
        Fr = model.frame_array(X)
        gram = max(float(np.max(np.abs(metric_array(model, Fr[i], Fr[j], X) - (i == j))))
                   for i in range(3) for j in range(i, 3))
        checks.append({"check": "metric", "gram_residual": gram, "pass": bool(gram < tol)})
        Xc = X[: min(n, 50)]
        T, _ = curvature_array(model, Xc)
        diff = float(np.max(np.abs(T - curvature_oracle_array(model, Xc))))
        checks.append({"check": "curvature", "oracle_discrepancy": diff, "pass": bool(diff < 1e-3)})
    ok = all(c["pass"] for c in checks)
    return _emit(cfg, {"model": model.name, "parameters": model.parameters, "points": n, "seed": cfg.seed,
                       "checks": checks, "pass": ok})


def cmd_cz(cfg: RunConfig):
    from .core import ChartPoint, ClosedOrbitDescriptor
    from .dynamics import find_closed_orbit
    from .spectral_cz import orbit_index

    model = cfg.build_model()
    window = int(cfg.options.get("window") or 6)
    grid = int(cfg.options.get("grid") or 256)
    if cfg.options.get("point"):
        axis, value = _parse_point(cfg.options.get("section") or "1,0", 2)
        o = find_closed_orbit(model, ChartPoint(0, tuple(_parse_point(cfg.options["point"]))),
                              (int(axis), value), tol=cfg.tol or 1e-9)
        orbits = [ClosedOrbitDescriptor(o.initial_point, o.period, False, "found")]
    else:
        orbits = list(model.known_orbits)
        sel = cfg.options.get("orbit")
        if sel is not None:
            orbits = [o for i, o in enumerate(orbits) if sel in (str(i), o.label)]
        if not orbits:
            raise UsageError("no matching closed orbit; give --orbit or --point")
    rows = []
    for o in orbits:
        r = orbit_index(model, o, grid_size=grid, window=window)
        spec = r["spectrum"]
        rows.append({"label": o.label, "T": r["T"], "K_min": r["K_min"], "K_max": r["K_max"], "cz": r["cz"],
                     "classification": r["classification"], "monodromy": r["monodromy"],
                     "spectrum": [{"k": k, "tau": t, "winding": w} for k, t, w in spec.labelled()],
                     "action_index": r["action_index"].to_dict()})
    ok = all(r["action_index"]["pass"] for r in rows)
    return _emit(cfg, {"model": model.name, "parameters": model.parameters, "window": window, "grid": grid,
                       "orbits": rows, "pass": ok})


def cmd_toric_scan(cfg: RunConfig):
    from .toric import ToricProfile, admissible_modes, k1_locus_check, mode_scan, scan_margin, scan_to_csv

    kind = cfg.options.get("profile") or "linear"
    a = float(cfg.params.get("a", 1.0))
    b = float(cfg.params.get("b", 1.0))
    extra = {k: float(v) for k, v in cfg.params.items() if k in ("p", "c", "k")}
    try:
        prof = ToricProfile.from_spec(kind, a, b, **extra)
    except (ParameterError, ValueError) as exc:
        raise UsageError(f"malformed profile: {exc}") from exc
    k_max = int(cfg.options.get("k_max") or 8)
    res = mode_scan(prof, k_max, tol=cfg.tol or 1e-9)
    adm = admissible_modes(res)
    linear = prof.name == "linear"
    s = 2 * np.pi * (a + b) / (a * b)
    if adm and linear:
        verdict = "consistent with frame existence"
    elif linear:
        verdict = f"linear profile off the K=1 locus; rescaling the form by {s:.6g} moves it onto the locus"
    else:
        verdict = "no admissible mode: no frame of the scanned form"
    doc = {"profile": kind, "a": a, "b": b, "params": extra, "k_max": k_max, "admissible": adm,
           "n_modes": len(res), "min_margin": scan_margin(res), "linear": linear,
           "on_K1_locus": bool(linear and k1_locus_check(a, b, tol=1e-9)), "verdict": verdict}
    return _emit(cfg, doc, {"toric_scan.csv": scan_to_csv(res)})


def cmd_sturm(cfg: RunConfig):
    from .dynamics import integrate_reeb, orbit_trajectory
    from .sturm import action_lower_bound, jacobi_residual, zero_gaps

    model = cfg.build_model()
    T = float(cfg.options.get("T") or 6 * np.pi)
    p0 = _parse_point(cfg.options.get("point") or "1.0,0.3,0.7")
    tr = integrate_reeb(model, p0, T, tol=cfg.tol or 1e-10)
    res = jacobi_residual(model, tr)
    rep = zero_gaps(model, tr)
    bounds = []
    for o in model.known_orbits:
        K = orbit_trajectory(model, o).scalar_at("K", np.linspace(0, o.period, 257))
        if K.max() > 0:
            bounds.append({"label": o.label, **action_lower_bound(o.period, K.max())})
    ok = res < 1e-4 and rep.passed and all(b["holds"] for b in bounds)
    doc = {"model": model.name, "parameters": model.parameters, "window": [0.0, T], "point": p0,
           "ode_residual": res, "oscillation": rep.to_dict(), "action_bounds": bounds, "pass": bool(ok)}
    return _emit(cfg, doc, {"sturm_zeros.csv": rep.zeros_csv()})


def cmd_monodromy(cfg: RunConfig):
    from .flat_bundles import MonodromyProblem, TrigPoly, det_identity_check, integral_obstruction, quotient_catalog

    doc = {}
    ok = True
    text = cfg.options.get("Itilde")
    if text is not None:
        try:
            prob = MonodromyProblem(TrigPoly.parse(text), float(cfg.params.get("l", 2 * np.pi)))
        except ParameterError as exc:
            raise UsageError(str(exc)) from exc
        det = det_identity_check(prob)
        doc.update({"I_tilde": prob.I_tilde.to_dict(), "l": prob.period, "det_report": det,
                    "zero_mean": integral_obstruction(prob)})
        ok = det["pass"]
    if cfg.options.get("catalog") or text is None:
        cat = [d.to_dict() for d in quotient_catalog()]
        doc["catalog"] = cat
        ok = ok and all(c["verified"]["det_is_one"] and c["verified"]["trace_ok"]
                        and c["verified"].get("order_ok", True) for c in cat)
    doc["pass"] = bool(ok)
    return _emit(cfg, doc)


def cmd_toponogov(cfg: RunConfig):
    from .dynamics import toponogov_check
    from .models import make_model

    m = cfg.params.get("m", "sin")
    model = make_model("revolution", m=m, c=float(cfg.params.get("c", 0.05)))
    r = toponogov_check(model)
    return _emit(cfg, {"model": model.name, "parameters": model.parameters, **r, "pass": r["holds"]})


def cmd_integrate(cfg: RunConfig):
    from .dynamics import action, integrate_field

    model = cfg.build_model()
    T = float(cfg.options.get("T") or 2 * np.pi)
    fld = cfg.options.get("field") or "R"
    tr = integrate_field(model, fld, _parse_point(cfg.options.get("point") or "1.0,0.3,0.7"), T,
                         tol=cfg.tol or 1e-9)
    doc = {"model": model.name, "parameters": model.parameters, "field": fld, "T": T,
           "end_point": list(tr.end_point().coords), "samples": len(tr.times)}
    if fld == "R":
        doc["action"] = action(tr)
    return _emit(cfg, doc, {"trajectory.csv": tr.to_csv()})


COMMANDS = {
    "verify": cmd_verify, "cz": cmd_cz, "toric-scan": cmd_toric_scan, "sturm": cmd_sturm,
    "monodromy": cmd_monodromy, "toponogov": cmd_toponogov, "integrate": cmd_integrate,
}


# -- parsing ----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI file with [cfl] and per-command sections")
    common.add_argument("--model", help="darboux, t3, s3, katok, revolution or ellipsoid")
    common.add_argument("--a", type=float)
    common.add_argument("--b", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--m", help="revolution profile: sin or sin3")
    common.add_argument("--l", type=float, help="base period for monodromy")
    common.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    common.add_argument("--out", type=Path)
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--points", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="cfl", description="Contact canonical frame checks")
    p.add_argument("--version", action="version", version=f"cfl {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("verify", parents=[common], help="frame, metric and curvature checks")
    s = sub.add_parser("cz", parents=[common], help="Conley-Zehnder index of closed orbits")
    s.add_argument("--orbit", help="known orbit index or label")
    s.add_argument("--point", help="seed r,theta,psi for a return-map search")
    s.add_argument("--section", help="axis,value of the section (default 1,0)")
    s.add_argument("--window", type=int)
    s.add_argument("--grid", type=int)
    s = sub.add_parser("toric-scan", parents=[common], help="linear-mode scan of a toric profile")
    s.add_argument("--profile", help="linear, quadratic, power, convex, exponential or cosine")
    s.add_argument("--k-max", dest="k_max", type=int)
    s = sub.add_parser("sturm", parents=[common], help="oscillation of I along a Reeb line")
    s.add_argument("--point")
    s.add_argument("--T", type=float)
    s = sub.add_parser("monodromy", parents=[common], help="T2-bundle monodromy for K = 0")
    s.add_argument("--Itilde", help='trigonometric polynomial, e.g. "0.2 + 0.5cos(1)"')
    s.add_argument("--catalog", action="store_true", help="include the flat quotient catalog")
    sub.add_parser("toponogov", parents=[common], help="systole bound on a revolution model")
    s = sub.add_parser("integrate", parents=[common], help="integrate a frame field")
    s.add_argument("--point")
    s.add_argument("--T", type=float)
    s.add_argument("--field")
    return p


_GLOBAL = {"config", "model", "param", "out", "tol", "seed", "points", "verbose", "command"}
_PARAMS = {"a", "b", "c", "m", "l"}


def _read_config(path, command):
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for sec in ("cfl", command):
        if cp.has_section(sec):
            out.update({k.replace("-", "_"): v for k, v in cp.items(sec)})
    return out


def make_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    given = {k: v for k, v in vars(ns).items() if v not in (None, [], False)}
    merged = _read_config(ns.config, ns.command) if ns.config else {}
    merged.update(given)
    params = {k: merged.pop(k) for k in list(merged) if k in _PARAMS}
    for kv in merged.pop("param", []):
        if "=" not in kv:
            raise UsageError(f"--param expects KEY=VALUE, got {kv!r}")
        k, v = kv.split("=", 1)
        params[k.strip()] = v.strip()
    for k, v in list(params.items()):
        if k != "m":
            try:
                params[k] = float(v)
            except ValueError as exc:
                raise UsageError(f"parameter {k} must be numeric") from exc
    try:
        tol = float(merged["tol"]) if "tol" in merged else None
        seed = int(merged.get("seed", 0))
        points = int(merged["points"]) if "points" in merged else None
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if merged.get("verbose") in (True, "true", "1", "yes"):
        logging.basicConfig(level=logging.INFO)
    options = {k: v for k, v in merged.items() if k not in _GLOBAL}
    out = merged.get("out")
    return RunConfig(ns.command, merged.get("model"), params, options, Path(out) if out else None, tol, seed,
                     points)


def main(argv=None):
    try:
        cfg = make_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"cfl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, DomainError) as exc:
        print(f"cfl: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CFLError as exc:
        print(f"cfl: check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
