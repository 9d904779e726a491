"""``lab``: run experiments described by flat ``key = value`` config files.

Config grammar: one ``key = value`` per line; ``#`` starts a comment; blank
lines are ignored; keys are case-sensitive; lists are comma separated.

    family      built-in name (see ``lab list``), or
    polynomial  F(x, t) as text, with nvars = n
    command     profile | acv | spherical | cloud | flow | crofton | all
    seed        integer (required)

Everything else has defaults, see ``DEFAULTS``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .asym import limit_normal_cloud, malgrange_profile, sphericalness_report
from .crofton import average_euler
from .curv import detect_discontinuities, profile
from .families import BUILTINS, builtin, list_builtin
from .flow import transport, xi_transport
from .geom import Family
from .poly import Polynomial, PolynomialSyntaxError, parse
from .sample import newton_project
from .streams import set_default_workers

COMMANDS = ("profile", "acv", "spherical", "cloud", "flow", "crofton", "all")

# key -> (type, default); None default means "required or derived"
DEFAULTS = {
    "family": (str, None),
    "polynomial": (str, None),
    "nvars": (int, None),
    "name": (str, None),
    "command": (str, None),
    "seed": (int, None),
    "out": (str, "results"),
    "workers": (int, 1),
    # profile
    "tmin": (float, 0.5),
    "tmax": (float, 4.0),
    "steps": (int, 30),
    "method": (str, None),           # tracer for n = 2, thin_shell otherwise
    "budget": (int, None),           # 160000 grid nodes (tracer) / 20000 samples (shell)
    "ball_radius": (float, 10.0),
    "k_sigma": (float, 5.0),
    # acv / spherical / cloud
    "c": (float, 1.0),
    "epsilon": (float, 0.1),
    "radii": ("floats", (10.0, 30.0, 100.0, 300.0, 1000.0)),
    "acv_budget": (int, 400),
    "r_min": (float, 100.0),
    "grid_h": (float, 0.05),
    # flow
    "flow_field": (str, "chi"),
    "start": ("floats", None),       # default: Newton projection of (1, ..., 1) onto T_c
    "s": (float, 0.5),
    "tol": (float, 1e-8),
    # crofton
    "crofton_tmin": (float, 0.5),
    "crofton_tmax": (float, 1.5),
    "crofton_steps": (int, 21),
    "draws": (int, 1000),
    "box_radius": (float, 20.0),
}


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _convert(key, value):
    typ = DEFAULTS[key][0]
    try:
        if typ == "floats":
            vals = tuple(float(v) for v in value.split(",") if v.strip())
            if not all(math.isfinite(v) for v in vals):
                raise ValueError
            return vals
        if typ is float:
            v = float(value)
            if not math.isfinite(v):
                raise ValueError
            return v
        return typ(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {value!r} as {getattr(typ, '__name__', typ)}") from None


class ExperimentConfig:
    """Validated configuration; every check runs before any computation."""

    def __init__(self, raw: dict, overrides: dict | None = None):
        raw = dict(raw)
        for k, v in (overrides or {}).items():
            if v is not None:
                raw[k] = str(v)
        self.raw = raw
        vals = {k: _convert(k, v) for k, v in raw.items()}
        for k, (_, default) in DEFAULTS.items():
            vals.setdefault(k, default)
        self.values = vals
        self._validate()

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    def _validate(self):
        v = self.values
        if v["seed"] is None:
            raise ConfigError("seed is required")
        if v["command"] not in COMMANDS:
            raise ConfigError(f"command must be one of {', '.join(COMMANDS)}")
        if (v["family"] is None) == (v["polynomial"] is None):
            raise ConfigError("give exactly one of 'family' or 'polynomial'")
        if v["family"] is not None:
            if v["family"] not in BUILTINS:
                raise ConfigError(f"unknown built-in family {v['family']!r}")
            self.fam = builtin(v["family"])
        else:
            if v["nvars"] is None or v["nvars"] < 1:
                raise ConfigError("polynomial needs nvars >= 1")
            try:
                F = parse(v["polynomial"], v["nvars"])
            except PolynomialSyntaxError as exc:
                raise ConfigError(f"polynomial: {exc}") from None
            self.fam = Family(F, name=v["name"])
        n = self.fam.n
        if v["method"] is None:
            v["method"] = "tracer" if n == 2 else "thin_shell"
        if v["method"] not in ("tracer", "thin_shell"):
            raise ConfigError("method must be tracer or thin_shell")
        if v["method"] == "tracer" and n != 2:
            raise ConfigError("method=tracer needs nvars = 2")
        if v["budget"] is None:
            v["budget"] = 160_000 if v["method"] == "tracer" else 20_000
        positive = ["budget", "ball_radius", "k_sigma", "epsilon", "acv_budget", "r_min", "grid_h",
                    "tol", "draws", "box_radius", "workers"]
        for k in positive:
            if not v[k] > 0:
                raise ConfigError(f"{k} must be positive")
        if v["steps"] < 2 or v["crofton_steps"] < 1:
            raise ConfigError("steps must be >= 2 and crofton_steps >= 1")
        if not v["tmin"] < v["tmax"]:
            raise ConfigError("tmin must be < tmax")
        if not v["crofton_tmin"] <= v["crofton_tmax"]:
            raise ConfigError("crofton_tmin must be <= crofton_tmax")
        radii = v["radii"]
        if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
            raise ConfigError("radii must be >= 2 positive increasing values")
        if v["flow_field"] not in ("chi", "xi"):
            raise ConfigError("flow_field must be chi or xi")
        if v["start"] is not None and len(v["start"]) != n:
            raise ConfigError(f"start needs {n} coordinates")
        self.crofton_f = _level_function(self.fam.F)
        if v["command"] == "crofton":
            if self.crofton_f is None:
                raise ConfigError("crofton needs F of the form f(x) - t")
            if n not in (2, 3):
                raise ConfigError("crofton needs nvars 2 or 3")

    def canonical_text(self) -> str:
        # output location and pool size do not change results, so they stay out of the hash
        keys = sorted(k for k in self.raw if k not in ("out", "workers"))
        return "\n".join(f"{k} = {self.raw[k]}" for k in keys) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def _level_function(F: Polynomial) -> Polynomial | None:
    """f with F = f(x) - t, or None if F is not of that form."""
    n = F.nvars
    f = F + Polynomial.variable(n, n)
    if any(e[n] for e, _ in f.terms):
        return None
    return f


# ---------------------------------------------------------------------------
# running


def _write(out: Path, name: str, text: str, produced: list):
    path = out / name
    path.write_text(text)
    produced.append(name)


def _run_profile(cfg, out, produced):
    fam = cfg.fam
    prof = profile(fam, cfg.tmin, cfg.tmax, cfg.steps, cfg.method, cfg.budget, cfg.ball_radius,
                   cfg.seed)
    flagged = detect_discontinuities(prof, cfg.k_sigma, fam=fam)
    _write(out, "profile.csv", prof.to_csv(), produced)
    _write(out, "discontinuities.json",
           json.dumps({"k_sigma": cfg.k_sigma, "intervals": [list(iv) for iv in flagged]}, indent=2),
           produced)


def _run_acv(cfg, out, produced):
    rep = malgrange_profile(cfg.fam, cfg.c, cfg.epsilon, cfg.radii, cfg.acv_budget, cfg.seed)
    _write(out, "acv.json", rep.to_json(), produced)


def _run_spherical(cfg, out, produced):
    rep = sphericalness_report(cfg.fam, cfg.c, cfg.epsilon, cfg.radii, cfg.acv_budget, cfg.seed)
    _write(out, "spherical.json", rep.to_json(), produced)


def _run_cloud(cfg, out, produced):
    cloud = limit_normal_cloud(cfg.fam, cfg.c, cfg.epsilon, cfg.r_min, cfg.acv_budget, cfg.seed,
                               cfg.grid_h)
    _write(out, "cloud.csv", cloud.to_csv(), produced)
    _write(out, "cloud_occupancy.json",
           json.dumps({"grid_h": cfg.grid_h, "pairs": len(cloud), "occupancy": cloud.occupancy},
                      indent=2), produced)


def _run_flow(cfg, out, produced):
    fam = cfg.fam
    x0 = cfg.start if cfg.start is not None else np.ones(fam.n)
    p = newton_project(fam, np.asarray(x0, float), cfg.c)
    if p is None:
        raise RuntimeError(f"could not place a start point on the level t = {cfg.c}")
    move = transport if cfg.flow_field == "chi" else xi_transport
    try:
        traj = move(fam, p, cfg.s, cfg.tol)
    except RuntimeError as exc:
        part = getattr(exc, "trajectory", None)
        if part is not None and len(part):
            _write(out, "flow_partial.csv", part.to_csv(), produced)
        raise
    _write(out, "flow.csv", traj.to_csv(), produced)


def _run_crofton(cfg, out, produced):
    tgrid = np.linspace(cfg.crofton_tmin, cfg.crofton_tmax, cfg.crofton_steps)
    avg = average_euler(cfg.crofton_f, tgrid, cfg.draws, cfg.box_radius, cfg.seed)
    _write(out, "crofton.csv", avg.to_csv(), produced)


RUNNERS = {
    "profile": _run_profile,
    "acv": _run_acv,
    "spherical": _run_spherical,
    "cloud": _run_cloud,
    "flow": _run_flow,
    "crofton": _run_crofton,
}


def run(cfg: ExperimentConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    set_default_workers(cfg.workers)
    produced: list[str] = []
    skipped: dict[str, str] = {}
    status, error = 0, None
    steps = list(RUNNERS) if cfg.command == "all" else [cfg.command]
    try:
        for step in steps:
            if step == "crofton" and (cfg.crofton_f is None or cfg.fam.n not in (2, 3)):
                skipped[step] = "F is not of the form f(x) - t with n in {2, 3}"
                continue
            RUNNERS[step](cfg, out, produced)
    except Exception as exc:           # runtime failure: keep what was written
        status = 1
        error = f"{type(exc).__name__}: {exc}"
        traceback.print_exc(file=sys.stderr)
    manifest = {
        "config_sha256": cfg.digest(),
        "config": cfg.canonical_text(),
        "seed": cfg.seed,
        "command": cfg.command,
        "family": str(cfg.fam.F),
        "nvars": cfg.fam.n,
        "versions": {"levelcurv": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "artifacts": {name: hashlib.sha256((out / name).read_bytes()).hexdigest() for name in produced},
        "skipped": skipped,
        "status": "ok" if status == 0 else "error",
        "error": error,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return status


def _load(path: str, overrides: dict) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return ExperimentConfig(parse_config(text), overrides)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run the experiment in a config file")
    p_val = sub.add_parser("validate", help="check a config file without running it")
    for p in (p_run, p_val):
        p.add_argument("config")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
    p_run.add_argument("--out")
    sub.add_parser("list", help="list the built-in families")
    args = ap.parse_args(argv)

    if args.cmd == "list":
        for b in list_builtin():
            print(f"{b.name:10s} nvars={b.nvars} degree={b.degree}  F = {b.text}")
            print(f"{'':10s} K0 = {{{', '.join(map(str, b.K0))}}}  "
                  f"Kinf = {{{', '.join(map(str, b.Kinf))}}}  ({b.notes})")
        return 0

    overrides = {"seed": args.seed, "workers": args.workers}
    if args.cmd == "run" and args.out:
        overrides["out"] = args.out
    try:
        cfg = _load(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.cmd == "validate":
        print(f"ok: {cfg.command} on {cfg.fam.F} (n={cfg.fam.n}), seed {cfg.seed}")
        return 0
    return run(cfg, Path(cfg.out))


if __name__ == "__main__":
    sys.exit(main())
