"""Command-line driver writing reproducible CSV/JSON artifacts.

Every run writes its data file, a ``<output>.manifest.json`` with the resolved
configuration, checksums and error budgets, and for ``trajectory`` and
``field`` a small matplotlib script that draws the figure from the data file.

Exit status: 0 on success, 1 for invalid configuration, 2 when a numerical
procedure fails (singular window, no convergence, step underflow).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._parallel import thread_count
from .bloch import check_state, sample_trajectory
from .errors import NumericalFailure
from .fluid import Isothermal, Polytropic, density, is_singular, sample_field_grid, \
    density_by_quadrature
from .flow import WINDOW_MARGIN, continuity_residual, energy_functional, ns_residual, \
    sample_ball
from .intersect import find_intersections
from .oracle import AtomState, FockConfig, compare_with_closed_form, default_cutoff
from .series import FixedOrder, ModelParams, eval_L, eval_L_grid

__all__ = ["UsageError", "RunConfig", "parse_config", "run", "main",
           "TRAJECTORY_COLUMNS", "FIELD_COLUMNS"]

COMMANDS = ("trajectory", "field", "oracle-check", "intersections", "residuals",
            "density", "energy")
TRAJECTORY_COLUMNS = ("t", "Sx", "Sy", "Sz", "vx", "vy", "vz", "err_bound")
FIELD_COLUMNS = ("t", "x", "z", "vx", "vz", "div", "rho", "p", "Kx", "Kz", "singular")
RESIDUAL_COLUMNS = ("t", "x", "y", "z", "ns_x", "ns_y", "ns_z", "ns_richardson",
                    "continuity", "continuity_richardson")
DENSITY_COLUMNS = ("t", "rho_closed", "rho_quadrature", "singular")


class UsageError(ValueError):
    """Bad command line or configuration file."""


@dataclass
class RunConfig:
    command: str
    beta: float = 1.0
    s0: tuple = (1.0, 0.0, 0.0)
    t_max: float = 250.0
    dt: float = 0.01
    tol: float = 1e-10
    fock_cutoff: int | None = None
    eos: str = "isothermal:1"
    rho0: float = 1.0
    output: str | None = None
    format: str = "csv"
    seed: int = 0
    order: int = 150
    t: float = 0.5
    grid: int = 21
    samples: int = 1000
    fd_step: float = 1e-4
    n_steps: int = 1024

    def params(self) -> ModelParams:
        return ModelParams(self.beta, FixedOrder(self.order))

    def output_path(self) -> Path:
        if self.output:
            return Path(self.output)
        ext = "json" if self.format == "json" or self.command in _JSON_ONLY else "csv"
        return Path(f"{self.command}.{ext}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["s0"] = list(d["s0"])
        return d


_JSON_ONLY = ("oracle-check", "intersections", "energy")
_KEYS = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}


def _floats3(text: str) -> tuple:
    parts = [p for p in str(text).replace(" ", "").split(",") if p]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def _opt_int(text):
    return None if str(text).lower() in ("", "none", "auto") else int(text)


_CONVERT = {
    "beta": float, "s0": _floats3, "t_max": float, "dt": float, "tol": float,
    "fock_cutoff": _opt_int, "eos": str, "rho0": float, "output": str, "format": str,
    "seed": int, "order": int, "t": float, "grid": int, "samples": int,
    "fd_step": float, "n_steps": int,
}


def parse_eos(spec: str):
    """``isothermal[:c]`` or ``polytropic:A,gamma``."""
    kind, _, args = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "isothermal":
        return Isothermal(float(args) if args else 1.0)
    if kind == "polytropic":
        try:
            A, gamma = (float(a) for a in args.split(","))
        except ValueError:
            raise ValueError(f"polytropic EOS needs 'polytropic:A,gamma', got {spec!r}") from None
        return Polytropic(A, gamma)
    raise ValueError(f"unknown equation of state {spec!r}")


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jcmflow", description="Thermal JCM Bloch-vector flow toolkit")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")
    for name in COMMANDS:
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="flat key = value file; flags override it")
        for key in sorted(_KEYS):
            p.add_argument("--" + key.replace("_", "-"), dest=key, type=str)
    return parser


def parse_config(argv, config_text: str | None = None) -> RunConfig:
    """Resolve defaults, then config-file keys, then command-line flags."""
    argv = list(argv)
    parser = _build_parser()
    if not argv:
        raise UsageError("no command given; choose one of: " + ", ".join(COMMANDS))
    if argv[0] not in COMMANDS and not argv[0].startswith("-"):
        raise UsageError(f"unknown command {argv[0]!r}; choose one of: " + ", ".join(COMMANDS))
    ns = vars(parser.parse_args(argv))
    command = ns.pop("command")
    if command is None:
        raise UsageError("no command given; choose one of: " + ", ".join(COMMANDS))
    values = {}
    path = ns.pop("config", None)
    if path is not None:
        try:
            config_text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config file {path}: {exc}") from None
    if config_text is not None:
        values.update(parse_config_text(config_text))
    values.update(ns)
    kwargs = {}
    for key, raw in values.items():
        try:
            kwargs[key] = _CONVERT[key](raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key!r}: {raw!r} ({exc})") from None
    cfg = RunConfig(command=command, **kwargs)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)

    need(cfg.command in COMMANDS, f"unknown command {cfg.command!r}")
    need(cfg.beta > 0 and math.isfinite(cfg.beta), "beta must be positive and finite")
    need(cfg.t_max > 0 and math.isfinite(cfg.t_max), "t-max must be positive")
    need(cfg.dt > 0 and math.isfinite(cfg.dt), "dt must be positive")
    need(cfg.tol > 0, "tol must be positive")
    need(cfg.fock_cutoff is None or cfg.fock_cutoff >= 1, "fock-cutoff must be >= 1")
    need(cfg.rho0 > 0, "rho0 must be positive")
    need(cfg.format in ("csv", "json"), "format must be csv or json")
    need(cfg.order >= 0, "order must be nonnegative")
    need(cfg.grid >= 2, "grid must be >= 2")
    need(cfg.samples >= 1, "samples must be >= 1")
    need(cfg.fd_step > 0, "fd-step must be positive")
    need(cfg.n_steps >= 2 and cfg.n_steps % 2 == 0, "n-steps must be even and >= 2")
    try:
        check_state(cfg.s0)
        parse_eos(cfg.eos)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return repr(float(v))


def _csv_bytes(columns, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n").encode("utf-8")


def _table_bytes(cfg, columns, rows) -> bytes:
    if cfg.format == "json":
        return _json_bytes({"columns": list(columns),
                            "rows": [[float(v) for v in r] for r in rows]})
    return _csv_bytes(columns, rows)


_TRAJECTORY_PLOT = '''"""Plot the xz-projection of a trajectory written by `jcmflow trajectory`."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {data!r}
with open(path) as fh:
    rows = list(csv.DictReader(fh))
sx = [float(r["Sx"]) for r in rows]
sz = [float(r["Sz"]) for r in rows]
fig, ax = plt.subplots(figsize=(5, 5))
ax.plot(sx, sz, lw=0.3)
ax.set_xlabel("$S_x$")
ax.set_ylabel("$S_z$")
ax.set_aspect("equal")
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=200)
'''

_FIELD_PLOT = '''"""Quiver plot of a velocity grid written by `jcmflow field`."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {data!r}
with open(path) as fh:
    rows = [r for r in csv.DictReader(fh) if r["singular"] == "0"]
x = [float(r["x"]) for r in rows]
z = [float(r["z"]) for r in rows]
vx = [float(r["vx"]) for r in rows]
vz = [float(r["vz"]) for r in rows]
fig, ax = plt.subplots(figsize=(6, 3.5))
ax.quiver(x, z, vx, vz)
ax.set_xlabel("$x$")
ax.set_ylabel("$z$")
ax.set_aspect("equal")
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=200)
'''


def half_disk_grid(n: int) -> np.ndarray:
    """Points of an n-by-n lattice on [-1, 1]**2 with z <= 0 and x**2 + z**2 <= 1."""
    axis = np.linspace(-1.0, 1.0, n)
    X, Z = np.meshgrid(axis, axis, indexing="ij")
    keep = (Z <= 0) & (X * X + Z * Z <= 1.0 + 1e-12)
    return np.column_stack([X[keep], np.zeros(keep.sum()), Z[keep]])


def _trajectory(cfg):
    params = cfg.params()
    traj = sample_trajectory(cfg.s0, cfg.t_max, cfg.dt, params)
    rows = np.column_stack([traj.times, traj.points, traj.velocities,
                            np.full(len(traj), traj.err_bound)])
    out = {"data": _table_bytes(cfg, TRAJECTORY_COLUMNS, rows)}
    if cfg.format == "csv":
        out["plot"] = _TRAJECTORY_PLOT
    return out, {"series_err_bound": traj.err_bound, "max_norm": float(
        np.max(np.linalg.norm(traj.points, axis=1)))}


def _field(cfg):
    params = cfg.params()
    pts = half_disk_grid(cfg.grid)
    f = sample_field_grid(cfg.t, pts, params, parse_eos(cfg.eos), cfg.rho0)
    rows = [(cfg.t, x[0], x[2], v[0], v[2], d, r, p, k[0], k[2], s)
            for x, v, d, r, p, k, s in zip(f["x"], f["v"], f["div_v"], f["rho"], f["p"],
                                           f["K_force"], f["singular"])]
    out = {"data": _table_bytes(cfg, FIELD_COLUMNS, rows)}
    if cfg.format == "csv":
        out["plot"] = _FIELD_PLOT
    return out, {"series_err_bound": eval_L(params, cfg.t).err_bound}


def _oracle(cfg):
    params = cfg.params()
    n_max = cfg.fock_cutoff or max(1, default_cutoff(cfg.beta))
    fock = FockConfig(n_max, cfg.beta, max_discarded=1.0)
    times = np.arange(int(math.floor(cfg.t_max / cfg.dt * (1 + 1e-12))) + 1) * cfg.dt
    report = compare_with_closed_form(AtomState.from_bloch(cfg.s0), times, params, fock)
    body = {"command": "oracle-check", "s0": list(cfg.s0), **report.to_dict(),
            "fock_discarded_weight": fock.discarded_weight}
    return {"data": _json_bytes(body)}, {"error_budget": report.error_budget,
                                         "fock_discarded_weight": fock.discarded_weight}


def _intersections(cfg):
    params = cfg.params()
    events = find_intersections(cfg.s0, cfg.t_max, cfg.dt, params, cfg.tol)
    body = {"command": "intersections", "beta": cfg.beta, "s0": list(cfg.s0),
            "t_max": cfg.t_max, "dt": cfg.dt, "tol": cfg.tol,
            "events": [e.to_dict() for e in events]}
    return {"data": _json_bytes(body)}, {"newton_tol": cfg.tol}


def random_regular_samples(params, n, t_max, rng, margin=WINDOW_MARGIN):
    """``n`` pairs (t, x) with t in [0, t_max], x in the unit ball, away from singular times."""
    ts, xs = [], []
    while len(ts) < n:
        t = rng.uniform(0.0, t_max, size=max(64, 2 * (n - len(ts))))
        g = eval_L_grid(params, t)
        ok = np.minimum(np.abs(g.L1), np.abs(g.L3)) >= margin
        ts.extend(t[ok][: n - len(ts)].tolist())
    xs = sample_ball(rng, n)
    return np.array(ts), xs


def _residuals(cfg):
    params = cfg.params()
    rng = np.random.default_rng(cfg.seed)
    ts, xs = random_regular_samples(params, cfg.samples, cfg.t_max, rng)
    h = cfg.fd_step
    rows = []
    for t, x in zip(ts, xs):
        r1 = ns_residual(t, x, params, h)
        r2 = ns_residual(t, x, params, h / 2)
        c1 = continuity_residual(t, params, cfg.rho0, h)
        c2 = continuity_residual(t, params, cfg.rho0, h / 2)
        rows.append((t, *x, *r1, np.max(np.abs((4 * r2 - r1) / 3)), c1, (4 * c2 - c1) / 3))
    return {"data": _table_bytes(cfg, RESIDUAL_COLUMNS, rows)}, {"fd_step": h}


def _density(cfg):
    params = cfg.params()
    times = np.arange(int(math.floor(cfg.t_max / cfg.dt * (1 + 1e-12))) + 1) * cfg.dt
    g = eval_L_grid(params, times)
    rows = []
    for i, t in enumerate(times):
        closed = float(density(g.at(i), cfg.rho0))
        sing = bool(is_singular(g.at(i)))
        try:
            quad = density_by_quadrature(t, params, cfg.rho0, cfg.n_steps)
        except NumericalFailure:
            quad = math.nan
        rows.append((t, closed, quad, sing))
    return {"data": _table_bytes(cfg, DENSITY_COLUMNS, rows)}, {"quadrature_panels": cfg.n_steps}


def _energy(cfg):
    params = cfg.params()
    value, err = energy_functional(cfg.t, params, parse_eos(cfg.eos), cfg.rho0,
                                   cfg.samples, cfg.seed, return_stderr=True)
    body = {"command": "energy", "t": cfg.t, "beta": cfg.beta, "eos": cfg.eos,
            "rho0": cfg.rho0, "samples": cfg.samples, "seed": cfg.seed,
            "value": value, "stderr": err}
    return {"data": _json_bytes(body)}, {"mc_stderr": err}


_DISPATCH = {
    "trajectory": _trajectory,
    "field": _field,
    "oracle-check": _oracle,
    "intersections": _intersections,
    "residuals": _residuals,
    "density": _density,
    "energy": _energy,
}


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def run(cfg: RunConfig, stderr=None) -> int:
    """Execute ``cfg`` and write its artifacts; return the exit status."""
    stderr = stderr or sys.stderr
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        validate(cfg)
        out, budgets = _DISPATCH[cfg.command](cfg)
    except NumericalFailure as exc:
        print(f"jcmflow {cfg.command}: numerical failure ({type(exc).__name__}): {exc}",
              file=stderr)
        return 2
    except ValueError as exc:
        print(f"jcmflow {cfg.command}: invalid configuration: {exc}", file=stderr)
        return 1

    data_path = cfg.output_path()
    data_path.parent.mkdir(parents=True, exist_ok=True)
    data_path.write_bytes(out["data"])
    artifacts = {data_path.name: _sha256(out["data"])}
    if "plot" in out:
        plot_path = data_path.with_name(data_path.stem + "_plot.py")
        script = out["plot"].format(data=data_path.name).encode("utf-8")
        plot_path.write_bytes(script)
        artifacts[plot_path.name] = _sha256(script)

    manifest = {
        "config": cfg.to_dict(),
        "artifacts": artifacts,
        "versions": {"jcmflow": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "threads": thread_count(),
        "error_budgets": budgets,
        "wall_clock": {"started": started.isoformat(),
                       "elapsed_s": time.perf_counter() - t0},
    }
    data_path.with_name(data_path.name + ".manifest.json").write_bytes(_json_bytes(manifest))
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"jcmflow: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
