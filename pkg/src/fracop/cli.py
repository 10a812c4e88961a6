"""Command-line experiment runner.

Every run is described by one JSON config (schema: ``config_schema.json``
next to this module, strict: unknown keys are rejected)::

    {
      "seed": 0,
      "problem": {
        "operator": {"type": "laplacian1d", "n": 64},
        "alpha": 0.5, "T": 1.0,
        "grid": {"kind": "graded", "n": 256, "grading": 3.0},
        "initial": {"kind": "random"},
        "forcing": {"kind": "zero"}
      },
      "task": {"name": "solve", "solve": {"residual": true}},
      "output": {"directory": "out", "formats": ["csv", "json", "svg"]},
      "quadrature": {"path": "paper", "tol": 1e-13, "n_ray": 48, "n_arc": 32}
    }

Operator blocks: ``diagonal`` (``eigenvalues``, complex as ``[re, im]``),
``laplacian1d`` (``n``), ``elliptic1d`` (``n``, ``a``, ``c``), ``matrix``
(``rows``); all accept ``gamma`` and ``shift``.  Initial values:
``random`` (seeded normal), ``full_support``, ``eigenvector``/``sine``
(``mode``), ``smooth``, ``values``, ``zeros``.  Forcings ``F(t) = s(t) b``
with ``s`` one of ``zero``, ``constant``, ``sin`` (``sin t``), ``power``
(``t**exponent``), ``bump`` (``t^2 (T - t)^2``) and ``b`` random or ones.

Command-line flags override config fields.  Each run writes its outputs and
``manifest.json`` into the output directory.  Exit status: 0 on success,
2 when a verification verdict is not ``pass``, 1 on any error.
``FRACOP_THREADS`` caps the worker pool.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

import jsonschema
import numpy as np

from . import output as io
from .contour import worker_count
from .errors import FracopError
from .evolution import ForcingTerm, NonlinearForcing, solve_linear, solve_semilinear
from .fractional_calculus import TimeGrid
from .inverse import (
    ObservationSpec,
    default_obs_times,
    l_curve,
    middle_third,
    observation_map,
    reconstruct_initial,
)
from .mittag_leffler import ml_with_error
from .operators import SectorialOperator, operator_from_config
from .solution_operators import QuadratureConfig, operator_trajectory
from . import verification as ver

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "problem": {
        "operator": {"type": "laplacian1d", "n": 64},
        "alpha": 0.5,
        "T": 1.0,
        "grid": {"kind": "graded", "n": 256},
        "initial": {"kind": "random"},
        "forcing": {"kind": "zero"},
    },
    "task": {"name": "solve"},
    "output": {"directory": "fracop-out", "formats": ["csv", "json", "svg"]},
    "quadrature": {"path": "paper", "tol": 1e-13, "n_ray": 48, "n_arc": 32},
}


class ConfigError(FracopError):
    """Schema violation; the message names the offending field."""


def load_schema() -> dict[str, Any]:
    return json.loads(resources.files("fracop").joinpath("config_schema.json").read_text())


def merge(base: dict, over: dict) -> dict:
    """Recursive dict merge; ``over`` wins, lists are replaced."""
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate_config(cfg: dict[str, Any]) -> None:
    """Raise :class:`ConfigError` with a field path like ``problem.alpha``."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        e = errors[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {e.message}")


# ---------------------------------------------------------------------------
# argument parsing


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _floats(text: str) -> list[float]:
    return [float(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def _ints(text: str) -> list[int]:
    return [int(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracop", description="Time-fractional evolution experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--formats", help="comma-separated subset of csv,json,svg")
    common.add_argument("--seed", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--T", type=float)
    common.add_argument("--op", help="operator type")
    common.add_argument("--n", type=int, help="operator dimension")
    common.add_argument("--shift", type=float)
    common.add_argument("--grid", dest="grid_kind", choices=["uniform", "graded", "geometric"])
    common.add_argument("--grid-n", type=int)
    common.add_argument("--grading", type=float)
    common.add_argument("--t-first", type=float)
    common.add_argument("--initial", dest="initial_kind")
    common.add_argument("--forcing", dest="forcing_kind")
    common.add_argument("--path", dest="quad_path", choices=["paper", "fixed"])
    common.add_argument("--tol", dest="quad_tol", type=float, help="quadrature tolerance")

    s = sub.add_parser("ml", parents=[common], help="evaluate a Mittag-Leffler function")
    s.add_argument("--a1", type=float)
    s.add_argument("--a2", type=float)
    s.add_argument("--z", type=_complex, action="append", help="argument (repeatable, complex as 1+2j)")
    s.add_argument("--ml-tol", type=float)

    s = sub.add_parser("solve", parents=[common], help="solve the linear problem")
    s.add_argument("--residual", action="store_true", default=None)
    s.add_argument("--oracle", action="store_true", default=None)

    s = sub.add_parser("semilinear", parents=[common], help="Picard iteration for a semilinear problem")
    s.add_argument("--nonlinearity", choices=["sin", "zero", "linear"])
    s.add_argument("--gamma-exp", type=float)
    s.add_argument("--M", type=float)
    s.add_argument("--picard-tol", type=float)
    s.add_argument("--max-iter", type=int)
    s.add_argument("--halving", action="store_true", default=None)

    s = sub.add_parser("verify", parents=[common], help="run a verification suite")
    s.add_argument("--suite")
    s.add_argument("--betas", type=_floats)
    s.add_argument("--tau", type=float)
    s.add_argument("--n-t", type=int)
    s.add_argument("--sigmas", type=_floats)
    s.add_argument("--refinements", type=int)
    s.add_argument("--nodes", type=int)

    s = sub.add_parser("invert", parents=[common], help="recover the initial value from observations")
    s.add_argument("--obs-spec", type=Path, help="JSON with omega, obs_times, noise_level")
    s.add_argument("--omega", type=_ints)
    s.add_argument("--n-obs", type=int)
    s.add_argument("--obs-span", type=float)
    s.add_argument("--noise", type=float)
    s.add_argument("--reg", type=float)
    s.add_argument("--regs", type=_floats)

    s = sub.add_parser("bench", parents=[common], help="time solution-operator evaluation")
    s.add_argument("--sizes", type=_ints)
    s.add_argument("--repeats", type=int)
    return p


def _set(cfg: dict, path: str, value: Any) -> None:
    if value is None:
        return
    *head, last = path.split(".")
    node = cfg
    for k in head:
        node = node.setdefault(k, {})
    node[last] = value


def config_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Defaults, then the config file, then command-line flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if args.config is not None:
        try:
            user = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config error at <root>: must be a JSON object")
        # operator blocks replace wholesale so defaults do not leak into another type
        if isinstance(user.get("problem"), dict) and "operator" in user["problem"]:
            cfg["problem"]["operator"] = {}
        cfg = merge(cfg, user)
        user_initial = isinstance(user.get("problem"), dict) and "initial" in user["problem"]
    else:
        user_initial = False
    cfg["task"]["name"] = args.command
    if args.command == "invert" and not user_initial:
        # white noise is not recoverable from smoothed observations
        cfg["problem"]["initial"] = {"kind": "smooth"}
    if args.op is not None and args.op != cfg["problem"]["operator"].get("type"):
        cfg["problem"]["operator"] = {"type": args.op}
    if args.formats is not None:
        cfg["output"]["formats"] = [f for f in args.formats.split(",") if f]
    flags = {
        "seed": args.seed,
        "output.directory": args.out,
        "problem.alpha": args.alpha,
        "problem.T": args.T,
        "problem.operator.n": args.n,
        "problem.operator.shift": args.shift,
        "problem.grid.kind": args.grid_kind,
        "problem.grid.n": args.grid_n,
        "problem.grid.grading": args.grading,
        "problem.grid.t_first": args.t_first,
        "problem.initial.kind": args.initial_kind,
        "problem.forcing.kind": args.forcing_kind,
        "quadrature.path": args.quad_path,
        "quadrature.tol": args.quad_tol,
    }
    c = args.command
    if c == "ml":
        z = None if args.z is None else [[v.real, v.imag] if v.imag else v.real for v in args.z]
        flags.update({"task.ml.a1": args.a1, "task.ml.a2": args.a2, "task.ml.z": z, "task.ml.tol": args.ml_tol})
    elif c == "solve":
        flags.update({"task.solve.residual": args.residual, "task.solve.oracle": args.oracle})
    elif c == "semilinear":
        flags.update({"task.semilinear.nonlinearity": args.nonlinearity,
                      "task.semilinear.gamma_exp": args.gamma_exp, "task.semilinear.M": args.M,
                      "task.semilinear.tol": args.picard_tol, "task.semilinear.max_iter": args.max_iter,
                      "task.semilinear.halving": args.halving})
    elif c == "verify":
        flags.update({"task.verify.suite": args.suite, "task.verify.betas": args.betas,
                      "task.verify.tau": args.tau, "task.verify.n_t": args.n_t,
                      "task.verify.sigmas": args.sigmas, "task.verify.refinements": args.refinements,
                      "task.verify.nodes": args.nodes})
    elif c == "invert":
        if args.obs_spec is not None:
            spec = json.loads(Path(args.obs_spec).read_text())
            if not isinstance(spec, dict):
                raise ConfigError("observation spec must be a JSON object")
            for key, value in spec.items():
                target = {"noise_level": "noise_level", "omega": "omega", "obs_times": "obs_times"}.get(key)
                if target is None:
                    raise ConfigError(f"config error at obs_spec.{key}: unknown key")
                flags[f"task.invert.{target}"] = value
        flags.update({"task.invert.omega": args.omega, "task.invert.n_obs": args.n_obs,
                      "task.invert.obs_span": args.obs_span, "task.invert.noise_level": args.noise,
                      "task.invert.reg": args.reg, "task.invert.regs": args.regs})
    elif c == "bench":
        flags.update({"task.bench.sizes": args.sizes, "task.bench.repeats": args.repeats})
    for path, value in flags.items():
        _set(cfg, path, value)
    return cfg


# ---------------------------------------------------------------------------
# building problem pieces


@dataclass
class Context:
    cfg: dict[str, Any]
    out: Path
    formats: set[str]
    written: list[str] = field(default_factory=list)

    @property
    def problem(self) -> dict[str, Any]:
        return self.cfg["problem"]

    @property
    def alpha(self) -> float:
        return float(self.problem["alpha"])

    @property
    def seed(self) -> int:
        return int(self.cfg["seed"])

    def task(self, name: str) -> dict[str, Any]:
        return self.cfg["task"].get(name, {})

    # Plots never stand alone: CSVs are written whenever SVGs are.
    def csv(self, name: str, header, rows) -> None:
        if self.formats & {"csv", "svg"}:
            io.write_csv(self.out / name, header, rows)
            self.written.append(name)

    def json(self, name: str, obj) -> None:
        if "json" in self.formats:
            io.write_json(self.out / name, obj)
            self.written.append(name)

    def svg(self, name: str, plot: io.Plot) -> None:
        if "svg" in self.formats:
            plot.write(self.out / name)
            self.written.append(name)


def quadrature(cfg: dict[str, Any]) -> QuadratureConfig:
    q = cfg.get("quadrature", {})
    return QuadratureConfig(path=q.get("path", "paper"), tol=float(q.get("tol", 1e-13)),
                            n_ray=int(q.get("n_ray", 48)), n_arc=int(q.get("n_arc", 32)),
                            gamma=q.get("gamma"))


def build_grid(problem: dict[str, Any]) -> TimeGrid:
    g = problem.get("grid", {})
    T = float(problem["T"])
    alpha = float(problem["alpha"])
    n = int(g.get("n", 256))
    kind = g.get("kind", "graded")
    if kind == "uniform":
        return TimeGrid.uniform(T, n)
    if kind == "geometric":
        return TimeGrid.geometric(float(g.get("t_first", 1e-6 * T)), T, n)
    return TimeGrid.graded(T, n, float(g.get("grading", (2 - alpha) / alpha)))


def _unit_grid(dim: int) -> np.ndarray:
    return np.arange(1, dim + 1) / (dim + 1)


def build_initial(problem: dict[str, Any], op: SectorialOperator, seed: int) -> np.ndarray:
    init = problem.get("initial", {})
    kind = init.get("kind", "random")
    scale = float(init.get("scale", 1.0))
    N = op.dim
    x = _unit_grid(N)
    if kind == "random":
        a = np.random.default_rng(seed).standard_normal(N)
    elif kind == "full_support":
        a = ver.full_support_vector(op)
    elif kind == "eigenvector":
        _, phi = op.eigh()
        k = int(init.get("mode", 1))
        if k > N:
            raise ConfigError("config error at problem.initial.mode: exceeds the dimension")
        a = phi[:, k - 1]
    elif kind == "sine":
        a = np.sin(int(init.get("mode", 1)) * math.pi * x)
    elif kind == "smooth":
        a = np.sin(math.pi * x) + np.exp(-50 * (x - 0.2) ** 2)
    elif kind == "values":
        a = np.asarray(init.get("values", []), dtype=float)
        if a.size != N:
            raise ConfigError(f"config error at problem.initial.values: expected {N} entries, got {a.size}")
    else:
        a = np.zeros(N)
    return scale * a


def build_forcing(problem: dict[str, Any], dim: int, seed: int
                  ) -> tuple[ForcingTerm | None, Callable[[float], np.ndarray] | None]:
    f = problem.get("forcing", {})
    kind = f.get("kind", "zero")
    if kind == "zero":
        return None, None
    scale = float(f.get("scale", 1.0))
    if f.get("direction", "random") == "ones":
        b = np.ones(dim)
    else:
        # offset stream so b is independent of a random initial value
        b = np.random.default_rng([seed, 1]).standard_normal(dim)
    b = scale * b
    T = float(problem["T"])
    p = float(f.get("exponent", 1.0))
    profiles: dict[str, Callable[[float], float]] = {
        "constant": lambda t: 1.0,
        "sin": math.sin,
        "power": lambda t: t**p,
        "bump": lambda t: t**2 * (T - t) ** 2,
    }
    s = profiles[kind]

    def F(t: float) -> np.ndarray:
        return s(t) * b

    return ForcingTerm.from_callable(F), F


def _pool_map(fns: Sequence[Callable[[], Any]]) -> list[Any]:
    """Run thunks on up to FRACOP_THREADS threads; results keep submission order."""
    workers = min(worker_count(), max(1, len(fns)))
    if workers == 1:
        return [fn() for fn in fns]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda fn: fn(), fns))


def _decay_fit(t: np.ndarray, norms: np.ndarray, alpha: float):
    """Slope of ``log ||u||`` over the last two decades of positive times (if any)."""
    T = float(t[-1])
    sel = (t >= T / 128) & (t > 0)  # a bit over two decades, so a node-aligned window still spans two & (norms > 0)
    if np.count_nonzero(sel) < 3:
        return None
    return ver.fit_slope(t[sel], norms[sel], expected=-alpha, name="norm-decay")


# ---------------------------------------------------------------------------
# tasks


def task_ml(ctx: Context) -> tuple[int, Any]:
    o = ctx.task("ml")
    a1, a2 = float(o.get("a1", ctx.alpha)), float(o.get("a2", 1.0))
    zs = [complex(z[0], z[1]) if isinstance(z, list) else complex(z) for z in o.get("z", [1.0])]
    real = all(z.imag == 0 for z in zs)
    z_arr = np.array([z.real for z in zs]) if real else np.array(zs)
    value, err = ml_with_error((a1, a2), z_arr)
    value, err = np.atleast_1d(value), np.atleast_1d(err)
    lines, rows, records = [], [], []
    for z, v, e in zip(zs, value, err):
        v = complex(v)
        shown = repr(v.real) if real else f"{v.real!r}{v.imag:+.17g}j"
        lines.append(f"E_{{{a1:g},{a2:g}}}({z.real if real else z}) = {shown}  (error estimate {float(e):.3g})")
        rows.append([z.real, z.imag, v.real, v.imag, float(e)])
        records.append({"z": [z.real, z.imag], "value": [v.real, v.imag], "error_estimate": float(e)})
    tol = o.get("tol")
    status = EXIT_OK
    if tol is not None:
        rel = [r[4] / max(abs(complex(r[2], r[3])), 1e-300) for r in rows]
        if max(rel) > tol:
            lines.append(f"requested tolerance {tol:g} not reached (worst relative estimate {max(rel):.3g})")
            status = EXIT_ERROR
    ctx.csv("ml.csv", ["re_z", "im_z", "re_value", "im_value", "error_estimate"], rows)
    ctx.json("ml.json", {"a1": a1, "a2": a2, "results": records})
    return status, "\n".join(lines)


def task_solve(ctx: Context) -> tuple[int, Any]:
    op = operator_from_config(ctx.problem["operator"])
    grid = build_grid(ctx.problem)
    a = build_initial(ctx.problem, op, ctx.seed)
    F, _ = build_forcing(ctx.problem, op.dim, ctx.seed)
    o = ctx.task("solve")
    quad = quadrature(ctx.cfg)
    rep = solve_linear(op, ctx.alpha, a, F, grid, quad, compute_residual=bool(o.get("residual", False)))
    u = rep.trajectory.values
    t = grid.nodes
    norms = np.linalg.norm(u, axis=1)
    summary: dict[str, Any] = {"report": rep.to_dict(), "dim": op.dim, "nodes": len(grid),
                               "sup_norm": float(np.max(norms))}
    if o.get("oracle", False):
        rep_o = ver.check_oracle_agreement(op, ctx.alpha, a, F, grid, quad=quad)
        summary["oracle"] = rep_o.to_dict()
    fit = _decay_fit(t, norms, ctx.alpha)
    summary["decay_fit"] = None if fit is None else fit.to_dict()

    cols = [f"re_u{j}" for j in range(op.dim)]
    if np.iscomplexobj(u):
        cols += [f"im_u{j}" for j in range(op.dim)]
        data = np.concatenate([u.real, u.imag], axis=1)
    else:
        data = u
    ctx.csv("trajectory.csv", ["t"] + cols, (np.concatenate([[ti], row]) for ti, row in zip(t, data)))
    fitted = np.full(t.size, np.nan)
    if fit is not None:
        inside = t >= fit.window[0]
        fitted[inside] = np.exp(fit.intercept) * t[inside] ** fit.slope
    ctx.csv("norm.csv", ["t", "norm", "fitted"], zip(t, norms, fitted))
    ctx.json("report.json", summary)
    plot = io.Plot(title="solution norm", xlabel="t", ylabel="||u(t)||", logx=True, logy=True)
    plot.add("||u(t)||", t, norms)
    if fit is not None:
        sel = t >= fit.window[0]
        plot.add(f"fit, slope {fit.slope:.4f}", t[sel], fitted[sel])
        plot.notes.append(f"fitted decay slope {fit.slope:.4f} on [{fit.window[0]:.3g}, {fit.window[1]:.3g}]"
                          f" (R^2 = {fit.r2:.4f}); -alpha = {-ctx.alpha:g}")
    ctx.svg("norm.svg", plot)
    return EXIT_OK, summary


def _nonlinearity(kind: str) -> Callable[[float, np.ndarray], np.ndarray]:
    return {"sin": lambda t, u: np.sin(u), "linear": lambda t, u: u,
            "zero": lambda t, u: np.zeros_like(u)}[kind]


def task_semilinear(ctx: Context) -> tuple[int, Any]:
    op = operator_from_config(ctx.problem["operator"])
    grid = build_grid(ctx.problem)
    a = build_initial(ctx.problem, op, ctx.seed)
    o = ctx.task("semilinear")
    quad = quadrature(ctx.cfg)
    fn = _nonlinearity(o.get("nonlinearity", "sin"))
    NF = NonlinearForcing(fn, M=float(o.get("M", 1e3)))
    gexp = float(o.get("gamma_exp", 0.25))
    tol = float(o.get("tol", 1e-10))
    max_iter = int(o.get("max_iter", 100))
    rep = solve_semilinear(op, ctx.alpha, a, NF, gexp, grid, tol, max_iter, quad)
    u = rep.trajectory.values
    t = grid.nodes
    summary: dict[str, Any] = {"report": rep.to_dict(), "gamma_exp": gexp, "M": NF.M, "tol": tol}
    if o.get("halving", False):
        n = len(grid) - 1
        if n % 2:
            raise ConfigError("config error at problem.grid.n: halving needs an even step count")
        coarse_cfg = merge(ctx.problem, {"grid": {"n": n // 2}})
        coarse = build_grid(coarse_cfg)
        if not np.allclose(coarse.nodes, t[::2], rtol=1e-13, atol=0):
            raise ConfigError("config error at problem.grid.kind: halving needs nested grids")
        rc = solve_semilinear(op, ctx.alpha, a, NF, gexp, coarse, tol, max_iter, quad)
        summary["halving_difference"] = float(np.max(np.linalg.norm(u[::2] - rc.trajectory.values, axis=1)))
    ctx.csv("trajectory.csv", ["t"] + [f"u{j}" for j in range(op.dim)],
            (np.concatenate([[ti], row]) for ti, row in zip(t, u.real)))
    ratios = [math.nan] + list(rep.ratios)
    ctx.csv("increments.csv", ["iteration", "increment", "ratio"],
            ([i + 1, inc, ratios[i] if i < len(ratios) else math.nan] for i, inc in enumerate(rep.increments)))
    ctx.json("report.json", summary)
    plot = io.Plot(title="Picard increments", xlabel="iteration", ylabel="sup increment", logy=True)
    plot.add("increment", np.arange(1, len(rep.increments) + 1), rep.increments)
    plot.notes.append(f"contraction estimate {rep.rho_hat if rep.rho_hat is not None else float('nan'):.4g}")
    ctx.svg("increments.svg", plot)
    return EXIT_OK, summary


SUITES = ("smoothing", "bounds", "slopes", "decay", "laplace", "oracle", "residual", "identity", "holder",
          "duhamel", "cross")


def _verify_jobs(ctx: Context, suite: str) -> list[tuple[str, Callable[[], Any]]]:
    op = operator_from_config(ctx.problem["operator"])
    alpha = ctx.alpha
    o = ctx.task("verify")
    quad = quadrature(ctx.cfg)
    betas = [float(b) for b in o.get("betas", [0.0, 0.5, 1.0])]
    tau = float(o.get("tau", 0.5))
    n_t = o.get("n_t")
    refine = int(o.get("refinements", 2))
    seed = ctx.seed
    jobs: list[tuple[str, Callable[[], Any]]] = []

    def a_vec():
        return build_initial(ctx.problem, op, seed)

    if suite in ("smoothing", "bounds"):
        probes = ("G",) if suite == "smoothing" else ("G", "Gprime", "K", "dJtauG", "JbetaG")
        for probe in probes:
            for b in betas:
                jobs.append((f"bound-{probe}-b{b:g}", lambda p=probe, b=b: ver.check_bound_stability(
                    p, op, alpha, b, tau if p == "dJtauG" else None, n_t=n_t, quad=quad)))
    elif suite == "slopes":
        for probe in ("G", "Gprime", "K", "dJtauG", "JbetaG"):
            for b in betas:
                jobs.append((f"slope-{probe}-b{b:g}", lambda p=probe, b=b: ver.check_estimate_slope(
                    p, op, alpha, b, tau if p == "dJtauG" else None, n_t=n_t or 25, quad=quad)))
    elif suite == "decay":
        jobs.append(("decay", lambda: ver.check_decay(op, alpha, quad=quad)))
    elif suite == "laplace":
        lams = [1.0, 2.0, 4.0, 2.0 + 2.0j, 8.0]
        jobs.append(("laplace", lambda: ver.check_laplace_identity(op, alpha, a_vec(), lams, quad=quad)))
    elif suite == "oracle":
        def oracle():
            F, _ = build_forcing(merge(ctx.problem, {"forcing": {"kind": "sin"}}) if
                                 ctx.problem.get("forcing", {}).get("kind", "zero") == "zero" else ctx.problem,
                                 op.dim, seed)
            return ver.check_oracle_agreement(op, alpha, a_vec(), F, build_grid(ctx.problem), quad=quad)
        jobs.append(("oracle", oracle))
    elif suite == "residual":
        def residual():
            prob = ctx.problem
            if prob.get("forcing", {}).get("kind", "zero") == "zero":
                prob = merge(prob, {"forcing": {"kind": "sin"}})
            F, _ = build_forcing(prob, op.dim, seed)
            n0 = int(ctx.problem.get("grid", {}).get("n", 128))
            return ver.check_residual_order(op, alpha, np.zeros(op.dim), F, float(ctx.problem["T"]), n0,
                                            refine, quad=quad)
        jobs.append(("residual", residual))
    elif suite == "identity":
        nodes = int(o.get("nodes", 4096))
        jobs.append(("identity", lambda: ver.check_integral_identity(
            op, alpha, a_vec(), float(ctx.problem["T"]), nodes, refine + 1, quad=quad)))
    elif suite == "holder":
        sigmas = [float(s) for s in o.get("sigmas", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]

        def holder():
            b = np.random.default_rng([seed, 1]).standard_normal(op.dim)
            grid = TimeGrid.uniform(float(ctx.problem["T"]), int(ctx.problem.get("grid", {}).get("n", 128)))
            reports, best = ver.holder_sweep(op, alpha, lambda t: math.sin(t) * b, grid, sigmas, refine, quad)
            return reports
        jobs.append(("holder", holder))
    elif suite == "duhamel":
        def duhamel():
            b = np.random.default_rng([seed, 1]).standard_normal(op.dim)
            T = float(ctx.problem["T"])
            F, dF = ver.bump_forcing(T, b)
            grid = TimeGrid.uniform(T, int(ctx.problem.get("grid", {}).get("n", 128)))
            return ver.check_duhamel_identity(op, alpha, F, dF, grid, refine, quad)
        jobs.append(("duhamel", duhamel))
    elif suite == "cross":
        jobs.append(("cross", lambda: ver.check_cross_representation(op, alpha, a_vec(), quad=quad)))
    return jobs


def task_verify(ctx: Context) -> tuple[int, Any]:
    suite = ctx.task("verify").get("suite", "smoothing")
    names = SUITES if suite == "all" else (suite,)
    jobs = [job for s in names for job in _verify_jobs(ctx, s)]
    results = _pool_map([fn for _, fn in jobs])
    reports = []
    for (tag, _), res in zip(jobs, results):
        reports.extend((f"{tag}-{i}", r) for i, r in enumerate(res)) if isinstance(res, list) \
            else reports.append((tag, res))
    verdicts = [r.verdict for _, r in reports]
    overall = "pass" if all(v == "pass" for v in verdicts) else (
        "fail" if "fail" in verdicts else "inconclusive")
    doc = {"suite": suite, "alpha": ctx.alpha, "operator": ctx.problem["operator"],
           "verdict": overall, "reports": [r.to_dict() for _, r in reports]}
    slope_plot = io.Plot(title="probe norms", xlabel="t", ylabel="norm", logx=True, logy=True)
    for tag, r in reports:
        safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", tag)
        if isinstance(r, ver.SlopeFit):
            ctx.csv(f"{safe}.csv", ["t", "value"], zip(r.ts, r.values))
            slope_plot.add(f"{r.name} {r.slope:.3f}", r.ts, r.values)
        elif r.samples:
            keys = list(r.samples[0])
            ctx.csv(f"{safe}.csv", keys, ([row[k] for k in keys] for row in r.samples))
    ctx.json("report.json", doc)
    if slope_plot.series:
        ctx.svg("slopes.svg", slope_plot)
    brief = dict(doc, reports=[{k: v for k, v in d.items() if k != "samples"} for d in doc["reports"]])
    return (EXIT_OK if overall == "pass" else EXIT_FAILED), brief


def task_invert(ctx: Context) -> tuple[int, Any]:
    op = operator_from_config(ctx.problem["operator"])
    o = ctx.task("invert")
    quad = quadrature(ctx.cfg)
    T = float(ctx.problem["T"])
    a_true = build_initial(ctx.problem, op, ctx.seed)
    omega = o.get("omega", "middle_third")
    omega = middle_third(op.dim) if omega == "middle_third" else np.asarray(omega, dtype=int)
    times = o.get("obs_times")
    times = default_obs_times(T, int(o.get("n_obs", 32)), float(o.get("obs_span", 1e-6))) \
        if times is None else np.asarray(times, dtype=float)
    spec = ObservationSpec(omega, times, float(o.get("noise_level", 0.0)))
    omap = observation_map(op, ctx.alpha, spec, quad)
    data = omap.simulate(a_true, seed=ctx.seed)
    reg = float(o.get("reg", 1e-12))
    a_hat, diag = reconstruct_initial(omap, data, reg)
    rel = float(np.linalg.norm(a_hat - a_true) / np.linalg.norm(a_true)) if np.any(a_true) else float(
        np.linalg.norm(a_hat))
    diag = dict(diag, relative_error=rel, spec=spec.to_dict(), noise=data.metadata)
    s = omap.singular_values
    ctx.csv("a_hat.csv", ["index", "a_hat", "a_true"], zip(range(op.dim), a_hat, a_true))
    ctx.csv("sigma.csv", ["k", "sigma"], zip(range(1, s.size + 1), s))
    sp = io.Plot(title="singular values of the observation map", xlabel="k", ylabel="sigma_k", logy=True)
    sp.add("sigma_k", np.arange(1, s.size + 1), s, style="points")
    ctx.svg("sigma.svg", sp)
    rec = io.Plot(title="reconstruction", xlabel="index", ylabel="value")
    rec.add("a_true", np.arange(op.dim), a_true).add("a_hat", np.arange(op.dim), a_hat)
    ctx.svg("a_hat.svg", rec)
    regs = o.get("regs")
    if regs:
        rows = l_curve(omap, data, regs, a_true)
        diag["l_curve"] = rows
        best = min(rows, key=lambda r: r["rel_error"])
        diag["best_reg"] = best
        ctx.csv("lcurve.csv", ["reg", "residual_norm", "solution_norm", "rel_error"],
                ([r["reg"], r["residual_norm"], r["solution_norm"], r["rel_error"]] for r in rows))
        lp = io.Plot(title="L-curve", xlabel="residual norm", ylabel="solution norm", logx=True, logy=True)
        lp.add("L-curve", [r["residual_norm"] for r in rows], [r["solution_norm"] for r in rows])
        ctx.svg("lcurve.svg", lp)
    ctx.json("diagnostics.json", diag)
    brief = {k: diag[k] for k in ("relative_error", "sigma_min", "sigma_max", "rank", "residual_norm")}
    return EXIT_OK, brief


def task_bench(ctx: Context) -> tuple[int, Any]:
    o = ctx.task("bench")
    sizes = [int(s) for s in o.get("sizes", [16, 32, 64])]
    repeats = int(o.get("repeats", 3))
    quad = quadrature(ctx.cfg)
    rows, records = [], []
    for n in sizes:
        op = operator_from_config(merge(ctx.problem["operator"], {"n": n}))
        a = build_initial(ctx.problem, op, ctx.seed)
        ts = np.geomspace(1e-3, 1e3, 20)
        grid = build_grid(ctx.problem)
        best_g, best_s = math.inf, math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            operator_trajectory(op, ctx.alpha, "G", ts, a, quad)
            best_g = min(best_g, time.perf_counter() - t0)
            t0 = time.perf_counter()
            solve_linear(op, ctx.alpha, a, None, grid, quad)
            best_s = min(best_s, time.perf_counter() - t0)
        rows.append([n, best_g, best_s])
        records.append({"n": n, "G_sweep_seconds": best_g, "solve_seconds": best_s, "nodes": len(grid)})
    ctx.csv("bench.csv", ["n", "G_sweep_seconds", "solve_seconds"], rows)
    ctx.json("bench.json", {"repeats": repeats, "results": records})
    plot = io.Plot(title="timing", xlabel="dimension", ylabel="seconds", logx=True, logy=True)
    plot.add("G sweep (20 times)", sizes, [r[1] for r in rows]).add("solve_linear", sizes, [r[2] for r in rows])
    ctx.svg("bench.svg", plot)
    return EXIT_OK, {"results": records}


TASKS: dict[str, Callable[[Context], tuple[int, Any]]] = {
    "ml": task_ml, "solve": task_solve, "semilinear": task_semilinear,
    "verify": task_verify, "invert": task_invert, "bench": task_bench,
}


def run(config: dict[str, Any]) -> tuple[int, Any, Path]:
    """Validate, execute the named task, write ``manifest.json``.

    Returns ``(exit status, printable summary, output directory)``.
    Errors propagate; :func:`main` maps them to exit status 1.
    """
    validate_config(config)
    cfg = merge(DEFAULTS, config)
    out = Path(cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(cfg, out, set(cfg["output"].get("formats", ["csv", "json", "svg"])))
    t0 = time.perf_counter()
    status, summary = TASKS[cfg["task"]["name"]](ctx)
    wall = time.perf_counter() - t0
    manifest = {
        "task": cfg["task"]["name"],
        "config": cfg,
        "config_sha256": io.config_hash(cfg),
        "versions": io.versions(),
        "seed": ctx.seed,
        "threads": worker_count(),
        "wall_time_seconds": wall,
        "exit_status": status,
        "outputs": {name: io.sha256_file(out / name) for name in sorted(ctx.written)},
    }
    io.write_json(out / "manifest.json", manifest)
    return status, summary, out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        cfg = config_from_args(args)
        status, summary, _ = run(cfg)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR
    except (FracopError, OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if isinstance(summary, str):
        print(summary)
    else:
        print(io.dumps(summary), end="")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
