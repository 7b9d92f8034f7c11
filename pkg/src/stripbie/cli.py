"""Command-line front end: solves, field grids, sweeps, random experiments.

Configuration comes from an optional key = value text file plus flag
overrides; every run writes a machine-readable summary and deterministic
data files into the output directory.

Exit codes: 0 success, 2 invalid configuration or scene, 3 solver failure.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import effective
from .effective import SweepRow, cma_conductors, cma_insulators, cma_three_phase
from .errors import ConvergenceError, PackingError, SceneError, StripBIEError
from .geometry import (Circle, Ellipse, InclusionKind, RandomSceneSpec, StripScene,
                       example_scene, random_scene, read_scene, write_scene)
from .potential import GridSpec, evaluate_grid, solve_scene, write_field_grid

DEFAULT_N = 2048


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------

def load_config(path) -> dict:
    """Read a key = value config file; repeated 'param' keys accumulate."""
    out: dict = {"param": []}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line {lineno}: {raw!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key == "param":
                out["param"].append(val)
            else:
                out[key] = val
    return out


def parse_params(items) -> dict:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"--param expects k=v, got {item!r}")
        k, _, v = item.partition("=")
        params[k.strip()] = v.strip()
    return params


def _resolve_param(value: str, sweep_name: str | None, sweep_value: float | None):
    """Plain float, or a link '@name' / '@name*factor' to the swept variable."""
    if value.startswith("@"):
        expr = value[1:]
        if "*" in expr:
            name, _, factor = expr.partition("*")
            scale = float(factor)
        else:
            name, scale = expr, 1.0
        if sweep_name is None or name.strip() != sweep_name:
            raise ValueError(f"linked parameter {value!r} needs a sweep over {expr.split('*')[0]!r}")
        return scale * sweep_value
    return float(value)


def _shape_from_spec(text: str):
    """Parse 'circle r=0.0075' or 'ellipse a=0.015 b=0.00375 [angle=random|0.3]'."""
    parts = text.split()
    kv = parse_params(parts[1:])
    if parts[0] == "circle":
        return Circle(0j, float(kv["r"])), False
    if parts[0] == "ellipse":
        angle_raw = kv.get("angle", "0")
        random_angle = angle_raw == "random"
        angle = 0.0 if random_angle else float(angle_raw)
        return Ellipse(0j, float(kv["a"]), float(kv["b"]), angle), random_angle
    raise ValueError(f"unknown shape kind {parts[0]!r}")


def random_spec_from_params(params: dict, seed: int) -> RandomSceneSpec:
    cshape, crand = (None, False)
    ishape, irand = (None, False)
    if "conductor_shape" in params:
        cshape, crand = _shape_from_spec(params["conductor_shape"])
    if "insulator_shape" in params:
        ishape, irand = _shape_from_spec(params["insulator_shape"])
    return RandomSceneSpec(
        conductors=int(params.get("conductors", 0)),
        insulators=int(params.get("insulators", 0)),
        conductor_shape=cshape,
        insulator_shape=ishape,
        random_conductor_angle=crand,
        random_insulator_angle=irand,
        min_gap=float(params["min_gap"]) if "min_gap" in params else None,
        seed=seed,
        band_halfwidth=float(params.get("band", 1.0)),
    )


def load_random_spec(path, seed: int) -> RandomSceneSpec:
    cfg = load_config(path)
    cfg.pop("param", None)
    return random_spec_from_params(cfg, seed)


# ---------------------------------------------------------------------------
# scene bookkeeping
# ---------------------------------------------------------------------------

def _single_kind_circular(scene: StripScene):
    """(kind, concentration) when all inclusions share a kind and are circular."""
    if scene.m == 0:
        return None
    kinds = {inc.kind for inc in scene.inclusions}
    if len(kinds) != 1:
        return None
    for inc in scene.inclusions:
        sh = inc.shape
        if isinstance(sh, Ellipse) and not math.isclose(sh.a, sh.b, rel_tol=1e-12):
            return None
    kind = next(iter(kinds))
    c = scene.conductor_concentration() + scene.insulator_concentration()
    return kind, c


def scene_cma(scene: StripScene) -> float:
    """Dilute-limit reference value when one applies, else nan."""
    single = _single_kind_circular(scene)
    if single is None:
        return float("nan")
    kind, c = single
    if c >= 1.0:
        return float("nan")
    return cma_conductors(c) if kind is InclusionKind.CONDUCTOR else cma_insulators(c)


def scene_phi(scene: StripScene) -> float:
    """Slit density sum of b^2/2 over inclusions (b = r for circles)."""
    total = 0.0
    for inc in scene.inclusions:
        sh = inc.shape
        b = sh.r if isinstance(sh, Circle) else sh.b
        total += b * b / 2.0
    return total


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------

def write_summary(path, entries: dict) -> None:
    with open(path, "w") as fh:
        fh.write("# stripbie run summary\n")
        for key, val in entries.items():
            if isinstance(val, float):
                fh.write(f"{key} = {val:.17g}\n")
            elif isinstance(val, (list, tuple, np.ndarray)):
                fh.write(f"{key} = {','.join(f'{v:.17g}' for v in val)}\n")
            else:
                fh.write(f"{key} = {val}\n")


def read_summary(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


# ---------------------------------------------------------------------------
# solve plumbing
# ---------------------------------------------------------------------------

def _solve_labelled(scene: StripScene, label: str, n: int, tol: float, outdir: Path,
                    grid: GridSpec | None, command: str):
    """Solve one scene, write scene echo, summary and any grid; return summary dict."""
    write_scene(outdir / "scene.txt", scene)
    t0 = time.perf_counter()
    entries = {
        "command": command,
        "scene": label,
        "status": "ok",
        "m": scene.m,
        "ell": scene.n_conductors,
        "n": n,
    }
    try:
        sol = solve_scene(scene, n, tol=tol)
    except ConvergenceError as exc:
        entries.update(status="failed", error=str(exc),
                       residual_history=",".join(f"{r:.3e}" for r in exc.residual_history[-5:]),
                       wall_time=time.perf_counter() - t0)
        write_summary(outdir / "summary.txt", entries)
        raise
    eff = effective.lambda_y(sol.result)
    entries.update(
        lambda_y=eff.lambda_y,
        mu_left=eff.mu_left,
        mu_right=eff.mu_right,
        lambda_e=scene_cma(scene),
        c_conductors=scene.conductor_concentration(),
        c_insulators=scene.insulator_concentration(),
        delta=list(sol.result.inclusion_consts),
        residual=sol.result.residual,
        iterations=sol.result.iterations,
        quality=eff.quality,
    )
    if grid is not None:
        fg = evaluate_grid(sol, grid)
        write_field_grid(outdir / "grid.tsv", fg, label, n)
        entries["grid"] = f"{grid.nx}x{grid.ny}"
        entries["masked_points"] = int((~fg.mask).sum())
    entries["wall_time"] = time.perf_counter() - t0
    write_summary(outdir / "summary.txt", entries)
    return entries, sol


def _build_example(example_id: str, params: dict, sweep_name=None, sweep_value=None) -> StripScene:
    resolved = {k: _resolve_param(v, sweep_name, sweep_value) if isinstance(v, str) else v
                for k, v in params.items()}
    if sweep_name is not None:
        resolved[sweep_name] = sweep_value
    return example_scene(example_id, **resolved)


def _sweep_point(args):
    """Worker for one sweep point; returns a row dict (picklable)."""
    example_id, params, sweep_name, value, n, tol = args
    try:
        scene = _build_example(example_id, params, sweep_name, value)
        sol = solve_scene(scene, n, tol=tol)
        eff = effective.lambda_y(sol.result)
        c = scene.conductor_concentration() + scene.insulator_concentration()
        return dict(value=value, c=c, phi=scene_phi(scene), lambda_y=eff.lambda_y,
                    lambda_e=scene_cma(scene), n=n, residual=sol.result.residual, status="ok")
    except (StripBIEError, ValueError) as exc:
        kind = "solver" if isinstance(exc, ConvergenceError) else "scene"
        return dict(value=value, c=float("nan"), phi=float("nan"), lambda_y=float("nan"),
                    lambda_e=float("nan"), n=n, residual=float("nan"),
                    status=f"{kind}: {exc}")


def _experiment_run(args):
    """Worker for one random-experiment repetition."""
    spec_params, seed, n, tol = args
    try:
        spec = random_spec_from_params(spec_params, seed)
        scene = random_scene(spec)
        c1 = scene.conductor_concentration()
        c2 = scene.insulator_concentration()
        sol = solve_scene(scene, n, tol=tol)
        eff = effective.lambda_y(sol.result)
        return dict(seed=seed, lambda_y=eff.lambda_y, lambda_e=cma_three_phase(c1, c2),
                    n=n, residual=sol.result.residual, status="ok")
    except PackingError as exc:
        return dict(seed=seed, lambda_y=float("nan"), lambda_e=float("nan"), n=n,
                    residual=float("nan"), status=f"packing: {exc}")
    except ConvergenceError as exc:
        return dict(seed=seed, lambda_y=float("nan"), lambda_e=float("nan"), n=n,
                    residual=float("nan"), status=f"solver: {exc}")


def _run_pool(worker, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_solve(ns, outdir: Path, want_grid: bool) -> int:
    scene, label = _scene_from_flags(ns)
    grid = _grid_spec(ns.grid) if want_grid else None
    entries, _ = _solve_labelled(scene, label, ns.n, ns.tol, outdir, grid, ns.command)
    if ns.command == "example":
        row = _lambda_row(scene, entries, ns)
        effective.write_sweep_table(outdir / "lambda.tsv", [row])
    print(f"lambda_y = {entries['lambda_y']:.7f}  (n={ns.n}, residual={entries['residual']:.2e})")
    return 0


def _lambda_row(scene: StripScene, entries: dict, ns) -> SweepRow:
    c = scene.conductor_concentration() + scene.insulator_concentration()
    return SweepRow(param="-", value=float("nan"), c=c, phi=scene_phi(scene),
                    lambda_y=entries["lambda_y"], lambda_e=entries["lambda_e"],
                    n=ns.n, residual=entries["residual"])


def _cmd_sweep(ns, outdir: Path) -> int:
    if not ns.example:
        raise SceneError("sweep requires --example")
    if not ns.sweep:
        raise ValueError("sweep requires --sweep param=start:stop:count")
    name, _, rng = ns.sweep.partition("=")
    start, stop, count = rng.split(":")
    values = np.linspace(float(start), float(stop), int(count))
    params = parse_params(ns.param)
    params.pop(name, None)
    jobs = [(ns.example, params, name.strip(), float(v), ns.n, ns.tol) for v in values]
    t0 = time.perf_counter()
    results = _run_pool(_sweep_point, jobs, ns.workers)
    rows = [SweepRow(param=name.strip(), **r) for r in results]
    effective.write_sweep_table(outdir / "sweep.tsv", rows)
    failed = [r for r in rows if r.status != "ok"]
    write_summary(outdir / "summary.txt", {
        "command": "sweep",
        "scene": f"{ns.example}[{ns.sweep}]",
        "status": "ok" if not failed else f"{len(failed)} point(s) failed",
        "points": len(rows),
        "n": ns.n,
        "wall_time": time.perf_counter() - t0,
    })
    print(f"sweep wrote {len(rows)} rows -> {outdir / 'sweep.tsv'}")
    if not failed:
        return 0
    return 3 if any(r.status.startswith("solver") for r in failed) else 2


def _cmd_random_experiment(ns, outdir: Path) -> int:
    if ns.spec:
        spec_params = load_config(ns.spec)
        spec_params.pop("param", None)
    else:
        spec_params = {}
    spec_params.update(parse_params(ns.param))
    if not spec_params:
        raise SceneError("random-experiment requires --spec or --param settings")
    # reduced-scale defaults: shapes without counts get 200 inclusions total
    if "conductors" not in spec_params and "insulators" not in spec_params:
        if "conductor_shape" in spec_params and "insulator_shape" in spec_params:
            spec_params["conductors"] = spec_params["insulators"] = "100"
        elif "conductor_shape" in spec_params:
            spec_params["conductors"] = "200"
        elif "insulator_shape" in spec_params:
            spec_params["insulators"] = "200"
    total = int(spec_params.get("conductors", 0)) + int(spec_params.get("insulators", 0))
    if total > 500:
        print(f"warning: {total} inclusions per repetition without multipole acceleration "
              "will be slow", file=sys.stderr)
    seeds = [ns.seed + i for i in range(ns.reps)]
    jobs = [(spec_params, s, ns.n, ns.tol) for s in seeds]
    t0 = time.perf_counter()
    results = _run_pool(_experiment_run, jobs, ns.workers)
    ok = [r for r in results if r["status"] == "ok"]
    with open(outdir / "experiments.tsv", "w") as fh:
        fh.write("index\tseed\tlambda_y\tlambda_e\tn\tresidual\tstatus\n")
        for i, r in enumerate(results):
            fh.write(f"{i}\t{r['seed']}\t{r['lambda_y']:.17g}\t{r['lambda_e']:.17g}\t"
                     f"{r['n']}\t{r['residual']:.17g}\t{r['status']}\n")
    lam = [r["lambda_y"] for r in ok]
    entries = {
        "command": "random-experiment",
        "scene": f"random[{','.join(f'{k}={v}' for k, v in sorted(spec_params.items()))}]",
        "status": "ok" if len(ok) == len(results) else f"{len(results) - len(ok)} failed",
        "reps": ns.reps,
        "n": ns.n,
        "lambda_mean": float(np.mean(lam)) if lam else float("nan"),
        "lambda_min": float(np.min(lam)) if lam else float("nan"),
        "lambda_max": float(np.max(lam)) if lam else float("nan"),
        "wall_time": time.perf_counter() - t0,
    }
    write_summary(outdir / "summary.txt", entries)
    print(f"experiments wrote {len(results)} rows -> {outdir / 'experiments.tsv'}")
    if len(ok) == len(results):
        return 0
    return 3 if any(r["status"].startswith("solver") for r in results) else 2


def _scene_from_flags(ns) -> tuple[StripScene, str]:
    sources = [s for s in (ns.scene, ns.example) if s]
    if len(sources) != 1:
        raise SceneError("exactly one scene source required: --scene or --example")
    if ns.scene:
        return read_scene(ns.scene), str(ns.scene)
    params = parse_params(ns.param)
    scene = _build_example(ns.example, params)
    label = ns.example + "(" + ",".join(f"{k}={v}" for k, v in sorted(params.items())) + ")"
    return scene, label


def _grid_spec(text: str | None) -> GridSpec:
    if not text:
        return GridSpec()
    nx, _, ny = text.partition(",")
    return GridSpec(nx=int(nx), ny=int(ny))


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stripbie",
                                description="Boundary-integral solver for strips with "
                                            "conducting and insulating inclusions")
    p.add_argument("command", choices=["solve", "field", "sweep", "random-experiment", "example"])
    p.add_argument("--config", help="key = value file supplying defaults for the flags")
    p.add_argument("--scene", help="scene text file")
    p.add_argument("--example", help="built-in example id, e.g. Ex1-CaseI")
    p.add_argument("--param", action="append", help="k=v parameter (repeatable)")
    p.add_argument("--spec", help="random packing spec file (random-experiment)")
    p.add_argument("--n", type=int, default=None, help=f"nodes per component (default {DEFAULT_N})")
    p.add_argument("--grid", help="nx,ny evaluation grid")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    p.add_argument("--sweep", help="param=start:stop:count")
    p.add_argument("--reps", type=int, default=None, help="experiment repetitions (default 1)")
    p.add_argument("--workers", type=int, default=None, help="parallel workers (default 1)")
    p.add_argument("--tol", type=float, default=None, help="solver tolerance (default 1e-13)")
    return p


_CONFIG_DEFAULTS = {"n": DEFAULT_N, "seed": 0, "reps": 1, "workers": 1, "tol": 1e-13}


def _merge_config(ns) -> None:
    cfg = load_config(ns.config) if ns.config else {"param": []}
    for key, cast in (("scene", str), ("example", str), ("spec", str), ("grid", str),
                      ("sweep", str), ("n", int), ("seed", int), ("reps", int),
                      ("workers", int), ("tol", float)):
        if getattr(ns, key, None) is None and key in cfg:
            setattr(ns, key, cast(cfg[key]))
    if cfg["param"]:
        ns.param = cfg["param"] + (ns.param or [])
    if ns.out == "." and "out" in cfg:
        ns.out = cfg["out"]
    for key, default in _CONFIG_DEFAULTS.items():
        if getattr(ns, key) is None:
            setattr(ns, key, default)


def _validate(ns) -> None:
    if ns.n < 16 or ns.n > 4096 or ns.n & (ns.n - 1):
        raise ValueError(f"--n must be a power of two in [16, 4096], got {ns.n}")
    if ns.reps < 1:
        raise ValueError("--reps must be >= 1")


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        _merge_config(ns)
        _validate(ns)
        outdir = Path(ns.out)
        outdir.mkdir(parents=True, exist_ok=True)
        if ns.command in ("solve", "example"):
            return _cmd_solve(ns, outdir, want_grid=ns.grid is not None)
        if ns.command == "field":
            return _cmd_solve(ns, outdir, want_grid=True)
        if ns.command == "sweep":
            return _cmd_sweep(ns, outdir)
        return _cmd_random_experiment(ns, outdir)
    except ConvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return 3
    except (SceneError, StripBIEError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
