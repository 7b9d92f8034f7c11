"""Render figures from the strip solver's delimited text outputs.

Consumes the solver's field grids, sweep tables and experiment tables purely
through their file formats; nothing here imports the solver.  Rendering is
deterministic: identical inputs produce identical image files.
"""
from __future__ import annotations

import argparse
import sys

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("temperature-contour", "flux-contour", "lambda-curve", "experiment-scatter")

GRID_COLUMNS = ["x", "y", "mask", "T", "qx", "qy"]
SWEEP_COLUMNS = ["param", "value", "c", "phi", "lambda_y", "lambda_e", "n", "residual", "status"]
EXPERIMENT_COLUMNS = ["index", "seed", "lambda_y", "lambda_e", "n", "residual", "status"]


class RenderError(Exception):
    """Input does not match the declared file schemas."""


def _read_rows(path, expected_columns):
    header = None
    rows = []
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            if header is None:
                header = line.split("\t")
                if header != expected_columns:
                    raise RenderError(
                        f"{path}: expected columns {expected_columns}, found {header}")
                continue
            rows.append(line.split("\t"))
    if header is None or not rows:
        raise RenderError(f"{path}: no data rows")
    return rows


def load_grid(path):
    """Field grid reconstructed onto its rectangular lattice."""
    rows = _read_rows(path, GRID_COLUMNS)
    xs = sorted({float(r[0]) for r in rows})
    ys = sorted({float(r[1]) for r in rows})
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    shape = (len(ys), len(xs))
    mask = np.zeros(shape, dtype=bool)
    T = np.full(shape, np.nan)
    qx = np.full(shape, np.nan)
    qy = np.full(shape, np.nan)
    for r in rows:
        i, j = yi[float(r[1])], xi[float(r[0])]
        mask[i, j] = r[2] == "1"
        T[i, j] = float(r[3])
        qx[i, j] = float(r[4])
        qy[i, j] = float(r[5])
    if not mask.any():
        raise RenderError(f"{path}: grid has no interior points")
    return {"x": np.array(xs), "y": np.array(ys), "mask": mask, "T": T, "qx": qx, "qy": qy}


def load_sweep(path):
    rows = _read_rows(path, SWEEP_COLUMNS)
    out = {"value": [], "c": [], "phi": [], "lambda_y": [], "lambda_e": [], "status": []}
    for r in rows:
        out["value"].append(float(r[1]))
        out["c"].append(float(r[2]))
        out["phi"].append(float(r[3]))
        out["lambda_y"].append(float(r[4]))
        out["lambda_e"].append(float(r[5]))
        out["status"].append(r[8])
    return {k: (np.array(v) if k != "status" else v) for k, v in out.items()}


def load_experiments(path):
    rows = _read_rows(path, EXPERIMENT_COLUMNS)
    return {
        "index": np.array([int(r[0]) for r in rows]),
        "lambda_y": np.array([float(r[2]) for r in rows]),
        "lambda_e": np.array([float(r[3]) for r in rows]),
        "status": [r[6] for r in rows],
    }


def _masked(field, mask):
    return np.ma.array(field, mask=~mask)


def _contour(grid, values, out_path, levels, label):
    fig, ax = plt.subplots(figsize=(7.5, 2.8))
    cs = ax.contourf(grid["x"], grid["y"], _masked(values, grid["mask"]),
                     levels=levels, cmap="jet")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.colorbar(cs, ax=ax, label=label, fraction=0.05, pad=0.02)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_temperature_contour(in_path, out_path):
    grid = load_grid(in_path)
    _contour(grid, grid["T"], out_path, np.linspace(0.0, 1.0, 21), "T")


def render_flux_contour(in_path, out_path):
    grid = load_grid(in_path)
    mag = np.hypot(grid["qx"], grid["qy"])
    finite = mag[grid["mask"]]
    levels = np.linspace(0.0, float(np.nanmax(finite)) * 1.0001, 21)
    _contour(grid, mag, out_path, levels, "|q|")


def render_lambda_curve(in_path, out_path, marker=None):
    data = load_sweep(in_path)
    ok = np.array([s == "ok" for s in data["status"]])
    if not ok.any():
        raise RenderError(f"{in_path}: no successful sweep points")
    x = data["c"][ok]
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.plot(x, data["lambda_y"][ok], "b-", lw=1.5, label=r"$\lambda_y$")
    lam_e = data["lambda_e"][ok]
    if np.isfinite(lam_e).any():
        ax.plot(x[np.isfinite(lam_e)], lam_e[np.isfinite(lam_e)], "r--", lw=1.5,
                label=r"$\lambda_e$")
    if marker is not None:
        ax.axvline(marker, color="k", ls=":", lw=1.0)
    ax.set_xlabel("c")
    ax.set_ylabel("effective conductivity")
    ax.legend()
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_experiment_scatter(in_path, out_path):
    data = load_experiments(in_path)
    ok = np.array([s == "ok" for s in data["status"]])
    if not ok.any():
        raise RenderError(f"{in_path}: no successful experiments")
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.plot(data["index"][ok], data["lambda_y"][ok], "bo", ms=5, label=r"$\lambda_y$")
    if np.isfinite(data["lambda_e"][ok]).any():
        ax.plot(data["index"][ok], data["lambda_e"][ok], "r--", lw=1.2, label=r"$\lambda_e$")
    ax.set_xlabel("experiment")
    ax.set_ylabel("effective conductivity")
    ax.legend()
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render(kind: str, in_path: str, out_path: str, marker: float | None = None) -> None:
    if kind == "temperature-contour":
        render_temperature_contour(in_path, out_path)
    elif kind == "flux-contour":
        render_flux_contour(in_path, out_path)
    elif kind == "lambda-curve":
        render_lambda_curve(in_path, out_path, marker)
    elif kind == "experiment-scatter":
        render_experiment_scatter(in_path, out_path)
    else:
        raise RenderError(f"unknown plot kind {kind!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="stripbie-plots",
                                     description="Render figures from solver data files")
    parser.add_argument("--in", dest="in_path", required=True, help="input data file")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--marker", type=float, default=None,
                        help="x position of a vertical dotted marker (lambda-curve)")
    ns = parser.parse_args(argv)
    try:
        render(ns.kind, ns.in_path, ns.out, ns.marker)
    except (RenderError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
