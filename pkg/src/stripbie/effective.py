"""Effective vertical conductivity and dilute-limit reference approximations.

The conductivity of the inclusion-bearing layer follows from the solved
conjugate density alone: the flux integral across the band telescopes to a
difference of the density's trigonometric interpolant at the two outer-wall
pullback parameters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conformal
from .bie import SolveResult
from .errors import DomainError


def trig_interpolate(values: np.ndarray, t):
    """Evaluate the trigonometric interpolant of equispaced periodic samples.

    The samples live on t_j = 2 pi j / n; the interpolant is exact on the
    balanced trigonometric space with the even-order mode treated as a pure
    cosine.
    """
    vals = np.asarray(values)
    n = len(vals)
    tt = np.asarray(t, dtype=float)
    scalar = tt.ndim == 0
    tt = tt.reshape(-1)
    coef = np.fft.fft(vals) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    out = np.zeros(len(tt), dtype=complex)
    for j in range(1, (n + 1) // 2):
        out += coef[j] * np.exp(1j * k[j] * tt) + coef[n - j] * np.exp(1j * k[n - j] * tt)
    out += coef[0]
    if n % 2 == 0:
        out += coef[n // 2] * np.cos(0.5 * n * tt)
    if not np.iscomplexobj(vals):
        out = out.real
    return out.item() if scalar else out


@dataclass(frozen=True)
class EffectiveResult:
    """Vertical conductivity with its density-endpoint ingredients."""

    lambda_y: float
    mu_left: float       # density interpolant where the lower wall crosses x = -1
    mu_right: float      # density interpolant where the lower wall crosses x = +1
    n_used: int
    quality: float       # worst per-component spread of the recovered level constants


def lambda_y(result: SolveResult) -> EffectiveResult:
    """Effective vertical conductivity of the solved layer."""
    mu0 = result.density[0]
    t1, t2 = conformal.lambda_endpoints()
    m1 = float(trig_interpolate(mu0, t1))
    m2 = float(trig_interpolate(mu0, t2))
    return EffectiveResult(
        lambda_y=1.0 + 0.5 * (m2 - m1),
        mu_left=m1,
        mu_right=m2,
        n_used=result.nodes_per_component,
        quality=float(result.level_spread.max()),
    )


def cma_insulators(c: float) -> float:
    """Dilute-limit conductivity (1 - c)/(1 + c) for circular insulators."""
    if not 0.0 <= c < 1.0:
        raise DomainError(f"concentration must lie in [0, 1), got {c}")
    return (1.0 - c) / (1.0 + c)


def cma_conductors(c: float) -> float:
    """Dilute-limit conductivity (1 + c)/(1 - c) for circular conductors."""
    if not 0.0 <= c < 1.0:
        raise DomainError(f"concentration must lie in [0, 1), got {c}")
    return (1.0 + c) / (1.0 - c)


def cma_three_phase(c1: float, c2: float) -> float:
    """Dilute-limit conductivity for mixed conductor (c1) and insulator (c2) phases."""
    if c1 < 0.0 or c2 < 0.0 or c1 + c2 >= 1.0:
        raise DomainError(f"need c1, c2 >= 0 and c1 + c2 < 1, got {c1}, {c2}")
    return (1.0 + c1 - c2) / (1.0 - c1 + c2)


# ---------------------------------------------------------------------------
# sweep tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    c: float
    phi: float
    lambda_y: float
    lambda_e: float
    n: int
    residual: float
    status: str = "ok"


_SWEEP_COLUMNS = ("param", "value", "c", "phi", "lambda_y", "lambda_e", "n", "residual", "status")


def write_sweep_table(path, rows: list[SweepRow]) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(_SWEEP_COLUMNS) + "\n")
        for r in rows:
            fh.write(f"{r.param}\t{r.value:.17g}\t{r.c:.17g}\t{r.phi:.17g}\t"
                     f"{r.lambda_y:.17g}\t{r.lambda_e:.17g}\t{r.n}\t{r.residual:.17g}\t{r.status}\n")


def read_sweep_table(path) -> list[SweepRow]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split("\t")
        if tuple(header) != _SWEEP_COLUMNS:
            raise ValueError(f"unexpected sweep table header: {header}")
        for line in fh:
            p = line.rstrip("\n").split("\t")
            rows.append(SweepRow(p[0], float(p[1]), float(p[2]), float(p[3]),
                                 float(p[4]), float(p[5]), int(p[6]), float(p[7]), p[8]))
    return rows
