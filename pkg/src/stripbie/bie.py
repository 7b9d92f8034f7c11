"""Nystrom discretization and solution of the boundary integral equation.

All boundary components of the computational disk domain are sampled at the
same number of equispaced parameters.  The second-kind integral equation for
the conjugate density is solved matrix-free with GMRES; the only O(N^2)
object is a Cauchy-type interaction sum which is either cached as a block
triangular matrix (the kernel is antisymmetric in its node pair) or rebuilt
tile by tile when it would not fit in memory.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import conformal
from .errors import ConvergenceError, ResolutionError
from .geometry import StripScene

_DEFAULT_CACHE_BYTES = 3.0e9


@dataclass(frozen=True, eq=False)
class MappedBoundary:
    """Sampled parametrization of all boundary components in the disk domain.

    Row 0 is the unit circle traversed counterclockwise; rows 1..m are the
    disk images of the inclusion boundaries, traversed clockwise.
    """

    params: np.ndarray      # (n,) equispaced parameters in [0, 2 pi)
    eta: np.ndarray         # (m+1, n) complex node positions
    deta: np.ndarray        # (m+1, n) complex parameter derivatives
    aux_point: complex      # interior anchor point of the disk domain

    @property
    def nodes_per_component(self) -> int:
        return self.eta.shape[1]

    @property
    def n_components(self) -> int:
        return self.eta.shape[0]

    @property
    def eta_flat(self) -> np.ndarray:
        return self.eta.reshape(-1)

    @property
    def deta_flat(self) -> np.ndarray:
        return self.deta.reshape(-1)


@dataclass(frozen=True, eq=False)
class RHPData:
    """Coefficient, phase and known boundary data of the reduced problem."""

    phase: np.ndarray           # (m+1,) 0 for Dirichlet-type rows, pi/2 for Neumann-type
    coeff: np.ndarray           # (m+1, n) complex exp(-i phase) (eta - aux)
    boundary_data: np.ndarray   # (m+1, n) real

    @property
    def n_conductors(self) -> int:
        return int(np.sum(self.phase[1:] == 0.0))


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Solution of the integral equation on the sampled boundary."""

    density: np.ndarray          # (m+1, n) real conjugate density
    levels: np.ndarray           # (m+1,) per-component constant of the level function
    level_spread: np.ndarray     # (m+1,) node-wise std of the level function (quality)
    anchor: float                # real value of the mapped potential at the aux point
    inclusion_consts: np.ndarray  # (m,) temperature (conductors) / stream constant (insulators)
    g_boundary: np.ndarray       # (m+1, n) complex
    f_boundary: np.ndarray       # (m+1, n) complex
    iterations: int
    residual: float

    @property
    def nodes_per_component(self) -> int:
        return self.density.shape[1]


def _fft_derivative(vals: np.ndarray) -> np.ndarray:
    """Spectral derivative of 2 pi periodic samples along the last axis."""
    n = vals.shape[-1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = 1j * k
    if n % 2 == 0:
        mult[n // 2] = 0.0
    return np.fft.ifft(np.fft.fft(vals, axis=-1) * mult, axis=-1)


def _conjugation_multiplier(n: int) -> np.ndarray:
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = -1j * np.sign(k)
    if n % 2 == 0:
        mult[n // 2] = 0.0
    return mult


def discretize(scene: StripScene, n: int) -> MappedBoundary:
    """Sample all boundary components of the disk domain at n nodes each."""
    if n < 16 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 16, got {n}")
    t = 2.0 * np.pi * np.arange(n) / n
    ncomp = scene.m + 1
    eta = np.empty((ncomp, n), dtype=complex)
    deta = np.empty((ncomp, n), dtype=complex)
    eta[0] = np.exp(1j * t)
    deta[0] = 1j * eta[0]
    for k, inc in enumerate(scene.inclusions, start=1):
        z = inc.shape.point(t)
        eta[k] = conformal.strip_to_disk(z)
        deta[k] = conformal.strip_to_disk_deriv(z) * inc.shape.tangent(t)

    gaps = np.abs(eta - np.roll(eta, -1, axis=1))
    if gaps.min() < 1e-12:
        k = int(np.unravel_index(np.argmin(gaps), gaps.shape)[0])
        raise ResolutionError(f"node spacing collapsed on component {k}; inclusion image degenerate")

    w = 2.0 * np.pi / n
    for k in range(ncomp):
        z0 = 0.0 if k == 0 else conformal.strip_to_disk(scene.inclusions[k - 1].shape.center)
        wind = (w / (2j * np.pi)) * np.sum(deta[k] / (eta[k] - z0))
        expected = 1.0 if k == 0 else -1.0
        if abs(wind - expected) > 0.1:
            raise ResolutionError(f"orientation check failed on component {k}: winding {wind:.3f}")

    aux = _choose_aux_point(scene, eta, deta, n)
    return MappedBoundary(params=t, eta=eta, deta=deta, aux_point=aux)


def _choose_aux_point(scene: StripScene, eta, deta, n) -> complex:
    b = scene.band_halfwidth
    candidates = [0.5 * b + 0.25j, 0.5 * b + 0.75j, -0.5 * b + 0.25j, -0.5 * b + 0.75j,
                  0.5j, 1.3 + 0.5j, -1.3 + 0.5j]
    # a candidate is under-resolved relative to a component when it sits
    # closer than that component's own node spacing
    spacing = 2.0 * np.pi * np.abs(deta).max(axis=1) / n
    best, best_dist, best_ratio = None, -1.0, -1.0
    for z in candidates:
        if any(inc.shape.contains(z) for inc in scene.inclusions):
            continue
        zeta = conformal.strip_to_disk(z)
        dists = np.abs(eta - zeta).min(axis=1)
        ratio = float((dists / spacing).min())
        best_ratio = max(best_ratio, ratio)
        if ratio >= 1.0 and dists.min() > best_dist:
            best, best_dist = zeta, float(dists.min())
    if best is None:
        raise ResolutionError(
            f"no auxiliary point clears the node spacing of every component "
            f"(best clearance ratio {best_ratio:.2f}); increase n or thin out the scene")
    return complex(best)


def build_rhp(boundary: MappedBoundary, scene: StripScene) -> RHPData:
    """Assemble the coefficient, phase and known boundary data arrays."""
    ncomp = boundary.n_components
    if ncomp != scene.m + 1:
        raise ValueError("boundary and scene disagree on the number of components")
    ell = scene.n_conductors
    phase = np.zeros(ncomp)
    phase[ell + 1:] = 0.5 * np.pi
    coeff = np.exp(-1j * phase)[:, None] * (boundary.eta - boundary.aux_point)
    ratio = (1.0 - boundary.eta) / (1.0 + boundary.eta)
    data = np.zeros((ncomp, boundary.nodes_per_component))
    if ell:
        data[1:ell + 1] = -np.log(ratio[1:ell + 1]).imag / np.pi
    if ncomp > ell + 1:
        data[ell + 1:] = np.log(np.abs(ratio[ell + 1:])) / np.pi
    return RHPData(phase=phase, coeff=coeff, boundary_data=data)


class _CauchySums:
    """S_i = sum_{j != i} q_j / (eta_j - eta_i) over all flattened nodes.

    Exploits antisymmetry of the node-pair kernel: only the upper block
    triangle is ever formed.  Blocks are kept when the total fits in the
    cache budget, otherwise they are recomputed tile by tile per apply.
    """

    def __init__(self, eta_flat: np.ndarray, cache_bytes: float | None = None, block: int = 1024):
        self.eta = np.ascontiguousarray(eta_flat)
        self.n_total = len(eta_flat)
        self.block = block
        if cache_bytes is None:
            cache_bytes = float(os.environ.get("STRIPBIE_CACHE_BYTES", _DEFAULT_CACHE_BYTES))
        need = 8.0 * self.n_total ** 2 + 16.0 * self.n_total * block
        self._blocks = self._build() if need <= cache_bytes else None

    def _make_block(self, i0, i1, j0, j1):
        C = self.eta[None, j0:j1] - self.eta[i0:i1, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            np.reciprocal(C, out=C)
        if i0 == j0:
            np.fill_diagonal(C, 0.0)
        return C

    def _build(self):
        blocks = []
        for i0 in range(0, self.n_total, self.block):
            i1 = min(i0 + self.block, self.n_total)
            for j0 in range(i0, self.n_total, self.block):
                j1 = min(j0 + self.block, self.n_total)
                blocks.append((i0, i1, j0, j1, self._make_block(i0, i1, j0, j1)))
        return blocks

    @property
    def cached(self) -> bool:
        return self._blocks is not None

    def apply(self, q: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_total, dtype=complex)
        if self._blocks is not None:
            for i0, i1, j0, j1, C in self._blocks:
                out[i0:i1] += C @ q[j0:j1]
                if j0 > i0:
                    out[j0:j1] -= q[i0:i1] @ C
            return out
        for i0 in range(0, self.n_total, self.block):
            i1 = min(i0 + self.block, self.n_total)
            for j0 in range(i0, self.n_total, self.block):
                j1 = min(j0 + self.block, self.n_total)
                C = self._make_block(i0, i1, j0, j1)
                out[i0:i1] += C @ q[j0:j1]
                if j0 > i0:
                    out[j0:j1] -= q[i0:i1] @ C
        return out


class NystromOperators:
    """Trapezoidal-rule discretization of the two boundary operators.

    The first operator has a continuous kernel and is applied as a plain
    quadrature sum with its diagonal limit.  The second is singular on the
    diagonal; per component the half-angle cotangent part is applied by
    spectral conjugation (exact on the trigonometric space) and only the
    continuous remainder goes through the quadrature sum.
    """

    def __init__(self, rhp: RHPData, boundary: MappedBoundary, cache_bytes: float | None = None):
        self.boundary = boundary
        self.rhp = rhp
        n = boundary.nodes_per_component
        self.n = n
        self.ncomp = boundary.n_components
        self.weight = 2.0 * np.pi / n
        eta = boundary.eta_flat
        deta = boundary.deta_flat
        self.coeff = rhp.coeff.reshape(-1)
        self.q_factor = (self.weight / np.pi) * deta / self.coeff
        dd = _fft_derivative(boundary.deta)
        diag = dd / (2.0 * boundary.deta) - boundary.deta / (boundary.eta - boundary.aux_point)
        self.diag_n = (self.weight / np.pi) * diag.imag.reshape(-1)
        self.diag_m = (self.weight / np.pi) * diag.real.reshape(-1)
        self.sums = _CauchySums(eta, cache_bytes)
        self._conj_mult = _conjugation_multiplier(n)
        col = np.zeros(n)
        col[1:] = 1.0 / np.tan(np.pi * np.arange(1, n) / n)
        self._cot_fft = np.fft.fft(col) * (self.weight / (2.0 * np.pi))

    def apply_n(self, density: np.ndarray) -> np.ndarray:
        mu = density.reshape(-1)
        sums = self.sums.apply(self.q_factor * mu)
        return (self.coeff * sums).imag + self.diag_n * mu

    def apply_m(self, density: np.ndarray) -> np.ndarray:
        mu = density.reshape(-1)
        sums = self.sums.apply(self.q_factor * mu)
        out = (self.coeff * sums).real + self.diag_m * mu
        rows = np.fft.fft(mu.reshape(self.ncomp, self.n), axis=1)
        cot_part = np.fft.ifft(rows * self._cot_fft[None, :], axis=1).real
        conj_part = np.fft.ifft(rows * self._conj_mult[None, :], axis=1).real
        out += (cot_part - conj_part).reshape(-1)
        return out


def apply_N(rhp: RHPData, boundary: MappedBoundary, density: np.ndarray) -> np.ndarray:
    """One-shot application of the continuous-kernel operator to a density."""
    out = NystromOperators(rhp, boundary).apply_n(np.asarray(density, dtype=float))
    return out.reshape(np.asarray(density).shape)


def apply_M(rhp: RHPData, boundary: MappedBoundary, density: np.ndarray) -> np.ndarray:
    """One-shot application of the singular operator to a density."""
    out = NystromOperators(rhp, boundary).apply_m(np.asarray(density, dtype=float))
    return out.reshape(np.asarray(density).shape)


def solve_ie(rhp: RHPData, boundary: MappedBoundary, *, tol: float = 1e-13,
             maxiter: int = 200, cache_bytes: float | None = None,
             operators: NystromOperators | None = None) -> SolveResult:
    """Solve the integral equation and recover all boundary unknowns."""
    ops = operators if operators is not None else NystromOperators(rhp, boundary, cache_bytes)
    gamma = rhp.boundary_data.reshape(-1)
    rhs = -ops.apply_m(gamma)
    size = gamma.size
    history: list[float] = []
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        mu = np.zeros(size)
        iterations = 0
        residual = 0.0
    else:
        op = LinearOperator((size, size), matvec=lambda x: x - ops.apply_n(x), dtype=float)
        mu, info = gmres(op, rhs, rtol=tol, atol=0.0, restart=maxiter, maxiter=1,
                         callback=lambda pr: history.append(float(pr)),
                         callback_type="pr_norm")
        if info != 0:
            raise ConvergenceError(
                f"GMRES did not reach rtol {tol:g} within {maxiter} iterations", history)
        iterations = len(history)
        residual = float(np.linalg.norm(mu - ops.apply_n(mu) - rhs) / rhs_norm)

    level_nodes = 0.5 * (ops.apply_m(mu) - (gamma - ops.apply_n(gamma)))
    level_rows = level_nodes.reshape(ops.ncomp, ops.n)
    levels = level_rows.mean(axis=1)
    spread = level_rows.std(axis=1)
    anchor = -float(levels[0])

    ell = rhp.n_conductors
    consts = np.empty(ops.ncomp - 1)
    consts[:ell] = levels[1:ell + 1] + 0.5 + anchor
    consts[ell:] = levels[ell + 1:]

    g = ((gamma + np.repeat(levels, ops.n) + 1j * mu) / ops.coeff).reshape(ops.ncomp, ops.n)
    f = (boundary.eta - boundary.aux_point) * g + anchor
    return SolveResult(
        density=mu.reshape(ops.ncomp, ops.n),
        levels=levels,
        level_spread=spread,
        anchor=anchor,
        inclusion_consts=consts,
        g_boundary=g,
        f_boundary=f,
        iterations=iterations,
        residual=residual,
    )
