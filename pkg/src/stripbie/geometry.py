"""Strip scenes: inclusions, built-in example geometries, random packings.

A scene is an ordered collection of inclusions living strictly inside the
open strip 0 < Im z < 1, with all perfectly conducting inclusions listed
before all insulating ones.  Boundaries are parametrized clockwise, the
orientation the solver expects for inner curves.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import PackingError, SceneError


class InclusionKind(enum.Enum):
    CONDUCTOR = "conductor"
    INSULATOR = "insulator"


@dataclass(frozen=True)
class Circle:
    center: complex
    r: float

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise SceneError(f"circle radius must be positive and finite, got {self.r}")

    def point(self, t):
        return self.center + self.r * np.exp(-1j * np.asarray(t, dtype=float))

    def tangent(self, t):
        return -1j * self.r * np.exp(-1j * np.asarray(t, dtype=float))

    def contains(self, z) -> bool:
        return abs(complex(z) - self.center) < self.r

    @property
    def area(self) -> float:
        return math.pi * self.r ** 2

    @property
    def circumradius(self) -> float:
        return self.r

    @property
    def x_halfwidth(self) -> float:
        return self.r

    @property
    def y_halfwidth(self) -> float:
        return self.r


@dataclass(frozen=True)
class Ellipse:
    center: complex
    a: float            # semi-axis along the unrotated x direction
    b: float            # semi-axis along the unrotated y direction
    angle: float = 0.0  # counterclockwise rotation of the (a, b) frame

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise SceneError(f"ellipse semi-axes must be positive and finite, got a={self.a}, b={self.b}")

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return self.center + np.exp(1j * self.angle) * (self.a * np.cos(t) - 1j * self.b * np.sin(t))

    def tangent(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * self.angle) * (-self.a * np.sin(t) - 1j * self.b * np.cos(t))

    def contains(self, z) -> bool:
        w = (complex(z) - self.center) * np.exp(-1j * self.angle)
        return (w.real / self.a) ** 2 + (w.imag / self.b) ** 2 < 1.0

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b

    @property
    def circumradius(self) -> float:
        return max(self.a, self.b)

    @property
    def x_halfwidth(self) -> float:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return math.hypot(self.a * c, self.b * s)

    @property
    def y_halfwidth(self) -> float:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return math.hypot(self.a * s, self.b * c)


Shape = Circle | Ellipse


@dataclass(frozen=True)
class Inclusion:
    kind: InclusionKind
    shape: Shape

    @property
    def is_conductor(self) -> bool:
        return self.kind is InclusionKind.CONDUCTOR


def _pair_gap(sa: Shape, sb: Shape, samples: int = 256) -> float:
    """Boundary-to-boundary distance of two shapes; negative on overlap.

    Circle pairs are exact; anything involving an ellipse falls back to
    dense boundary sampling plus containment checks.
    """
    if isinstance(sa, Circle) and isinstance(sb, Circle):
        return abs(sa.center - sb.center) - sa.r - sb.r
    t = 2.0 * np.pi * np.arange(samples) / samples
    pa = sa.point(t)
    pb = sb.point(t)
    if any(sb.contains(p) for p in pa[:: max(1, samples // 32)]) or sb.contains(sa.center):
        return -1.0
    if any(sa.contains(p) for p in pb[:: max(1, samples // 32)]) or sa.contains(sb.center):
        return -1.0
    d = np.abs(pa[:, None] - pb[None, :]).min()
    return float(d)


@dataclass(frozen=True)
class StripScene:
    """Ordered inclusions in the strip; conductors first, then insulators."""

    inclusions: tuple[Inclusion, ...]
    band_halfwidth: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "inclusions", tuple(self.inclusions))
        if not (0.0 < self.band_halfwidth <= 1.0):
            raise SceneError("band_halfwidth must lie in (0, 1]")
        seen_insulator = False
        for i, inc in enumerate(self.inclusions):
            if inc.kind is InclusionKind.INSULATOR:
                seen_insulator = True
            elif seen_insulator:
                raise SceneError(f"inclusion {i} is a conductor listed after an insulator")
            sh = inc.shape
            cy = sh.center.imag
            if not (cy - sh.y_halfwidth > 0.0 and cy + sh.y_halfwidth < 1.0):
                raise SceneError(f"inclusion {i} touches or crosses a wall")
            if abs(sh.center.real) + sh.x_halfwidth > self.band_halfwidth + 1e-12:
                raise SceneError(f"inclusion {i} leaves the band |x| <= {self.band_halfwidth}")
        self._check_overlaps()

    def _check_overlaps(self):
        shapes = [inc.shape for inc in self.inclusions]
        n = len(shapes)
        if n < 2:
            return
        centers = np.array([s.center for s in shapes])
        circ = np.array([s.circumradius for s in shapes])
        d = np.abs(centers[:, None] - centers[None, :])
        bound = d - circ[:, None] - circ[None, :]
        ii, jj = np.triu_indices(n, k=1)
        suspicious = bound[ii, jj] < 0.0
        for i, j in zip(ii[suspicious], jj[suspicious]):
            if _pair_gap(shapes[i], shapes[j]) <= 0.0:
                raise SceneError(f"inclusions {i} and {j} overlap or touch")

    @property
    def m(self) -> int:
        return len(self.inclusions)

    @property
    def n_conductors(self) -> int:
        return sum(1 for inc in self.inclusions if inc.is_conductor)

    @property
    def n_insulators(self) -> int:
        return self.m - self.n_conductors

    def conductor_concentration(self) -> float:
        return sum(inc.shape.area for inc in self.inclusions if inc.is_conductor) / 2.0

    def insulator_concentration(self) -> float:
        return sum(inc.shape.area for inc in self.inclusions if not inc.is_conductor) / 2.0

    def min_gap(self, samples: int = 256) -> float:
        """Smallest boundary-to-boundary distance over all inclusion pairs.

        Returns inf for scenes with fewer than two inclusions.
        """
        shapes = [inc.shape for inc in self.inclusions]
        n = len(shapes)
        if n < 2:
            return math.inf
        centers = np.array([s.center for s in shapes])
        circ = np.array([s.circumradius for s in shapes])
        d = np.abs(centers[:, None] - centers[None, :])
        bound = d - circ[:, None] - circ[None, :]
        ii, jj = np.triu_indices(n, k=1)
        order = np.argsort(bound[ii, jj])
        best = math.inf
        for k in order:
            i, j = ii[k], jj[k]
            if bound[i, j] >= best:
                break
            best = min(best, _pair_gap(shapes[i], shapes[j], samples))
        return best

    def wall_clearance(self) -> float:
        """Smallest distance from any inclusion to either wall."""
        best = math.inf
        for inc in self.inclusions:
            sh = inc.shape
            cy = sh.center.imag
            best = min(best, cy - sh.y_halfwidth, 1.0 - cy - sh.y_halfwidth)
        return best


def reflect_x(scene: StripScene) -> StripScene:
    """Mirror a scene about the vertical axis x = 0."""
    out = []
    for inc in scene.inclusions:
        sh = inc.shape
        c = -sh.center.real + 1j * sh.center.imag
        if isinstance(sh, Circle):
            out.append(Inclusion(inc.kind, Circle(c, sh.r)))
        else:
            out.append(Inclusion(inc.kind, Ellipse(c, sh.a, sh.b, -sh.angle)))
    return StripScene(tuple(out), scene.band_halfwidth)


def reflect_y(scene: StripScene) -> StripScene:
    """Mirror a scene about the strip midline y = 1/2 (swap the walls)."""
    out = []
    for inc in scene.inclusions:
        sh = inc.shape
        c = sh.center.real + 1j * (1.0 - sh.center.imag)
        if isinstance(sh, Circle):
            out.append(Inclusion(inc.kind, Circle(c, sh.r)))
        else:
            out.append(Inclusion(inc.kind, Ellipse(c, sh.a, sh.b, -sh.angle)))
    return StripScene(tuple(out), scene.band_halfwidth)


# ---------------------------------------------------------------------------
# concentrations
# ---------------------------------------------------------------------------

def concentration_circles(m: int, r: float) -> float:
    """Area fraction of m equal circles of radius r inside the unit band."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m and r <= 0:
        raise ValueError("r must be positive")
    return m * r * r * math.pi / 2.0


def concentration_ellipses(m: int, a: float, b: float) -> float:
    """Area fraction of m equal ellipses with semi-axes a, b inside the unit band."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m and (a <= 0 or b <= 0):
        raise ValueError("semi-axes must be positive")
    return m * a * b * math.pi / 2.0


def slit_density(m: int, b: float) -> float:
    """Slit density m b^2 / 2, the relevant load parameter for thin inclusions."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m and b <= 0:
        raise ValueError("b must be positive")
    return m * b * b / 2.0


# ---------------------------------------------------------------------------
# built-in example geometries
# ---------------------------------------------------------------------------

_ROW_X = [-0.9 + 0.2 * k for k in range(10)]

_CASE_I_CENTERS = [-0.8 + 0.5j, -0.4 + 0.5j, 0.5j, 0.4 + 0.5j, 0.8 + 0.5j]
_CASE_II_CENTERS = [-0.8 + 0.5j, -0.4 + 0.3j, 0.5j, 0.4 + 0.7j, 0.8 + 0.5j]


def _require_range(name: str, value: float, lo: float, hi: float):
    if not (lo < value < hi):
        raise ValueError(f"{name} must lie in ({lo}, {hi}), got {value}")


def _circles(centers, r, kind) -> StripScene:
    return StripScene(tuple(Inclusion(kind, Circle(c, r)) for c in centers))


def example_scene(example_id: str, **params) -> StripScene:
    """Return one of the built-in example geometries used by the CLI.

    Supported ids and parameters:
      Ex1-CaseI(r), Ex1-CaseII(r)  five insulating circles, 0 < r < 0.2
      Ex2(r)                       thirty insulating circles, 0 < r < 0.1
      Ex3(r)                       fifty insulating circles, 0 < r < 0.1
      Ex4(a, b)                    five conducting ellipses, 0 < a < 0.2, 0 < b < 0.5
      Ex5(a, b)                    two hundred conducting ellipses, 0 < a, b < 0.05
    """
    ins, con = InclusionKind.INSULATOR, InclusionKind.CONDUCTOR
    if example_id in ("Ex1-CaseI", "Ex1-CaseII"):
        r = float(params["r"])
        _require_range("r", r, 0.0, 0.2)
        centers = _CASE_I_CENTERS if example_id == "Ex1-CaseI" else _CASE_II_CENTERS
        return _circles(centers, r, ins)
    if example_id == "Ex2":
        r = float(params["r"])
        _require_range("r", r, 0.0, 0.1)
        centers = [x + 1j * y for y in (0.25, 0.5, 0.75) for x in _ROW_X]
        return _circles(centers, r, ins)
    if example_id == "Ex3":
        r = float(params["r"])
        _require_range("r", r, 0.0, 0.1)
        centers = [x + 1j * y for y in (0.1, 0.3, 0.5, 0.7, 0.9) for x in _ROW_X]
        return _circles(centers, r, ins)
    if example_id == "Ex4":
        a, b = float(params["a"]), float(params["b"])
        _require_range("a", a, 0.0, 0.2)
        _require_range("b", b, 0.0, 0.5)
        return StripScene(tuple(Inclusion(con, Ellipse(c, a, b)) for c in _CASE_I_CENTERS))
    if example_id == "Ex5":
        a, b = float(params["a"]), float(params["b"])
        _require_range("a", a, 0.0, 0.05)
        _require_range("b", b, 0.0, 0.05)
        centers = [(-0.95 + 0.1 * k) + 1j * (0.05 + 0.1 * j) for j in range(10) for k in range(20)]
        return StripScene(tuple(Inclusion(con, Ellipse(c, a, b)) for c in centers))
    raise ValueError(f"unknown example id {example_id!r}")


EXAMPLE_IDS = ("Ex1-CaseI", "Ex1-CaseII", "Ex2", "Ex3", "Ex4", "Ex5")


# ---------------------------------------------------------------------------
# random packings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomSceneSpec:
    """Recipe for a random non-overlapping packing.

    Shape templates are placed with their centers drawn uniformly over the
    admissible rectangle; template centers are ignored.  When an angle flag
    is set the corresponding ellipses get an independent uniform rotation
    per placement.
    """

    conductors: int = 0
    insulators: int = 0
    conductor_shape: Shape | None = None
    insulator_shape: Shape | None = None
    random_conductor_angle: bool = False
    random_insulator_angle: bool = False
    min_gap: float | None = None
    seed: int = 0
    band_halfwidth: float = 1.0
    max_attempts: int = 100_000

    def resolved_min_gap(self) -> float:
        if self.min_gap is not None:
            return self.min_gap
        radii = []
        for sh in (self.conductor_shape, self.insulator_shape):
            if isinstance(sh, Circle):
                radii.append(sh.r)
            elif isinstance(sh, Ellipse):
                radii.extend((sh.a, sh.b))
        if not radii:
            return 0.0
        return 0.1 * min(radii)


def random_scene(spec: RandomSceneSpec) -> StripScene:
    """Pack the requested inclusions by uniform rejection sampling.

    Deterministic for a fixed spec and seed.  Raises PackingError when the
    requested area is infeasible or an inclusion cannot be placed within
    max_attempts rejections.
    """
    if spec.conductors and spec.conductor_shape is None:
        raise SceneError("conductor count given without a conductor shape")
    if spec.insulators and spec.insulator_shape is None:
        raise SceneError("insulator count given without an insulator shape")
    gap = spec.resolved_min_gap()
    band = spec.band_halfwidth
    total_area = 0.0
    if spec.conductors:
        total_area += spec.conductors * spec.conductor_shape.area
    if spec.insulators:
        total_area += spec.insulators * spec.insulator_shape.area
    if total_area / (2.0 * band) >= 0.6:
        raise PackingError(
            f"requested area fraction {total_area / (2.0 * band):.3f} exceeds the 0.6 packing bound")

    rng = np.random.default_rng(spec.seed)
    placed: list[Inclusion] = []
    centers: list[complex] = []
    circum: list[float] = []

    plan = [(InclusionKind.CONDUCTOR, spec.conductor_shape, spec.random_conductor_angle)] * spec.conductors
    plan += [(InclusionKind.INSULATOR, spec.insulator_shape, spec.random_insulator_angle)] * spec.insulators

    for idx, (kind, template, random_angle) in enumerate(plan):
        margin = template.circumradius + gap
        if band - margin <= -band + margin or margin >= 1.0 - margin:
            raise PackingError(f"{kind.value} inclusion {idx} cannot fit inside the band at all")
        for attempt in range(spec.max_attempts):
            x = rng.uniform(-band + margin, band - margin)
            y = rng.uniform(margin, 1.0 - margin)
            c = complex(x, y)
            if isinstance(template, Ellipse):
                ang = rng.uniform(0.0, np.pi) if random_angle else template.angle
                shape = Ellipse(c, template.a, template.b, ang)
            else:
                shape = Circle(c, template.r)
            ok = True
            if centers:
                d = np.abs(np.asarray(centers) - c)
                close = np.nonzero(d < shape.circumradius + np.asarray(circum) + gap)[0]
                for j in close:
                    if _pair_gap(shape, placed[j].shape) < gap:
                        ok = False
                        break
            if ok:
                placed.append(Inclusion(kind, shape))
                centers.append(c)
                circum.append(shape.circumradius)
                break
        else:
            raise PackingError(
                f"could not place {kind.value} inclusion {idx} after {spec.max_attempts} attempts")

    return StripScene(tuple(placed), band)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def scene_to_text(scene: StripScene) -> str:
    lines = ["# stripbie scene", f"band {scene.band_halfwidth!r}"]
    for inc in scene.inclusions:
        sh = inc.shape
        if isinstance(sh, Circle):
            lines.append(f"{inc.kind.value} circle {sh.center.real!r} {sh.center.imag!r} {sh.r!r}")
        else:
            lines.append(
                f"{inc.kind.value} ellipse {sh.center.real!r} {sh.center.imag!r} "
                f"{sh.a!r} {sh.b!r} {sh.angle!r}")
    return "\n".join(lines) + "\n"


def scene_from_text(text: str) -> StripScene:
    band = 1.0
    inclusions: list[Inclusion] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "band":
                band = float(parts[1])
                continue
            kind = InclusionKind(parts[0])
            if parts[1] == "circle":
                cx, cy, r = map(float, parts[2:5])
                shape: Shape = Circle(complex(cx, cy), r)
            elif parts[1] == "ellipse":
                cx, cy, a, b, ang = map(float, parts[2:7])
                shape = Ellipse(complex(cx, cy), a, b, ang)
            else:
                raise ValueError(f"unknown shape {parts[1]!r}")
        except (ValueError, IndexError) as exc:
            raise SceneError(f"bad scene line {lineno}: {raw!r} ({exc})") from exc
        inclusions.append(Inclusion(kind, shape))
    return StripScene(tuple(inclusions), band)


def write_scene(path, scene: StripScene) -> None:
    with open(path, "w") as fh:
        fh.write(scene_to_text(scene))


def read_scene(path) -> StripScene:
    with open(path) as fh:
        return scene_from_text(fh.read())
