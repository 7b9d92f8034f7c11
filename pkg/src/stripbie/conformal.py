"""Closed-form conformal maps between the strip 0 < Im z < 1 and the unit disk.

The disk-to-strip map and its inverse, their derivatives, the singular
harmonic part of the wall data, and the two wall-pullback parameters used
by the effective-conductivity formula are all elementary functions; this
module evaluates them with stable branches and overflow clamping so that
field grids extending well beyond the inclusion band stay finite.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularityError

# beyond this, tanh(x) is 1 to double precision and the map is clamped
_CLAMP = 30.0


def _as_complex_array(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return arr.item() if scalar else arr


def strip_to_disk(z):
    """Map points of the closed strip 0 <= Im z <= 1 into the closed unit disk.

    The interior maps to the open disk, the real axis to the lower unit
    semicircle, the line Im z = 1 to the upper semicircle, and the two ends
    Re z -> +-inf to the points +-1.
    """
    arr, scalar = _as_complex_array(z)
    y = arr.imag
    if np.any(y < -1e-15) or np.any(y > 1 + 1e-15):
        raise DomainError("strip_to_disk requires 0 <= Im z <= 1")
    w = 0.5 * np.pi * arr - 0.25j * np.pi
    out = np.empty_like(arr)
    big = np.abs(w.real) > _CLAMP
    out[big] = np.sign(w.real[big])
    out[~big] = np.tanh(w[~big])
    return _ret(out, scalar)


def strip_to_disk_deriv(z):
    """Derivative of the strip-to-disk map: (pi/2) (1 - strip_to_disk(z)^2)."""
    arr, scalar = _as_complex_array(z)
    zeta = np.asarray(strip_to_disk(arr))
    return _ret(0.5 * np.pi * (1.0 - zeta * zeta), scalar)


def disk_to_strip(zeta):
    """Map points of the unit disk onto the strip 0 < Im z < 1.

    Boundary points are allowed except the two singular points +-1 where
    the image escapes to infinity.
    """
    arr, scalar = _as_complex_array(zeta)
    if np.any(np.abs(arr - 1.0) < 1e-14) or np.any(np.abs(arr + 1.0) < 1e-14):
        raise SingularityError("disk_to_strip is singular at zeta = +-1")
    out = np.log((1.0 + arr) / (1.0 - arr)) / np.pi + 0.5j
    return _ret(out, scalar)


def disk_to_strip_deriv(zeta):
    """Derivative of the disk-to-strip map: 2 / (pi (1 - zeta^2))."""
    arr, scalar = _as_complex_array(zeta)
    if np.any(np.abs(arr - 1.0) < 1e-14) or np.any(np.abs(arr + 1.0) < 1e-14):
        raise SingularityError("disk_to_strip_deriv is singular at zeta = +-1")
    return _ret(2.0 / (np.pi * (1.0 - arr * arr)), scalar)


def f0_and_derivative(zeta):
    """Singular part of the disk-domain potential and its derivative.

    Returns the pair (f0, f0') where f0 carries the discontinuous wall data:
    its real part is 1 on the lower unit semicircle and 0 on the upper one.
    The principal log branch is used; (1 - zeta)/(1 + zeta) maps the disk
    into the right half plane, so the branch cut is never crossed.
    """
    arr, scalar = _as_complex_array(zeta)
    if np.any(np.abs(arr - 1.0) < 1e-14) or np.any(np.abs(arr + 1.0) < 1e-14):
        raise SingularityError("f0 is singular at zeta = +-1")
    val = np.log((1.0 - arr) / (1.0 + arr)) / (np.pi * 1j) + 0.5
    der = (1j / np.pi) * (1.0 / (1.0 - arr) + 1.0 / (1.0 + arr))
    return _ret(val, scalar), _ret(der, scalar)


def lambda_endpoints() -> tuple[float, float]:
    """Parameters on the lower unit semicircle whose wall images are -1 and +1.

    Both lie in (pi, 2 pi); they bound the wall segment over which the
    vertical flux is integrated for the effective conductivity.
    """
    t1 = 2.0 * np.pi - 2.0 * np.arctan(np.exp(np.pi))
    t2 = 2.0 * np.pi - 2.0 * np.arctan(np.exp(-np.pi))
    return t1, t2


def wall_pullback(t):
    """Wall position x = Re(disk_to_strip(e^{it})) for pi < t < 2 pi."""
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    if np.any(arr <= np.pi) or np.any(arr >= 2.0 * np.pi):
        raise DomainError("wall_pullback requires pi < t < 2 pi")
    out = np.log(np.abs(1.0 / np.tan(arr / 2.0))) / np.pi
    return _ret(out, scalar)
