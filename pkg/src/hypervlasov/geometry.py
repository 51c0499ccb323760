"""Kinematics of the backward-hyperboloid foliation.

Every function here is a pure, vectorised numpy map.  Positions and momenta
are dimensionless (unit mass, charge and speed of light).

The two maps ``g_plus_inv`` and ``g_minus_inv`` straighten the null
directions: along ``z = g_plus_inv(x)`` a right-moving wave travels at unit
speed in hyperboloidal time, along ``zeta = g_minus_inv(x)`` a left-moving
one does.  Note ``z * zeta == 1``.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

#: Smallest argument accepted by :func:`g_plus`; below it the map overflows.
Z_FLOOR = 1e-300


def hat(z):
    """Relativistic velocity map ``z / sqrt(1 + z**2)``, componentwise."""
    z = np.asarray(z, dtype=float)
    return z / np.hypot(1.0, z)


def lorentz_factor(p):
    """``sqrt(1 + |p|**2)`` with the momentum components on the last axis."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(1.0 + np.sum(p * p, axis=-1))


def g_plus(z):
    """``(z**2 - 1) / (2 z)`` for ``z > 0``."""
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0.0)):
        raise DomainError("g_plus is defined for z > 0 only")
    z = np.maximum(z, Z_FLOOR)
    return 0.5 * (z - 1.0 / z)


def g_minus(z):
    return -g_plus(z)


def g_plus_prime(z):
    """Derivative ``(1 + z**2) / (2 z**2)``; equals ``1 / (1 + hat(g_plus(z)))``."""
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0.0)):
        raise DomainError("g_plus_prime is defined for z > 0 only")
    z = np.maximum(z, Z_FLOOR)
    return 0.5 * (1.0 + 1.0 / (z * z))


def g_plus_inv(x):
    """``sqrt(1 + x**2) + x`` evaluated without cancellation for ``x < 0``."""
    x = np.asarray(x, dtype=float)
    root = np.hypot(1.0, x)
    with np.errstate(divide="ignore"):
        return np.where(x >= 0.0, root + x, 1.0 / (root - x))


def g_minus_inv(x):
    """``sqrt(1 + x**2) - x``."""
    return g_plus_inv(-np.asarray(x, dtype=float))


def p0_of(x, p):
    """Hyperboloidal energy ``sqrt(1 + |p|**2) + p . hat(x)``.

    ``p`` carries its components on the last axis.  With two components the
    call is the one-and-one-half dimensional form (``x`` scalar per marker,
    only ``p[..., 0]`` pairs with it); with three components ``x`` is a
    3-vector.  Where the two terms nearly cancel the value is taken from the
    identity ``p0 = (gamma**2 - s**2) / (gamma - s)`` whose numerator is a
    sum of positive terms, so the result stays strictly positive.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    gamma = lorentz_factor(p)
    if p.shape[-1] == 2:
        p1, p2 = p[..., 0], p[..., 1]
        s = p1 * hat(x)
        num = 1.0 + p2 * p2 + p1 * p1 / (1.0 + x * x)
    elif p.shape[-1] == 3:
        r2 = np.sum(x * x, axis=-1)
        s = np.sum(p * x, axis=-1) / np.sqrt(1.0 + r2)
        cross = np.cross(p, x)
        num = 1.0 + (np.sum(p * p, axis=-1) + np.sum(cross * cross, axis=-1)) / (1.0 + r2)
    else:
        raise ValueError("momentum must have 2 or 3 components")
    return np.where(s >= 0.0, gamma + s, num / (gamma - s))


def one_plus_phat_xhat(x, p):
    """``1 + hat(p) . hat(x)``, the density of the conserved phase measure."""
    return p0_of(x, p) / lorentz_factor(p)


class Region(Enum):
    OMEGA1 = 1
    OMEGA2 = 2
    OMEGA3 = 3
    OMEGA4 = 4


@dataclass(frozen=True)
class RegionLabel:
    label: Region
    in_vacuum: bool | None = None


def region_index(tau, x):
    """Vectorised region index in ``{1, 2, 3, 4}``.

    The sets are half-open in ``tau`` exactly as the representation formulas
    need them: a point on ``tau == g_plus_inv(x)`` belongs to Omega3/Omega4.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0.0):
        raise DomainError("hyperboloidal time must be non-negative")
    a = g_minus_inv(x)
    b = g_plus_inv(x)
    past_a = tau >= a
    past_b = tau >= b
    idx = np.where(past_a, np.where(past_b, 3, 2), np.where(past_b, 4, 1))
    return idx.astype(int)


def in_vacuum(tau, x, R0):
    """True where ``sqrt(1 + x**2) >= R0 + tau / 2`` (no matter can be there)."""
    return np.hypot(1.0, np.asarray(x, dtype=float)) >= R0 + 0.5 * np.asarray(tau, dtype=float)


def classify_region(tau, x, R0=None):
    """Region label of a single point ``(tau, x)`` with ``tau >= 0``."""
    idx = int(region_index(float(tau), float(x)))
    vac = None if R0 is None else bool(in_vacuum(tau, x, R0))
    return RegionLabel(Region(idx), vac)


def phi_initial_branch(tau, x):
    """True where the right-moving field still sees initial data (Omega1, Omega2)."""
    return np.asarray(tau) < g_plus_inv(x)


def psi_initial_branch(tau, x):
    """True where the left-moving field still sees initial data (Omega1, Omega4)."""
    return np.asarray(tau) < g_minus_inv(x)


@dataclass(frozen=True)
class SurfaceFamily:
    """The slice ``t + (1 - delta) sqrt(1 + |x|**2) = tau``.

    ``delta = 0`` is a backward hyperboloid, ``1`` a constant-time plane,
    ``2`` a forward hyperboloid.
    """

    delta: int
    tau: float

    def __post_init__(self):
        if self.delta not in (0, 1, 2):
            raise DomainError("delta must be 0, 1 or 2")

    def hyperboloidal_time(self, radius):
        """Backward-hyperboloid label of the slice point at distance ``radius``."""
        return self.tau + self.delta * np.hypot(1.0, np.asarray(radius, dtype=float))

    def cartesian_time(self, radius):
        return self.tau - (1 - self.delta) * np.hypot(1.0, np.asarray(radius, dtype=float))
