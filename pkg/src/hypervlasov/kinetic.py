"""Weighted characteristic markers: sampling, pushing and moment deposition.

A marker carries the conserved measure ``(1 + p^ . x^) f dx dp`` as its
weight, so the total hyperboloidal mass is the plain sum of weights and is
constant by construction.  Moments of ``f`` itself are recovered by dividing
each weight by the marker's current ``1 + p^ . x^``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, NonFiniteError, WindowError
from .geometry import lorentz_factor, p0_of

#: Fixed work-unit size; results never depend on the thread count.
CHUNK = 1 << 14


@dataclass
class Markers:
    """Struct-of-arrays marker cloud.

    ``x`` has shape ``(N,)`` in the 1.5D mode and ``(N, 3)`` in the spherical
    mode; ``p`` has shape ``(N, 2)`` or ``(N, 3)``; ``w`` is ``(N,)``.
    """

    x: np.ndarray
    p: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if np.any(self.w < 0):
            raise ValueError("marker weights must be non-negative")

    def __len__(self):
        return self.w.shape[0]

    @property
    def spherical(self):
        return self.x.ndim == 2

    def copy(self):
        return Markers(self.x.copy(), self.p.copy(), self.w.copy())

    def total_weight(self):
        return float(np.sum(self.w))

    def p0(self):
        return p0_of(self.x, self.p)

    def gamma(self):
        return lorentz_factor(self.p)

    def hyperboloidal_radius(self):
        """``sqrt(1 + |x|**2)`` per marker."""
        if self.spherical:
            return np.sqrt(1.0 + np.sum(self.x * self.x, axis=1))
        return np.hypot(1.0, self.x)

    def support_radius(self):
        if len(self) == 0:
            return 1.0
        return float(np.max(self.hyperboloidal_radius()))

    def momentum_support(self):
        """Largest ``sqrt(1 + |p|**2)`` over the cloud."""
        if len(self) == 0:
            return 1.0
        return float(np.max(self.gamma()))

    @classmethod
    def empty(cls, spherical=False):
        if spherical:
            return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))
        return cls(np.zeros(0), np.zeros((0, 2)), np.zeros(0))


def _midpoints(lo, hi, n):
    d = (hi - lo) / n
    return lo + d * (np.arange(n) + 0.5), d


def sample_initial_markers(f_in, phase_box, counts):
    """Tensor-grid midpoint sampling of a 1.5D initial density.

    Parameters
    ----------
    f_in : callable
        ``f_in(x, p1, p2)``, vectorised, non-negative, compactly supported
        inside ``phase_box``.
    phase_box : ((x_lo, x_hi), (p1_lo, p1_hi), (p2_lo, p2_hi))
    counts : (nx, np1, np2)

    Returns
    -------
    markers : Markers
        Zero-weight cells are dropped.
    R0 : float
        ``max sqrt(1 + x**2)`` over the sampled support, i.e. the infimum of
        radii outside which the sampled density vanishes.
    """
    (xl, xh), (al, ah), (bl, bh) = phase_box
    nx, n1, n2 = counts
    xs, dx = _midpoints(xl, xh, nx)
    p1s, d1 = _midpoints(al, ah, n1)
    p2s, d2 = _midpoints(bl, bh, n2)
    X, P1, P2 = np.meshgrid(xs, p1s, p2s, indexing="ij")
    f = np.asarray(f_in(X, P1, P2), dtype=float) * np.ones_like(X)
    if np.any(~np.isfinite(f)):
        raise AdmissibilityError("f_in is not finite on the sampling grid")
    if np.any(f < 0):
        k = np.unravel_index(np.argmin(f), f.shape)
        raise AdmissibilityError(
            f"f_in is negative ({f[k]:.3e}) at x={X[k]:.6g}, p=({P1[k]:.6g}, {P2[k]:.6g})"
        )
    _check_faces(f_in, (xl, xh), (al, ah), (bl, bh), xs, p1s, p2s)
    p = np.stack([P1.ravel(), P2.ravel()], axis=1)
    x = X.ravel()
    w = (p0_of(x, p) / lorentz_factor(p)) * f.ravel() * (dx * d1 * d2)
    keep = w > 0
    markers = Markers(x[keep], p[keep], w[keep])
    return markers, markers.support_radius()


def _check_faces(f_in, xr, ar, br, xs, p1s, p2s):
    faces = []
    for xv in xr:
        A, B = np.meshgrid(p1s, p2s, indexing="ij")
        faces.append(f_in(np.full_like(A, xv), A, B))
    for av in ar:
        X, B = np.meshgrid(xs, p2s, indexing="ij")
        faces.append(f_in(X, np.full_like(X, av), B))
    for bv in br:
        X, A = np.meshgrid(xs, p1s, indexing="ij")
        faces.append(f_in(X, A, np.full_like(X, bv)))
    worst = max(float(np.max(np.abs(np.asarray(v, dtype=float)))) for v in faces)
    if worst > 0.0:
        raise AdmissibilityError(
            f"f_in does not vanish on the phase box boundary (max {worst:.3e})"
        )


def _map_chunks(func, n, threads):
    """Apply ``func(slice)`` over fixed-size chunks; results in chunk order."""
    slices = [slice(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]
    if threads is None or threads <= 1 or len(slices) <= 1:
        return [func(s) for s in slices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, slices))


def characteristic_rhs_1d(x, p, U, phi, psi):
    """Right-hand side of the 1.5D characteristic system in hyperboloidal time."""
    p1, p2 = p[:, 0], p[:, 1]
    gamma = np.sqrt(1.0 + p1 * p1 + p2 * p2)
    p0 = p0_of(x, p)
    dx = p1 / p0
    dp1 = (gamma * U + (phi - psi) * p2) / p0
    dp2 = (phi * (gamma - p1) + psi * (gamma + p1)) / p0
    return dx, np.stack([dp1, dp2], axis=1)


def _sample_1d(fields, tau, x, offset):
    U, phi, psi = fields(tau, x)
    U = np.broadcast_to(np.asarray(U, dtype=float), x.shape)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), x.shape)
    psi = np.broadcast_to(np.asarray(psi, dtype=float), x.shape)
    bad = ~(np.isfinite(U) & np.isfinite(phi) & np.isfinite(psi))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0]) + offset
        raise NonFiniteError(f"non-finite field sampled for marker {i} at tau={tau:.6g}", i)
    return U, phi, psi


def push_markers(markers, fields, tau, dtau, threads=1):
    """One classical RK4 step of the 1.5D characteristics.

    ``fields(tau, x)`` returns ``(U, phi, psi)`` at the given positions.  The
    weights are carried over unchanged.
    """
    n = len(markers)
    x_out = np.empty_like(markers.x)
    p_out = np.empty_like(markers.p)

    def work(sl):
        x = markers.x[sl]
        p = markers.p[sl]
        off = sl.start
        h = dtau
        k1x, k1p = characteristic_rhs_1d(x, p, *_sample_1d(fields, tau, x, off))
        x2, p2 = x + 0.5 * h * k1x, p + 0.5 * h * k1p
        k2x, k2p = characteristic_rhs_1d(x2, p2, *_sample_1d(fields, tau + 0.5 * h, x2, off))
        x3, p3 = x + 0.5 * h * k2x, p + 0.5 * h * k2p
        k3x, k3p = characteristic_rhs_1d(x3, p3, *_sample_1d(fields, tau + 0.5 * h, x3, off))
        x4, p4 = x + h * k3x, p + h * k3p
        k4x, k4p = characteristic_rhs_1d(x4, p4, *_sample_1d(fields, tau + h, x4, off))
        x_out[sl] = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        p_out[sl] = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)

    _map_chunks(work, n, threads)
    return Markers(x_out, p_out, markers.w.copy())


def characteristic_rhs_3d(x, p, e_mag):
    """Spherically symmetric 3D characteristics: radial electric field only."""
    gamma = lorentz_factor(p)
    p0 = p0_of(x, p)
    r = np.sqrt(np.sum(x * x, axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r[:, None] > 0.0, x / r[:, None], 0.0)
    dx = p / p0[:, None]
    dp = (gamma * e_mag / p0)[:, None] * unit
    return dx, dp


def _sample_radial(efield, tau, x, offset):
    r = np.sqrt(np.sum(x * x, axis=1))
    e = np.broadcast_to(np.asarray(efield(tau, r), dtype=float), r.shape)
    bad = ~np.isfinite(e)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0]) + offset
        raise NonFiniteError(f"non-finite field sampled for marker {i} at tau={tau:.6g}", i)
    return np.where(r > 0.0, e, 0.0)


def push_markers_spherical(markers, efield, tau, dtau, threads=1):
    """One RK4 step of the 3D characteristics in a radial field.

    ``efield(tau, r)`` returns the radial component ``|E|(r)``; the vector
    field is ``|E| x / r`` and vanishes at the origin.
    """
    n = len(markers)
    x_out = np.empty_like(markers.x)
    p_out = np.empty_like(markers.p)

    def work(sl):
        x = markers.x[sl]
        p = markers.p[sl]
        off = sl.start
        h = dtau
        k1x, k1p = characteristic_rhs_3d(x, p, _sample_radial(efield, tau, x, off))
        x2, p2 = x + 0.5 * h * k1x, p + 0.5 * h * k1p
        k2x, k2p = characteristic_rhs_3d(x2, p2, _sample_radial(efield, tau + 0.5 * h, x2, off))
        x3, p3 = x + 0.5 * h * k2x, p + 0.5 * h * k2p
        k3x, k3p = characteristic_rhs_3d(x3, p3, _sample_radial(efield, tau + 0.5 * h, x3, off))
        x4, p4 = x + h * k3x, p + h * k3p
        k4x, k4p = characteristic_rhs_3d(x4, p4, _sample_radial(efield, tau + h, x4, off))
        x_out[sl] = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        p_out[sl] = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)

    _map_chunks(work, n, threads)
    return Markers(x_out, p_out, markers.w.copy())


@dataclass(frozen=True)
class XGrid:
    """Uniform node set ``x_i = x_min + i h``, ``i = 0 .. n - 1``."""

    x_min: float
    h: float
    n: int

    @property
    def nodes(self):
        return self.x_min + self.h * np.arange(self.n)

    @property
    def x_max(self):
        return self.x_min + self.h * (self.n - 1)

    @classmethod
    def symmetric(cls, half_width, h):
        m = int(np.ceil(half_width / h))
        return cls(-m * h, h, 2 * m + 1)

    def interp(self, values, x, outside=0.0):
        """Piecewise-linear interpolation of node values; ``outside`` beyond the window."""
        return np.interp(x, self.nodes, values, left=outside, right=outside)


MOMENT_NAMES = ("rho", "j1", "j2", "kin_e", "kin_p", "hyp_density")


@dataclass
class MomentGrid1D:
    """Velocity moments of ``f`` on an :class:`XGrid`.

    ``kin_e`` is the integral of ``sqrt(1 + |p|**2) f``, ``kin_p`` that of
    ``p1 f``; ``hyp_density`` approximates ``rho + j1 x^`` and sums to the
    total weight exactly.
    """

    grid: XGrid
    tau: float
    rho: np.ndarray
    j1: np.ndarray
    j2: np.ndarray
    kin_e: np.ndarray
    kin_p: np.ndarray
    hyp_density: np.ndarray = field(repr=False)

    @classmethod
    def zeros(cls, grid, tau=0.0):
        z = [np.zeros(grid.n) for _ in MOMENT_NAMES]
        return cls(grid, tau, *z)

    def stacked(self):
        return np.stack([getattr(self, k) for k in MOMENT_NAMES])

    @classmethod
    def from_stacked(cls, grid, tau, arr):
        return cls(grid, tau, *[np.array(a) for a in arr])

    def total_charge(self):
        """``sum(hyp_density) * h``; equals the marker weight sum."""
        return float(np.sum(self.hyp_density) * self.grid.h)


def _tent_indices(grid, x):
    s = (x - grid.x_min) / grid.h
    if x.size and (np.min(s) < 0.0 or np.max(s) > grid.n - 1):
        bad = int(np.flatnonzero((s < 0.0) | (s > grid.n - 1))[0])
        raise WindowError(
            f"marker {bad} at x={x[bad]:.6g} outside deposition window "
            f"[{grid.x_min:.6g}, {grid.x_max:.6g}]"
        )
    i = np.minimum(np.floor(s).astype(np.int64), grid.n - 2)
    return i, s - i


def deposit_moments(markers, grid, tau, threads=1):
    """Cloud-in-cell deposition of all 1.5D moments onto ``grid``."""
    n = len(markers)
    if n == 0:
        return MomentGrid1D.zeros(grid, tau)

    def work(sl):
        x = markers.x[sl]
        p = markers.p[sl]
        w = markers.w[sl]
        i, frac = _tent_indices(grid, x)
        gamma = lorentz_factor(p)
        base = w * gamma / p0_of(x, p)
        quantities = (
            base,
            base * p[:, 0] / gamma,
            base * p[:, 1] / gamma,
            base * gamma,
            base * p[:, 0],
            w,
        )
        out = np.empty((len(quantities), grid.n))
        for k, q in enumerate(quantities):
            out[k] = np.bincount(i, q * (1.0 - frac), minlength=grid.n)
            out[k] += np.bincount(i + 1, q * frac, minlength=grid.n)
        return out

    parts = _map_chunks(work, n, threads)
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return MomentGrid1D.from_stacked(grid, tau, total / grid.h)
