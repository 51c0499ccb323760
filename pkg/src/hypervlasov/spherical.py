"""Spherically symmetric 3D solver: radial electric field, no magnetic field."""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import AdmissibilityError, WindowError
from .geometry import lorentz_factor, p0_of
from .kinetic import Markers, _map_chunks, push_markers_spherical

_OCTAHEDRAL = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
)


def _transverse_frame(d):
    """Two unit vectors completing ``d`` to a right-handed orthonormal frame."""
    helper = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(d, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(d, e1)


def sample_spherical_markers(f_in, r_range, p_max, counts, n_azimuth=4, min_angular_momentum=None):
    """Symmetric marker cloud for a density ``f_in(r, |p|, mu)``.

    ``mu`` is the cosine between position and momentum.  Radial, momentum
    magnitude and ``mu`` nodes are midpoints of uniform cells; each node is
    replicated over the six axis directions and ``n_azimuth`` momentum azimuths
    with equal weights, so the cloud has cubic symmetry and no quadrupole.

    Parameters
    ----------
    f_in : callable
        Vectorised, non-negative, vanishing for ``r >= r_range[1]`` or
        ``|p| >= p_max``.
    r_range : (r_lo, r_hi)
    p_max : float
    counts : (n_r, n_p, n_mu)
    min_angular_momentum : float, optional
        Drop nodes with ``r |p| sqrt(1 - mu**2)`` below this floor.

    Returns
    -------
    markers : Markers
    R0 : float
    """
    (r_lo, r_hi), (nr, n_p, nmu) = r_range, counts
    dr = (r_hi - r_lo) / nr
    dp = p_max / n_p
    dmu = 2.0 / nmu
    r = r_lo + dr * (np.arange(nr) + 0.5)
    pm = dp * (np.arange(n_p) + 0.5)
    mu = -1.0 + dmu * (np.arange(nmu) + 0.5)
    R, P, MU = np.meshgrid(r, pm, mu, indexing="ij")
    f = np.asarray(f_in(R, P, MU), dtype=float) * np.ones_like(R)
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise AdmissibilityError("spherical f_in must be finite and non-negative")
    edge = np.asarray(f_in(np.full(3, r_hi), np.full(3, 0.5 * p_max), np.zeros(3)), dtype=float)
    edge_p = np.asarray(f_in(np.full(3, 0.5 * (r_lo + r_hi)), np.full(3, p_max), np.zeros(3)), dtype=float)
    if np.any(edge != 0) or np.any(edge_p != 0):
        raise AdmissibilityError("spherical f_in does not vanish at the sampling box edge")
    n_orient = len(_OCTAHEDRAL) * n_azimuth
    vol = 4.0 * np.pi * R * R * dr * 2.0 * np.pi * P * P * dp * dmu / n_orient
    keep = f > 0
    if min_angular_momentum is not None:
        keep &= R * P * np.sqrt(1.0 - MU * MU) >= min_angular_momentum
    R, P, MU, f, vol = R[keep], P[keep], MU[keep], f[keep], vol[keep]
    sin_mu = np.sqrt(1.0 - MU * MU)
    xs, ps, ws = [], [], []
    for d in _OCTAHEDRAL:
        e1, e2 = _transverse_frame(d)
        for k in range(n_azimuth):
            beta = 2.0 * np.pi * (k + 0.5) / n_azimuth
            t = np.cos(beta) * e1 + np.sin(beta) * e2
            x = R[:, None] * d
            p = P[:, None] * (MU[:, None] * d + sin_mu[:, None] * t)
            xs.append(x)
            ps.append(p)
            ws.append(p0_of(x, p) / lorentz_factor(p) * f * vol)
    if not xs or R.size == 0:
        return Markers.empty(spherical=True), 1.0
    markers = Markers(np.concatenate(xs), np.concatenate(ps), np.concatenate(ws))
    return markers, markers.support_radius()


def angular_momentum(markers):
    """``|x cross p|`` per marker."""
    c = np.cross(markers.x, markers.p)
    return np.sqrt(np.sum(c * c, axis=1))


def quadrupole_anisotropy(markers):
    """Weighted traceless position quadrupole, normalised by ``sum w r**2``."""
    if len(markers) == 0:
        return 0.0
    x, w = markers.x, markers.w
    r2 = np.sum(x * x, axis=1)
    q = np.einsum("n,ni,nj->ij", w, x, x) * 3.0 - np.eye(3) * np.sum(w * r2)
    denom = float(np.sum(w * r2))
    return float(np.max(np.abs(q)) / denom) if denom > 0 else 0.0


@dataclass(frozen=True)
class RadialGrid:
    """Nodes ``r_i = i dr``, ``i = 0 .. n - 1``."""

    dr: float
    n: int

    @property
    def nodes(self):
        return self.dr * np.arange(self.n)

    @property
    def r_max(self):
        return self.dr * (self.n - 1)


@dataclass
class ShellMoments:
    """Shell-averaged moments.

    ``charge`` is the per-node hyperboloidal charge after tent weighting; the
    densities divide by the shell volume ``4 pi r_i**2 dr``.  Charge from the
    innermost cell is assigned to node 1 so the enclosed charge beyond the
    cloud equals the total weight exactly.
    """

    grid: RadialGrid
    tau: float
    charge: np.ndarray
    rho: np.ndarray
    j_r: np.ndarray
    kin_e: np.ndarray
    kin_pr: np.ndarray
    hyp: np.ndarray

    def total_charge(self):
        return float(np.sum(self.charge))


def deposit_shells(markers, grid, tau=0.0, threads=1):
    """Shell-tent deposition of the spherical moments."""
    n = grid.n
    out = np.zeros((5, n))
    if len(markers):

        def work(sl):
            x, p, w = markers.x[sl], markers.p[sl], markers.w[sl]
            r = np.sqrt(np.sum(x * x, axis=1))
            s = r / grid.dr
            if np.max(s) > n - 1:
                k = int(np.argmax(s))
                raise WindowError(
                    f"marker {k + sl.start} at r={r[k]:.6g} beyond r_max={grid.r_max:.6g}"
                )
            i = np.minimum(np.floor(s).astype(np.int64), n - 2)
            frac = s - i
            gamma = lorentz_factor(p)
            base = w * gamma / p0_of(x, p)
            with np.errstate(invalid="ignore", divide="ignore"):
                pr = np.where(r > 0, np.sum(p * x, axis=1) / r, 0.0)
            qs = (w, base, base * pr / gamma, base * gamma, base * pr)
            lo = np.where(i == 0, 1, i)
            part = np.empty((5, n))
            for k, q in enumerate(qs):
                part[k] = np.bincount(lo, q * (1.0 - frac), minlength=n)
                part[k] += np.bincount(i + 1, q * frac, minlength=n)
            return part

        for part in _map_chunks(work, len(markers), threads):
            out += part
    r = grid.nodes
    shell = np.zeros(n)
    shell[1:] = 1.0 / (4.0 * np.pi * r[1:] ** 2 * grid.dr)
    charge, rho, j_r, kin_e, kin_pr = out
    hyp = charge * shell
    if len(markers):
        rad = np.sqrt(np.sum(markers.x ** 2, axis=1))
        inner = float(np.sum(markers.w[rad < grid.dr]))
        hyp[0] = inner / (4.0 / 3.0 * np.pi * grid.dr ** 3)
    return ShellMoments(grid, tau, charge, rho * shell, j_r * shell, kin_e * shell, kin_pr * shell, hyp)


@dataclass
class RadialFieldState:
    """``|E|(r)`` on the radial grid and the enclosed charge it came from."""

    grid: RadialGrid
    tau: float
    shell_density: np.ndarray
    E_mag: np.ndarray
    enclosed: np.ndarray

    @property
    def total_charge(self):
        return float(self.enclosed[-1])

    def E_at(self, r):
        """Radial component at arbitrary radii.

        Linear (odd) interpolation on the first cell, enclosed-charge
        interpolation beyond, and the Coulomb tail past ``r_max``.
        """
        r = np.asarray(r, dtype=float)
        dr = self.grid.dr
        out = np.empty_like(r)
        inner = r < dr
        out[inner] = self.E_mag[1] * r[inner] / dr
        outer = ~inner
        q = np.interp(r[outer], self.grid.nodes, self.enclosed, right=self.enclosed[-1])
        out[outer] = q / (4.0 * np.pi * r[outer] ** 2)
        return out

    def field_energy(self):
        """``int 1/2 |E|**2 dx`` over all space: grid trapezoid plus the Coulomb tail."""
        r = self.grid.nodes
        inner = integrate.trapezoid(0.5 * self.E_mag ** 2 * 4.0 * np.pi * r * r, r)
        Q = self.total_charge
        return float(inner + Q * Q / (8.0 * np.pi * self.grid.r_max))

    def profile_table(self):
        return np.column_stack([self.grid.nodes, self.shell_density, self.E_mag])


def solve_radial_field(shell_density, grid, tau=0.0):
    """``E(r) = r**-2 int_0^r s(r') r'**2 dr'`` by cumulative trapezoid.

    The enclosed charge ``4 pi int_0^r s r'**2 dr'`` is stored alongside, so
    ``E = enclosed / (4 pi r**2)`` and ``E(0) = 0``.
    """
    r = grid.nodes
    s = np.asarray(shell_density, dtype=float)
    if not np.all(np.isfinite(s)):
        raise FloatingPointError("non-finite shell density")
    integrand = 4.0 * np.pi * s * r * r
    enclosed = np.concatenate([[0.0], np.cumsum(0.5 * grid.dr * (integrand[1:] + integrand[:-1]))])
    E = np.zeros_like(r)
    E[1:] = enclosed[1:] / (4.0 * np.pi * r[1:] ** 2)
    return RadialFieldState(grid, tau, s, E, enclosed)


def field_from_markers(markers, grid, tau=0.0, threads=1):
    moments = deposit_shells(markers, grid, tau, threads)
    return moments, solve_radial_field(moments.hyp, grid, tau)


def spherical_energy(markers, fstate):
    """Backward-hyperboloid energy ``sum w gamma + int 1/2 |E|**2``."""
    kinetic = float(np.sum(markers.w * markers.gamma())) if len(markers) else 0.0
    return kinetic + fstate.field_energy()


class SphericalSolver:
    """Predictor-corrector coupling of the spherical pusher and the radial field."""

    def __init__(self, markers, grid, dtau, threads=1, anisotropy_tol=1e-8):
        self.grid = grid
        self.dtau = float(dtau)
        self.threads = threads
        self.anisotropy_tol = anisotropy_tol
        self.tau = 0.0
        self.steps = 0
        self.markers = markers
        self.moments, self.field = field_from_markers(markers, grid, 0.0, threads)

    def step(self):
        tau, dt = self.tau, self.dtau
        old = self.field
        pred = push_markers_spherical(self.markers, lambda t, r: old.E_at(r), tau, dt, self.threads)
        _, guess = field_from_markers(pred, self.grid, tau + dt, self.threads)

        def blended(t, r):
            theta = (t - tau) / dt
            return (1.0 - theta) * old.E_at(r) + theta * guess.E_at(r)

        self.markers = push_markers_spherical(self.markers, blended, tau, dt, self.threads)
        self.steps += 1
        self.tau = self.steps * dt
        self.moments, self.field = field_from_markers(self.markers, self.grid, self.tau, self.threads)
        aniso = quadrupole_anisotropy(self.markers)
        if aniso > self.anisotropy_tol:
            warnings.warn(
                f"spherical symmetry drift: quadrupole anisotropy {aniso:.3e} at tau={self.tau:.6g}",
                stacklevel=2,
            )
        return self
