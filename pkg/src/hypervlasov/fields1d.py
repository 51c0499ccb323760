"""Field components of the 1.5D system.

``U`` is obtained from the Gauss constraint by spatial quadrature.  The null
components ``phi`` (right-moving) and ``psi`` (left-moving) are transported
on their straightened coordinates ``z = g_plus_inv(x)`` and
``zeta = g_minus_inv(x)``, where the transport operator becomes a unit-speed
shift.  With the time step equal to the grid spacing the shift is exact and
only the current source needs quadrature.

Both null components share one implementation: ``psi`` with data
``(psi_in, psi_plus, j2)`` is the right-moving solution for the mirrored data
``(psi_in(-x), psi_plus, j2(-x))`` read at ``-x``.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import (
    AdmissibilityError,
    ConfigurationError,
    HistoryError,
    NeutralityError,
    NonFiniteError,
)
from .geometry import g_plus, g_plus_inv, g_plus_prime, region_index
from .kinetic import XGrid


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _or_zero(func):
    return _zero if func is None else func


class NullField:
    """One null field component on a midpoint grid ``s_k = (k + 1/2) ds``.

    Parameters
    ----------
    ds : float
        Grid spacing in the straightened coordinate; also the time step.
    n : int
        Number of nodes; the grid covers ``[0, n ds]``.
    initial : callable or None
        Initial data as a function of ``x``.
    inflow : callable or None
        Data at past null infinity as a function of ``tau >= 0``.
    mirror : bool
        False for the right-moving component (``s = z``), True for the
        left-moving one (``s = zeta``).
    """

    def __init__(self, ds, n, initial=None, inflow=None, mirror=False, tau=0.0, values=None):
        self.ds = float(ds)
        self.n = int(n)
        self._raw = (initial, inflow)
        self.initial = _or_zero(initial)
        self.inflow = _or_zero(inflow)
        self.mirror = mirror
        self.tau = float(tau)
        self.trivial_initial = initial is None
        if values is None:
            values = self._initial_profile(self.nodes - self.tau)
        self.values = np.asarray(values, dtype=float)

    @property
    def nodes(self):
        return self.ds * (np.arange(self.n) + 0.5)

    @property
    def extent(self):
        return self.ds * self.n

    def x_of(self, s):
        x = g_plus(s)
        return -x if self.mirror else x

    def s_of(self, x):
        x = np.asarray(x, dtype=float)
        return g_plus_inv(-x if self.mirror else x)

    def _initial_profile(self, s):
        """Source-free value carried by the characteristic that starts at ``s`` (may be <= 0)."""
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        pos = s > 0.0
        out[pos] = self.initial(self.x_of(s[pos]))
        out[~pos] = self.inflow(-s[~pos])
        return out

    def with_values(self, values, tau):
        return NullField(self.ds, self.n, *self._raw, self.mirror, tau, values)

    def copy(self):
        return self.with_values(self.values.copy(), self.tau)

    def profile(self, s, tau=None):
        """Value at straightened coordinate ``s`` and time ``tau``.

        Without ``tau`` the stored snapshot is read.  A later ``tau`` uses
        source-free transport from the snapshot, which is exact once the
        characteristic no longer meets any current.
        """
        s = np.asarray(s, dtype=float)
        q = s if tau is None else s - (np.asarray(tau, dtype=float) - self.tau)
        out = np.empty_like(q)
        s0 = 0.5 * self.ds
        s_last = self.nodes[-1]
        before = q <= 0.0
        out[before] = self.inflow(self.tau - q[before])
        first = (q > 0.0) & (q < s0)
        if np.any(first):
            left = self.inflow(np.array([self.tau]))[0]
            out[first] = left + (self.values[0] - left) * q[first] / s0
        mid = (q >= s0) & (q <= s_last)
        out[mid] = np.interp(q[mid], self.nodes, self.values)
        beyond = q > s_last
        out[beyond] = self._initial_profile(q[beyond] - self.tau)
        return out

    def at(self, x, tau=None):
        return self.profile(self.s_of(x), tau)

    def cells_per_step(self, dtau):
        m = int(round(dtau / self.ds))
        if m < 1 or abs(m * self.ds - dtau) > 1e-9 * dtau:
            raise ConfigurationError(
                f"time step {dtau!r} must be a whole multiple of the null-grid spacing {self.ds!r}"
            )
        return m

    def advance(self, j2_start, j2_end, dtau):
        """Shift ``m = dtau / ds`` nodes and add the source along each characteristic.

        ``j2_start(x)`` and ``j2_end(x)`` are the transverse current at the two
        ends of the step; the current is taken linear in time in between.  The
        source integral uses the midpoint rule on sub-intervals of length
        ``ds``, whose midpoints are the cell faces ``s = i ds``, so transport
        stays an exact shift.  Nodes entering through ``s = 0`` take the inflow
        data at their entry time.
        """
        m = self.cells_per_step(dtau)
        faces = self.ds * np.arange(1, self.n)
        x = self.x_of(faces)
        weight = 0.5 * self.ds * g_plus_prime(faces)
        a = np.asarray(j2_start(x), dtype=float)
        b = a if j2_end is j2_start else np.asarray(j2_end(x), dtype=float)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise NonFiniteError(f"non-finite transverse current at tau={self.tau:.6g}")
        a = weight * a
        b = weight * b
        new = np.empty_like(self.values)
        n, m = self.n, min(m, self.n)
        new[m:] = self.values[: n - m]
        new[:m] = self._initial_profile(self.nodes[:m] - (self.tau + dtau))
        # sub-interval l of the step: node j reads face i = j - m + l + 1 (faces start at i = 1)
        j = np.arange(n)
        for l in range(m):
            theta = (l + 0.5) / m
            i = j - m + l + 1
            ok = i >= 1
            src = (1.0 - theta) * a[i[ok] - 1] + theta * b[i[ok] - 1]
            new[ok] -= src
        return self.with_values(new, self.tau + dtau)

    def grid_energy(self):
        """``sum(values**2) ds``: the exact measure ``(1 +- x^) dx`` on this grid."""
        return float(np.sum(self.values * self.values) * self.ds)

    def tail_energy(self):
        """Energy of the source-free initial data beyond the grid's far edge."""
        if self.trivial_initial:
            return 0.0
        lo = self.extent - self.tau

        def integrand(s):
            return float(self.initial(self.x_of(np.array([s])))[0]) ** 2

        val, _ = integrate.quad(integrand, lo, np.inf, limit=200)
        return float(val)

    def edge_value(self):
        """Value at the far (outflow) node, the proxy for the decay limit."""
        return float(self.values[-1])


@dataclass
class FieldState1D:
    """Snapshot of ``U`` on the x-grid and the two null components."""

    tau: float
    xgrid: XGrid
    U: np.ndarray
    phi: NullField
    psi: NullField
    background: np.ndarray = field(repr=False, default=None)

    def U_at(self, x):
        return self.xgrid.interp(self.U, x)

    def phi_at(self, x, tau=None):
        return self.phi.at(x, tau)

    def psi_at(self, x, tau=None):
        return self.psi.at(x, tau)

    def sample(self, x):
        return self.U_at(x), self.phi_at(x), self.psi_at(x)

    def slice_table(self):
        """Columns ``x, U, phi, psi, E2, B`` on the x-grid."""
        x = self.xgrid.nodes
        phi = self.phi_at(x)
        psi = self.psi_at(x)
        return np.column_stack([x, self.U, phi, psi, phi + psi, phi - psi])

    def field_energy(self):
        """Field part of the backward-hyperboloid energy, split into its pieces."""
        u_part = 0.5 * float(integrate.trapezoid(self.U * self.U, dx=self.xgrid.h))
        return {
            "U": u_part,
            "phi": self.phi.grid_energy(),
            "psi": self.psi.grid_energy(),
            "tail": self.phi.tail_energy() + self.psi.tail_energy(),
        }


@dataclass
class InitialDataSet1D:
    """Initial and past-null-infinity data of the 1.5D problem.

    Missing callables mean identically zero data.
    """

    f_in: object = None
    phase_box: tuple = None
    counts: tuple = None
    phi_in: object = None
    psi_in: object = None
    phi_minus: object = None
    psi_plus: object = None
    background_interval: tuple = None
    background_profile: str = "raised_cosine"
    R0: float = 1.0

    def phi_in_f(self, x):
        return _or_zero(self.phi_in)(x)

    def psi_in_f(self, x):
        return _or_zero(self.psi_in)(x)

    def phi_minus_f(self, tau):
        return _or_zero(self.phi_minus)(tau)

    def psi_plus_f(self, tau):
        return _or_zero(self.psi_plus)(tau)


def check_admissibility(data, tol=1e-6, far=1e6):
    """Validate the decay and corner-compatibility conditions.

    Decay of ``phi_in`` at ``+inf`` and of ``psi_in`` at ``-inf`` is required
    (finite energy); a violation raises.  The corner conditions that match
    initial data to the inflow data at ``tau = 0`` only warn: the solver still
    runs, the fields merely lose C1 smoothness across the first null ray.

    Returns the list of warning messages issued.
    """
    issued = []
    end_phi = abs(float(data.phi_in_f(np.array([far]))[0]))
    end_psi = abs(float(data.psi_in_f(np.array([-far]))[0]))
    if end_phi > tol or end_psi > tol:
        raise AdmissibilityError(
            f"initial null fields must vanish on their outflow side (|phi_in(+inf)|={end_phi:.3e}, "
            f"|psi_in(-inf)|={end_psi:.3e})"
        )
    eps = 1e-7
    s = np.array([eps, 2 * eps])
    zero = np.array([0.0, eps])
    pairs = (
        ("phi", lambda q: data.phi_in_f(g_plus(q)), data.phi_minus_f),
        ("psi", lambda q: data.psi_in_f(-g_plus(q)), data.psi_plus_f),
    )
    for name, init_of_s, inflow in pairs:
        vi = init_of_s(s)
        bi = inflow(zero)
        if abs(vi[0] - bi[0]) > tol:
            msg = f"{name}: initial data at the inflow end ({vi[0]:.3e}) differ from inflow data at tau=0 ({bi[0]:.3e})"
            warnings.warn(msg, stacklevel=2)
            issued.append(msg)
        d_init = (vi[1] - vi[0]) / eps
        d_inflow = (bi[1] - bi[0]) / eps
        if abs(d_init + d_inflow) > tol + 10 * eps:
            msg = f"{name}: first-derivative corner mismatch {d_init + d_inflow:.3e}"
            warnings.warn(msg, stacklevel=2)
            issued.append(msg)
    return issued


def null_grid_size(R0_field, tau_end, ds, margin=2.0):
    """Nodes needed so that no sourced characteristic leaves the grid before ``tau_end``."""
    extent = 2.0 * R0_field + tau_end + margin
    if ds >= 1.0 / (2.0 * R0_field + tau_end):
        warnings.warn(
            "null-grid spacing is coarse compared with the inflow-side resolution; "
            "currents far out on the inflow side are under-resolved",
            stacklevel=2,
        )
    return int(np.ceil(extent / ds))


def initial_field_state(data, xgrid, U0, dz, n_null, background=None):
    phi = NullField(dz, n_null, data.phi_in, data.phi_minus, mirror=False)
    psi = NullField(dz, n_null, data.psi_in, data.psi_plus, mirror=True)
    return FieldState1D(0.0, xgrid, np.asarray(U0, dtype=float), phi, psi, background)


def build_neutralizing_background(moments0, profile="raised_cosine", interval=None, min_nodes=5):
    """Background density whose integral cancels the initial hyperboloidal charge.

    Parameters
    ----------
    moments0 : MomentGrid1D
        Moments at ``tau = 0``.
    profile : {"raised_cosine", "initial"}
        ``raised_cosine`` places ``A (1 + cos(2 pi (x - c) / L))`` on
        ``interval``; ``initial`` copies the initial hyperboloidal density so
        that ``U`` starts identically zero.
    interval : (a, b)
        Support of the raised cosine.

    The amplitude is fixed with the same trapezoid rule ``solve_U`` uses, so
    the discrete neutrality residual is at round-off.
    """
    grid = moments0.grid
    x = grid.nodes
    target = float(integrate.trapezoid(moments0.hyp_density, dx=grid.h))
    if target == 0.0:
        return np.zeros(grid.n)
    if profile == "initial":
        return moments0.hyp_density.copy()
    if profile != "raised_cosine":
        raise ConfigurationError(f"unknown background profile {profile!r}")
    if interval is None:
        raise ConfigurationError("raised-cosine background needs an interval")
    a, b = interval
    if not (b > a):
        raise ConfigurationError("background interval must have positive length")
    if a < x[0] or b > x[-1]:
        raise ConfigurationError(
            f"background interval [{a}, {b}] outside the x window [{x[0]:.6g}, {x[-1]:.6g}]"
        )
    c, L = 0.5 * (a + b), b - a
    inside = np.abs(x - c) < 0.5 * L
    if np.count_nonzero(inside) < min_nodes:
        raise ConfigurationError(
            f"background interval [{a}, {b}] holds fewer than {min_nodes} grid nodes"
        )
    shape = np.where(inside, 1.0 + np.cos(2.0 * np.pi * (x - c) / L), 0.0)
    return shape * (target / float(integrate.trapezoid(shape, dx=grid.h)))


def solve_U(moments, background, tol=1e-9):
    """Cumulative trapezoid of ``hyp_density - n`` from the left window edge.

    Raises NeutralityError when ``U`` does not return to zero at the right
    edge within ``tol`` times the source's L1 norm (floor 1).
    """
    h = moments.grid.h
    source = moments.hyp_density - (0.0 if background is None else background)
    U = np.concatenate([[0.0], np.cumsum(0.5 * h * (source[1:] + source[:-1]))])
    scale = max(1.0, float(np.sum(np.abs(source)) * h))
    if abs(U[-1]) > tol * scale:
        raise NeutralityError(
            f"U at the right window edge is {U[-1]:.3e}; the background does not neutralize the plasma"
        )
    return U


def evaluate_representation(which, tau, x, data, j2_history, R0, covered_until=None):
    """Field value from the integral representation along the backward characteristic.

    Parameters
    ----------
    which : {"phi", "psi"}
    tau, x : float
    data : InitialDataSet1D
    j2_history : callable
        ``j2_history(tau, y)`` for scalar arguments.
    R0 : float
        Support radius; the current is taken to vanish where
        ``sqrt(1 + y**2) >= R0 + tau / 2``, which truncates the integral.
    covered_until : float, optional
        Last time at which ``j2_history`` is known.  A characteristic that
        needs later data raises HistoryError.
    """
    if which == "psi":
        mirrored = InitialDataSet1D(
            phi_in=lambda y: data.psi_in_f(-np.asarray(y)),
            phi_minus=data.psi_plus_f,
            R0=R0,
        )
        return evaluate_representation(
            "phi", tau, -x, mirrored, lambda t, y: j2_history(t, -y), R0, covered_until
        )
    if which != "phi":
        raise ValueError("which must be 'phi' or 'psi'")
    if covered_until is not None and tau > covered_until + 1e-12:
        raise HistoryError(
            f"current history ends at tau={covered_until:.6g}; characteristic needs [0, {tau:.6g}]"
        )
    z = float(g_plus_inv(x))
    if region_index(tau, x) in (1, 2):
        base = float(data.phi_in_f(np.array([float(g_plus(z - tau))]))[0])
        lo = float(g_plus(z - tau))
    else:
        base = float(data.phi_minus_f(np.array([tau - z]))[0])
        lo = -np.inf
    reach = R0 + 0.5 * tau
    y_support = np.sqrt(max(reach * reach - 1.0, 0.0))
    lo = max(lo, -y_support)
    hi = min(x, y_support)
    if hi <= lo:
        return base

    def integrand(y):
        t = float(g_plus_inv(y)) - z + tau
        return j2_history(t, y)

    val, _ = integrate.quad(integrand, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-11)
    return base - 0.5 * val
