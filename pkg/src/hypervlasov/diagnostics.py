"""Conservation and radiation functionals of the computed solutions."""
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .errors import HistoryError, WindowError
from .geometry import hat

#: Round-off allowance, in units of machine epsilon times the local scale.
ROUNDOFF_ULPS = 64


@dataclass
class DiagnosticsRecord:
    """One row of the diagnostics stream."""

    tau: float
    N0: float
    M0: float
    N1: float = None
    M1: float = None
    N2: float = None
    M2: float = None
    nirc_flux: float = 0.0
    inflow_energy: float = 0.0
    support_radius: float = None
    support_bound: float = None
    gauss_residual: float = 0.0
    ampere_residual: float = None
    P_max: float = None
    Q_max: float = None
    K: float = None
    dominance_violations: int = 0
    edge_field: float = 0.0

    def to_dict(self):
        return {k: (None if v is None else (int(v) if isinstance(v, (int, np.integer)) else float(v)))
                for k, v in asdict(self).items()}


def energy_density_1d(U, phi, psi, kin_e=0.0, kin_p=0.0):
    """Energy density ``e`` and momentum density ``p`` in null variables.

    ``e = kin_e + U**2 / 2 + phi**2 + psi**2`` and
    ``p = kin_p + phi**2 - psi**2``.
    """
    U, phi, psi = (np.asarray(a, dtype=float) for a in (U, phi, psi))
    e = kin_e + 0.5 * U * U + phi * phi + psi * psi
    p = kin_p + phi * phi - psi * psi
    return e, p


def null_dominance_check(moments, U, phi, psi):
    """Count nodes where ``e +- p >= |j2|`` fails beyond round-off.

    Returns ``(violations, min_margin)``; the margin is the smallest value of
    ``min(e + p, e - p) - |j2|`` over the nodes.
    """
    e, p = energy_density_1d(U, phi, psi, moments.kin_e, moments.kin_p)
    j2 = np.abs(moments.j2)
    margin = np.minimum(e + p, e - p) - j2
    scale = np.maximum(np.abs(e) + np.abs(p) + j2, np.finfo(float).tiny)
    bad = margin < -ROUNDOFF_ULPS * np.finfo(float).eps * scale
    return int(np.count_nonzero(bad)), float(np.min(margin)) if margin.size else 0.0


def compute_N0_M0(markers, fields, mode="onedim"):
    """Backward-hyperboloid mass and energy of a snapshot.

    The mass is the marker weight sum.  The kinetic energy is ``sum w gamma``
    (``w p0 / (1 + p^ . x^) = w gamma``).  In 1.5D the null-field energy is
    the exact grid sum on the straightened coordinates plus the analytic tail
    of initial data beyond the grids; in spherical mode the field energy
    includes the Coulomb tail.
    """
    N0 = markers.total_weight()
    kinetic = float(np.sum(markers.w * markers.gamma())) if len(markers) else 0.0
    if mode == "spherical":
        return N0, kinetic + fields.field_energy()
    parts = fields.field_energy()
    return N0, kinetic + parts["U"] + parts["phi"] + parts["psi"] + parts["tail"]


def gauss_residual(moments, U, background):
    """Max-norm residual of ``dU/dx = hyp_density - n`` on the staggered stencil.

    ``(U[i+1] - U[i]) / h`` is compared with the cell average of the source,
    the pairing under which the trapezoid construction of ``U`` is exact.
    """
    h = moments.grid.h
    s = moments.hyp_density - (0.0 if background is None else background)
    if s.size < 2:
        return 0.0
    r = np.diff(U) / h - 0.5 * (s[1:] + s[:-1])
    return float(np.max(np.abs(r)))


def ampere_residual(U_old, U_new, moments_old, moments_new, dtau):
    """``max |(U_new - U_old) / dtau + j1_mid|``: drift from the evolution form of ``U``."""
    j1 = 0.5 * (moments_old.j1 + moments_new.j1)
    return float(np.max(np.abs((U_new - U_old) / dtau + j1)))


def support_radius(markers):
    return markers.support_radius() if len(markers) else 1.0


def momentum_support(markers):
    return markers.momentum_support()


def _composite_nodes(inner, far=1e8, n_tail=400):
    """Inner uniform nodes extended by geometric tails out to ``+-far``."""
    lo, hi = inner[0], inner[-1]
    right = np.geomspace(max(hi, 1.0), far, n_tail)[1:]
    right = right[right > hi]
    left = -np.geomspace(max(-lo, 1.0), far, n_tail)[1:][::-1]
    left = left[left < lo]
    return np.concatenate([left, inner, right])


def _exhaustion(history, tau, delta, margin):
    markers = history.final_markers
    if markers is None or len(markers) == 0:
        return
    need = tau + delta * float(np.max(markers.hyperboloidal_radius())) + margin
    if history.tau_last < need:
        raise HistoryError(
            f"surface delta={delta} at tau={tau:.6g} still meets matter at the end of the history; "
            f"run until tau >= {need:.6g} (history ends at {history.tau_last:.6g})"
        )


def surface_functionals(history, tau, delta, r_max=None, margin=None):
    """Mass and energy on the surface ``delta`` at time ``tau``.

    Each density is read at hyperboloidal time ``tau + delta sqrt(1 + x**2)``
    by linear interpolation between snapshots.  The radius ``r_max`` (default:
    the full grid) must exhaust the matter, which is checked against the last
    stored marker cloud.

    Returns
    -------
    dict with ``N``, ``M``, ``r`` (evaluation radii), ``n_r`` and ``m_r``
    (cumulative curves ``n_delta(tau, r)`` and ``m_delta(tau, r)`` on the
    matter grid).
    """
    if delta not in (0, 1, 2):
        raise ValueError("delta must be 0, 1 or 2")
    if margin is None:
        margin = 2.0 * (history.taus[1] - history.taus[0]) if len(history) > 1 else 0.0
    _exhaustion(history, tau, delta, margin)
    c = 1 - delta
    if history.mode == "spherical":
        return _surface_spherical(history, tau, delta, c, r_max)
    grid = history.moments[0].grid
    x = grid.nodes
    if r_max is not None:
        x = x[np.abs(x) <= r_max]
    t_node = tau + delta * np.hypot(1.0, x)
    m, U, covered = history.nodal_at(t_node, np.searchsorted(grid.nodes, x))
    rho, j1, _, kin_e, kin_p, _ = m
    xh = hat(x)
    mass_density = np.where(covered, rho + c * j1 * xh, 0.0)
    U = np.where(covered, U, 0.0)
    energy_density = np.where(covered, kin_e + c * kin_p * xh, 0.0) + 0.5 * U * U
    n_r = integrate.cumulative_trapezoid(mass_density, x, initial=0.0)
    m_r = integrate.cumulative_trapezoid(energy_density, x, initial=0.0)
    xf = _composite_nodes(x)
    tf = tau + delta * np.hypot(1.0, xf)
    phi, psi = history.null_fields_at(tf, xf)
    xfh = hat(xf)
    field = phi * phi * (1.0 + c * xfh) + psi * psi * (1.0 - c * xfh)
    field_energy = float(integrate.trapezoid(field, xf))
    return {
        "N": float(n_r[-1]),
        "M": float(m_r[-1]) + field_energy,
        "r": x,
        "n_r": n_r,
        "m_r": m_r,
        "field_energy": field_energy,
    }


def _surface_spherical(history, tau, delta, c, r_max):
    grid = history.moments[0].grid
    r = grid.nodes
    if r_max is not None:
        r = r[r <= r_max]
    t_node = tau + delta * np.hypot(1.0, r)
    covered = t_node <= history.tau_last + 1e-12
    r = r[covered]
    m, E, _ = history.nodal_at(t_node[covered], np.arange(r.size))
    rho, j_r, kin_e, kin_pr, _ = m
    # radial components pair with x^ = x / sqrt(1 + r**2), not the unit vector
    rh = hat(r)
    shell = 4.0 * np.pi * r * r
    n_r = integrate.cumulative_trapezoid((rho + c * j_r * rh) * shell, r, initial=0.0)
    m_r = integrate.cumulative_trapezoid((kin_e + c * kin_pr * rh + 0.5 * E * E) * shell, r, initial=0.0)
    Q = history.fields[0].total_charge
    tail = Q * Q / (8.0 * np.pi * r[-1]) if r[-1] > 0 else 0.0
    return {"N": float(n_r[-1]), "M": float(m_r[-1]) + tail, "r": r, "n_r": n_r, "m_r": m_r,
            "field_energy": tail}


def inflow_energy(phi_minus, psi_plus, taus, ds):
    """Midpoint-rule ``int_0^tau (phi_minus**2 + psi_plus**2)`` at each time in ``taus``.

    ``ds`` is the null-grid spacing; the discrete inflow realises exactly this
    quadrature when every time in ``taus`` is a multiple of ``ds``.
    """
    taus = np.asarray(taus, dtype=float)
    n = int(round(taus[-1] / ds)) if taus.size else 0
    mids = ds * (np.arange(n) + 0.5)
    dens = phi_minus(mids) ** 2 + psi_plus(mids) ** 2 if n else np.zeros(0)
    cum = np.concatenate([[0.0], np.cumsum(dens * ds)])
    idx = np.clip(np.rint(taus / ds).astype(int), 0, n)
    return cum[idx]


def energy_balance_check(taus, M0, inflow, eps=1e-300):
    """Largest relative violation of ``M0(tau) = M0(0) + inflow(tau)``."""
    M0 = np.asarray(M0, dtype=float)
    inflow = np.asarray(inflow, dtype=float)
    M_in = M0[0]
    viol = np.abs(M0 - M_in - inflow) / np.maximum(np.maximum(abs(M_in), np.abs(inflow)), eps)
    return float(np.max(viol)) if viol.size else 0.0


def nirc_flux(history, tau1, tau2, probe_radius, matter_radius=None):
    """Boundary bracket ``int [(phi**2 - psi**2)(-r) - (phi**2 - psi**2)(r)] dtau``.

    Trapezoid over the stored snapshots in ``[tau1, tau2]``.  The probe must
    lie outside the matter: ``matter_radius`` (largest ``sqrt(1 + x**2)`` seen
    over the run) defaults to the final cloud's.
    """
    if history.mode == "spherical":
        return 0.0
    if matter_radius is None:
        matter_radius = support_radius(history.final_markers) if history.final_markers is not None else 1.0
    if np.hypot(1.0, probe_radius) <= matter_radius:
        raise WindowError(
            f"probe radius {probe_radius:.6g} lies inside the matter support "
            f"(sqrt(1+x^2) up to {matter_radius:.6g})"
        )
    f0 = history.fields[0]
    if g_reach(probe_radius) > f0.phi.extent:
        raise WindowError(f"probe radius {probe_radius:.6g} beyond the null grids")
    taus = np.asarray(history.taus)
    sel = (taus >= tau1 - 1e-12) & (taus <= tau2 + 1e-12)
    vals = []
    for k in np.flatnonzero(sel):
        f = history.fields[k]
        xs = np.array([-probe_radius, probe_radius])
        phi = f.phi_at(xs)
        psi = f.psi_at(xs)
        w = phi * phi - psi * psi
        vals.append(w[0] - w[1])
    if len(vals) < 2:
        return 0.0
    return float(integrate.trapezoid(vals, taus[sel]))


def g_reach(r):
    """Straightened coordinate ``sqrt(1 + r**2) + r`` of the probe on its outflow side."""
    return float(np.hypot(1.0, r) + abs(r))


def observed_order(errors, ratio=2.0):
    """Successive convergence orders ``log(e_k / e_{k+1}) / log(ratio)``."""
    e = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(e[:-1] / e[1:]) / np.log(ratio)


def monotone_violation(values, scale):
    """Largest increase of a sequence over its running minimum, relative to ``scale``; 0 if none."""
    v = np.asarray(values, dtype=float)
    if v.size < 2 or not scale:
        return 0.0
    run_min = np.minimum.accumulate(v)
    return max(0.0, float(np.max(v[1:] - run_min[:-1]) / scale))


def warn_truncation(edge_value, tol=1e-8):
    if abs(edge_value) > tol:
        warnings.warn(f"field at the outflow edge is {edge_value:.3e}; energy truncated", stacklevel=2)
