"""Coupled time loops, run-level checks, refinement studies and output writing."""
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import io
from .diagnostics import (
    DiagnosticsRecord,
    ampere_residual,
    compute_N0_M0,
    energy_balance_check,
    gauss_residual,
    inflow_energy,
    null_dominance_check,
    monotone_violation,
    nirc_flux,
    observed_order,
    surface_functionals,
)
from .errors import ConfigurationError, HistoryError
from .fields1d import (
    FieldState1D,
    build_neutralizing_background,
    check_admissibility,
    evaluate_representation,
    initial_field_state,
    null_grid_size,
    solve_U,
)
from .history import SolutionHistory
from .kinetic import XGrid, deposit_moments, push_markers
from .scenarios import build_problem
from .spherical import RadialGrid, SphericalSolver, angular_momentum, spherical_energy


def _zero_fields(t, x):
    z = np.zeros_like(x)
    return z, z, z


class OneDimSolver:
    """Predictor-corrector coupling of markers, ``U`` and the null fields.

    One step: push with the fields frozen at ``tau``, deposit, advance the
    fields to a predicted state, push again from ``tau`` with fields linear in
    time between the old and predicted states, then deposit and advance the
    fields with the corrected current.  ``picard_sweeps > 1`` repeats the
    corrector with the latest state as the new prediction.
    """

    def __init__(self, problem, threads=1):
        cfg = problem.config
        self.cfg = cfg
        self.data = problem.data
        self.threads = threads
        self.dtau = cfg.dtau
        self.self_fields = cfg.self_fields
        R0 = problem.R0
        reach = R0 + 0.5 * cfg.tau_end
        half = max(reach, abs(cfg.background_a), abs(cfg.background_b)) + cfg.window_margin
        self.xgrid = XGrid.symmetric(half, cfg.h)
        n_null = null_grid_size(R0 + 2 * cfg.h, cfg.tau_end, cfg.dz, cfg.window_margin)
        self.admissibility_warnings = check_admissibility(self.data, cfg.tol_admissibility)
        self.tau = 0.0
        self.steps = 0
        self.markers = problem.markers
        self.moments = deposit_moments(self.markers, self.xgrid, 0.0, threads)
        if self.self_fields:
            self.background = build_neutralizing_background(
                self.moments, self.data.background_profile, self.data.background_interval
            )
            U0 = solve_U(self.moments, self.background)
        else:
            self.background = np.zeros(self.xgrid.n)
            U0 = np.zeros(self.xgrid.n)
        self.fields = initial_field_state(self.data, self.xgrid, U0, cfg.dz, n_null, self.background)
        self.fields.phi.cells_per_step(self.dtau)

    def _sampler(self, old, new=None):
        if not self.self_fields:
            return _zero_fields
        if new is None:
            return lambda t, x: old.sample(x)
        tau, dt = old.tau, self.dtau

        def blended(t, x):
            th = (t - tau) / dt
            ua, pa, sa = old.sample(x)
            ub, pb, sb = new.sample(x)
            return (1 - th) * ua + th * ub, (1 - th) * pa + th * pb, (1 - th) * sa + th * sb

        return blended

    def _advance_fields(self, old_moments, new_moments):
        grid, dt = self.xgrid, self.dtau
        f = self.fields
        if self.self_fields:

            def j2_start(x):
                return grid.interp(old_moments.j2, x)

            def j2_end(x):
                return grid.interp(new_moments.j2, x)

            U = solve_U(new_moments, self.background)
        else:

            def j2_start(x):
                return np.zeros_like(x)

            j2_end = j2_start
            U = np.zeros(grid.n)
        return FieldState1D(
            (self.steps + 1) * dt,
            grid,
            U,
            f.phi.advance(j2_start, j2_end, dt),
            f.psi.advance(j2_start, j2_end, dt),
            self.background,
        )

    def step(self):
        tau, dt = self.tau, self.dtau
        old_fields, old_moments = self.fields, self.moments
        guess = push_markers(self.markers, self._sampler(old_fields), tau, dt, self.threads)
        new_moments = deposit_moments(guess, self.xgrid, tau + dt, self.threads)
        new_fields = self._advance_fields(old_moments, new_moments)
        for _ in range(max(1, self.cfg.picard_sweeps)):
            markers = push_markers(self.markers, self._sampler(old_fields, new_fields), tau, dt, self.threads)
            new_moments = deposit_moments(markers, self.xgrid, tau + dt, self.threads)
            new_fields = self._advance_fields(old_moments, new_moments)
        self.markers, self.moments, self.fields = markers, new_moments, new_fields
        self.steps += 1
        self.tau = self.steps * dt
        return self


@dataclass
class RunResult:
    config: object
    R0: float
    history: SolutionHistory
    records: list
    summary: dict = field(default_factory=dict)
    solver: object = None


def _check(value, threshold, passed=None, note=None):
    ok = bool(value <= threshold) if passed is None else bool(passed)
    out = {"value": None if value is None else float(value), "threshold": float(threshold), "pass": ok}
    if note:
        out["note"] = note
    return out


class _Monitor:
    """Running sups for the momentum-support and field-bound monitors."""

    def __init__(self):
        self.P = 0.0
        self.K = 0.0
        self.Q = 0.0

    def update(self, markers, field_sup):
        self.K = max(self.K, field_sup)
        if len(markers):
            g = markers.gamma()
            self.P = max(self.P, float(np.max(g)))
            self.Q = max(self.Q, float(np.max(g + self.K * markers.hyperboloidal_radius())))
        return self.P, self.Q, self.K


def run_onedim(problem, threads=1):
    cfg = problem.config
    solver = OneDimSolver(problem, threads)
    steps = int(round(cfg.tau_end / solver.dtau))
    history = SolutionHistory("onedim", keep_markers=cfg.output_every)
    monitor = _Monitor()
    records = []

    def record(prev=None):
        s = solver
        N0, M0 = compute_N0_M0(s.markers, s.fields)
        x = s.xgrid.nodes
        phi, psi = s.fields.phi_at(x), s.fields.psi_at(x)
        viol, _ = null_dominance_check(s.moments, s.fields.U, phi, psi)
        field_sup = float(np.max(np.abs(s.fields.U), initial=0.0) + np.max(np.abs(s.fields.phi.values))
                          + np.max(np.abs(s.fields.psi.values)))
        P, Q, K = monitor.update(s.markers, field_sup)
        amp = None
        if prev is not None and s.self_fields:
            amp = ampere_residual(prev[0], s.fields.U, prev[1], s.moments, s.dtau)
        rec = DiagnosticsRecord(
            tau=s.tau,
            N0=N0,
            M0=M0,
            support_radius=s.markers.support_radius(),
            support_bound=problem.R0 + 0.5 * s.tau,
            gauss_residual=gauss_residual(s.moments, s.fields.U, s.background),
            ampere_residual=amp,
            P_max=P,
            Q_max=Q,
            K=K,
            dominance_violations=viol,
            edge_field=max(abs(s.fields.phi.edge_value()), abs(s.fields.psi.edge_value())),
        )
        records.append(rec)
        history.append(s.tau, s.markers, s.moments, s.fields)

    record()
    source_scale = [float(np.max(np.abs(solver.moments.hyp_density - solver.background), initial=0.0))]
    for _ in range(steps):
        prev = (solver.fields.U, solver.moments)
        solver.step()
        record(prev)
        source_scale.append(float(np.max(np.abs(solver.moments.hyp_density - solver.background), initial=0.0)))
    taus = np.array([r.tau for r in records])
    inflow = inflow_energy(solver.data.phi_minus_f, solver.data.psi_plus_f, taus, cfg.dz)
    for r, e in zip(records, inflow):
        r.inflow_energy = float(e)
    result = RunResult(cfg, problem.R0, history, records, solver=solver)
    result.source_scale = max(source_scale)
    _fill_surface(result)
    _nirc_record(result)
    result.summary = summarize(result)
    return result


def _surface_times(result, delta):
    h = result.history
    markers = h.final_markers
    reach = float(np.max(markers.hyperboloidal_radius())) if markers is not None and len(markers) else 0.0
    margin = 2.0 * (h.taus[1] - h.taus[0]) if len(h) > 1 else 0.0
    t_max = h.tau_last - delta * reach - margin
    if t_max < 0:
        return np.array([], dtype=int)
    n = max(2, result.config.surface_samples)
    taus = np.asarray(h.taus)
    idx = np.unique(np.searchsorted(taus, np.linspace(0.0, t_max, n), side="right") - 1)
    return idx[idx >= 0]


def _fill_surface(result):
    # delta=1 is also evaluated at the delta=2 times so the three energies share sample times
    later = _surface_times(result, 2)
    for delta in (1, 2):
        idx = _surface_times(result, delta)
        if delta == 1:
            idx = np.union1d(idx, later)
        for k in idx:
            rec = result.records[k]
            try:
                out = surface_functionals(result.history, rec.tau, delta)
            except HistoryError:
                continue
            setattr(rec, f"N{delta}", out["N"])
            setattr(rec, f"M{delta}", out["M"])


def _nirc_record(result):
    """Cumulative boundary flux at the vacuum probe radius in each record (1.5D)."""
    if result.history.mode != "onedim":
        return
    h = result.history
    r = _vacuum_probe(result)
    result.probe_radius = r
    reach = max(rec.support_radius for rec in result.records)
    result.nirc_total = nirc_flux(h, 0.0, h.tau_last, r, matter_radius=reach)
    taus = np.asarray(h.taus)
    xs = np.array([-r, r])
    vals = []
    for f in h.fields:
        w = f.phi_at(xs) ** 2 - f.psi_at(xs) ** 2
        vals.append(w[0] - w[1])
    vals = np.asarray(vals)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(taus) * (vals[1:] + vals[:-1]))])
    for rec, c in zip(result.records, cum):
        rec.nirc_flux = float(c)


def _vacuum_probe(result):
    """A probe radius that stays in the vacuum region for the whole run."""
    R = result.R0 + 0.5 * result.config.tau_end + 0.5 * result.config.window_margin
    return float(np.sqrt(R * R - 1.0))


def summarize(result):
    cfg = result.config
    recs = result.records
    checks = {}
    N0 = np.array([r.N0 for r in recs])
    N_in = N0[0]
    if N_in > 0:
        checks["mass_conservation"] = _check(float(np.max(np.abs(N0 - N_in)) / N_in), cfg.tol_mass)
    else:
        checks["mass_conservation"] = _check(float(np.max(np.abs(N0))), cfg.tol_mass)
    excess = max(r.support_radius - r.support_bound for r in recs)
    checks["support_bound"] = _check(excess, cfg.tol_support)
    M0 = np.array([r.M0 for r in recs])
    inflow = np.array([r.inflow_energy for r in recs])
    checks["energy_balance"] = _check(energy_balance_check([r.tau for r in recs], M0, inflow), cfg.tol_balance)
    if result.history.mode == "onedim":
        scale = max(getattr(result, "source_scale", 0.0), np.finfo(float).tiny)
        if cfg.self_fields:
            checks["gauss_residual"] = _check(max(r.gauss_residual for r in recs) / scale, cfg.tol_gauss)
        checks["null_dominance"] = _check(sum(r.dominance_violations for r in recs), 0)
    else:
        checks["gauss_residual"] = _check(max(r.gauss_residual for r in recs), cfg.tol_gauss)
    for delta in (1, 2):
        vals = [(r.tau, getattr(r, f"N{delta}"), getattr(r, f"M{delta}")) for r in recs
                if getattr(r, f"N{delta}") is not None]
        if not vals:
            checks[f"surface{delta}_available"] = _check(None, 0, passed=False,
                                                         note="history too short for this surface")
            continue
        Ns = np.array([v[1] for v in vals])
        Ms = np.array([v[2] for v in vals])
        if delta == 1 and N_in > 0:
            checks["N1_identity"] = _check(float(np.max(np.abs(Ns - N_in)) / N_in), cfg.tol_surface)
        if delta == 2:
            checks["N2_monotone"] = _check(monotone_violation(Ns, max(abs(Ns[0]), 1e-300)), cfg.tol_monotone)
            checks["M2_monotone"] = _check(monotone_violation(Ms, max(abs(Ms[0]), 1e-300)), cfg.tol_monotone)
            if cfg.scenario in ("free_stream", "spherical_shell") and N_in > 0:
                checks["N2_identity"] = _check(float(np.max(np.abs(Ns - N_in)) / N_in), cfg.tol_surface)
    if result.history.mode == "spherical":
        checks.update(getattr(result, "spherical_checks", {}))
    else:
        M_in = M0[0]
        flux = recs[-1].nirc_flux
        pred = recs[-1].inflow_energy
        if pred > 0:
            checks["nirc_flux"] = _check(abs(flux - pred) / pred, 0.02)
        else:
            checks["nirc_flux"] = _check(abs(flux), 1e-3 * max(M_in, 1e-300))
    return {
        "scenario": cfg.scenario,
        "mode": cfg.mode,
        "R0": result.R0,
        "tau_end": recs[-1].tau,
        "N0_in": float(N_in),
        "M0_in": float(M0[0]),
        "P_max": recs[-1].P_max,
        "Q_max": recs[-1].Q_max,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks.values()),
    }


def run_spherical(problem, threads=1):
    """Spherical time loop with per-step diagnostics and run-level checks."""
    cfg = problem.config
    R0 = problem.R0
    r_max = 2.0 * (R0 + 0.5 * cfg.tau_end) + cfg.window_margin
    grid = RadialGrid(cfg.dr, int(np.ceil(r_max / cfg.dr)) + 1)
    solver = SphericalSolver(problem.markers, grid, cfg.dtau, threads)
    ell0 = angular_momentum(problem.markers) if len(problem.markers) else np.zeros(0)
    history = SolutionHistory("spherical", keep_markers=cfg.output_every)
    monitor = _Monitor()
    records = []
    drift = [0.0]

    def record():
        s = solver
        N0 = s.markers.total_weight()
        M0 = spherical_energy(s.markers, s.field)
        P, Q, K = monitor.update(s.markers, float(np.max(np.abs(s.field.E_mag))))
        if ell0.size:
            ell = angular_momentum(s.markers)
            moving = ell0 > 0
            if np.any(moving):
                rel = np.abs(ell[moving] - ell0[moving]) / ell0[moving]
                drift[0] = max(drift[0], float(np.max(rel)))
        rec = DiagnosticsRecord(
            tau=s.tau,
            N0=N0,
            M0=M0,
            support_radius=s.markers.support_radius(),
            support_bound=R0 + 0.5 * s.tau,
            gauss_residual=_radial_gauss(s.field),
            P_max=P,
            Q_max=Q,
            K=K,
        )
        records.append(rec)
        history.append(s.tau, s.markers, s.moments, s.field)

    record()
    for _ in range(int(round(cfg.tau_end / cfg.dtau))):
        solver.step()
        record()
    result = RunResult(cfg, R0, history, records, solver=solver)
    _fill_surface(result)
    result.spherical_checks = _spherical_checks(result, drift[0])
    result.summary = summarize(result)
    return result


def _radial_gauss(fstate):
    """Staggered residual of ``d(enclosed)/dr = 4 pi r**2 s``."""
    r = fstate.grid.nodes
    s = 4.0 * np.pi * fstate.shell_density * r * r
    res = np.diff(fstate.enclosed) / fstate.grid.dr - 0.5 * (s[1:] + s[:-1])
    return float(np.max(np.abs(res))) if res.size else 0.0


def _spherical_checks(result, ell_drift):
    cfg = result.config
    recs = result.records
    M_in = recs[0].M0
    spread = 0.0
    for r in recs:
        vals = [v for v in (r.M0, r.M1, r.M2) if v is not None]
        if len(vals) > 1:
            spread = max(spread, max(vals) - min(vals))
    checks = {
        "energy_identities": _check(spread / M_in if M_in else spread, cfg.tol_surface),
        "angular_momentum": _check(ell_drift, cfg.tol_angular),
    }
    # exterior Coulomb field at twice the support radius, at every stored time it fits the grid
    worst = 0.0
    for f, r in zip(result.history.fields, recs):
        R = 2.0 * np.sqrt(max(r.support_radius ** 2 - 1.0, 0.0))
        if R >= f.grid.r_max or f.total_charge == 0:
            continue
        nodes = f.grid.nodes
        i = int(np.searchsorted(nodes, R))
        exact = f.total_charge / (4.0 * np.pi * nodes[i] ** 2)
        worst = max(worst, abs(f.E_mag[i] - exact) / exact)
    checks["coulomb_exterior"] = _check(worst, 1e-3)
    return checks


def run_config(cfg, threads=None):
    """Build and run one configuration; warnings raised on the way land in the summary."""
    threads = cfg.threads if threads is None else threads
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        problem = build_problem(cfg)
        result = run_spherical(problem, threads) if cfg.mode == "spherical" else run_onedim(problem, threads)
    seen = []
    for w in caught:
        msg = str(w.message)
        if msg not in seen:
            seen.append(msg)
    result.summary["warnings"] = seen
    return result


def write_run(result, out_dir):
    """Write the run directory; returns the summary."""
    cfg = result.config
    io.prepare_run_dir(out_dir)
    with open(os.path.join(out_dir, "config.cfg"), "w") as fh:
        fh.write(cfg.to_text())
    every = max(1, cfg.output_every)
    rows = [r.to_dict() for k, r in enumerate(result.records) if k % every == 0 or k == len(result.records) - 1
            or r.N1 is not None or r.N2 is not None]
    io.write_jsonl(os.path.join(out_dir, "diagnostics.jsonl"), rows)
    h = result.history
    out_idx = 0
    for k in range(len(h)):
        if k % every and k != len(h) - 1:
            continue
        f = h.fields[k]
        name = io.snapshot_name(out_idx)
        if h.mode == "onedim":
            io.write_csv(os.path.join(out_dir, "fields", name), f.slice_table(), io.FIELD_HEADER_1D)
        else:
            io.write_csv(os.path.join(out_dir, "fields", name), f.profile_table(), io.FIELD_HEADER_RADIAL)
        markers = h.marker_snapshots.get(k, h.final_markers if k == len(h) - 1 else None)
        if markers is not None:
            io.write_markers(os.path.join(out_dir, "markers", name), h.taus[k], markers)
        out_idx += 1
    if h.mode == "onedim":
        bg = result.solver.background
        io.write_csv(os.path.join(out_dir, "background.csv"),
                     np.column_stack([result.solver.xgrid.nodes, bg]), "x,n")
    io.write_json(os.path.join(out_dir, "summary.json"), result.summary)
    return result.summary


def run(cfg, out_dir=None, threads=None):
    """Run one configuration; returns ``(exit_status, result)``."""
    result = run_config(cfg, threads)
    if out_dir is not None:
        write_run(result, out_dir)
    return (0 if result.summary["all_pass"] else 1), result


def representation_discrepancy(result, n_probes=20):
    """Max difference between marched null fields and the integral representation.

    Probes sit on the x-grid at the final time; the representation uses the
    stored current history.
    """
    if result.history.mode != "onedim" or not result.config.self_fields:
        return 0.0
    h = result.history
    data = result.solver.data
    f = h.fields[-1]
    xs = np.linspace(result.solver.xgrid.x_min * 0.8, result.solver.xgrid.x_max * 0.8, n_probes)
    R = result.R0 + 2 * result.config.h
    worst = 0.0
    for x in xs:
        for which, marched in (("phi", f.phi_at), ("psi", f.psi_at)):
            ref = evaluate_representation(which, h.tau_last, x, data, h.j2_sampler, R, h.tau_last)
            worst = max(worst, abs(float(marched(np.array([x]))[0]) - ref))
    return worst


def refine(cfg, levels=3, threads=None):
    """Rerun with grids and step halved per level; returns a convergence table."""
    if levels < 2:
        raise ConfigurationError("a refinement study needs at least two levels")
    rows = []
    for level in range(levels):
        c = cfg.refined(level)
        try:
            res = run_config(c, threads)
        except Exception as exc:  # partial table with the failure noted
            rows.append({"level": level, "h": c.h, "dtau": c.dtau, "error": f"{type(exc).__name__}: {exc}"})
            break
        recs = res.records
        M0 = np.array([r.M0 for r in recs])
        inflow = np.array([r.inflow_energy for r in recs])
        N1 = [abs(r.N1 - recs[0].N0) / recs[0].N0 for r in recs if r.N1 is not None and recs[0].N0 > 0]
        rows.append({
            "level": level,
            "h": c.h,
            "dtau": c.dtau,
            "M0_drift": float(np.max(np.abs(M0 - M0[0])) / max(abs(M0[0]), 1e-300)),
            "energy_balance": energy_balance_check([r.tau for r in recs], M0, inflow),
            "N1_error": float(max(N1)) if N1 else None,
            "field_discrepancy": representation_discrepancy(res),
        })
    orders = {}
    for key in ("M0_drift", "energy_balance", "N1_error", "field_discrepancy"):
        vals = [r.get(key) for r in rows]
        if len(vals) >= 2 and all(v is not None and v > 0 for v in vals):
            orders[key] = {
                "pairwise": [float(o) for o in observed_order(vals)],
                "fit": fitted_order([r["h"] for r in rows], vals),
            }
    return {"levels": rows, "orders": orders}


def fitted_order(steps, errors):
    """Least-squares slope of ``log(error)`` against ``log(step)``."""
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


def diagnose(run_dir):
    """Recompute snapshot diagnostics from a run directory's CSV files.

    Mass, support bound, Gauss residual and the pointwise energy inequality
    are recomputed exactly from the stored markers and slices; the energy
    uses slice quadrature on the x-window and is approximate.
    """
    from .kinetic import Markers
    from .scenarios import load_config

    cfg = load_config(os.path.join(run_dir, "config.cfg"))
    summary = io.read_json(os.path.join(run_dir, "summary.json"))
    R0 = summary["R0"]
    rows = []
    names = sorted(os.listdir(os.path.join(run_dir, "markers")))
    background = None
    if cfg.mode == "onedim":
        _, bg = io.read_csv(os.path.join(run_dir, "background.csv"))
        background = bg[:, 1]
    ok = True
    N_in = None
    for name in names:
        _, m = io.read_csv(os.path.join(run_dir, "markers", name))
        tau = float(m[0, 0]) if m.shape[0] and m.shape[1] > 1 else None
        if cfg.mode == "onedim":
            markers = Markers(m[:, 1], m[:, 2:4], m[:, 4]) if m.shape[1] == 5 else Markers.empty()
        else:
            markers = Markers(m[:, 1:4], m[:, 4:7], m[:, 7]) if m.shape[1] == 8 else Markers.empty(True)
        _, fld = io.read_csv(os.path.join(run_dir, "fields", name))
        N0 = markers.total_weight()
        N_in = N0 if N_in is None else N_in
        row = {"snapshot": name, "tau": tau, "N0": N0}
        if len(markers):
            row["support_excess"] = markers.support_radius() - (R0 + 0.5 * (tau or 0.0))
            ok &= row["support_excess"] <= cfg.tol_support
        if N_in:
            ok &= abs(N0 - N_in) / N_in <= cfg.tol_mass
        if cfg.mode == "onedim":
            x, U, phi, psi = fld[:, 0], fld[:, 1], fld[:, 2], fld[:, 3]
            h = x[1] - x[0]
            grid = XGrid(float(x[0]), float(h), x.size)
            moments = deposit_moments(markers, grid, tau or 0.0)
            scale = max(float(np.max(np.abs(moments.hyp_density - background))), np.finfo(float).tiny)
            row["gauss_residual"] = gauss_residual(moments, U, background) / scale
            viol, _ = null_dominance_check(moments, U, phi, psi)
            row["dominance_violations"] = viol
            ok &= row["gauss_residual"] <= cfg.tol_gauss and viol == 0
            from scipy import integrate
            from .geometry import hat

            xh = hat(x)
            field = 0.5 * U * U + phi * phi * (1 + xh) + psi * psi * (1 - xh)
            row["M0_window"] = float(np.sum(markers.w * markers.gamma())) + float(integrate.trapezoid(field, x))
        rows.append(row)
    io.write_jsonl(os.path.join(run_dir, "diagnose.jsonl"), rows)
    return (0 if ok else 1), rows

