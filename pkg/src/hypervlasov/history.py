"""Time-ordered storage of moments and fields for post-hoc surface functionals."""
import numpy as np

from .errors import HistoryError


class SolutionHistory:
    """Snapshots ``(tau_k, moments_k, fields_k)`` with strictly increasing ``tau_k``.

    Marker clouds are kept only at the requested cadence (``keep_markers``
    steps) plus the latest one, which the exhaustion checks need.
    """

    def __init__(self, mode, keep_markers=None):
        if mode not in ("onedim", "spherical"):
            raise ValueError("mode must be 'onedim' or 'spherical'")
        self.mode = mode
        self.keep_markers = keep_markers
        self.taus = []
        self.moments = []
        self.fields = []
        self.marker_snapshots = {}
        self.final_markers = None
        self._stack = None

    def __len__(self):
        return len(self.taus)

    def append(self, tau, markers, moments, fields):
        if self.taus and not tau > self.taus[-1]:
            raise HistoryError(f"snapshot time {tau!r} does not increase past {self.taus[-1]!r}")
        k = len(self.taus)
        self.taus.append(float(tau))
        self.moments.append(moments)
        self.fields.append(fields)
        if self.keep_markers and k % self.keep_markers == 0:
            self.marker_snapshots[k] = markers
        self.final_markers = markers
        self._stack = None

    @property
    def tau_last(self):
        return self.taus[-1]

    def locate(self, tau):
        """Bracketing snapshot index and linear weight for each requested time.

        Times past the last snapshot map to ``(last, 0)``.
        """
        taus = np.asarray(self.taus)
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < taus[0] - 1e-12):
            raise HistoryError(f"time {float(np.min(tau)):.6g} precedes the history start {taus[0]:.6g}")
        if len(taus) == 1:
            return np.zeros(tau.shape, dtype=int), np.zeros(tau.shape)
        k = np.clip(np.searchsorted(taus, tau, side="right") - 1, 0, len(taus) - 2)
        theta = (tau - taus[k]) / (taus[k + 1] - taus[k])
        past = tau >= taus[-1]
        k = np.where(past, len(taus) - 1, k)
        theta = np.where(past, 0.0, np.clip(theta, 0.0, 1.0))
        return k, theta

    def _stacked_moments(self):
        if self._stack is None:
            if self.mode == "onedim":
                arr = np.stack([m.stacked() for m in self.moments])
                U = np.stack([f.U for f in self.fields])
            else:
                arr = np.stack(
                    [np.stack([m.rho, m.j_r, m.kin_e, m.kin_pr, m.hyp]) for m in self.moments]
                )
                U = np.stack([f.E_mag for f in self.fields])
            self._stack = (arr, U)
        return self._stack

    def nodal_at(self, tau_per_node, idx):
        """Moments and ``U`` (or ``|E|``) at node ``idx[i]`` and time ``tau_per_node[i]``.

        Returns ``(moments, field, covered)``; nodes whose time lies past the
        last snapshot are flagged ``covered = False`` and read from the last
        snapshot.
        """
        arr, U = self._stacked_moments()
        k, theta = self.locate(tau_per_node)
        idx = np.asarray(idx)
        k1 = np.minimum(k + 1, len(self.taus) - 1)
        m = (1.0 - theta) * arr[k, :, idx].T + theta * arr[k1, :, idx].T
        u = (1.0 - theta) * U[k, idx] + theta * U[k1, idx]
        covered = np.asarray(tau_per_node) <= self.taus[-1] + 1e-12
        return m, u, covered

    def null_fields_at(self, tau, x):
        """``(phi, psi)`` at arbitrary ``(tau_i, x_i)`` pairs (1.5D only).

        Linear in time between snapshots; past the last snapshot the fields
        are continued by source-free transport.
        """
        tau = np.asarray(tau, dtype=float)
        x = np.asarray(x, dtype=float)
        phi = np.empty_like(x)
        psi = np.empty_like(x)
        k, theta = self.locate(tau)
        last = len(self.taus) - 1
        for kk in np.unique(k):
            sel = k == kk
            fa = self.fields[kk]
            if kk == last:
                phi[sel] = fa.phi_at(x[sel], np.maximum(tau[sel], fa.tau))
                psi[sel] = fa.psi_at(x[sel], np.maximum(tau[sel], fa.tau))
                continue
            fb = self.fields[kk + 1]
            th = theta[sel]
            phi[sel] = (1.0 - th) * fa.phi_at(x[sel]) + th * fb.phi_at(x[sel])
            psi[sel] = (1.0 - th) * fa.psi_at(x[sel]) + th * fb.psi_at(x[sel])
        return phi, psi

    def j2_sampler(self, tau, y):
        """Scalar ``j2(tau, y)`` interpolated linearly in time and space (1.5D only)."""
        if tau > self.taus[-1] + 1e-12:
            raise HistoryError(
                f"current history ends at tau={self.taus[-1]:.6g}; requested tau={tau:.6g}"
            )
        k, theta = self.locate(np.array([tau]))
        k, theta = int(k[0]), float(theta[0])
        ma = self.moments[k]
        val = ma.grid.interp(ma.j2, y)
        if theta > 0.0:
            mb = self.moments[k + 1]
            val = (1.0 - theta) * val + theta * mb.grid.interp(mb.j2, y)
        return float(val)
