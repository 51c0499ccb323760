import numpy as np
import pytest

from hypervlasov.errors import HistoryError
from hypervlasov.fields1d import NullField, FieldState1D
from hypervlasov.history import SolutionHistory
from hypervlasov.kinetic import Markers, MomentGrid1D, XGrid


def snapshot(grid, tau, level):
    m = MomentGrid1D.zeros(grid, tau)
    m.j2 = np.full(grid.n, level)
    phi = NullField(0.1, 100, initial=lambda x: np.full_like(x, level) * (np.abs(x) < 50))
    f = FieldState1D(tau, grid, np.full(grid.n, level), phi.with_values(np.full(100, level), tau),
                     NullField(0.1, 100, mirror=True, tau=tau))
    return m, f


def filled_history():
    grid = XGrid.symmetric(2.0, 0.5)
    h = SolutionHistory("onedim", keep_markers=2)
    for k, tau in enumerate([0.0, 1.0, 2.0]):
        m, f = snapshot(grid, tau, float(k))
        h.append(tau, Markers.empty(), m, f)
    return h


def test_times_must_increase():
    h = filled_history()
    m, f = snapshot(XGrid.symmetric(2.0, 0.5), 2.0, 0.0)
    with pytest.raises(HistoryError):
        h.append(2.0, Markers.empty(), m, f)
    with pytest.raises(ValueError):
        SolutionHistory("cartesian")


def test_locate_brackets_and_clamps():
    h = filled_history()
    k, theta = h.locate(np.array([0.0, 0.25, 1.0, 1.5, 2.0, 5.0]))
    assert list(k) == [0, 0, 1, 1, 2, 2]
    assert np.allclose(theta, [0, 0.25, 0, 0.5, 0, 0])
    with pytest.raises(HistoryError):
        h.locate(np.array([-1.0]))


def test_linear_interpolation_in_time():
    h = filled_history()
    assert h.j2_sampler(1.25, 0.0) == pytest.approx(1.25)
    m, u, covered = h.nodal_at(np.array([0.5, 3.0]), np.array([2, 2]))
    assert np.allclose(u, [0.5, 2.0]) and list(covered) == [True, False]
    phi, psi = h.null_fields_at(np.array([0.5, 1.5]), np.array([0.0, 0.0]))
    assert np.allclose(phi, [0.5, 1.5]) and np.all(psi == 0)
    with pytest.raises(HistoryError):
        h.j2_sampler(2.5, 0.0)


def test_marker_cadence():
    h = filled_history()
    assert sorted(h.marker_snapshots) == [0, 2]
    assert len(h) == 3 and h.tau_last == 2.0
