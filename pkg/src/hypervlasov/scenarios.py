"""Run configuration and the built-in scenarios."""
import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .fields1d import InitialDataSet1D
from .geometry import lorentz_factor, p0_of
from .kinetic import Markers, sample_initial_markers
from .spherical import sample_spherical_markers

MODES = ("onedim", "spherical")
SCENARIOS = (
    "free_stream",
    "vacuum_radiation",
    "isolated_plasma",
    "driven_plasma",
    "spherical_shell",
    "custom",
)


@dataclass
class RunConfig:
    """Flat run configuration; every field is a ``key = value`` line in a config file."""

    mode: str = "onedim"
    scenario: str = "isolated_plasma"
    tau_end: float = 8.0
    # grids: x-grid for U and deposition, null grids, radial grid; the step covers
    # null_cells_per_step null cells
    h: float = 0.1
    dz: float = 0.01
    null_cells_per_step: int = 10
    dr: float = 0.05
    window_margin: float = 2.0
    output_every: int = 10
    picard_sweeps: int = 1
    self_fields: bool = True
    threads: int = 1
    # 1.5D plasma: density bump in x times a bump in momentum around (drift_p1, drift_p2)
    plasma_charge: float = 0.5
    plasma_center: float = 0.0
    plasma_halfwidth: float = 1.0
    momentum_radius: float = 0.4
    drift_p1: float = 0.0
    drift_p2: float = 0.2
    markers_x: int = 32
    markers_p1: int = 8
    markers_p2: int = 8
    sampling: str = "tensor"
    seed: int = 0
    background_profile: str = "raised_cosine"
    background_a: float = -2.0
    background_b: float = 2.0
    # incoming radiation phi_minus, psi_plus and initial null fields
    wave_amplitude: float = 0.0
    wave_duration: float = 5.0
    wave_ramp: float = 1.0
    wave_side: str = "left"
    phi_in_amplitude: float = 0.0
    phi_in_center: float = 0.0
    phi_in_width: float = 1.0
    # spherical shell
    shell_radius: float = 1.5
    shell_halfwidth: float = 0.75
    shell_charge: float = 0.5
    shell_p_max: float = 0.4
    markers_r: int = 16
    markers_p: int = 8
    markers_mu: int = 8
    n_azimuth: int = 4
    min_angular_momentum: float = 0.0
    # diagnostics
    surface_samples: int = 6
    tol_mass: float = 1e-12
    tol_support: float = 1e-6
    tol_gauss: float = 1e-10
    tol_balance: float = 1e-2
    tol_monotone: float = 1e-2
    tol_surface: float = 1e-2
    tol_admissibility: float = 1e-6
    tol_angular: float = 1e-6

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"scenario must be one of {SCENARIOS}")
        if self.scenario == "spherical_shell" and self.mode != "spherical":
            raise ConfigurationError("spherical_shell runs in spherical mode")
        if self.mode == "spherical" and self.scenario not in ("spherical_shell", "custom"):
            raise ConfigurationError("spherical mode supports spherical_shell and custom")
        for key in ("h", "dz", "dr", "tau_end", "null_cells_per_step"):
            if not getattr(self, key) > 0:
                raise ConfigurationError(f"{key} must be positive")

    @property
    def dtau(self):
        """The time step, a whole number of null-grid cells (used in both modes)."""
        return self.dz * self.null_cells_per_step

    def refined(self, level):
        """Grids and time step halved ``level`` times, marker counts doubled per axis."""
        f = 2 ** level
        changes = {
            "h": self.h / f,
            "dz": self.dz / f,
            "dr": self.dr / f,
            "output_every": self.output_every * f,
        }
        for key in ("markers_x", "markers_p1", "markers_p2", "markers_r", "markers_p", "markers_mu"):
            changes[key] = getattr(self, key) * f
        return dataclasses.replace(self, **changes)

    def to_text(self):
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in dataclasses.fields(self))


def _coerce(field, text):
    kind = field.type
    text = text.strip()
    if kind is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{field.name}: not a boolean: {text!r}")
    try:
        return kind(text)
    except ValueError as exc:
        raise ConfigurationError(f"{field.name}: cannot parse {text!r}") from exc


def parse_assignments(lines):
    """``key = value`` lines to a dict; blank lines and ``#`` comments ignored."""
    known = {f.name: f for f in dataclasses.fields(RunConfig)}
    out = {}
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"unknown config key {key!r}")
        out[key] = _coerce(known[key], value)
    return out


def load_config(path=None, overrides=()):
    """Config from a file plus ``key=value`` overrides (later wins)."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_assignments(fh))
    values.update(parse_assignments(overrides))
    scenario = values.get("scenario", RunConfig.scenario)
    base = scenario_defaults(scenario)
    base.update(values)
    return RunConfig(**base)


def scenario_defaults(scenario):
    """Settings a scenario changes relative to the dataclass defaults."""
    if scenario == "free_stream":
        return {"scenario": scenario, "self_fields": False, "tau_end": 30.0, "drift_p2": 0.0,
                "momentum_radius": 0.5}
    if scenario == "vacuum_radiation":
        return {"scenario": scenario, "plasma_charge": 0.0, "wave_amplitude": 0.1,
                "wave_ramp": 0.0, "tau_end": 8.0}
    if scenario == "driven_plasma":
        return {"scenario": scenario, "wave_amplitude": 0.1, "wave_duration": 5.0,
                "wave_ramp": 1.0, "tau_end": 8.0}
    if scenario == "spherical_shell":
        return {"scenario": scenario, "mode": "spherical", "tau_end": 20.0}
    return {"scenario": scenario}


def bump(s):
    """``(1 - s**2)**3`` on ``|s| < 1``, zero outside; C2 with compact support."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, (1.0 - s * s) ** 3, 0.0)


def pulse(amplitude, duration, ramp):
    """``amplitude`` on ``[0, duration]`` with ``sin**2`` ramps of width ``ramp`` (C1)."""

    def f(tau):
        tau = np.asarray(tau, dtype=float)
        out = np.where((tau >= 0.0) & (tau <= duration), 1.0, 0.0)
        if ramp > 0.0:
            up = (tau >= 0.0) & (tau < ramp)
            down = (tau > duration - ramp) & (tau <= duration)
            out = np.where(up, np.sin(0.5 * np.pi * tau / ramp) ** 2, out)
            out = np.where(down, np.sin(0.5 * np.pi * (duration - tau) / ramp) ** 2, out)
        return amplitude * out

    return f


def gaussian(amplitude, center, width):
    def f(x):
        x = np.asarray(x, dtype=float)
        return amplitude * np.exp(-(((x - center) / width) ** 2))

    return f


@dataclass
class Problem:
    """Everything a solver needs at ``tau = 0``."""

    config: RunConfig
    markers: Markers
    R0: float
    data: InitialDataSet1D = None


def plasma_density(cfg):
    """Unnormalised 1.5D plasma density with compact support in its phase box."""
    L, P = cfg.plasma_halfwidth, cfg.momentum_radius
    c, a, b = cfg.plasma_center, cfg.drift_p1, cfg.drift_p2

    def f(x, p1, p2):
        rad = np.hypot(p1 - a, p2 - b) / P
        return bump((x - c) / L) * bump(rad)

    box = ((c - L, c + L), (a - P, a + P), (b - P, b + P))
    return f, box


def _sample_1d(cfg):
    counts = (cfg.markers_x, cfg.markers_p1, cfg.markers_p2)
    if cfg.plasma_charge == 0.0:
        return Markers.empty(), 1.0
    f, box = plasma_density(cfg)
    if cfg.sampling == "tensor":
        markers, R0 = sample_initial_markers(f, box, counts)
    elif cfg.sampling == "random":
        markers, R0 = _sample_random(f, box, counts, cfg.seed)
    else:
        raise ConfigurationError("sampling must be 'tensor' or 'random'")
    total = markers.total_weight()
    markers.w *= cfg.plasma_charge / total
    return markers, R0


def _sample_random(f, box, counts, seed):
    """Uniform random phase points; weights as in tensor sampling with the mean cell volume."""
    rng = np.random.default_rng(seed)
    n = int(np.prod(counts))
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    pts = lo + (hi - lo) * rng.random((n, 3))
    x, p = pts[:, 0], pts[:, 1:]
    vol = float(np.prod(hi - lo)) / n
    w = p0_of(x, p) / lorentz_factor(p) * f(x, p[:, 0], p[:, 1]) * vol
    keep = w > 0
    m = Markers(x[keep], p[keep], w[keep])
    return m, m.support_radius()


def build_problem(cfg):
    if cfg.mode == "spherical":
        return _build_spherical(cfg)
    markers, R0 = _sample_1d(cfg)
    wave = pulse(cfg.wave_amplitude, cfg.wave_duration, cfg.wave_ramp) if cfg.wave_amplitude else None
    phi_minus = wave if cfg.wave_side in ("left", "both") else None
    psi_plus = wave if cfg.wave_side in ("right", "both") else None
    phi_in = (
        gaussian(cfg.phi_in_amplitude, cfg.phi_in_center, cfg.phi_in_width)
        if cfg.phi_in_amplitude
        else None
    )
    data = InitialDataSet1D(
        phi_in=phi_in,
        phi_minus=phi_minus,
        psi_plus=psi_plus,
        background_interval=(cfg.background_a, cfg.background_b),
        background_profile=cfg.background_profile,
        R0=R0,
    )
    return Problem(cfg, markers, R0, data)


def shell_density(cfg):
    rc, hw, pm = cfg.shell_radius, cfg.shell_halfwidth, cfg.shell_p_max

    def f(r, p, mu):
        return bump((r - rc) / hw) * bump(p / pm) * np.ones_like(mu)

    return f


def _build_spherical(cfg):
    f = shell_density(cfg)
    r_lo = max(cfg.shell_radius - cfg.shell_halfwidth, 0.0)
    markers, R0 = sample_spherical_markers(
        f,
        (r_lo, cfg.shell_radius + cfg.shell_halfwidth),
        cfg.shell_p_max,
        (cfg.markers_r, cfg.markers_p, cfg.markers_mu),
        n_azimuth=cfg.n_azimuth,
        min_angular_momentum=cfg.min_angular_momentum or None,
    )
    if len(markers):
        markers.w *= cfg.shell_charge / markers.total_weight()
    return Problem(cfg, markers, R0)
