"""Write / store / read protocol on a linearized Maxwell-Bloch model.

Co-moving frame, t in 1/gamma, zeta = z/L in [0, 1]::

    d_zeta alpha = 2*pi*i*b0 * sum_j conj(c_j) P_j
    d_t P_j      = (i*delta_j - 1/2) P_j + i*c_j*alpha + i*v_j(t)*S
    d_t S        = (i*delta_S - spin_decay) S + i*sum_j conj(v_j(t)) P_j

j runs over the excited states n, n'. With constant control, eliminating
P_j and S for a harmonic probe reproduces the closed-form susceptibility
of :mod:`ramanmem.susceptibility` exactly, which is what fixes c_j.

Energy bookkeeping (input energy = int |alpha_in|^2 dt):
``2*pi*b0 * int (|P|^2 + |S|^2) dzeta`` is the energy held by the atoms
and ``2*pi*b0 * int sum_j |P_j|^2 dzeta`` is the rate of spontaneous
loss. Spin waves are reported as sigma = sqrt(2*pi*b0) * S so that
int |sigma|^2 dzeta is the stored energy.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np
from scipy.integrate import simpson

from .atomic import AtomModel
from .susceptibility import DIPOLE_SCALE, ControlField
from .transport import FieldRecord, MediumSpec, PulseSpec

log = logging.getLogger(__name__)

__all__ = [
    "SolverError",
    "ResidualCoherenceWarning",
    "ProtocolConfig",
    "Grid",
    "AtomicState",
    "Trajectory",
    "MemoryReport",
    "MaxwellBloch",
    "evolve",
    "store",
    "retrieve",
    "run_protocol",
]


class SolverError(ArithmeticError):
    """Non-finite state or a step whose local error exceeds the tolerance."""


class ResidualCoherenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Grid:
    """Fixed solver grid.

    Every ``error_check_every`` steps the step is repeated as two half steps;
    a relative difference above ``error_tol`` raises :class:`SolverError`.
    """

    nz: int = 100
    dt: float = 0.002
    error_check_every: int = 250
    error_tol: float = 5e-6

    def __post_init__(self):
        if self.nz < 4:
            raise ValueError("nz must be at least 4")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def zeta(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nz + 1)


@dataclass
class ProtocolConfig:
    atom: AtomModel
    pulse: PulseSpec
    medium: MediumSpec
    control: ControlField
    write_off_time: Optional[float] = None  # defaults to the pulse duration
    storage_time: float = 20.0
    read_direction: Literal["forward", "backward"] = "backward"
    switch_profile: Literal["instantaneous", "linear"] = "instantaneous"
    ramp_time: float = 0.0
    spin_decay: float = 0.0
    settle_time: float = 10.0
    read_time: float = 100.0
    grid: Grid = field(default_factory=Grid)

    def __post_init__(self):
        if self.write_off_time is None:
            self.write_off_time = self.pulse.duration
        if self.write_off_time < 0 or self.storage_time < 0:
            raise ValueError("write_off_time and storage_time must be non-negative")
        if self.read_direction not in ("forward", "backward"):
            raise ValueError(f"read_direction must be forward or backward, got {self.read_direction!r}")
        if self.switch_profile not in ("instantaneous", "linear"):
            raise ValueError(f"unknown switch profile {self.switch_profile!r}")
        if self.switch_profile == "linear" and self.ramp_time <= 0:
            raise ValueError("linear switching needs ramp_time > 0")
        if self.settle_time < 10.0:
            raise ValueError("optical coherences need at least 10/gamma to decay after switch-off")


@dataclass
class AtomicState:
    """Optical coherences P (shape (2, nz+1): n, n') and spin coherence S."""

    P: np.ndarray
    S: np.ndarray
    t: float = 0.0

    @classmethod
    def empty(cls, nz: int) -> "AtomicState":
        return cls(np.zeros((2, nz + 1), complex), np.zeros(nz + 1, complex))

    def mirrored(self) -> "AtomicState":
        return AtomicState(self.P[:, ::-1].copy(), self.S[::-1].copy(), self.t)

    def copy(self) -> "AtomicState":
        return AtomicState(self.P.copy(), self.S.copy(), self.t)


@dataclass
class Trajectory:
    """Time series produced by :func:`evolve`."""

    t: np.ndarray
    output: np.ndarray  # alpha at zeta = 1
    input: np.ndarray
    optical_energy: np.ndarray  # 2 pi b0 int sum|P|^2 dzeta
    spin_energy: np.ndarray  # 2 pi b0 int |S|^2 dzeta
    final: AtomicState
    snapshots: dict = field(default_factory=dict)
    local_error: float = 0.0  # largest step-doubling estimate seen
    left_limits: dict = field(default_factory=dict)  # sample index -> output just before a jump

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def output_energy(self) -> float:
        """int |alpha_out|^2 dt, split at the jumps of the boundary drive."""
        p = np.abs(self.output) ** 2
        cuts = sorted(k for k in self.left_limits if 0 < k < len(p))
        total, start = 0.0, 0
        for k in cuts + [len(p) - 1]:
            seg = p[start:k + 1].copy()
            if k in self.left_limits:
                seg[-1] = abs(self.left_limits[k]) ** 2
            total += _segment_integral(seg, self.t[start:k + 1])
            start = k
        return float(total)

    def dissipated(self) -> float:
        # gamma = 1: each |P_j|^2 decays at unit rate
        return float(simpson(self.optical_energy, x=self.t))

    def spin_dissipated(self, spin_decay: float) -> float:
        return float(2 * spin_decay * simpson(self.spin_energy, x=self.t))


@dataclass
class MemoryReport:
    leakage: float
    spin_wave: np.ndarray
    zeta: np.ndarray
    retrieved_waveform: Optional[FieldRecord]
    efficiency: float
    direction: str
    input_energy: float
    stored_energy: float = 0.0
    dissipated: float = 0.0
    residual: float = 0.0
    spin_wave_at_switch: Optional[np.ndarray] = field(default=None, repr=False)
    write: Optional[Trajectory] = field(default=None, repr=False)
    read: Optional[Trajectory] = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "leakage": self.leakage,
            "efficiency": self.efficiency,
            "direction": self.direction,
            "input_energy": self.input_energy,
            "stored_energy": self.stored_energy,
            "dissipated": self.dissipated,
        }


def _segment_integral(y: np.ndarray, x: np.ndarray) -> float:
    if len(y) < 2:
        return 0.0
    if len(y) == 2:
        return float(0.5 * (y[0] + y[1]) * (x[1] - x[0]))
    return float(simpson(y, x=x))


def _cumint(y: np.ndarray, dz: float) -> np.ndarray:
    """Cumulative integral along the last axis, fourth order on a uniform grid.

    Each cell uses the cubic through its four nearest nodes; the end cells
    use one-sided stencils.
    """
    n = y.shape[-1] - 1
    if n < 3:
        out = np.zeros_like(y)
        np.cumsum(0.5 * dz * (y[..., 1:] + y[..., :-1]), axis=-1, out=out[..., 1:])
        return out
    cell = np.empty(y.shape[:-1] + (n,), dtype=y.dtype)
    cell[..., 1:-1] = 13.0 * (y[..., 1:-2] + y[..., 2:-1]) - (y[..., :-3] + y[..., 3:])
    cell[..., 0] = 9.0 * y[..., 0] + 19.0 * y[..., 1] - 5.0 * y[..., 2] + y[..., 3]
    cell[..., -1] = 9.0 * y[..., -1] + 19.0 * y[..., -2] - 5.0 * y[..., -3] + y[..., -4]
    out = np.empty_like(y)
    out[..., 0] = 0.0
    np.cumsum(cell * (dz / 24.0), axis=-1, out=out[..., 1:])
    return out


def _integral(y: np.ndarray, dz: float) -> float:
    return float(_cumint(y, dz)[..., -1].sum())


class MaxwellBloch:
    """Coefficients of the linear system for one carrier and control setting."""

    def __init__(self, atom: AtomModel, control: ControlField, medium: MediumSpec, carrier: float,
                 spin_decay: float = 0.0):
        cs = control.couplings
        self.c = math.sqrt(DIPOLE_SCALE) * np.array([cs.probe_to_n, cs.probe_to_nprime])
        self.v_unit = 0.5 * np.array([1.0, cs.rho])  # v_j per unit Rabi frequency
        self.rabi = control.rabi
        self.delta = np.array([carrier - atom.energy_n, carrier - atom.energy_nprime])
        self.delta_s = carrier - control.detuning
        self.spin_decay = spin_decay
        self.b0 = medium.depth
        self.diag = np.array([1j * self.delta[0] - 0.5, 1j * self.delta[1] - 0.5, 1j * self.delta_s - spin_decay])

    def response(self, omega) -> np.ndarray:
        """Steady-state chi (n0 lambdabar^3 units) at sideband ``omega``, constant control.

        Solves the harmonic balance of the Bloch equations for P_j, S
        driven by alpha*exp(-i*omega*t).
        """
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        v = self.v_unit * self.rabi
        out = np.empty(w.shape, complex)
        for k, wk in enumerate(w):
            A = np.diag(self.diag + 1j * wk)
            A[0, 2], A[1, 2] = 1j * v[0], 1j * v[1]
            A[2, 0], A[2, 1] = 1j * np.conj(v[0]), 1j * np.conj(v[1])
            rhs = -1j * np.array([self.c[0], self.c[1], 0.0])
            x = np.linalg.solve(A, rhs)
            # d_zeta alpha = i*2*pi*b0*chi*alpha defines chi
            out[k] = np.dot(np.conj(self.c), x[:2])
        return out


def _control_profile(cfg: ProtocolConfig, phase: str) -> Callable[[float], float]:
    """Fraction of the full Rabi frequency as a function of stage time."""
    ramp = cfg.ramp_time if cfg.switch_profile == "linear" else 0.0
    if phase == "write":
        t_off = cfg.write_off_time
        if ramp == 0.0:
            return lambda t: 1.0 if t < t_off else 0.0
        return lambda t: min(1.0, max(0.0, 1.0 - (t - t_off) / ramp))
    if phase == "dark":
        return lambda t: 0.0
    if phase == "read":
        if ramp == 0.0:
            return lambda t: 1.0
        return lambda t: min(1.0, max(0.0, t / ramp))
    raise ValueError(phase)


def evolve(cfg: ProtocolConfig, state: AtomicState, duration: float,
           boundary: Callable[[float], complex] = lambda t: 0.0,
           control: Callable[[float], float] = lambda t: 1.0,
           snapshot_times: tuple = (), breaks: tuple = ()) -> Trajectory:
    """Integrate the Maxwell-Bloch system for ``duration`` from ``state``.

    ``boundary`` gives alpha(zeta=0, t) and ``control`` the Rabi frequency
    in units of ``cfg.control.rabi``; both take the stage-local time.
    ``breaks`` lists stage times where ``boundary`` jumps; the output's left
    limit is kept there so energies integrate each smooth piece separately.
    Lawson (integrating-factor) RK4 in time, fourth-order cumulative quadrature in zeta.
    """
    mb = MaxwellBloch(cfg.atom, cfg.control, cfg.medium, cfg.pulse.carrier, cfg.spin_decay)
    g = cfg.grid
    nz, dt = g.nz, g.dt
    dz = 1.0 / nz
    nsteps = int(round(duration / dt))
    if nsteps < 1:
        raise ValueError("duration shorter than one time step")
    if abs(nsteps * dt - duration) > 1e-9 * max(1.0, duration):
        raise ValueError(f"duration {duration} is not a multiple of dt={dt}")
    K = 2j * math.pi * mb.b0
    cc = np.conj(mb.c)[:, None]
    c_col = mb.c[:, None]
    vu = mb.v_unit[:, None] * mb.rabi
    L = mb.diag[:, None]
    e_half = np.exp(L * dt / 2)
    e_full = np.exp(L * dt)

    # alpha(zeta) = alpha_in + W @ [P_n, P_n'], the quadrature folded into W
    M = _cumint(np.eye(nz + 1), dz).T
    W = K * np.hstack([cc[0] * M, cc[1] * M])
    W_exit = W[-1]
    quad = M[-1]

    def field(t, y):
        return boundary(t) + W @ y[:2].reshape(-1)

    def rhs(t, y):
        a = field(t, y)
        f = control(t)
        out = np.empty_like(y)
        out[:2] = 1j * c_col * a + 1j * f * vu * y[2]
        out[2] = 1j * f * (np.conj(vu) * y[:2]).sum(0)
        return out

    def step(t, y, h, eh, ef):
        # drive and control are read as left limits at the step end, so
        # switching instants on the time grid stay first-order free
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, eh * (y + h / 2 * k1))
        k3 = rhs(t + h / 2, eh * y + h / 2 * k2)
        k4 = rhs(t + h * (1 - 1e-9), ef * y + h * eh * k3)
        return ef * y + h / 6 * (ef * k1 + 2 * eh * (k2 + k3) + k4)

    y = np.empty((3, nz + 1), complex)
    y[:2] = state.P
    y[2] = state.S
    ts = np.arange(nsteps + 1) * dt
    out = np.empty(nsteps + 1, complex)
    inp = np.empty(nsteps + 1, complex)
    e_opt = np.empty(nsteps + 1)
    e_spin = np.empty(nsteps + 1)
    w = 2 * math.pi * mb.b0

    def record(k, y):
        inp[k] = boundary(ts[k])
        out[k] = inp[k] + W_exit @ y[:2].reshape(-1)
        a2 = (y.real ** 2 + y.imag ** 2) @ quad
        e_opt[k] = w * (a2[0] + a2[1])
        e_spin[k] = w * a2[2]

    break_idx = {int(round(b / dt)) for b in breaks if 0 < b <= duration + 1e-9 * dt}
    lefts = {}
    snaps = {}
    snap_idx = {int(round(s / dt)): s for s in snapshot_times}
    record(0, y)
    max_err = 0.0
    for k in range(nsteps):
        t = ts[k]
        if k in snap_idx:
            snaps[snap_idx[k]] = AtomicState(y[:2].copy(), y[2].copy(), state.t + t)
        if g.error_check_every and k % g.error_check_every == g.error_check_every // 2:
            full = step(t, y, dt, e_half, e_full)
            eq = np.exp(L * dt / 4)
            half = step(t + dt / 2, step(t, y, dt / 2, eq, e_half), dt / 2, eq, e_half)
            scale = max(np.max(np.abs(half)), 1e-300)
            err = np.max(np.abs(full - half)) / scale
            if np.max(np.abs(half)) <= 1e-12:
                err = 0.0
            max_err = max(max_err, err)
            if err > g.error_tol:
                raise SolverError(f"local error {err:.2e} exceeds {g.error_tol:.1e} at t={t:.3f}; reduce dt")
            y = full
        else:
            y = step(t, y, dt, e_half, e_full)
        if not np.all(np.isfinite(y)):
            raise SolverError(f"non-finite state at t={t + dt:.3f}")
        record(k + 1, y)
        if k + 1 in break_idx:
            lefts[k + 1] = boundary(np.nextafter(ts[k + 1], -np.inf)) + W_exit @ y[:2].reshape(-1)
    if nsteps in snap_idx:
        snaps[snap_idx[nsteps]] = AtomicState(y[:2].copy(), y[2].copy(), state.t + duration)
    final = AtomicState(y[:2].copy(), y[2].copy(), state.t + duration)
    log.debug("evolve: %d steps, dt=%g, nz=%d, max local error %.2e", nsteps, dt, nz, max_err)
    return Trajectory(ts + state.t, out, inp, e_opt, e_spin, final, snaps, max_err, lefts)


def _stage_len(x: float, dt: float) -> float:
    return math.ceil(x / dt - 1e-9) * dt


def _input_energy(cfg: ProtocolConfig) -> float:
    if cfg.pulse.shape == "rectangular":
        return float(cfg.pulse.duration)
    dt = cfg.grid.dt / 4
    t = np.arange(int(round(_stage_len(cfg.pulse.duration, cfg.grid.dt) / dt)) + 1) * dt
    return float(simpson(np.abs(cfg.pulse.amplitude(t)) ** 2, x=t))


def store(cfg: ProtocolConfig) -> tuple[MemoryReport, AtomicState]:
    """Write-in and dark interval; returns a partial report and the stored state."""
    g = cfg.grid
    off = cfg.write_off_time + (cfg.ramp_time if cfg.switch_profile == "linear" else 0.0)
    write_len = _stage_len(max(off, cfg.pulse.duration) + cfg.settle_time, g.dt)
    st0 = AtomicState.empty(g.nz)
    snap_t = _stage_len(cfg.write_off_time, g.dt)
    traj = evolve(cfg, st0, write_len, boundary=lambda t: complex(cfg.pulse.amplitude(t)),
                  control=_control_profile(cfg, "write"), snapshot_times=(snap_t,),
                  breaks=(cfg.pulse.duration,) if cfg.pulse.shape == "rectangular" else ())
    e_in = _input_energy(cfg)
    leak = traj.output_energy() / e_in
    state = traj.final
    dark = _stage_len(cfg.storage_time, g.dt)
    dissipated = traj.dissipated() + traj.spin_dissipated(cfg.spin_decay)
    if dark > 0:
        dtraj = evolve(cfg, state, dark, control=_control_profile(cfg, "dark"))
        dissipated += dtraj.dissipated() + dtraj.spin_dissipated(cfg.spin_decay)
        state = dtraj.final
    w = 2 * math.pi * cfg.medium.depth
    spin_e = w * _integral(np.abs(state.S) ** 2, 1.0 / g.nz)
    opt_e = w * _integral((np.abs(state.P) ** 2).sum(0), 1.0 / g.nz)
    if spin_e > 0 and opt_e > 1e-4 * spin_e:
        warnings.warn(f"optical coherences still hold {opt_e / spin_e:.1e} of the spin energy",
                      ResidualCoherenceWarning, stacklevel=2)
    sigma = math.sqrt(w) * state.S
    report = MemoryReport(
        leakage=leak, spin_wave=sigma, zeta=g.zeta, retrieved_waveform=None, efficiency=0.0,
        direction=cfg.read_direction, input_energy=e_in, stored_energy=float(spin_e),
        dissipated=dissipated / e_in, write=traj,
        spin_wave_at_switch=math.sqrt(w) * traj.snapshots[snap_t].S if snap_t in traj.snapshots else sigma,
    )
    return report, state


def retrieve(cfg: ProtocolConfig, stored: AtomicState, input_energy: Optional[float] = None) -> MemoryReport:
    """Read the stored spin wave out with the control back on."""
    g = cfg.grid
    e_in = _input_energy(cfg) if input_energy is None else input_energy
    st = stored.mirrored() if cfg.read_direction == "backward" else stored.copy()
    traj = evolve(cfg, st, _stage_len(cfg.read_time, g.dt), control=_control_profile(cfg, "read"))
    rec = FieldRecord(traj.t - traj.t[0], traj.output, traj.input, e_in, traj.output_energy(),
                      metadata={"dt": g.dt, "nz": g.nz, "direction": cfg.read_direction})
    w = 2 * math.pi * cfg.medium.depth
    return MemoryReport(
        leakage=math.nan, spin_wave=math.sqrt(w) * st.S, zeta=g.zeta, retrieved_waveform=rec,
        efficiency=traj.output_energy() / e_in, direction=cfg.read_direction, input_energy=e_in,
        stored_energy=float(w * _integral(np.abs(st.S) ** 2, 1.0 / g.nz)),
        dissipated=(traj.dissipated() + traj.spin_dissipated(cfg.spin_decay)) / e_in, read=traj,
    )


def run_protocol(cfg: ProtocolConfig) -> MemoryReport:
    """store -> retrieve; dissipated collects both stages."""
    rep, state = store(cfg)
    rd = retrieve(cfg, state, rep.input_energy)
    rep.retrieved_waveform = rd.retrieved_waveform
    rep.efficiency = rd.efficiency
    rep.dissipated += rd.dissipated
    rep.read = rd.read
    rep.residual = float(rd.read.optical_energy[-1] + rd.read.spin_energy[-1]) / rep.input_energy
    return rep
