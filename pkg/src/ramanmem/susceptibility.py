"""Control-dressed Green's functions and the probe susceptibility.

Conventions (hbar = gamma = 1):

* probe detuning ``delta_bar`` is measured from the |m> -> |n> line, so the
  on-shell energy argument of the Green's functions equals ``delta_bar``;
* control detuning ``Delta`` is measured from |m'> -> |n>; the state
  |m'> + control photon therefore sits at energy ``Delta``;
* |n'> sits at ``atom.hyperfine_splitting``;
* susceptibilities are returned in units of n0 * lambdabar**3.

The dipole factors from :mod:`ramanmem.atomic` are branching amplitudes,
so the squared dipole of a unit-strength transition equals
``3/4 * hbar * gamma * lambdabar**3``; this is the ``DIPOLE_SCALE`` below.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import brentq

from .atomic import AtomModel, CouplingSet, build_couplings

__all__ = [
    "DIPOLE_SCALE",
    "PoleProximityError",
    "ControlField",
    "MomentumDistribution",
    "DressedGreens",
    "SusceptibilitySpectrum",
    "Resonance",
    "quasi_energies",
    "greens_matrix",
    "susceptibility",
    "susceptibility_derivative",
    "scan_spectrum",
    "find_at_resonances",
    "dispersion_swing",
    "eit_diagnostics",
    "optical_depth",
    "kramers_kronig_real",
    "write_spectrum_csv",
    "read_spectrum_csv",
]

DIPOLE_SCALE = 0.75
POLE_TOL = 1e-13

Model = Literal["full", "lambda", "bare"]


class PoleProximityError(ArithmeticError):
    """Raised when a Green's function is evaluated on top of a pole."""


@dataclass(frozen=True)
class ControlField:
    """Monochromatic sigma+ control field.

    ``rabi`` is defined on the lower transition, rabi = 2|V_{nm'}|; the
    coupling to |n'> is fixed by ``couplings.rho``.
    """

    detuning: float
    rabi: float
    couplings: CouplingSet

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError("rabi must be non-negative")

    @property
    def v_n(self) -> float:
        return 0.5 * self.rabi

    @property
    def v_nprime(self) -> float:
        return 0.5 * self.rabi * self.couplings.rho

    @classmethod
    def for_atom(cls, atom: AtomModel, detuning: float, rabi: float) -> "ControlField":
        return cls(detuning=float(detuning), rabi=float(rabi), couplings=build_couplings(atom))


@dataclass(frozen=True)
class MomentumDistribution:
    """Atomic momentum distribution entering the susceptibility average.

    Momenta are in units of hbar*k (probe wavenumber); ``mass`` is the
    dimensionless M with p**2/(2M) in units of hbar*gamma, i.e.
    M = gamma / (2 * omega_recoil). ``temperature`` is k_B*T/(hbar*gamma).
    Only p_z matters: transverse kinetic energy cancels between the
    on-shell energy and the excited-state propagator.
    """

    kind: Literal["frozen", "thermal"] = "frozen"
    mass: float = 1220.0
    temperature: float = 0.0
    quadrature_order: int = 40
    include_recoil: bool = True
    control_direction: float = 1.0

    def __post_init__(self):
        if self.kind not in ("frozen", "thermal"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "thermal":
            if self.mass <= 0 or self.temperature < 0 or self.quadrature_order < 1:
                raise ValueError("thermal distribution needs mass > 0, temperature >= 0, order >= 1")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Ground-state p_z nodes and weights; weights sum to one."""
        if self.kind == "frozen":
            return np.zeros(1), np.ones(1)
        x, w = np.polynomial.hermite_e.hermegauss(self.quadrature_order)
        sigma = math.sqrt(self.mass * self.temperature)
        return sigma * x, w / math.sqrt(2.0 * math.pi)

    def excited_momentum(self, p):
        """p'_z = p_z + hbar*k after absorbing a probe photon."""
        return p + (1.0 if self.include_recoil else 0.0)


FROZEN = MomentumDistribution()


def _dressing_root(v: float, x):
    """sqrt(v**2 + (x - i/2)**2 / 4) on the branch continuous in real x."""
    x = np.asarray(x, dtype=complex)
    u = 0.5 * (x - 0.5j)
    if abs(v) >= 0.25:
        return np.sqrt(v * v + u * u)
    # weak dressing: the principal cut would be crossed at x = 0
    return u * np.sqrt(1.0 + (v * v) / (u * u))


def quasi_energies(control: ControlField, atom: AtomModel, state: str = "n", momentum: float = 0.0,
                   mass: float = math.inf, control_direction: float = 1.0):
    """Quasi-energies E_{s+}, E_{s-} of excited state s dressed by the control.

    ``momentum`` is the excited-atom p_z (units of hbar*k); the pair are
    the eigenvalues of [[Delta - k.p/M, V], [V*, E_s - i/2]] offset by p**2/2M.
    ``mass`` is infinite for atoms at rest; ``control_direction`` is the
    projection of the control wavevector on z in units of the probe one.
    """
    if state == "n":
        e_s, v = atom.energy_n, control.v_n
    elif state in ("n'", "nprime"):
        e_s, v = atom.energy_nprime, control.v_nprime
    else:
        raise ValueError(f"invalid state label {state!r}")
    kin = 0.0 if math.isinf(mass) else momentum * momentum / (2 * mass)
    dop = 0.0 if math.isinf(mass) else control_direction * momentum / mass
    omega = control.detuning - dop
    mid = kin + 0.5 * (omega + e_s - 0.5j)
    w = _dressing_root(v, e_s - omega)
    return mid + w, mid - w


@dataclass(frozen=True)
class DressedGreens:
    """2x2 block of dressed excited-state propagators; arrays broadcast.

    ``to_ground`` holds the resolvent entries (G_{n m'}, G_{n' m'}) linking
    each excited state to |m'> + control photon; they are needed for
    energy derivatives only.
    """

    nn: np.ndarray
    nn_p: np.ndarray  # G_{n n'}
    n_pn: np.ndarray  # G_{n' n}
    n_pn_p: np.ndarray
    to_ground: tuple = (0.0, 0.0)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.nn, self.nn_p], [self.n_pn, self.n_pn_p]])


def _check_pole(den, scale, what: str):
    if np.any(np.abs(den) <= POLE_TOL * np.abs(scale)):
        raise PoleProximityError(f"evaluation on a pole of {what}")


def greens_matrix(control: ControlField, atom: AtomModel, energy, momentum: float = 0.0,
                  mass: float = math.inf, lambda_only: bool = False,
                  control_direction: float = 1.0) -> DressedGreens:
    """Closed-form dressed Green's functions at on-shell ``energy``.

    ``momentum`` is the excited-atom p_z. ``lambda_only`` decouples |n'>
    from the control (the three-level reference).
    """
    E = np.asarray(energy, dtype=complex)
    vn = control.v_n
    vnp = 0.0 if lambda_only else control.v_nprime
    kin = 0.0 if math.isinf(mass) else momentum * momentum / (2 * mass)
    dop = 0.0 if math.isinf(mass) else control_direction * momentum / mass
    e = E - kin
    bare_n = e - atom.energy_n + 0.5j
    bare_np = e - atom.energy_nprime + 0.5j
    if control.rabi == 0.0:
        # undressed: the |m'> pole decouples and cancels identically
        _check_pole(bare_n, np.abs(e) + 1.0, "G_nn")
        _check_pole(bare_np, np.abs(e) + 1.0, "G_n'n'")
        zero = np.zeros_like(E)
        return DressedGreens(1.0 / bare_n, zero, zero, 1.0 / bare_np)
    # products (E - E_s+)(E - E_s-) of the quasi-energies, as 2x2 determinants;
    # multiplying through keeps a decoupled |m'> (lambda_only at E = Delta) harmless
    bare_s = e - (control.detuning - dop)
    dress_n = bare_s * bare_n - vn * vn
    dress_np = bare_s * bare_np - vnp * vnp
    t1, t2 = bare_n * dress_np, vn * vn * bare_np
    den_nn = t1 - t2
    _check_pole(den_nn, np.abs(t1) + np.abs(t2), "G_nn")
    t1, t2 = bare_np * dress_n, vnp * vnp * bare_n
    den_pp = t1 - t2
    _check_pole(den_pp, np.abs(t1) + np.abs(t2), "G_n'n'")
    g_nn = dress_np / den_nn
    g_pp = dress_n / den_pp
    g_pn = vnp * vn / den_nn
    g_np = vn * vnp / den_pp
    return DressedGreens(g_nn, g_np, g_pn, g_pp, (vn * bare_np / den_nn, vnp * bare_n / den_pp))


def _weights(control: ControlField, model: str) -> tuple[float, float]:
    c = control.couplings
    if model == "lambda":
        return c.probe_to_n, 0.0
    if model in ("full", "bare"):
        return c.probe_to_n, c.probe_to_nprime
    raise ValueError(f"unknown model {model!r}")


def _effective(control: ControlField, model: str) -> ControlField:
    return replace(control, rabi=0.0) if model == "bare" else control


def _greens_over(atom, ctl, d, dist, lam):
    """(weight, Green's functions) at each momentum node of ``dist``."""
    if dist.kind == "frozen":
        yield 1.0, greens_matrix(ctl, atom, d, lambda_only=lam)
        return
    for p, w in zip(*dist.nodes()):
        e = d + p * p / (2 * dist.mass)
        yield w, greens_matrix(ctl, atom, e, dist.excited_momentum(p), dist.mass, lam, dist.control_direction)


def susceptibility(atom: AtomModel, control: ControlField, delta_bar, dist: MomentumDistribution = FROZEN,
                   model: Model = "full"):
    """Probe susceptibility chi(delta_bar) in units of n0*lambdabar**3."""
    d = np.asarray(delta_bar, dtype=float)
    ctl = _effective(control, model)
    cn, cnp = _weights(ctl, model)
    lam = model == "lambda"
    out = np.zeros(d.shape, dtype=complex)
    for w, g in _greens_over(atom, ctl, d, dist, lam):
        if lam:
            acc = cn * cn * g.nn
        else:
            acc = cn * cn * g.nn + cn * cnp * (g.nn_p + g.n_pn) + cnp * cnp * g.n_pn_p
        out += w * acc
    out *= -DIPOLE_SCALE
    return out if out.ndim else complex(out)


def susceptibility_derivative(atom: AtomModel, control: ControlField, delta_bar,
                              dist: MomentumDistribution = FROZEN, model: Model = "full"):
    """d chi / d delta_bar, from dG/dE = -G**2 of the full resolvent.

    The excited block of G**2 picks up the |m'> column as well:
    d/dE G_ab = -(sum_c G_ac G_cb + G_{a m'} G_{m' b}).
    """
    d = np.asarray(delta_bar, dtype=float)
    ctl = _effective(control, model)
    cn, cnp = _weights(ctl, model)
    lam = model == "lambda"
    cvec = np.array([cn, cnp])
    out = np.zeros(d.shape, dtype=complex)
    for w, gr in _greens_over(atom, ctl, d, dist, lam):
        g = gr.as_matrix()
        col = np.array(np.broadcast_arrays(*(np.asarray(x, dtype=complex) for x in gr.to_ground)))
        if lam:
            g[0, 1] = g[1, 0] = g[1, 1] = 0.0
            col[1] = 0.0
        g2 = np.einsum("ij...,jk...->ik...", g, g) + np.einsum("i...,k...->ik...", col, col)
        out += w * np.einsum("i,ij...,j->...", cvec, g2, cvec)
    out *= DIPOLE_SCALE
    return out if out.ndim else complex(out)


@dataclass
class SusceptibilitySpectrum:
    grid: np.ndarray
    values: np.ndarray
    control: ControlField
    model: str = "full"
    atom: AtomModel = field(default_factory=AtomModel)
    dist: MomentumDistribution = FROZEN

    @property
    def chi_re(self) -> np.ndarray:
        return self.values.real

    @property
    def chi_im(self) -> np.ndarray:
        return self.values.imag

    def evaluate(self, delta_bar):
        """Exact susceptibility off the grid, same parameters."""
        return susceptibility(self.atom, self.control, delta_bar, self.dist, self.model)

    def derivative(self, delta_bar):
        return susceptibility_derivative(self.atom, self.control, delta_bar, self.dist, self.model)


def scan_spectrum(atom: AtomModel, control: ControlField, grid: Sequence[float],
                  dist: MomentumDistribution = FROZEN, model: Model = "full") -> SusceptibilitySpectrum:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be a strictly increasing 1-D sequence")
    vals = np.asarray(susceptibility(atom, control, g, dist, model))
    return SusceptibilitySpectrum(grid=g, values=vals, control=control, model=model, atom=atom, dist=dist)


@dataclass(frozen=True)
class Resonance:
    center: float
    height: float
    fwhm: float


def find_at_resonances(spectrum: SusceptibilitySpectrum) -> list[Resonance]:
    """Absorption peaks of the spectrum.

    Grid maxima bracket each peak; the centre is then polished by a root
    search on d(chi'')/d(delta_bar) and the half-maximum points by root
    searches on the exact chi'', so the result does not depend on the grid
    spacing once the peak is bracketed.
    """
    x, y = spectrum.grid, spectrum.chi_im
    im = lambda d: float(np.imag(spectrum.evaluate(d)))  # noqa: E731
    slope = lambda d: float(np.imag(spectrum.derivative(d)))  # noqa: E731
    peaks = []
    for i in range(1, len(x) - 1):
        if not (y[i] > y[i - 1] and y[i] >= y[i + 1] and y[i] > 0):
            continue
        lo, hi = x[i - 1], x[i + 1]
        try:
            xc = brentq(slope, lo, hi, xtol=1e-13) if slope(lo) > 0 > slope(hi) else x[i]
        except ValueError:
            xc = x[i]
        h = im(xc)
        half = 0.5 * h
        left = right = math.nan
        j = i
        while j > 0 and y[j] > half:
            j -= 1
        if y[j] <= half:
            left = brentq(lambda d: im(d) - half, x[j], max(x[j + 1], xc), xtol=1e-13) if j < i else x[j]
        j = i
        while j < len(x) - 1 and y[j] > half:
            j += 1
        if y[j] <= half:
            right = brentq(lambda d: im(d) - half, min(x[j - 1], xc), x[j], xtol=1e-13) if j > i else x[j]
        peaks.append(Resonance(float(xc), h, float(right - left)))
    return peaks


def dispersion_swing(spectrum: SusceptibilitySpectrum, center: float) -> float:
    """max - min of chi' over the two dispersive extrema flanking a peak at ``center``.

    Walks from the peak to the nearest local maximum of chi' on one side and
    the nearest local minimum on the other, then polishes both on the exact
    derivative.
    """
    x, y = spectrum.grid, spectrum.chi_re
    i = int(np.clip(np.searchsorted(x, center), 1, len(x) - 2))
    slope = lambda d: float(np.real(spectrum.derivative(d)))  # noqa: E731

    def walk(k, step, better, sign):
        while 0 < k < len(x) - 1 and better(y[k + step], y[k]):
            k += step
        if not 0 < k < len(x) - 1:
            raise ValueError("dispersive extremum not inside the grid")
        xe = x[k]
        # the extremum sits in one of the two cells next to x[k], on its own side of the peak
        for lo, hi in ((x[k - 1], x[k]), (x[k], x[k + 1])):
            lo, hi = (lo, min(hi, center)) if step < 0 else (max(lo, center), hi)
            if hi > lo and sign * slope(lo) > 0 > sign * slope(hi):
                xe = brentq(slope, lo, hi, xtol=1e-13)
                break
        return float(np.real(spectrum.evaluate(xe)))

    top = walk(i - 1, -1, lambda a, b: a > b, 1)
    bottom = walk(i, 1, lambda a, b: a < b, -1)
    return top - bottom


def eit_diagnostics(spectrum: SusceptibilitySpectrum) -> tuple[float, float]:
    """(shift, residual absorption) of the transparency point.

    The transparency point is the local minimum of chi'' nearest the
    two-photon resonance, polished by a root search on d(chi'')/d(delta_bar).
    """
    x, y = spectrum.grid, spectrum.chi_im
    delta = spectrum.control.detuning
    mins = [i for i in range(1, len(x) - 1) if y[i] <= y[i - 1] and y[i] <= y[i + 1]]
    # a local minimum only counts if absorption rises on both sides
    mins = [i for i in mins if np.any(y[:i] > y[i]) and np.any(y[i + 1:] > y[i])]
    if not mins:
        raise ValueError("no transparency minimum between dressed peaks on this grid")
    i = min(mins, key=lambda k: abs(x[k] - delta))
    slope = lambda d: float(np.imag(spectrum.derivative(d)))  # noqa: E731
    a, b = x[i - 1], x[i + 1]
    if y[i] == 0.0:
        xm = x[i]
    elif slope(a) < 0 < slope(b):
        xm = brentq(slope, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        if slope(x[i]) == 0.0:
            xm = x[i]
    else:
        xm = x[i]
    resid = float(np.imag(spectrum.evaluate(xm)))
    return float(xm - delta), resid


def optical_depth(spectrum: SusceptibilitySpectrum, delta_bar, depth_scale: float):
    """Monochromatic optical depth b = 4*pi*chi''*b0 (chi'' in n0*lambdabar**3)."""
    if depth_scale <= 0:
        raise ValueError("depth_scale must be positive")
    return 4 * math.pi * np.imag(spectrum.evaluate(delta_bar)) * depth_scale


def kramers_kronig_real(grid: np.ndarray, chi_im: np.ndarray, points: np.ndarray) -> np.ndarray:
    """chi' at ``points`` from chi'' on a uniform grid (principal value).

    Uses the alternating-point (Maclaurin) rule, which skips the singular
    node; ``points`` must coincide with grid nodes.
    """
    grid = np.asarray(grid, dtype=float)
    h = grid[1] - grid[0]
    if not np.allclose(np.diff(grid), h, rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform")
    idx = np.rint((np.asarray(points) - grid[0]) / h).astype(int)
    out = np.empty(len(idx))
    for k, i in enumerate(idx):
        j = np.arange((i + 1) % 2, len(grid), 2)
        out[k] = 2 * h / math.pi * np.sum(chi_im[j] / (grid[j] - grid[i]))
    return out


def write_spectrum_csv(path, spectrum: SusceptibilitySpectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta_bar_gamma", "chi_re", "chi_im", "model"])
        for d, c in zip(spectrum.grid, spectrum.values):
            w.writerow([f"{d:.15e}", f"{c.real:.15e}", f"{c.imag:.15e}", spectrum.model])


def read_spectrum_csv(path) -> tuple[np.ndarray, np.ndarray, str]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    grid = np.array([float(r["delta_bar_gamma"]) for r in rows])
    vals = np.array([complex(float(r["chi_re"]), float(r["chi_im"])) for r in rows])
    return grid, vals, rows[0]["model"] if rows else ""
