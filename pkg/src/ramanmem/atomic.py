"""Angular-momentum algebra and the D1 level scheme of an alkali atom.

Wigner symbols are evaluated from the Racah sums in exact rational
arithmetic; quantum numbers are carried internally as doubled integers.
All frequencies are in units of the natural linewidth gamma.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

__all__ = [
    "AtomModel",
    "CouplingSet",
    "CESIUM_D1",
    "wigner3j",
    "wigner6j",
    "clebsch_gordan",
    "dipole_factor",
    "build_couplings",
]


def _twice(x) -> int:
    """Return 2*x as an int, rejecting anything that is not a half-integer."""
    if isinstance(x, bool):
        raise TypeError("quantum numbers must be numeric, not bool")
    if isinstance(x, int):
        return 2 * x
    if isinstance(x, float):
        y = 2.0 * x
        if y.is_integer():
            return int(y)
        raise ValueError(f"not a half-integer: {x!r}")
    try:
        f = Fraction(x) * 2
    except (TypeError, ValueError) as exc:
        raise ValueError(f"not a half-integer: {x!r}") from exc
    if f.denominator != 1:
        raise ValueError(f"not a half-integer: {x!r}")
    return int(f)


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


def _triangle_ok(a2: int, b2: int, c2: int) -> bool:
    return (
        (a2 + b2 + c2) % 2 == 0
        and abs(a2 - b2) <= c2 <= a2 + b2
    )


def _delta(a2: int, b2: int, c2: int) -> Fraction:
    # triangle coefficient, arguments doubled
    return Fraction(
        _fact((a2 + b2 - c2) // 2) * _fact((a2 - b2 + c2) // 2) * _fact((-a2 + b2 + c2) // 2),
        _fact((a2 + b2 + c2) // 2 + 1),
    )


def _signed_sqrt(s: Fraction, rad: Fraction) -> float:
    """s * sqrt(rad) rounded once."""
    if s == 0:
        return 0.0
    # symbols are bounded by 1, so the float conversion cannot overflow
    mag = math.sqrt(s * s * rad)
    return mag if s > 0 else -mag


@lru_cache(maxsize=65536)
def _wigner3j_doubled(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    if m1 + m2 + m3 != 0:
        return 0.0
    if not _triangle_ok(j1, j2, j3):
        return 0.0
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(m) > j or (j - m) % 2:
            return 0.0
    # Racah sum; every quantity below is an integer once halved
    h = lambda *xs: sum(xs) // 2  # noqa: E731
    kmin = max(0, h(j2, -j3, -m1), h(j1, -j3, m2))
    kmax = min(h(j1, j2, -j3), h(j1, -m1), h(j2, m2))
    s = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            _fact(k)
            * _fact(h(j3, -j2, m1) + k)
            * _fact(h(j3, -j1, -m2) + k)
            * _fact(h(j1, j2, -j3) - k)
            * _fact(h(j1, -m1) - k)
            * _fact(h(j2, m2) - k)
        )
        s += Fraction((-1) ** k, den)
    rad = _delta(j1, j2, j3) * (
        _fact(h(j1, m1)) * _fact(h(j1, -m1)) * _fact(h(j2, m2))
        * _fact(h(j2, -m2)) * _fact(h(j3, m3)) * _fact(h(j3, -m3))
    )
    if h(j1, -j2, -m3) % 2:
        s = -s
    return _signed_sqrt(s, rad)


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3-j symbol (j1 j2 j3; m1 m2 m3).

    Arguments may be ints, floats or Fractions but must be half-integers.
    Returns 0 whenever a triangle or projection selection rule fails.
    """
    return _wigner3j_doubled(*(_twice(x) for x in (j1, j2, j3, m1, m2, m3)))


@lru_cache(maxsize=65536)
def _wigner6j_doubled(j1: int, j2: int, j3: int, j4: int, j5: int, j6: int) -> float:
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle_ok(*t) for t in triads):
        return 0.0
    a = [sum(t) // 2 for t in triads]
    b = [(j1 + j2 + j4 + j5) // 2, (j2 + j3 + j5 + j6) // 2, (j3 + j1 + j6 + j4) // 2]
    s = Fraction(0)
    for t in range(max(a), min(b) + 1):
        den = _fact(b[0] - t) * _fact(b[1] - t) * _fact(b[2] - t)
        for ai in a:
            den *= _fact(t - ai)
        s += Fraction((-1) ** t * _fact(t + 1), den)
    rad = Fraction(1)
    for t in triads:
        rad *= _delta(*t)
    return _signed_sqrt(s, rad)


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}; 0 if any triad is not a triangle."""
    return _wigner6j_doubled(*(_twice(x) for x in (j1, j2, j3, j4, j5, j6)))


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """<j1 m1; j2 m2 | j m> in the Condon-Shortley convention."""
    j1_2, j2_2, m_2 = _twice(j1), _twice(j2), _twice(m)
    phase = -1.0 if ((j1_2 - j2_2 + m_2) // 2) % 2 else 1.0
    return phase * math.sqrt(_twice(j) + 1) * wigner3j(j1, j2, j, m1, m2, -Fraction(m))


@dataclass(frozen=True)
class AtomModel:
    """Hyperfine structure of the D1 line (J = 1/2 -> J' = 1/2).

    Energies are in units of hbar*gamma. Ground Zeeman sublevels sit at
    zero; the lower excited state |n> is the origin of the probe-detuning
    axis, so |n'> lies at ``hyperfine_splitting``.
    """

    nuclear_spin: Fraction = Fraction(7, 2)
    hyperfine_splitting: float = 256.0
    natural_rate: float = 1.0

    def __post_init__(self):
        i2 = _twice(self.nuclear_spin)
        if i2 <= 0:
            raise ValueError("nuclear_spin must be positive")
        object.__setattr__(self, "nuclear_spin", Fraction(i2, 2))
        if not self.hyperfine_splitting > 0:
            raise ValueError("hyperfine_splitting must be positive")
        if self.natural_rate != 1.0:
            raise ValueError("frequencies are measured in units of gamma; natural_rate must be 1")

    # electronic angular momenta of the D1 line
    j_ground = Fraction(1, 2)
    j_excited = Fraction(1, 2)

    @property
    def f_upper(self) -> Fraction:
        return self.nuclear_spin + Fraction(1, 2)

    @property
    def f_lower(self) -> Fraction:
        return self.nuclear_spin - Fraction(1, 2)

    @property
    def energy_n(self) -> float:
        return 0.0

    @property
    def energy_nprime(self) -> float:
        return self.energy_n + self.hyperfine_splitting

    @property
    def ground_energies(self) -> tuple[float, float]:
        return (0.0, 0.0)

    def states(self) -> dict[str, tuple[Fraction, Fraction]]:
        """(F, M) labels of the four working states m, m', n, n'."""
        fp = self.f_upper
        return {
            "m": (fp, fp),
            "m'": (fp, fp - 2),
            "n": (self.f_lower, fp - 1),
            "n'": (self.f_upper, fp - 1),
        }


CESIUM_D1 = AtomModel(nuclear_spin=Fraction(7, 2), hyperfine_splitting=256.0)


@dataclass(frozen=True)
class CouplingSet:
    """Dimensionless dipole factors of the working transitions.

    Units: the reduced element is fixed so that the squared factors out of
    any excited sublevel, summed over all ground sublevels and
    polarizations, equal one (i.e. they are branching amplitudes).
    """

    probe_to_n: float
    probe_to_nprime: float
    control_to_n: float
    control_to_nprime: float

    @property
    def rho(self) -> float:
        """V_{n'm'} / V_{nm'}, the fixed control coupling ratio."""
        return self.control_to_nprime / self.control_to_n

    @property
    def probe_ratio(self) -> float:
        return self.probe_to_nprime / self.probe_to_n


def dipole_factor(atom: AtomModel, f_g, m_g, f_e, m_e, q: int) -> float:
    """<F' M'| d_q |F M> for the D1 line in branching-amplitude units.

    The hyperfine reduced element is recoupled from the electronic one
    with a 6-j symbol. Returns 0 for sublevels that do not exist.
    """
    I, J, Jp = atom.nuclear_spin, atom.j_ground, atom.j_excited
    f_g, m_g, f_e, m_e = (Fraction(_twice(x), 2) for x in (f_g, m_g, f_e, m_e))
    if abs(m_g) > f_g or abs(m_e) > f_e:
        return 0.0
    # <F'||d||F> / <J'||d||J>
    ph = (-1) ** int(Jp + I + f_g + 1)
    red = ph * math.sqrt((2 * f_e + 1) * (2 * f_g + 1)) * wigner6j(Jp, f_e, I, f_g, J, 1)
    ph3 = (-1) ** int(f_e - m_e)
    amp = ph3 * wigner3j(f_e, 1, f_g, -m_e, q, m_g) * red
    # <J'||d||J> = sqrt(2J'+1) makes the total branching sum unity
    return amp * math.sqrt(2 * Jp + 1)


def build_couplings(atom: AtomModel) -> CouplingSet:
    """Probe (sigma-) and control (sigma+) dipole factors of the scheme."""
    st = atom.states()
    for label, (f, m) in st.items():
        if abs(m) > f or f < 0:
            raise ValueError(f"state {label} = |F={f}, M={m}> does not exist for I={atom.nuclear_spin}")
    (fm, mm), (fm2, mm2) = st["m"], st["m'"]
    (fn, mn), (fn2, mn2) = st["n"], st["n'"]
    cs = CouplingSet(
        probe_to_n=dipole_factor(atom, fm, mm, fn, mn, -1),
        probe_to_nprime=dipole_factor(atom, fm, mm, fn2, mn2, -1),
        control_to_n=dipole_factor(atom, fm2, mm2, fn, mn, +1),
        control_to_nprime=dipole_factor(atom, fm2, mm2, fn2, mn2, +1),
    )
    if cs.control_to_n == 0.0 or cs.probe_to_n == 0.0:
        raise ValueError(f"lower excited state is not coupled for I={atom.nuclear_spin}")
    return cs
