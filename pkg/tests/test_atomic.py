import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import Rational
from sympy.physics.quantum.cg import CG
from sympy.physics.wigner import wigner_3j as sym3j
from sympy.physics.wigner import wigner_6j as sym6j

from ramanmem.atomic import (
    CESIUM_D1,
    AtomModel,
    build_couplings,
    clebsch_gordan,
    dipole_factor,
    wigner3j,
    wigner6j,
)

half = st.integers(0, 8).map(lambda k: Fraction(k, 2))


def _proj(j):
    return [j - k for k in range(int(2 * j) + 1)]


def test_3j_known_values():
    assert wigner3j(1, 1, 0, 0, 0, 0) == pytest.approx(-1 / math.sqrt(3), abs=1e-15)
    assert wigner3j(1, 1, 2, 1, 1, -2) == pytest.approx(1 / math.sqrt(5), abs=1e-15)
    assert wigner3j(0.5, 0.5, 1, 0.5, -0.5, 0) == pytest.approx(1 / math.sqrt(6), abs=1e-15)


def test_6j_known_value():
    assert wigner6j(0.5, 0.5, 1, 0.5, 0.5, 1) == pytest.approx(1 / 6, abs=1e-15)


def test_selection_rules_give_zero():
    assert wigner3j(1, 1, 3, 0, 0, 0) == 0.0  # triangle
    assert wigner3j(1, 1, 1, 1, 0, 0) == 0.0  # sum of projections
    assert wigner3j(1, 1, 1, 0, 0, 0) == 0.0  # odd J with all m = 0
    assert wigner6j(1, 1, 3, 1, 1, 1) == 0.0


@pytest.mark.parametrize("bad", [0.3, 1 / 3, "x", None])
def test_non_half_integers_rejected(bad):
    with pytest.raises(ValueError):
        wigner3j(bad, 1, 1, 0, 0, 0)


@settings(max_examples=200, deadline=None)
@given(half, half, half, st.data())
def test_3j_matches_sympy(j1, j2, j3, data):
    m1 = data.draw(st.sampled_from(_proj(j1)))
    m2 = data.draw(st.sampled_from(_proj(j2)))
    m3 = -m1 - m2
    ref = float(sym3j(*(Rational(x.numerator, x.denominator) for x in (j1, j2, j3, m1, m2, m3))))
    assert wigner3j(j1, j2, j3, m1, m2, m3) == pytest.approx(ref, abs=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*(half for _ in range(6))))
def test_6j_matches_sympy(js):
    try:
        ref = float(sym6j(*(Rational(x.numerator, x.denominator) for x in js)))
    except ValueError:
        # sympy refuses non-triangular arguments; the symbol is zero there
        ref = 0.0
    assert wigner6j(*js) == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("j1,j2", [(a / 2, b / 2) for a in range(0, 13) for b in range(a, 13)])
def test_3j_orthogonality(j1, j2):
    # the matrix sqrt(2j+1) * 3j(j1 j2 j; m1 m2 -m) is orthogonal
    rows = [(m1, m2) for m1 in _proj(j1) for m2 in _proj(j2)]
    js = [abs(j1 - j2) + k for k in range(int(j1 + j2 - abs(j1 - j2)) + 1)]
    cols = [(j, m) for j in js for m in _proj(j)]
    assert len(rows) == len(cols)
    index = {c: k for k, c in enumerate(cols)}
    U = np.zeros((len(rows), len(cols)))
    for r, (m1, m2) in enumerate(rows):
        for j in js:
            if abs(m1 + m2) <= j:
                U[r, index[(j, m1 + m2)]] = math.sqrt(2 * j + 1) * wigner3j(j1, j2, j, m1, m2, -(m1 + m2))
    np.testing.assert_allclose(U.T @ U, np.eye(len(cols)), atol=1e-12)
    np.testing.assert_allclose(U @ U.T, np.eye(len(rows)), atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8), st.data())
def test_3j_symmetries(a, b, c, data):
    j1, j2, j3 = Fraction(a, 2), Fraction(b, 2), Fraction(c, 2)
    m1 = data.draw(st.sampled_from(_proj(j1)))
    m2 = data.draw(st.sampled_from(_proj(j2)))
    m3 = -m1 - m2
    v = wigner3j(j1, j2, j3, m1, m2, m3)
    assert wigner3j(j2, j3, j1, m2, m3, m1) == pytest.approx(v, abs=1e-14)
    assert wigner3j(j3, j1, j2, m3, m1, m2) == pytest.approx(v, abs=1e-14)
    if (j1 + j2 + j3).denominator == 1:
        sign = -1 if int(j1 + j2 + j3) % 2 else 1
        assert wigner3j(j2, j1, j3, m2, m1, m3) == pytest.approx(sign * v, abs=1e-14)
        assert wigner3j(j1, j2, j3, -m1, -m2, -m3) == pytest.approx(sign * v, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(half, half, st.data())
def test_clebsch_gordan_matches_sympy(j1, j2, data):
    j = data.draw(st.sampled_from([abs(j1 - j2) + k for k in range(int(j1 + j2 - abs(j1 - j2)) + 1)]))
    m1 = data.draw(st.sampled_from(_proj(j1)))
    m2 = data.draw(st.sampled_from(_proj(j2)))
    R = lambda x: Rational(x.numerator, x.denominator)  # noqa: E731
    ref = float(CG(R(j1), R(m1), R(j2), R(m2), R(j), R(m1 + m2)).doit())
    assert clebsch_gordan(j1, m1, j2, m2, j, m1 + m2) == pytest.approx(ref, abs=1e-13)


def _product_basis_dipole(I, fg, mg, fe, me, q):
    """<F' M'| d_q |F M> by expanding both hyperfine states in |J mJ>|I mI>.

    The electronic element <J' mJ'| d_q |J mJ> = <J mJ; 1 q | J' mJ'> with
    reduced element sqrt(2J'+1)/sqrt(2J'+1) = 1 in branching units.
    """
    R = lambda x: Rational(Fraction(x).numerator, Fraction(x).denominator)  # noqa: E731
    J = Rational(1, 2)
    tot = 0
    for mj in (J, -J):
        mi = R(mg) - mj
        if abs(mi) > I:
            continue
        a = CG(J, mj, I, mi, R(fg), R(mg)).doit()
        mjp = mj + q
        if abs(mjp) > J:
            continue
        b = CG(J, mjp, I, mi, R(fe), R(me)).doit()
        tot += a * b * CG(J, mj, 1, q, J, mjp).doit()
    return float(tot)


def test_cs_couplings_match_product_basis_oracle():
    cs = build_couplings(CESIUM_D1)
    I = Rational(7, 2)
    st_ = CESIUM_D1.states()
    (fm, mm), (fm2, mm2), (fn, mn), (fn2, mn2) = st_["m"], st_["m'"], st_["n"], st_["n'"]
    p_n = _product_basis_dipole(I, fm, mm, fn, mn, -1)
    p_np = _product_basis_dipole(I, fm, mm, fn2, mn2, -1)
    c_n = _product_basis_dipole(I, fm2, mm2, fn, mn, 1)
    c_np = _product_basis_dipole(I, fm2, mm2, fn2, mn2, 1)
    assert cs.rho == pytest.approx(c_np / c_n, abs=1e-12)
    assert cs.probe_ratio == pytest.approx(p_np / p_n, abs=1e-12)
    assert abs(cs.probe_to_n) == pytest.approx(abs(p_n), abs=1e-12)
    assert abs(cs.control_to_nprime) == pytest.approx(abs(c_np), abs=1e-12)


def test_cs_ratio_values():
    cs = build_couplings(CESIUM_D1)
    assert cs.rho == pytest.approx(math.sqrt(7), abs=1e-12)
    assert cs.probe_ratio == pytest.approx(-1 / math.sqrt(7), abs=1e-12)


@pytest.mark.parametrize("f_e", [3, 4])
def test_branching_sums_to_one(f_e):
    for m_e in range(-f_e, f_e + 1):
        tot = sum(dipole_factor(CESIUM_D1, f_g, m_g, f_e, m_e, q) ** 2
                  for f_g in (3, 4) for m_g in range(-f_g, f_g + 1) for q in (-1, 0, 1))
        assert tot == pytest.approx(1.0, abs=1e-13)


def test_stretched_state_selection():
    # sigma+ cannot leave |F=4, M=4>: no excited sublevel has M' = 5
    for f_e in (3, 4):
        for m_e in range(-f_e, f_e + 1):
            assert dipole_factor(CESIUM_D1, 4, 4, f_e, m_e, +1) == 0.0
    # sigma- reaches exactly the two M' = 3 sublevels
    reach = [(f_e, m_e) for f_e in (3, 4) for m_e in range(-f_e, f_e + 1)
             if dipole_factor(CESIUM_D1, 4, 4, f_e, m_e, -1) != 0.0]
    assert reach == [(3, 3), (4, 3)]


def test_missing_sublevel_gives_zero():
    assert dipole_factor(CESIUM_D1, 3, 4, 3, 3, -1) == 0.0


def test_hyperfine_default_is_256():
    assert CESIUM_D1.hyperfine_splitting == 256.0
    assert AtomModel().hyperfine_splitting == 256.0


def test_atom_rejects_bad_spin():
    with pytest.raises(ValueError):
        AtomModel(nuclear_spin=0.25)


def test_half_spin_scheme_is_coupled():
    cs = build_couplings(AtomModel(nuclear_spin=Fraction(1, 2)))
    assert cs.probe_to_n != 0.0 and cs.control_to_n != 0.0
