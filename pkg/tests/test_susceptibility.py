import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramanmem import (
    FROZEN,
    AtomModel,
    ControlField,
    MomentumDistribution,
    PoleProximityError,
    dispersion_swing,
    eit_diagnostics,
    find_at_resonances,
    greens_matrix,
    kramers_kronig_real,
    optical_depth,
    quasi_energies,
    scan_spectrum,
    susceptibility,
    susceptibility_derivative,
)
from ramanmem.susceptibility import read_spectrum_csv, write_spectrum_csv


def _hamiltonian(atom, control, lambda_only=False):
    vnp = 0.0 if lambda_only else control.v_nprime
    return np.array([
        [atom.energy_n - 0.5j, 0.0, control.v_n],
        [0.0, atom.energy_nprime - 0.5j, vnp],
        [control.v_n, vnp, control.detuning],
    ], dtype=complex)


def _resolvent_block(atom, control, E, lambda_only=False):
    H = _hamiltonian(atom, control, lambda_only)
    return np.linalg.inv(E * np.eye(3) - H)


def _chi_oracle(atom, control, E, model="full"):
    """-(3/4) sum c c G from an explicit 3x3 inverse."""
    cs = control.couplings
    c = np.array([cs.probe_to_n, 0.0 if model == "lambda" else cs.probe_to_nprime])
    if model == "bare":
        G = np.diag([1.0 / (E - atom.energy_n + 0.5j), 1.0 / (E - atom.energy_nprime + 0.5j)])
    else:
        G = _resolvent_block(atom, control, E, lambda_only=(model == "lambda"))[:2, :2]
    return -0.75 * c @ G @ c


@settings(max_examples=200, deadline=None)
@given(st.floats(-400, 400), st.floats(-100, 300), st.floats(1e-6, 60), st.booleans())
def test_greens_matrix_equals_inverse(E, delta, rabi, lam):
    atom = AtomModel()
    ctl = ControlField.for_atom(atom, delta, rabi)
    g = greens_matrix(ctl, atom, E, lambda_only=lam).as_matrix()
    ref = _resolvent_block(atom, ctl, E, lam)[:2, :2]
    assert np.max(np.abs(g - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))


@settings(max_examples=100, deadline=None)
@given(st.floats(-100, 300), st.floats(0.0, 60))
def test_quasi_energies_are_eigenvalues(delta, rabi):
    atom = AtomModel()
    ctl = ControlField.for_atom(atom, delta, rabi)
    for label, e_s, v in (("n", atom.energy_n, ctl.v_n), ("n'", atom.energy_nprime, ctl.v_nprime)):
        # trace and determinant; eigvals is ill-conditioned at exceptional points
        M = np.array([[delta, v], [v, e_s - 0.5j]])
        a, b = quasi_energies(ctl, atom, label)
        assert abs(a + b - np.trace(M)) < 1e-10 * (1 + abs(np.trace(M)))
        assert abs(a * b - np.linalg.det(M)) < 1e-10 * (1 + abs(np.linalg.det(M)))


def test_quasi_energy_rejects_unknown_state(atom):
    with pytest.raises(ValueError):
        quasi_energies(ControlField.for_atom(atom, 0, 1), atom, "m")


def test_greens_pole_raises(atom):
    ctl = ControlField.for_atom(atom, 0.0, 15.0)
    E = np.linalg.eigvals(_hamiltonian(atom, ctl))[0]
    with pytest.raises(PoleProximityError):
        greens_matrix(ctl, atom, E)


@pytest.mark.parametrize("model", ["full", "lambda", "bare"])
def test_susceptibility_matches_oracle(atom, model):
    ctl = ControlField.for_atom(atom, 50.0, 15.0)
    grid = np.linspace(-30, 290, 97)
    chi = susceptibility(atom, ctl, grid, model=model)
    ref = np.array([_chi_oracle(atom, ctl, e, model) for e in grid])
    np.testing.assert_allclose(chi, ref, rtol=1e-10, atol=1e-14)


def test_bare_two_level_peak(atom):
    # an isolated Lorentzian line peaks at (3/2)|c|^2
    ctl = ControlField.for_atom(atom, 0.0, 0.0)
    chi = susceptibility(atom, ctl, 0.0, model="bare")
    c2 = ctl.couplings.probe_to_n ** 2
    assert chi.imag == pytest.approx(1.5 * c2, rel=1e-4)


@settings(max_examples=100, deadline=None)
@given(st.floats(-500, 500), st.floats(-100, 300), st.one_of(st.just(0.0), st.floats(1e-6, 60)),
       st.sampled_from(["full", "lambda", "bare"]))
def test_absorption_is_non_negative(E, delta, rabi, model):
    atom = AtomModel()
    ctl = ControlField.for_atom(atom, delta, rabi)
    assert susceptibility(atom, ctl, E, model=model).imag >= 0.0


def test_derivative_matches_finite_difference(atom):
    ctl = ControlField.for_atom(atom, 50.0, 15.0)
    x = np.linspace(40, 60, 41) + 0.0123
    h = 1e-5
    fd = (susceptibility(atom, ctl, x + h) - susceptibility(atom, ctl, x - h)) / (2 * h)
    an = susceptibility_derivative(atom, ctl, x)
    np.testing.assert_allclose(an, fd, rtol=1e-6, atol=1e-9)


def test_autler_townes_doublet_at_resonance(atom):
    ctl = ControlField.for_atom(atom, 0.0, 15.0)
    sp = scan_spectrum(atom, ctl, np.linspace(-30, 30, 6001))
    peaks = sorted(r.center for r in find_at_resonances(sp))
    assert len(peaks) == 2
    assert peaks[1] - peaks[0] == pytest.approx(15.0, rel=0.1)


def test_triplet_includes_upper_level(atom):
    ctl = ControlField.for_atom(atom, 0.0, 15.0)
    sp = scan_spectrum(atom, ctl, np.linspace(-30, 290, 16001))
    centers = [r.center for r in find_at_resonances(sp)]
    assert len(centers) == 3
    assert any(abs(c - 256.0) < 5.0 for c in centers)


def test_lorentzian_peak_and_swing(atom):
    # a lone line: chi = -(3/4)c^2/(E + i/2), peak 1.5c^2 at 0, FWHM 1, dispersion swing 1.5c^2
    ctl = ControlField.for_atom(atom, 0.0, 0.0)
    sp = scan_spectrum(atom, ctl, np.linspace(-5, 5, 37), model="lambda")
    (r,) = find_at_resonances(sp)
    c2 = ctl.couplings.probe_to_n ** 2
    assert r.center == pytest.approx(0.0, abs=1e-12)
    assert r.height == pytest.approx(1.5 * c2, rel=1e-12)
    assert r.fwhm == pytest.approx(1.0, rel=1e-10)
    assert dispersion_swing(sp, r.center) == pytest.approx(1.5 * c2, rel=1e-12)


@pytest.mark.parametrize("points", [301, 2801, 20001])
def test_resonances_do_not_depend_on_grid(atom, raman_control, points):
    sp = scan_spectrum(atom, raman_control, np.linspace(42, 56, points))
    (r,) = find_at_resonances(sp)
    ref = scan_spectrum(atom, raman_control, np.linspace(42, 56, 50001))
    (r0,) = find_at_resonances(ref)
    assert (r.center, r.height, r.fwhm) == pytest.approx((r0.center, r0.height, r0.fwhm), rel=1e-9)
    assert dispersion_swing(sp, r.center) == pytest.approx(dispersion_swing(ref, r0.center), rel=1e-9)


def test_lambda_model_has_perfect_transparency(atom):
    ctl = ControlField.for_atom(atom, 0.0, 15.0)
    shift, resid = eit_diagnostics(scan_spectrum(atom, ctl, np.linspace(-20, 20, 4001), model="lambda"))
    assert abs(shift) < 1e-10
    assert abs(resid) < 1e-10


def test_full_model_is_red_shifted_and_lossy(atom):
    ctl = ControlField.for_atom(atom, 0.0, 15.0)
    shift, resid = eit_diagnostics(scan_spectrum(atom, ctl, np.linspace(-20, 20, 4001)))
    assert shift < 0
    assert resid > 0


def test_eit_needs_a_minimum(atom):
    ctl = ControlField.for_atom(atom, 0.0, 15.0)
    with pytest.raises(ValueError):
        eit_diagnostics(scan_spectrum(atom, ctl, np.linspace(20, 30, 101)))


def _lambda_formula(atom, ctl, grid, delta):
    c = ctl.couplings.probe_to_n
    return -0.75 * c * c * (grid - delta) / ((grid + 0.5j) * (grid - delta) - ctl.rabi ** 2 / 4)


def _lambda_gap(hf, delta=0.0, rabi=15.0, light_shift=False):
    far = AtomModel(hyperfine_splitting=hf)
    ctl = ControlField.for_atom(far, delta, rabi)
    grid = np.linspace(delta - 5, delta + 5, 2001)
    d_eff = delta + (ctl.v_nprime ** 2 / (delta - hf) if light_shift else 0.0)
    ref = _lambda_formula(far, ctl, grid, d_eff)
    return np.max(np.abs(susceptibility(far, ctl, grid) - ref)) / np.max(np.abs(ref))


def test_lambda_limit_converges_as_inverse_splitting():
    gaps = [_lambda_gap(hf) for hf in (1e6, 1e7, 1e8)]
    assert gaps[0] / gaps[1] == pytest.approx(10.0, rel=0.02)
    assert gaps[1] / gaps[2] == pytest.approx(10.0, rel=0.02)
    assert gaps[2] < 1e-5


def test_lambda_limit_residual_is_the_far_level_light_shift():
    # absorbing the |n'> light shift of |m'> into delta removes most of the gap
    assert _lambda_gap(1e6, light_shift=True) < 0.2 * _lambda_gap(1e6)


def test_kramers_kronig_consistency(atom):
    ctl = ControlField.for_atom(atom, 0.0, 15.0)
    grid = np.linspace(-6000, 6000, 1_200_001)
    chi = susceptibility(atom, ctl, grid)
    pts = grid[(grid > -30) & (grid < 290)][::500]
    kk = kramers_kronig_real(grid, chi.imag, pts)
    ref = susceptibility(atom, ctl, pts).real
    assert np.max(np.abs(kk - ref)) / np.max(np.abs(ref)) < 0.01


def test_optical_depth_scaling(atom):
    ctl = ControlField.for_atom(atom, 50.0, 15.0)
    sp = scan_spectrum(atom, ctl, np.linspace(0, 100, 11))
    b = optical_depth(sp, 3.0, 50.0)
    assert b == pytest.approx(4 * math.pi * 50.0 * susceptibility(atom, ctl, 3.0).imag)
    with pytest.raises(ValueError):
        optical_depth(sp, 3.0, 0.0)


def test_scan_rejects_unsorted_grid(atom):
    ctl = ControlField.for_atom(atom, 0.0, 15.0)
    with pytest.raises(ValueError):
        scan_spectrum(atom, ctl, [0.0, 2.0, 1.0])


def test_unknown_model(atom):
    with pytest.raises(ValueError):
        susceptibility(atom, ControlField.for_atom(atom, 0, 1), 0.0, model="nope")


def test_thermal_weights_normalized():
    d = MomentumDistribution("thermal", temperature=0.5, quadrature_order=20)
    p, w = d.nodes()
    assert w.sum() == pytest.approx(1.0, abs=1e-13)
    assert np.sum(w * p * p) == pytest.approx(d.mass * d.temperature, rel=1e-10)


def test_zero_temperature_matches_frozen(atom):
    ctl = ControlField.for_atom(atom, 50.0, 15.0)
    grid = np.linspace(40, 60, 201)
    cold = MomentumDistribution("thermal", temperature=0.0, include_recoil=False, quadrature_order=8)
    np.testing.assert_allclose(susceptibility(atom, ctl, grid, cold), susceptibility(atom, ctl, grid, FROZEN),
                               rtol=1e-12, atol=1e-15)


def test_motion_lowers_the_narrow_peak(atom, raman_control, at_peak):
    warm = MomentumDistribution("thermal", temperature=0.5, quadrature_order=40)
    grid = np.linspace(at_peak - 3, at_peak + 3, 1201)
    h_cold = max(r.height for r in find_at_resonances(scan_spectrum(atom, raman_control, grid)))
    h_warm = scan_spectrum(atom, raman_control, grid, warm).chi_im.max()
    assert h_warm < h_cold


def test_spectrum_csv_roundtrip(tmp_path, atom):
    ctl = ControlField.for_atom(atom, 0.0, 15.0)
    sp = scan_spectrum(atom, ctl, np.linspace(-5, 5, 11), model="lambda")
    path = tmp_path / "s.csv"
    write_spectrum_csv(path, sp)
    assert path.read_text().splitlines()[0] == "delta_bar_gamma,chi_re,chi_im,model"
    g, v, model = read_spectrum_csv(path)
    assert model == "lambda"
    np.testing.assert_allclose(g, sp.grid, rtol=1e-14)
    np.testing.assert_allclose(v, sp.values, rtol=1e-14)
