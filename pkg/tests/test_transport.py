import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramanmem import (
    MediumSpec,
    PulseSpec,
    SpectralLeakageWarning,
    propagate_pulse,
    pulse_metrics,
    scan_spectrum,
    susceptibility,
    transfer_function,
)
from ramanmem.transport import group_delay_oracle, write_waveform_csv


def test_rectangular_spectrum_matches_fft():
    p = PulseSpec(10.0)
    dt, n = 0.01, 200_000
    t = np.arange(n) * dt
    omega = 2 * math.pi * np.fft.fftfreq(n, dt)
    num = np.fft.ifft(p.amplitude(t)) * n * dt
    sel = np.abs(omega) < 20
    # sampled transform of a step differs by O(dt) from the continuous one
    np.testing.assert_allclose(num[sel], p.spectrum(omega[sel]), atol=2 * dt)
    assert p.spectrum(np.array([0.0]))[0] == pytest.approx(10.0)


def test_pulse_validation():
    with pytest.raises(ValueError):
        PulseSpec(0.0)
    with pytest.raises(ValueError):
        PulseSpec(5.0, shape="tabulated")
    with pytest.raises(ValueError):
        MediumSpec(-1.0)


def test_mode_carriers_form_a_comb():
    p = [PulseSpec(10.0, carrier_offset=3.0, mode_index=q) for q in (-1, 0, 1)]
    assert [x.carrier for x in p] == pytest.approx([3.0 - 2 * math.pi / 10, 3.0, 3.0 + 2 * math.pi / 10])


@settings(max_examples=50, deadline=None)
@given(st.floats(-40, 300), st.floats(0, 200), st.floats(-60, 100),
       st.one_of(st.just(0.0), st.floats(1e-6, 30)))
def test_monochromatic_transmission_is_exp_minus_b(carrier, b0, delta, rabi):
    from ramanmem import CESIUM_D1, ControlField

    ctl = ControlField.for_atom(CESIUM_D1, delta, rabi)
    med = MediumSpec(b0)
    chi = susceptibility(CESIUM_D1, ctl, carrier)
    b = 4 * math.pi * b0 * chi.imag
    T2 = abs(transfer_function(lambda d: susceptibility(CESIUM_D1, ctl, d), med, 0.0, carrier)) ** 2
    assert T2 == pytest.approx(math.exp(-b), rel=1e-10, abs=1e-300)


def test_empty_medium_is_identity(atom, raman_control):
    p = PulseSpec(10.0, carrier_offset=50.0)
    rec = propagate_pulse(p, MediumSpec(0.0), lambda d: susceptibility(atom, raman_control, d))
    np.testing.assert_allclose(rec.amplitude, rec.input_amplitude, atol=1e-12)
    delay, trans, tail = pulse_metrics(rec, p)
    assert abs(delay) < 1e-9 and trans == pytest.approx(1.0, abs=1e-12) and tail < 1e-12


def test_retardation_shifts_by_a_whole_number_of_samples(atom, raman_control):
    p = PulseSpec(10.0, carrier_offset=50.0)
    rec = propagate_pulse(p, MediumSpec(0.0, retardation=2.0), lambda d: susceptibility(atom, raman_control, d))
    shifted = p.amplitude(rec.time_grid - 2.0)
    np.testing.assert_allclose(rec.amplitude, shifted, atol=1e-9)


def test_group_delay_oracle_agrees_with_fft(atom, raman_control, at_peak):
    sp = scan_spectrum(atom, raman_control, np.linspace(at_peak - 400, at_peak + 400, 200_001))
    p = PulseSpec(10.0, carrier_offset=at_peak + 1.5)
    med = MediumSpec(50.0)
    rec = propagate_pulse(p, med, lambda d: susceptibility(atom, raman_control, d),
                          samples_per_period=2000, t_before=20, t_after=600)
    delay, _, _ = pulse_metrics(rec, p)
    oracle = group_delay_oracle(p, med, sp)
    assert delay == pytest.approx(oracle, rel=1e-2)


def test_coarse_sampling_warns(atom, raman_control):
    p = PulseSpec(10.0, carrier_offset=50.0)
    with pytest.warns(SpectralLeakageWarning):
        propagate_pulse(p, MediumSpec(1.0), lambda d: susceptibility(atom, raman_control, d),
                        samples_per_period=20)


def test_fig5_orderings(atom, raman_control, at_peak):
    chi = lambda d: susceptibility(atom, raman_control, d)  # noqa: E731
    med = MediumSpec(50.0)
    delays, trans = [], []
    for q in (-1, 0, 1):
        p = PulseSpec(10.0, carrier_offset=at_peak + 0.8, mode_index=q)
        d, tr, _ = pulse_metrics(propagate_pulse(p, med, chi), p)
        delays.append(d)
        trans.append(tr)
    assert delays[0] > delays[1] > delays[2] > 0
    assert trans[0] < trans[1] < trans[2] <= 1.0


def test_slices_interpolate_to_output(atom, raman_control):
    p = PulseSpec(10.0, carrier_offset=52.0)
    rec = propagate_pulse(p, MediumSpec(20.0), lambda d: susceptibility(atom, raman_control, d),
                          slices=(0.0, 1.0))
    np.testing.assert_allclose(rec.slices[0.0], rec.input_amplitude, atol=1e-12)
    np.testing.assert_allclose(rec.slices[1.0], rec.amplitude, atol=1e-14)


def test_waveform_csv_format(tmp_path):
    t = np.array([0.0, 0.5])
    a = np.array([1 + 2j, -0.5j])
    path = tmp_path / "w.csv"
    write_waveform_csv(path, t, a)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t_gamma", "re_alpha", "im_alpha", "abs2"]
    assert [float(x) for x in rows[1]] == pytest.approx([0.0, 1.0, 2.0, 5.0], rel=1e-15)
    assert [float(x) for x in rows[2]] == [0.5, 0.0, -0.5, 0.25]
