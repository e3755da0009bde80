import numpy as np
import pytest
from hypothesis import given, strategies as st

from vlclab.pulse import (
    ChirpedPulse,
    PulseError,
    PulseTrain,
    chirp_frequency,
    export_field_csv,
    field,
    simulation_window,
    single,
    train_field,
)


def make_pulse(**kw):
    base = dict(e0=0.001, alpha=1e-9, t0=0.0, omega0=0.0065)
    base.update(kw)
    return ChirpedPulse(**base)


def test_sigma():
    p = make_pulse(alpha=2e-9)
    assert p.sigma == pytest.approx(1.0 / np.sqrt(4e-9))


def test_chirp_endpoints():
    # w(t0 - 2 sigma) = w0 (1 + gamma1), w(t0 + 2 sigma) = w0 (1 - gamma2)
    p = make_pulse(gamma1=0.3, gamma2=0.7)
    s = p.sigma
    assert chirp_frequency(p, p.t0 - 2 * s) == pytest.approx(p.omega0 * 1.3, rel=1e-12)
    assert chirp_frequency(p, p.t0 + 2 * s) == pytest.approx(p.omega0 * 0.3, rel=1e-12)


def test_no_chirp_is_constant():
    p = make_pulse(gamma1=0.0, gamma2=0.0)
    t = np.linspace(-3 * p.sigma, 3 * p.sigma, 50)
    assert np.allclose(chirp_frequency(p, t), p.omega0)


def test_field_peak_and_phase():
    p = make_pulse(phase=0.3)
    assert field(p, p.t0) == pytest.approx(p.e0 * np.cos(0.3), rel=1e-12)
    assert field(p.with_phase(0.0), p.t0) == pytest.approx(p.e0, rel=1e-12)


def test_integrated_carrier_matches_unchirped_literal():
    lit = make_pulse(carrier="literal")
    integ = make_pulse(carrier="integrated")
    t = np.linspace(-2e4, 2e4, 400)
    assert np.allclose(field(lit, t), field(integ, t), atol=1e-15)


def test_validation():
    with pytest.raises(PulseError):
        make_pulse(e0=-1.0)
    with pytest.raises(PulseError):
        make_pulse(alpha=0.0)
    with pytest.raises(PulseError):
        make_pulse(omega0=-0.1)
    with pytest.raises(PulseError):
        make_pulse(carrier="rwa")


def test_train_sum_and_labels():
    a, b = make_pulse(), make_pulse(t0=5e4, e0=0.002)
    train = PulseTrain(pulses=(a, b), labels=("main", "dsp"))
    t = np.linspace(-1e4, 6e4, 300)
    assert np.allclose(train_field(train, t), field(a, t) + field(b, t))
    assert PulseTrain(pulses=(a, b)).labels == ("pulse0", "pulse1")
    with pytest.raises(PulseError):
        PulseTrain(pulses=(a, b), labels=("x",))


def test_single_window():
    p = make_pulse(t0=1e5)
    lo, hi = simulation_window(single(p))
    assert lo == pytest.approx(1e5 - 4 * p.sigma)
    assert hi == pytest.approx(1e5 + 4 * p.sigma)


def test_union_window():
    a = make_pulse(t0=0.0)
    b = make_pulse(t0=3e5, alpha=1e-8)
    lo, hi = simulation_window(PulseTrain(pulses=(a, b)))
    assert lo == pytest.approx(-4 * a.sigma)
    assert hi == pytest.approx(3e5 + 4 * b.sigma)
    with pytest.raises(PulseError):
        simulation_window(PulseTrain(pulses=()))


def test_export_field_csv(tmp_path):
    train = PulseTrain(pulses=(make_pulse(), make_pulse(e0=0.002)), labels=("main", "dsp"))
    path = tmp_path / "field.csv"
    export_field_csv(path, train, np.linspace(-1e4, 1e4, 20))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t_au,E_total_au,E_main_au,E_dsp_au"
    assert len(lines) == 21
    t, total, main, dsp = map(float, lines[10].split(","))
    assert total == pytest.approx(main + dsp, rel=1e-12)


@given(
    st.floats(min_value=-0.99, max_value=1.0),
    st.floats(min_value=-0.99, max_value=1.0),
    st.floats(min_value=-5.0, max_value=5.0),
)
def test_field_bounded_by_envelope(gamma1, gamma2, t_over_sigma):
    p = make_pulse(gamma1=gamma1, gamma2=gamma2)
    t = t_over_sigma * p.sigma
    envelope = p.e0 * np.exp(-p.alpha * t * t)
    assert abs(field(p, t)) <= envelope + 1e-18
