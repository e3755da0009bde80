import numpy as np
import pytest
from hypothesis import given, strategies as st

from vlclab.regime import (
    RegimeError,
    export_regime_csv,
    log_range,
    regime_map,
    regime_params,
)
from vlclab.units import to_au

# LiH-flavored constants, all atomic units
MASS = 1606.4
OMEGA0 = 0.0066
BETA = 0.0069
SLOPE = 0.18


def params(e0_mv_cm, alpha_fs2, **kw):
    return regime_params(
        MASS, OMEGA0, BETA, SLOPE,
        to_au(e0_mv_cm, "MV/cm"), to_au(alpha_fs2, "fs^-2"), **kw,
    )


def test_time_scale_identities():
    rp = params(6.3, 3.2e-8)
    sigma = 1.0 / np.sqrt(2.0 * rp.alpha)
    omega01 = OMEGA0 * (1.0 - 2.0 * BETA)
    assert rp.gamma == pytest.approx(omega01 / (4.0 * sigma), rel=1e-12)
    assert rp.epsilon_eff == pytest.approx(SLOPE * rp.e0, rel=1e-12)
    assert rp.t_r == pytest.approx(np.sqrt(2 * MASS * OMEGA0) / rp.epsilon_eff, rel=1e-12)
    assert rp.t_s == pytest.approx(rp.gamma**-0.5, rel=1e-12)
    assert rp.t_nl == pytest.approx(2 * OMEGA0 * BETA / rp.gamma, rel=1e-12)
    assert rp.p1 == pytest.approx(rp.t_s / rp.t_r, rel=1e-12)
    assert rp.p2 == pytest.approx(rp.t_nl / rp.t_s, rel=1e-12)
    assert rp.margin == pytest.approx(rp.p2 - rp.p1 - 1.0, rel=1e-12)


def test_explicit_omega01_overrides_fit():
    fitted = params(6.3, 3.2e-8)
    exact = params(6.3, 3.2e-8, omega01=0.0061)
    assert exact.gamma != fitted.gamma
    assert exact.gamma == pytest.approx(fitted.gamma * 0.0061 / (OMEGA0 * (1 - 2 * BETA)))


def test_strongly_anharmonic_point_inside_region():
    # slow sweep, strong drive, large anharmonicity: both conditions hold
    rp = regime_params(MASS, OMEGA0, 0.05, SLOPE, to_au(12.0, "MV/cm"), to_au(3.2e-8, "fs^-2"))
    assert rp.p1 > 0.79
    assert rp.p2 > rp.p1 + 1.0
    assert rp.in_region


def test_corner_points_outside_region():
    # frozen corner values of the wide (E0, alpha) box
    cases = {
        (2.0, 1e-8): (0.2038, 1.2208),
        (2.0, 1e-7): (0.1146, 0.6865),
        (20.0, 1e-8): (2.0377, 1.2208),
        (20.0, 1e-7): (1.1459, 0.6865),
    }
    for (e0, alpha), (p1, p2) in cases.items():
        rp = params(e0, alpha)
        assert not rp.in_region
        assert rp.p1 == pytest.approx(p1, rel=1e-3)
        assert rp.p2 == pytest.approx(p2, rel=1e-3)


def test_harmonic_ladder_never_qualifies():
    rp = regime_params(MASS, OMEGA0, 0.0, SLOPE, 0.001, 1e-10)
    assert rp.t_nl == 0.0
    assert rp.p2 == 0.0
    assert not rp.in_region


@given(st.floats(min_value=1.1, max_value=10.0))
def test_scaling_with_field(factor):
    base, scaled = params(3.0, 2e-8), params(3.0 * factor, 2e-8)
    # P1 ~ E0, P2 independent of E0
    assert scaled.p1 == pytest.approx(base.p1 * factor, rel=1e-9)
    assert scaled.p2 == pytest.approx(base.p2, rel=1e-12)


@given(st.floats(min_value=1.1, max_value=10.0))
def test_scaling_with_chirp_rate(factor):
    base, scaled = params(3.0, 2e-8), params(3.0, 2e-8 * factor)
    # Gamma ~ sqrt(alpha): P1 ~ alpha^-1/4, P2 ~ alpha^-1/4
    assert scaled.p1 == pytest.approx(base.p1 * factor**-0.25, rel=1e-9)
    assert scaled.p2 == pytest.approx(base.p2 * factor**-0.25, rel=1e-9)


def test_input_validation():
    with pytest.raises(RegimeError):
        regime_params(MASS, OMEGA0, BETA, SLOPE, 0.0, 1e-8)
    with pytest.raises(RegimeError):
        regime_params(MASS, OMEGA0, -0.1, SLOPE, 1e-4, 1e-8)
    with pytest.raises(RegimeError):
        regime_params(MASS, OMEGA0, BETA, SLOPE, 1e-4, 1e-8, omega01=-0.001)


def test_log_range():
    r = log_range(1.0, 100.0, 3)
    assert np.allclose(r, [1.0, 10.0, 100.0])
    assert log_range(2.0, 5.0, 1).tolist() == [2.0]
    with pytest.raises(RegimeError):
        log_range(5.0, 2.0, 4)


def test_map_matches_pointwise():
    e0s = to_au(np.array([2.0, 6.3, 20.0]), "MV/cm")
    als = to_au(np.array([1e-8, 3.2e-8, 1e-7]), "fs^-2")
    rmap = regime_map(MASS, OMEGA0, BETA, SLOPE, e0s, als)
    rp = regime_params(MASS, OMEGA0, BETA, SLOPE, e0s[1], als[1])
    assert rmap.p1[1, 1] == rp.p1
    assert rmap.p2[1, 1] == rp.p2
    assert bool(rmap.in_region[1, 1]) == rp.in_region
    # monotone along each axis per the scaling laws
    assert np.all(np.diff(rmap.p1, axis=0) > 0)      # P1 grows with E0
    assert np.all(np.diff(rmap.p1, axis=1) < 0)      # P1 falls with alpha
    assert np.all(np.diff(rmap.p2, axis=0) == 0)     # P2 blind to E0


def test_map_validation():
    with pytest.raises(RegimeError):
        regime_map(MASS, OMEGA0, BETA, SLOPE, [], [1e-8])


def test_export_regime_csv(tmp_path):
    e0s = to_au(np.array([2.0, 20.0]), "MV/cm")
    als = to_au(np.array([1e-8, 1e-7]), "fs^-2")
    rmap = regime_map(MASS, OMEGA0, BETA, SLOPE, e0s, als)
    path = tmp_path / "regime.csv"
    export_regime_csv(path, rmap)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "E0_MV_cm,alpha_fs^-2,P1,P2,P2_minus_P1_plus_1,in_region"
    assert len(lines) == 5
    row = lines[1].split(",")
    assert float(row[0]) == pytest.approx(2.0, rel=1e-12)
    assert float(row[1]) == pytest.approx(1e-8, rel=1e-12)
