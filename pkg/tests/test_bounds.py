import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsl_tls.bounds import (
    bound_TA_closed,
    bound_TA_trajectory,
    bound_TB,
    bound_TB_closed,
    bound_TC_closed,
    bound_TC_raw,
    bound_Tm,
    evaluate,
    mandelstam_tamm,
    piecewise_mt_closed,
    ta_zero_crossing,
    tc_zero_crossing,
    variance_envelope,
)
from qsl_tls.dynamics import ControlSchedule, integrate_rk4
from qsl_tls.errors import InsufficientActionError
from qsl_tls.protocols import ProtocolSpec, c_from_factor
from qsl_tls.states import KET0, KET1, endpoint_distance, from_bloch, theta_of

# 30-digit references at omega = 1, gamma = 2
THETA = 0.463647609000806
T_OPT = 1.107148717794091
T_A_REF = 0.755907981242054
T_B_REF = 0.677363966117694
T_C_REF = 0.404667244690018
T_M_REF = 0.632656410168052  # c = 0.75
KICK_ACTION = 0.702481473104073  # (pi/2) sin(theta)
THETA_STAR = 0.937637705119951
THETA_TC_ZERO = 0.636782540440945

thetas = st.floats(1e-6, math.pi / 2)


def test_closed_forms_at_gamma_two():
    theta = theta_of(1.0, 2.0)
    assert theta == pytest.approx(THETA, abs=1e-15)
    assert bound_TA_closed(theta, 1.0) == pytest.approx(T_A_REF, abs=1e-14)
    assert bound_TB_closed(theta, 1.0) == pytest.approx(T_B_REF, abs=1e-14)
    assert bound_TC_closed(theta, 1.0) == pytest.approx(T_C_REF, abs=1e-14)
    assert piecewise_mt_closed(theta, 1.0) == pytest.approx(T_OPT, abs=1e-14)
    assert 0.5 * math.pi * math.sin(theta) == pytest.approx(KICK_ACTION, abs=1e-15)


def test_zero_crossings():
    assert ta_zero_crossing() == pytest.approx(THETA_STAR, abs=1e-13)
    assert abs(ta_zero_crossing() - 0.93) < 0.01
    assert tc_zero_crossing() == pytest.approx(THETA_TC_ZERO, abs=1e-13)
    assert bound_TA_closed(THETA_STAR + 1e-6, 1.0) == 0.0
    assert bound_TA_closed(THETA_STAR - 1e-6, 1.0) > 0.0
    assert bound_TC_raw(THETA_TC_ZERO + 1e-3, 1.0) < 0.0
    assert bound_TC_closed(THETA_TC_ZERO + 1e-3, 1.0) == 0.0


@given(thetas)
def test_closed_forms_bounded_by_optimal_time(theta):
    T = endpoint_distance(theta) / 2
    for value in (bound_TA_closed(theta, 1.0), bound_TB_closed(theta, 1.0), bound_TC_closed(theta, 1.0)):
        assert 0.0 <= value <= T + 1e-15
    assert bound_TC_closed(theta, 1.0) <= bound_TB_closed(theta, 1.0) + 1e-15


@given(thetas, st.floats(0.1, 10))
def test_closed_forms_scale_inversely_with_omega(theta, omega):
    assert bound_TB_closed(theta, omega) == pytest.approx(bound_TB_closed(theta, 1.0) / omega)


def test_ta_minus_tb_crosses_once():
    th = np.linspace(1e-4, math.pi / 2 - 1e-4, 4000)
    diff = np.array([bound_TA_closed(t, 1.0) - bound_TB_closed(t, 1.0) for t in th])
    assert np.count_nonzero(np.diff(np.sign(diff)) != 0) == 1


def test_tm_and_envelope():
    s = endpoint_distance(THETA)
    assert bound_Tm(s, variance_envelope(1.0, 0.75)) == pytest.approx(T_M_REF, abs=1e-14)
    assert bound_Tm(s, math.inf) == 0.0
    assert bound_Tm(0.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        bound_Tm(-1.0, 1.0)


def test_mandelstam_tamm_orthogonal_states():
    assert mandelstam_tamm(KET0, KET1, 1.0) == pytest.approx(math.pi / 2)


def _meridian_trajectory(duration=1.0):
    return integrate_rk4(from_bloch(0.3, 1.5 * math.pi), ControlSchedule(1.0, ((0.0, duration),)))


def test_ta_trajectory_on_uniform_geodesic():
    traj = _meridian_trajectory()
    # action grows as 2 t
    assert bound_TA_trajectory(traj, 1.0) == pytest.approx(0.5, abs=1e-9)
    assert bound_TA_trajectory(traj, 0.0) == 0.0
    with pytest.raises(InsufficientActionError) as err:
        bound_TA_trajectory(traj, 2.5)
    assert err.value.deficit == pytest.approx(0.5, abs=1e-9)


def test_tb_saturates_on_geodesic():
    traj = _meridian_trajectory()
    assert bound_TB(traj) == pytest.approx(traj.duration, abs=1e-9)


@pytest.fixture(scope="module")
def composite_report():
    return evaluate(ProtocolSpec("composite", 1.0, 2.0, lambda0=1e4))


def test_composite_trajectory_bounds_match_closed_forms(composite_report):
    _, _, rep = composite_report
    assert rep.T == pytest.approx(T_OPT, abs=1e-15)
    assert rep.fidelity >= 1 - 1e-4
    assert rep.T_A == pytest.approx(T_A_REF, abs=1e-3)
    assert rep.T_B == pytest.approx(T_B_REF, abs=1e-3)
    assert rep.T_C == pytest.approx(T_C_REF, abs=1e-3)
    assert rep.T_piecewise == pytest.approx(rep.duration, abs=1e-4)
    assert rep.T_m == 0.0
    for name in ("T_A", "T_B", "T_C", "T_piecewise", "T_m"):
        assert getattr(rep, name) <= rep.duration + 1e-9


def test_composite_report_serializes(composite_report):
    _, _, rep = composite_report
    d = rep.to_dict()
    assert d["kind"] == "composite"
    assert d["methods"]["T_A"] == "trajectory"
    assert d["T_C_closed"] == pytest.approx(T_C_REF)


def test_bang_bang_bounds_coincide():
    _, _, rep = evaluate(ProtocolSpec("bang_bang", 1.0, 2.0, c=c_from_factor(1.0, 2.0, 0.5)))
    assert rep.T_A == pytest.approx(rep.T_B, abs=1e-6)
    assert rep.T_A == pytest.approx(rep.T_C, abs=1e-6)
    assert rep.T_m < min(rep.T_A, rep.T_B)
    assert rep.T_A_closed is None


def test_bang_off_bang_bounds():
    _, _, rep = evaluate(ProtocolSpec("bang_off_bang", 1.0, 2.0, c=0.75))
    assert rep.T_C is None
    assert rep.methods["T_C"] == "unavailable"
    assert rep.T > max(rep.T_A, rep.T_B)
    assert rep.T_m == pytest.approx(T_M_REF, abs=1e-14)
    assert rep.T_m < min(rep.T_A, rep.T_B)


def test_zero_gamma_bounds_vanish():
    _, traj, rep = evaluate(ProtocolSpec("composite", 1.0, 0.0))
    assert len(traj) == 1
    assert rep.T == rep.T_A == rep.T_B == rep.T_C == rep.T_m == 0.0
