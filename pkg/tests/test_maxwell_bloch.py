import numpy as np
import pytest

import oracles
from qudit_memory.eit_storage import EITParams, PulseSpec, storage_efficiency_analytic
from qudit_memory.exceptions import ParameterError, ResolutionError
from qudit_memory.maxwell_bloch import (
    ControlTiming,
    convergence_report,
    default_timing,
    max_time_step,
    maxwell_bloch_store,
)

P = EITParams()
PULSE = PulseSpec()


@pytest.mark.parametrize("D", [25, 50, 100, 200, 250])
def test_solver_agrees_with_closed_form(D):
    res = maxwell_bloch_store(P, PULSE, D)
    assert abs(res.efficiency - storage_efficiency_analytic(P, PULSE, D)) <= 0.03
    assert abs(res.efficiency - oracles.eta_closed_form(D)) <= 0.03


def test_solver_self_convergence():
    report = convergence_report(P, PULSE, 200.0)
    assert report["converged"]
    assert report["change"] < 0.002
    assert report["nz"] == [200, 400]
    assert report["dt_s"][1] == pytest.approx(report["dt_s"][0] / 2)


@pytest.mark.parametrize("scale", [1e-3, 0.5, 7.0])
def test_weak_probe_linearity(scale):
    ref = maxwell_bloch_store(P, PULSE, 100.0)
    res = maxwell_bloch_store(P, PULSE, 100.0, amplitude=scale)
    assert res.efficiency == pytest.approx(ref.efficiency, rel=1e-8)
    np.testing.assert_allclose(res.output.values, scale**2 * ref.output.values, rtol=1e-8, atol=1e-20)


def test_empty_medium_transmits_and_stores_nothing():
    res = maxwell_bloch_store(P, PULSE, 0.0)
    assert res.efficiency < 1e-5
    assert res.total_efficiency == pytest.approx(1.0, rel=1e-6)


def test_energy_never_grows():
    for D in (10, 100, 400):
        res = maxwell_bloch_store(P, PULSE, D, window="total")
        assert 0 <= res.efficiency == res.total_efficiency <= 1


def test_coherences_stay_bounded():
    res = maxwell_bloch_store(P, PULSE, 200.0, record_every=50)
    s = res.state
    assert s.sigma31.shape[1] == 201 and s.zeta[-1] == 1.0
    assert np.abs(s.sigma31).max() <= 1 and np.abs(s.sigma21).max() <= 1
    # most of the excitation sits in the spin wave while the control is off
    mid = np.argmin(np.abs(s.times - 0.5 * (res.timing.off_time + res.timing.on_time)))
    assert np.linalg.norm(s.sigma21[mid]) > 10 * np.linalg.norm(s.sigma31[mid])


def test_output_is_delayed_by_transit_time():
    res = maxwell_bloch_store(P, PULSE, 50.0)
    assert res.output.times[0] - res.input.times[0] == pytest.approx(P.L / 299_792_458.0)


def test_resolution_limits():
    with pytest.raises(ResolutionError):
        maxwell_bloch_store(P, PULSE, 10.0, nz=100)
    with pytest.raises(ResolutionError):
        maxwell_bloch_store(P, PULSE, 10.0, dt=2 * max_time_step(P))


def test_invalid_arguments():
    with pytest.raises(ParameterError):
        maxwell_bloch_store(P, PULSE, 10.0, window="everything")
    with pytest.raises(ParameterError):
        maxwell_bloch_store(P.replace(Omega_c=0.0), PULSE, 10.0)
    with pytest.raises(ParameterError):
        maxwell_bloch_store(P, PULSE, -1.0)


def test_control_profile():
    timing = ControlTiming(0.0, 1e-6, 4e-8)
    oc = 2.0
    assert timing.profile(0.0, oc) == pytest.approx(oc / 2)
    assert timing.profile(0.5e-6, oc) == pytest.approx(0.0, abs=1e-12)
    assert timing.profile(-1e-6, oc) == pytest.approx(oc)
    assert timing.profile(2e-6, oc) == pytest.approx(oc)
    with pytest.raises(ParameterError):
        ControlTiming(1.0, 0.5, 0.1)


def test_default_timing():
    t = default_timing(PULSE)
    assert t.off_time == pytest.approx(1.1 * 300e-9)
    assert t.on_time - t.off_time == pytest.approx(300e-9)
    assert t.ramp == pytest.approx(30e-9)
