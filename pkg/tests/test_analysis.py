import numpy as np
import pytest

from src.models.errors import CrossingNotFoundError, DomainError, FitWindowError
from src.models.schemas import (
    AdatomSpec,
    CollapseDip,
    RegimeReport,
    SurvivalMethod,
    SurvivalSeries,
)
from src.physics.analysis import (
    analyze_regimes,
    check_collapse_phase,
    check_timescale_hierarchy,
    collapse_phase_mismatch,
    detect_collapse,
    estimate_tr,
    estimate_ts,
    fit_exponential,
    fit_power_law,
    modulation_period,
    principal_dip,
    wrap_phase,
)
from src.physics.dynamics import make_time_grid, survival_decomposed, survival_direct
from src.physics.resonance import find_pole


def synthetic(times, p00, psi_s=None, psi_r=None, method=SurvivalMethod.DECOMPOSED):
    times = np.asarray(times, dtype=float)
    p00 = np.asarray(p00, dtype=float)
    if psi_s is None:
        psi_s = np.sqrt(p00)
    if psi_r is None:
        psi_r = np.zeros_like(times)
    return SurvivalSeries(times=times, p00=p00, psi_s=psi_s, psi_r=psi_r, method=method)


@pytest.fixture(scope="module")
def regimes(square_spec, square_res):
    times = make_time_grid(0.01, 5000.0, 600)
    return analyze_regimes(square_spec, square_res, times)


def test_wrap_phase():
    assert wrap_phase(3 * np.pi) == pytest.approx(np.pi)
    assert wrap_phase(-np.pi) == pytest.approx(np.pi)
    assert wrap_phase(0.5) == pytest.approx(0.5)
    np.testing.assert_allclose(wrap_phase(np.array([2 * np.pi, -0.5])), [0.0, -0.5], atol=1e-15)


def test_ts_estimates(square_spec, square_res):
    ts = estimate_ts(square_spec, square_res)
    assert ts.closed_form == pytest.approx(0.343, abs=1e-3)
    assert 0.5 <= ts.ratio <= 2.0


def test_fit_exponential_recovers_rate():
    times = np.linspace(1.0, 50.0, 200)
    fit = fit_exponential(synthetic(times, 0.8 * np.exp(-0.1 * times)), (5.0, 40.0))
    assert fit.rate == pytest.approx(0.1, rel=1e-10)
    assert fit.prefactor == pytest.approx(0.8, rel=1e-10)
    assert fit.residual < 1e-10


def test_fit_power_law_recovers_exponent():
    times = np.geomspace(10.0, 1e4, 200)
    fit = fit_power_law(synthetic(times, 3.0 * times**-2.0), (20.0, 5e3))
    assert fit.exponent == pytest.approx(-2.0, abs=1e-10)
    assert fit.amplitude == pytest.approx(3.0, rel=1e-8)


def test_fit_window_needs_points():
    times = np.linspace(1.0, 50.0, 50)
    with pytest.raises(FitWindowError):
        fit_exponential(synthetic(times, np.exp(-times / 10)), (10.0, 15.0))


def test_fit_skips_isolated_dip():
    times = np.linspace(1.0, 50.0, 200)
    p00 = 0.8 * np.exp(-0.1 * times)
    p00[100] *= 1e-4
    fit = fit_exponential(synthetic(times, p00), (5.0, 45.0))
    assert fit.rate == pytest.approx(0.1, rel=1e-8)


def test_detect_collapse_synthetic():
    times = np.linspace(0.0, 10.0, 1001)
    psi_s = np.full(times.shape, 0.5, dtype=complex)
    psi_r = 0.5 * np.exp(1j * (np.pi + (times - 5.0)))
    series = synthetic(times, np.abs(psi_s + psi_r) ** 2, psi_s, psi_r)
    dips = detect_collapse(series)
    assert len(dips) == 1
    assert dips[0].t_dip == pytest.approx(5.0)
    assert dips[0].depth > 1e6
    assert abs(dips[0].phase_residual) < 1e-6


def test_conjugated_remainder_fills_the_dip():
    times = np.linspace(0.0, 10.0, 1001)
    psi_s = np.full(times.shape, 0.5 * np.exp(1j * np.pi / 3))
    psi_r = 0.5 * np.exp(1j * (np.pi / 3 + np.pi + 0.1 * (times - 5.0)))
    dips = detect_collapse(synthetic(times, np.abs(psi_s + psi_r) ** 2, psi_s, psi_r))
    assert len(dips) == 1
    assert dips[0].t_dip == pytest.approx(5.0)
    # 켤레 위상이면 반대 위상 조건이 성립하지 않음
    flipped = np.conj(psi_r)
    series = synthetic(times, np.abs(psi_s + flipped) ** 2, psi_s, flipped)
    assert detect_collapse(series) == []


def test_detect_collapse_ignores_shallow_minima():
    times = np.linspace(0.0, 10.0, 1001)
    psi_s = np.full(times.shape, 0.5, dtype=complex)
    psi_r = 0.1 * np.exp(1j * 3 * times)
    series = synthetic(times, np.abs(psi_s + psi_r) ** 2, psi_s, psi_r)
    assert detect_collapse(series) == []


def test_estimate_tr_errors(square_spec, square_res):
    times = np.linspace(0.1, 1.0, 10)
    with pytest.raises(DomainError):
        estimate_tr(square_res, survival_direct(square_spec, times))
    with pytest.raises(CrossingNotFoundError):
        estimate_tr(square_res, survival_decomposed(square_spec, square_res, times))


def test_phase_model_without_edge_beat():
    # β = 0: 잔차는 (ε_r - ε_L)t - π/2 - arg ā - π
    t, epsilon_r, lower = 3.0, 2.0, 0.0
    value = collapse_phase_mismatch(t, epsilon_r, lower, 0.1, 0.0, 8.0)
    assert value == pytest.approx(wrap_phase(6.0 - 0.5 * np.pi - 0.1 - np.pi))


def test_principal_dip():
    dips = [
        CollapseDip(t_dip=1.0, depth=20.0, phase_residual=0.0),
        CollapseDip(t_dip=2.0, depth=500.0, phase_residual=0.1),
    ]
    assert principal_dip(dips).t_dip == 2.0
    assert principal_dip([]) is None


def test_regime_report_ordering_enforced():
    with pytest.raises(ValueError):
        RegimeReport(
            gamma0=0.05,
            t_s=10.0,
            t_s_numerical=10.0,
            t_r=5.0,
            fitted_rate=0.1,
            fitted_prefactor=1.0,
            tail_exponent=-2.0,
            modulation_freq=8.0,
        )


def test_sc_fgr_regime(regimes, square_res):
    report, _ = regimes
    assert report.fitted_rate == pytest.approx(2 * square_res.gamma0, rel=0.01)
    assert report.fitted_prefactor == pytest.approx(square_res.weight, rel=0.02)


def test_power_law_tail_and_modulation(regimes, square_spec):
    report, _ = regimes
    assert report.tail_exponent == pytest.approx(-2.0, abs=0.1)
    assert report.modulation_freq == pytest.approx(square_spec.substrate.bandwidth, rel=0.01)
    assert report.modulation_freq in report.modulation_peaks


def test_survival_collapse_at_crossing(regimes, square_spec, square_res):
    report, series = regimes
    dip = principal_dip(report.dips)
    assert dip is not None
    assert dip.depth >= 1e2
    assert abs(dip.t_dip - report.t_r) <= modulation_period(square_spec)
    assert abs(dip.phase_residual) <= 0.33
    mismatch = check_collapse_phase(square_res, dip, square_spec)
    assert abs(mismatch) <= 0.5
    assert mismatch == pytest.approx(dip.phase_residual, abs=1e-8)
    assert report.t_s < report.t_r
    assert series.times.size > 600


def test_timescale_hierarchy(regimes, square_res):
    report, _ = regimes
    assert check_timescale_hierarchy(square_res, report.t_r)


@pytest.mark.slow
def test_crossing_time_shrinks_with_coupling():
    products = []
    for v0 in (0.2, 0.3, 0.4):
        spec = AdatomSpec(epsilon0=2.0, v0=v0)
        res = find_pole(spec)
        times = make_time_grid(0.01, 60.0 / res.gamma0, 300)
        t_r = estimate_tr(res, survival_decomposed(spec, res, times), spec)
        products.append(t_r * res.gamma0)
    # Γ₀ t_R 는 로그 인자 때문에 완만하게 줄어든다
    assert products[0] > products[1] > products[2]
    assert max(products) / min(products) < 2.0
