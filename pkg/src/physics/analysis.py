"""
생존 확률의 시간 영역 분석

t_S, t_R 추정, 지수/멱법칙 피팅, 붕괴(dip) 검출과 위상 조건 확인,
장시간 변조 주파수 추출을 담당한다.
"""

from typing import Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import optimize, signal

from src.models.errors import CrossingNotFoundError, DomainError, FitWindowError
from src.models.schemas import (
    AdatomSpec,
    CollapseDip,
    ExponentialFit,
    PowerLawFit,
    RegimeReport,
    Resonance,
    SurvivalMethod,
    SurvivalSeries,
    TsEstimate,
)
from src.physics.dynamics import (
    ReturnAmplitude,
    make_time_grid,
    refine_around,
    survival_decomposed,
)
from src.physics.resonance import find_pole
from src.physics.substrate_green import substrate_ldos
from src.utils.console import console

DIP_THRESHOLD = 10.0
MIN_FIT_POINTS = 10
ROLLING_WINDOW = 11
REFINE_FACTOR = 50


def wrap_phase(angle):
    """(-π, π] 로 접기"""
    wrapped = np.angle(np.exp(1j * np.asarray(angle, dtype=float)))
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return float(wrapped) if np.ndim(angle) == 0 else wrapped


def modulation_period(spec: AdatomSpec) -> float:
    """밴드 끝 맥놀이 주기 2π/B"""
    return 2 * np.pi / spec.substrate.bandwidth


def slow_period(spec: AdatomSpec) -> float:
    """분기점 사이 가장 느린 맥놀이 주기"""
    spacing = np.min(np.diff(spec.substrate.branch_points))
    return 2 * np.pi / spacing


def estimate_ts(spec: AdatomSpec, res: Resonance) -> TsEstimate:
    """t_S: 닫힌 형태 πN₁(ε₀) 와 단시간/지수 법칙의 최근접 시간"""
    closed_form = np.pi * float(substrate_ldos(spec.epsilon0, spec.substrate))
    if res.gamma0 <= 0:
        raise DomainError("t_S needs a decaying resonance (gamma0 > 0)")

    m2 = spec.v0**2
    weight = res.weight
    gamma = res.gamma0

    # d/dt [(1 - m₂t²) - |ā|² e^{-2Γt}] = 0
    def stationary(t: float) -> float:
        return gamma * weight * np.exp(-2 * gamma * t) - m2 * t

    numerical = optimize.brentq(stationary, 0.0, 1.0 / gamma, xtol=1e-14)
    estimate = TsEstimate(closed_form=closed_form, numerical=numerical)
    if not 0.5 <= estimate.ratio <= 2.0:
        console.warn(f"t_S estimates disagree: {closed_form:.4g} vs {numerical:.4g}")
    else:
        console.info(f"t_S = {closed_form:.4g} (numerical {numerical:.4g})")
    return estimate


def _log_gap(psi_s: np.ndarray, psi_r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(psi_s)) - np.log(np.abs(psi_r))


def estimate_tr(
    res: Resonance, series: SurvivalSeries, spec: Optional[AdatomSpec] = None
) -> float:
    """|Ψ_S(t)| = |Ψ_R(t)| 인 가장 이른 시간"""
    if series.method != SurvivalMethod.DECOMPOSED:
        raise DomainError("estimate_tr needs a decomposed survival series")
    gap = _log_gap(series.psi_s, series.psi_r)
    crossing = np.nonzero((gap[:-1] > 0) & (gap[1:] <= 0))[0]
    if crossing.size == 0:
        raise CrossingNotFoundError(
            f"|psi_s| stays {'above' if gap[-1] > 0 else 'below'} |psi_r| on "
            f"[{series.times[0]:.4g}, {series.times[-1]:.4g}]; extend t_max"
        )
    k = int(crossing[0])
    t_lo, t_hi = series.times[k], series.times[k + 1]

    if spec is None:
        # 격자 보간
        g_lo, g_hi = gap[k], gap[k + 1]
        return float(t_lo + (t_hi - t_lo) * g_lo / (g_lo - g_hi))

    evaluator = ReturnAmplitude(spec, res)

    def gap_at(t: float) -> float:
        times = np.array([t])
        return float(_log_gap(evaluator.pole_term(times), evaluator(times, threads=1))[0])

    return float(optimize.brentq(gap_at, t_lo, t_hi, xtol=1e-12, rtol=1e-14))


def _local_minima(values: np.ndarray) -> np.ndarray:
    inner = (values[1:-1] < values[:-2]) & (values[1:-1] <= values[2:])
    return np.nonzero(inner)[0] + 1


def _dip_record(psi_s: complex, psi_r: complex) -> Tuple[float, float]:
    p00 = max(abs(psi_s + psi_r) ** 2, 1e-300)
    envelope = max(abs(psi_s) ** 2, abs(psi_r) ** 2)
    return envelope / p00, wrap_phase(np.angle(psi_r / psi_s) - np.pi)


def detect_collapse(
    series: SurvivalSeries,
    spec: Optional[AdatomSpec] = None,
    res: Optional[Resonance] = None,
    threshold: float = DIP_THRESHOLD,
) -> List[CollapseDip]:
    """P₀₀ 의 국소 최솟값 중 포락선 대비 threshold 배 이상 깊은 붕괴"""
    envelope = np.maximum(np.abs(series.psi_s) ** 2, np.abs(series.psi_r) ** 2)
    p00 = np.maximum(series.p00, 1e-300)
    candidates = [
        i for i in _local_minima(series.p00) if envelope[i] / p00[i] >= threshold
    ]

    evaluator = ReturnAmplitude(spec, res) if spec is not None and res is not None else None
    dips: List[CollapseDip] = []
    for i in candidates:
        t_dip = float(series.times[i])
        psi_s, psi_r = series.psi_s[i], series.psi_r[i]
        if evaluator is not None:
            t_dip = _refine_dip(evaluator, series, i)
            times = np.array([t_dip])
            psi_s = evaluator.pole_term(times)[0]
            psi_r = evaluator(times, threads=1)[0]
        depth, residual = _dip_record(psi_s, psi_r)
        if depth >= threshold:
            dips.append(CollapseDip(t_dip=t_dip, depth=depth, phase_residual=residual))
    return dips


def _refine_dip(evaluator: ReturnAmplitude, series: SurvivalSeries, i: int) -> float:
    """황금분할 탐색으로 dip 위치를 정밀화"""

    def survival(t: float) -> float:
        times = np.array([t])
        return float(np.abs(evaluator.pole_term(times) + evaluator(times, threads=1))[0] ** 2)

    a, b, c = series.times[i - 1], series.times[i], series.times[i + 1]
    if series.p00[i] < series.p00[i + 1]:
        result = optimize.minimize_scalar(
            survival, bracket=(a, b, c), method="golden", tol=1e-10
        )
        if a <= result.x <= c:
            return float(result.x)
    result = optimize.minimize_scalar(survival, bounds=(a, c), method="bounded")
    return float(result.x)


def principal_dip(dips: List[CollapseDip]) -> Optional[CollapseDip]:
    return max(dips, key=lambda d: d.depth, default=None)


def collapse_phase_mismatch(
    t: float,
    epsilon_r: float,
    lower_edge: float,
    amplitude_phase: float,
    beta: float,
    bandwidth: float,
    edge_phase: float = -0.5 * np.pi,
) -> float:
    """파괴적 간섭 조건 arg Ψ_R - arg Ψ_S = π 의 모형 잔차

    Ψ_R ≈ e^{-iε_L t} e^{iθ_I} (1 - β e^{-iBt}),  Ψ_S ≈ ā e^{-iε_r t}
    """
    phi = np.arctan2(beta * np.sin(bandwidth * t), 1 - beta * np.cos(bandwidth * t))
    return wrap_phase(
        (epsilon_r - lower_edge) * t + edge_phase + phi - amplitude_phase - np.pi
    )


def check_collapse_phase(
    res: Resonance, dip: CollapseDip, spec: Optional[AdatomSpec] = None
) -> float:
    """dip 시각에서 파괴적 간섭 위상 조건의 잔차

    spec 이 있으면 Ψ_R 의 위상을 모든 수직선(밴드 중심 포함) 합에서 취하고,
    없으면 밴드 끝 두 선만 남긴 장시간 모형 (θ_I = -π/2) 을 쓴다.
    """
    lower, upper = res.band_edges
    if spec is not None:
        times = np.array([dip.t_dip])
        psi_r = ReturnAmplitude(spec, res)(times, threads=1)[0]
        # ε_L 반송파를 뺀 Ψ_R 위상 전체가 edge_phase 역할
        carrier_free = float(np.angle(psi_r * np.exp(1j * lower * dip.t_dip)))
        return collapse_phase_mismatch(
            dip.t_dip,
            res.epsilon_r,
            lower,
            float(np.angle(res.amplitude)),
            0.0,
            upper - lower,
            carrier_free,
        )
    return collapse_phase_mismatch(
        dip.t_dip,
        res.epsilon_r,
        lower,
        float(np.angle(res.amplitude)),
        res.beta,
        upper - lower,
        -0.5 * np.pi,
    )


def check_timescale_hierarchy(res: Resonance, t_r: float, margin: float = 10.0) -> bool:
    """(ε_r - ε_L) ≫ Γ₀ > 2π/t_R"""
    lower, _ = res.band_edges
    return (res.epsilon_r - lower) >= margin * res.gamma0 and res.gamma0 > 2 * np.pi / t_r


def _fit_mask(series: SurvivalSeries, window: Tuple[float, float]) -> np.ndarray:
    t_lo, t_hi = window
    inside = (series.times >= t_lo) & (series.times <= t_hi) & (series.p00 > 0)
    # dip 제외: 이동 중앙값보다 10배 이상 낮은 점
    median = (
        pd.Series(series.p00)
        .rolling(ROLLING_WINDOW, center=True, min_periods=1)
        .median()
        .to_numpy()
    )
    mask = inside & (series.p00 * DIP_THRESHOLD >= median)
    if int(mask.sum()) < MIN_FIT_POINTS:
        raise FitWindowError(
            f"only {int(mask.sum())} usable points in window [{t_lo:.4g}, {t_hi:.4g}]"
        )
    return mask


def fit_exponential(series: SurvivalSeries, window: Tuple[float, float]) -> ExponentialFit:
    """log P₀₀ = log A - rate·t 최소제곱"""
    mask = _fit_mask(series, window)
    t = series.times[mask]
    log_p = np.log(series.p00[mask])
    (slope, intercept), residuals, *_ = np.polyfit(t, log_p, 1, full=True)
    residual = float(np.sqrt(residuals[0] / t.size)) if residuals.size else 0.0
    return ExponentialFit(
        rate=-float(slope),
        prefactor=float(np.exp(intercept)),
        residual=residual,
        n_points=int(t.size),
    )


def fit_power_law(series: SurvivalSeries, window: Tuple[float, float]) -> PowerLawFit:
    """log P₀₀ = log C + exponent·log t 최소제곱"""
    mask = _fit_mask(series, window)
    log_t = np.log(series.times[mask])
    log_p = np.log(series.p00[mask])
    (slope, intercept), residuals, *_ = np.polyfit(log_t, log_p, 1, full=True)
    residual = float(np.sqrt(residuals[0] / log_t.size)) if residuals.size else 0.0
    return PowerLawFit(
        exponent=float(slope),
        amplitude=float(np.exp(intercept)),
        residual=residual,
        n_points=int(log_t.size),
    )


def period_averaged(
    spec: AdatomSpec,
    res: Resonance,
    centers: np.ndarray,
    samples: int = 32,
    threads: Optional[int] = None,
) -> SurvivalSeries:
    """가장 느린 맥놀이 주기에 걸친 P₀₀ 평균 (변조 제거)"""
    period = slow_period(spec)
    offsets = (np.arange(samples) + 0.5) / samples - 0.5
    times = (centers[:, None] + period * offsets[None, :]).ravel()
    evaluator = ReturnAmplitude(spec, res)
    amplitude = evaluator.pole_term(times) + evaluator(times, threads=threads)
    averaged = np.mean(np.abs(amplitude.reshape(centers.size, samples)) ** 2, axis=1)
    return SurvivalSeries(
        times=centers,
        p00=averaged,
        psi_s=np.sqrt(averaged).astype(complex),
        psi_r=np.zeros(centers.size, dtype=complex),
        method=SurvivalMethod.DECOMPOSED,
    )


def modulation_spectrum(
    spec: AdatomSpec,
    res: Resonance,
    t_start: float,
    samples: int = 4096,
    relative_threshold: float = 0.01,
    threads: Optional[int] = None,
) -> List[float]:
    """꼬리 영역 t²·P₀₀ 의 스펙트럼 선 (각진동수, 크기 내림차순)"""
    dt = modulation_period(spec) / 16
    times = t_start + dt * np.arange(samples)
    evaluator = ReturnAmplitude(spec, res)
    amplitude = evaluator.pole_term(times) + evaluator(times, threads=threads)
    scaled = times**2 * np.abs(amplitude) ** 2
    scaled = signal.detrend(scaled, type="linear")
    window = signal.get_window("blackmanharris", samples)
    magnitude = np.abs(np.fft.rfft(scaled * window))
    omega = 2 * np.pi * np.fft.rfftfreq(samples, dt)

    lowest = 8  # 추세 잔여 성분 제외
    magnitude[:lowest] = 0.0
    peaks, _ = signal.find_peaks(
        magnitude, height=relative_threshold * magnitude.max(), distance=8
    )
    lines = []
    for k in peaks:
        if k - 1 < lowest or k + 1 >= magnitude.size:
            continue
        # 로그 크기 포물선 보간
        left, mid, right = np.log(magnitude[k - 1 : k + 2])
        shift = 0.5 * (left - right) / (left - 2 * mid + right)
        lines.append((magnitude[k], (k + shift) * (omega[1] - omega[0])))
    lines.sort(reverse=True)
    return [float(w) for _, w in lines]


def extract_modulation(
    spec: AdatomSpec, res: Resonance, t_start: float, threads: Optional[int] = None
) -> Tuple[float, List[float]]:
    """밴드 끝 맥놀이(가장 높은 유의 주파수)와 전체 스펙트럼 선"""
    lines = modulation_spectrum(spec, res, t_start, threads=threads)
    if not lines:
        raise DomainError(f"no modulation lines found in the tail after t={t_start:.4g}")
    return max(lines), lines


def analyze_regimes(
    spec: AdatomSpec,
    res: Resonance,
    times: np.ndarray,
    exp_window: Optional[Tuple[float, float]] = None,
    tail_window: Optional[Tuple[float, float]] = None,
    threads: Optional[int] = None,
) -> Tuple[RegimeReport, SurvivalSeries]:
    """영역 분석 파이프라인 (t_R 근처 자동 조밀화 포함)"""
    console.step("경로 분해 시계열 계산")
    coarse = survival_decomposed(spec, res, times, threads=threads)
    t_r = estimate_tr(res, coarse, spec)

    refined_times = refine_around(
        coarse.times, t_r, 10 * slow_period(spec), modulation_period(spec) / REFINE_FACTOR
    )
    series = survival_decomposed(spec, res, refined_times, threads=threads)
    console.info(f"t_R = {t_r:.6g}, 조밀화 후 {series.times.size}개 시간점")

    dips = detect_collapse(series, spec, res)
    ts = estimate_ts(spec, res)

    if exp_window is None:
        exp_window = (1.0 / res.gamma0, 0.4 * t_r)
    exponential = fit_exponential(series, exp_window)

    if tail_window is None:
        tail_window = (3.0 * t_r, 30.0 * t_r)
    centers = np.geomspace(tail_window[0], tail_window[1], 60)
    tail = fit_power_law(period_averaged(spec, res, centers, threads=threads), tail_window)

    modulation_freq, peaks = extract_modulation(spec, res, tail_window[0], threads=threads)

    report = RegimeReport(
        gamma0=res.gamma0,
        t_s=ts.closed_form,
        t_s_numerical=ts.numerical,
        t_r=t_r,
        fitted_rate=exponential.rate,
        fitted_prefactor=exponential.prefactor,
        tail_exponent=tail.exponent,
        modulation_freq=modulation_freq,
        modulation_peaks=peaks,
        dips=dips,
    )
    return report, series


def sweep_coupling(
    spec: AdatomSpec,
    v0_values: Iterable[float],
    points: int = 400,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """V₀ 값 목록에 대한 공명/영역 요약 표"""
    rows = []
    for v0 in console.progress(list(v0_values), desc="V0 sweep"):
        current = AdatomSpec(epsilon0=spec.epsilon0, v0=float(v0), substrate=spec.substrate)
        res = find_pole(current)
        times = make_time_grid(0.01, 60.0 / res.gamma0, points)
        series = survival_decomposed(current, res, times, threads=threads)
        t_r = estimate_tr(res, series, current)
        refined = survival_decomposed(
            current,
            res,
            refine_around(
                times, t_r, 10 * slow_period(current), modulation_period(current) / REFINE_FACTOR
            ),
            threads=threads,
        )
        dip = principal_dip(detect_collapse(refined, current, res))
        rows.append(
            {
                "v0": float(v0),
                "epsilon_r": res.epsilon_r,
                "gamma0": res.gamma0,
                "weight": res.weight,
                "t_s": np.pi * float(substrate_ldos(current.epsilon0, current.substrate)),
                "t_r": t_r,
                "t_r_gamma0": t_r * res.gamma0,
                "dip_time": dip.t_dip if dip else np.nan,
                "dip_depth": dip.depth if dip else np.nan,
            }
        )
    return pd.DataFrame(rows)
