"""
생존 확률 P₀₀(t) 계산: 직접 푸리에 변환, 경로 분해(Ψ_S + Ψ_R), 단시간/장시간 근사
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from src.models.errors import DomainError, SingularityError
from src.models.schemas import (
    AdatomSpec,
    BandHalf,
    MomentReference,
    Resonance,
    SubstrateKind,
    SurvivalMethod,
    SurvivalSeries,
    TimeSpacing,
)
from src.physics.resonance import (
    ldos0_continued,
    ldos0_panels,
    require_no_bound_state,
    second_moment,
)
from src.utils.console import console
from src.utils.quadrature import TIME_CHUNK, graded_line_rule

TAIL_DECADES = 40.0


def worker_count(threads: Optional[int] = None) -> Optional[int]:
    """스레드 수: 인자 > SURVIVAL_THREADS 환경변수 > 기본값"""
    if threads is not None:
        return max(1, int(threads))
    value = os.getenv("SURVIVAL_THREADS")
    if value:
        return max(1, int(value))
    return None


def make_time_grid(
    t_min: float, t_max: float, points: int, spacing: TimeSpacing = TimeSpacing.GEOMETRIC
) -> np.ndarray:
    if points < 2 or t_max <= t_min or t_min < 0:
        raise DomainError(f"invalid time grid [{t_min}, {t_max}] with {points} points")
    if TimeSpacing(spacing) == TimeSpacing.LINEAR:
        return np.linspace(t_min, t_max, points)
    if t_min == 0:
        # 0 은 별도로 두고 나머지는 기하 간격
        rest = np.geomspace(t_max * 1e-6, t_max, points - 1)
        return np.concatenate([[0.0], rest])
    return np.geomspace(t_min, t_max, points)


def refine_around(
    times: np.ndarray, center: float, half_width: float, spacing: float
) -> np.ndarray:
    """center ± half_width 구간에 선형 조밀 그리드를 삽입"""
    lo = max(center - half_width, 0.0)
    dense = np.arange(lo, center + half_width, spacing)
    merged = np.unique(np.concatenate([np.asarray(times, dtype=float), dense]))
    return merged


def _validate_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("times must be a non-empty 1-D array")
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise DomainError("times must be finite and non-negative")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise DomainError("times must be strictly increasing")
    return times


def survival_direct(
    spec: AdatomSpec,
    times,
    tol: float = 1e-11,
    threads: Optional[int] = None,
) -> SurvivalSeries:
    """A(t) = ∫ N₀(ε) e^{-iεt} dε (Filon-Legendre 패널)"""
    times = _validate_times(times)
    require_no_bound_state(spec)
    if spec.v0 == 0:
        amplitude = np.exp(-1j * spec.epsilon0 * times)
    else:
        panels = ldos0_panels(spec, tol)
        amplitude = panels.fourier(times, threads=worker_count(threads))
    return SurvivalSeries(
        times=times,
        p00=np.abs(amplitude) ** 2,
        psi_s=amplitude,
        psi_r=np.zeros_like(amplitude),
        method=SurvivalMethod.DIRECT,
    )


def _strips(spec: AdatomSpec) -> List[Tuple[float, float, Optional[BandHalf]]]:
    lower, upper = spec.substrate.band_edges
    if spec.substrate.kind == SubstrateKind.SQUARE_2D:
        center = spec.substrate.band_center
        return [(lower, center, BandHalf.LOWER), (center, upper, BandHalf.UPPER)]
    return [(lower, upper, None)]


class ReturnAmplitude:
    """Ψ_R(t): 분기점 아래 수직선 적분의 합

    반쪽 밴드 띠 [a, b] 마다
    i e^{-ibt} ∫ N₀(b - iy) e^{-yt} dy - i e^{-iat} ∫ N₀(a - iy) e^{-yt} dy
    를 더한다 (N₀ 은 그 띠의 연속).
    """

    def __init__(self, spec: AdatomSpec, res: Resonance):
        self.spec = spec
        self.res = res
        hopping = spec.substrate.hopping
        self.y_floor = 8.0 * hopping
        y, w = graded_line_rule(y_first=1e-14 * hopping, y_last=1e12 * hopping)
        self.y = y

        for point in spec.substrate.branch_points:
            if abs(res.epsilon_r - point) < 1e-8 * hopping:
                raise SingularityError(
                    "resonance pole lies under a branch point", res.pole
                )

        # (분기점 에너지, 부호 포함 가중 표본)
        self.lines: List[Tuple[float, np.ndarray]] = []
        self.edge_lines: dict = {}
        for a, b, half in _strips(spec):
            at_b = np.asarray(ldos0_continued(b - 1j * y, spec, half)) * w
            at_a = np.asarray(ldos0_continued(a - 1j * y, spec, half)) * w
            self.lines.append((b, 1j * at_b))
            self.lines.append((a, -1j * at_a))
            self.edge_lines.setdefault(a, at_a)
            self.edge_lines[b] = at_b

    def _decay(self, times: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            y_max = np.where(times > 0, np.maximum(TAIL_DECADES / times, self.y_floor), np.inf)
        mask = self.y[None, :] <= y_max[:, None]
        return np.exp(-np.outer(times, self.y)) * mask

    def _chunk(self, times: np.ndarray) -> np.ndarray:
        decay = self._decay(times)
        total = np.zeros(times.shape, dtype=complex)
        for energy, weighted in self.lines:
            integral = np.sum(decay * weighted[None, :], axis=1)
            total += np.exp(-1j * energy * times) * integral
        return total

    def __call__(self, times, threads: Optional[int] = None) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        chunks = [times[i : i + TIME_CHUNK] for i in range(0, times.size, TIME_CHUNK)]
        with ThreadPoolExecutor(max_workers=worker_count(threads)) as pool:
            parts = list(pool.map(self._chunk, chunks))
        return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)

    def edge_integral(self, times, energy: Optional[float] = None) -> np.ndarray:
        """∫₀^∞ e^{-yt} N₀(x - iy) dy (기본: 밴드 하단 x = ε_L)"""
        times = np.asarray(times, dtype=float)
        if energy is None:
            energy = self.spec.substrate.band_edges[0]
        weighted = self.edge_lines[energy]
        return np.sum(self._decay(times) * weighted[None, :], axis=1)

    def pole_term(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return self.res.amplitude * np.exp(-1j * self.res.pole * times)


def survival_decomposed(
    spec: AdatomSpec,
    res: Resonance,
    times,
    threads: Optional[int] = None,
) -> SurvivalSeries:
    """A(t) = Ψ_S(t) + Ψ_R(t) (극 기여 + 분기점 귀환 기여)"""
    times = _validate_times(times)
    require_no_bound_state(spec)
    if spec.v0 == 0:
        psi_s = np.exp(-1j * spec.epsilon0 * times)
        psi_r = np.zeros_like(psi_s)
    else:
        evaluator = ReturnAmplitude(spec, res)
        psi_s = evaluator.pole_term(times)
        psi_r = evaluator(times, threads=threads)
    return SurvivalSeries(
        times=times,
        p00=np.abs(psi_s + psi_r) ** 2,
        psi_s=psi_s,
        psi_r=psi_r,
        method=SurvivalMethod.DECOMPOSED,
    )


def short_time(
    spec: AdatomSpec,
    times,
    reference: MomentReference = MomentReference.EPSILON0,
) -> SurvivalSeries:
    """P₀₀ ≈ 1 - m₂ t²"""
    times = _validate_times(times)
    if MomentReference(reference) == MomentReference.EPSILON0:
        m2 = spec.v0**2
    else:
        m2 = second_moment(spec, MomentReference.EPSILON_R)
    p00 = 1.0 - m2 * times**2
    if np.any(p00 < 0):
        raise DomainError(
            f"short-time law is negative beyond t={1 / np.sqrt(m2):.4g}; shorten the grid"
        )
    amplitude = np.sqrt(p00).astype(complex)
    return SurvivalSeries(
        times=times,
        p00=p00,
        psi_s=amplitude,
        psi_r=np.zeros_like(amplitude),
        method=SurvivalMethod.SHORT_TIME,
    )


def long_time_asymptote(spec: AdatomSpec, res: Resonance, times) -> SurvivalSeries:
    """P₀₀ ≈ [1 + β² - 2β cos(Bt)] |∫ e^{-yt} N₀(ε_L - iy) dy|²"""
    times = _validate_times(times)
    if res.gamma0 > 0 and times[0] < 1.0 / res.gamma0:
        console.warn(
            f"long-time asymptote requested from t={times[0]:.3g} < 1/Γ₀={1 / res.gamma0:.3g}"
        )
    evaluator = ReturnAmplitude(spec, res)
    lower, _ = spec.substrate.band_edges
    bandwidth = spec.substrate.bandwidth
    edge = evaluator.edge_integral(times)
    modulation = 1 + res.beta**2 - 2 * res.beta * np.cos(bandwidth * times)
    psi_r = -1j * np.exp(-1j * lower * times) * edge * (1 - res.beta * np.exp(-1j * bandwidth * times))
    return SurvivalSeries(
        times=times,
        p00=modulation * np.abs(edge) ** 2,
        psi_s=np.zeros_like(psi_r),
        psi_r=psi_r,
        method=SurvivalMethod.LONG_TIME,
    )


def arc_contribution_bound(
    spec: AdatomSpec, radius: Optional[float] = None, samples: int = 64
) -> float:
    """분기점 주위 작은 호(반지름 r)의 기여 상한 Σ (π r / 2) max|N₀|"""
    radius = 1e-4 * spec.substrate.hopping if radius is None else radius
    theta = np.linspace(0, 0.5 * np.pi, samples + 1)[1:]
    bound = 0.0
    for a, b, half in _strips(spec):
        # 띠의 왼쪽 끝은 오른쪽에서, 오른쪽 끝은 왼쪽에서 접근
        left_arc = a + radius * np.exp(-1j * theta)
        right_arc = b - radius * np.exp(1j * theta)
        for arc in (left_arc, right_arc):
            values = np.abs(np.asarray(ldos0_continued(arc, spec, half)))
            bound += 0.5 * np.pi * radius * float(values.max())
    return bound
