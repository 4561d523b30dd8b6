"""
르장드르 패널 구적과 진동 적분(Filon-Legendre) 도구
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from src.models.errors import QuadratureError

GAUSS_ORDER = 24
FILON_SWITCH = 8.0
TIME_CHUNK = 32

_nodes, _weights = np.polynomial.legendre.leggauss(GAUSS_ORDER)
_degrees = np.arange(GAUSS_ORDER)
# 가우스 표본값 -> 르장드르 계수 투영 행렬
_projector = (
    np.polynomial.legendre.legvander(_nodes, GAUSS_ORDER - 1) * _weights[:, None]
).T * ((2 * _degrees + 1) / 2)[:, None]
# ∫ P_k(x) e^{-iωx} dx = 2 (-i)^k j_k(ω)
_moment_phase = 2 * (-1j) ** _degrees


@dataclass
class Panel:
    a: float
    b: float
    samples: np.ndarray
    coeffs: np.ndarray
    error: float

    @property
    def width(self) -> float:
        return self.b - self.a


def _fit_panel(func: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> Panel:
    x = 0.5 * (a + b) + 0.5 * (b - a) * _nodes
    samples = np.asarray(func(x), dtype=float)
    coeffs = _projector @ samples
    error = (b - a) * (abs(coeffs[-1]) + abs(coeffs[-2]))
    return Panel(a, b, samples, coeffs, error)


class LegendrePanels:
    """구간별 르장드르 다항식 근사 (적응 분할)

    각 패널은 GAUSS_ORDER 점 가우스 표본과 르장드르 계수를 가진다.
    """

    def __init__(self, panels: List[Panel]):
        self.panels = sorted(panels, key=lambda p: p.a)
        self._a = np.array([p.a for p in self.panels])
        self._b = np.array([p.b for p in self.panels])
        self._samples = np.array([p.samples for p in self.panels])
        self._coeffs = np.array([p.coeffs for p in self.panels])

    @classmethod
    def build(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        breakpoints: Sequence[float],
        tol: float = 1e-11,
        min_width_ratio: float = 1e-10,
        max_panels: int = 20000,
    ) -> "LegendrePanels":
        """breakpoints 사이를 tol 을 만족할 때까지 이분할"""
        points = np.unique(np.asarray(breakpoints, dtype=float))
        span = points[-1] - points[0]
        min_width = min_width_ratio * span

        accepted: List[Panel] = []
        stack: List[Tuple[float, float]] = list(zip(points[:-1], points[1:]))
        while stack:
            a, b = stack.pop()
            panel = _fit_panel(func, a, b)
            if panel.error <= tol * panel.width / span or panel.width <= min_width:
                accepted.append(panel)
            else:
                mid = 0.5 * (a + b)
                stack.extend([(a, mid), (mid, b)])
            if len(accepted) + len(stack) > max_panels:
                worst = max(accepted, key=lambda p: p.error, default=panel)
                raise QuadratureError(
                    f"panel budget {max_panels} exhausted",
                    worst_panel=(worst.a, worst.b),
                    error=worst.error,
                )

        total_error = sum(p.error for p in accepted)
        if total_error > 1e3 * tol:
            worst = max(accepted, key=lambda p: p.error)
            raise QuadratureError(
                f"estimated error {total_error:.3e} exceeds tolerance {tol:.1e}",
                worst_panel=(worst.a, worst.b),
                error=worst.error,
            )
        return cls(accepted)

    @property
    def error_estimate(self) -> float:
        return float(sum(p.error for p in self.panels))

    def integrate(self, weight: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> float:
        """∫ f(x) w(x) dx (가우스 규칙)"""
        half = 0.5 * (self._b - self._a)
        mid = 0.5 * (self._b + self._a)
        values = self._samples
        if weight is not None:
            x = mid[:, None] + half[:, None] * _nodes[None, :]
            values = values * weight(x)
        return float(np.sum(half * np.sum(values * _weights[None, :], axis=1)))

    def _fourier_chunk(self, times: np.ndarray) -> np.ndarray:
        half = 0.5 * (self._b - self._a)
        mid = 0.5 * (self._b + self._a)
        omega = times[:, None] * half[None, :]
        use_filon = 2 * omega > FILON_SWITCH

        # Filon-Legendre: 다항식 계수 × 정확한 진동 모멘트
        bessel = special.spherical_jn(_degrees[None, None, :], omega[:, :, None])
        filon = np.sum(self._coeffs[None, :, :] * _moment_phase * bessel, axis=2)
        # 진동이 약한 패널은 가우스 규칙
        kernel = np.exp(-1j * omega[:, :, None] * _nodes[None, None, :])
        gauss = np.sum(self._samples[None, :, :] * _weights * kernel, axis=2)

        local = np.where(use_filon, filon, gauss)
        phase = np.exp(-1j * times[:, None] * mid[None, :])
        return np.sum(half[None, :] * phase * local, axis=1)

    def fourier(self, times: np.ndarray, threads: Optional[int] = None) -> np.ndarray:
        """∫ f(ε) e^{-iεt} dε 를 모든 t에 대해 계산 (입력 순서 유지)"""
        times = np.asarray(times, dtype=float)
        chunks = [
            times[i : i + TIME_CHUNK] for i in range(0, times.shape[0], TIME_CHUNK)
        ]
        if not chunks:
            return np.zeros(0, dtype=complex)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(self._fourier_chunk, chunks))
        return np.concatenate(parts)


def graded_line_rule(
    y_first: float = 1e-14,
    y_last: float = 1e12,
    ratio: float = 2.0,
    order: int = 20,
) -> Tuple[np.ndarray, np.ndarray]:
    """[0, y_last] 위의 기하 등급 가우스 규칙 (y = 0 끝점 특이성 대응)"""
    n_panels = int(np.ceil(np.log(y_last / y_first) / np.log(ratio)))
    edges = np.concatenate([[0.0], y_first * ratio ** np.arange(n_panels + 1)])
    nodes, weights = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    y = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    w = half[:, None] * weights[None, :]
    return y.ravel(), w.ravel()
