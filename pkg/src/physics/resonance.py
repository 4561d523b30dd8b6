"""
Dyson 방정식으로 흡착 원자 Green 함수를 만들고
LDoS N₀, 그 해석 연속, 2차 시트 극(공명)을 계산한다.
"""

from functools import lru_cache
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from scipy import optimize

from src.models.errors import (
    BoundStateError,
    DomainError,
    PoleSearchError,
    SingularityError,
)
from src.models.schemas import (
    AdatomSpec,
    BandHalf,
    BoundState,
    MomentReference,
    Resonance,
    Sheet,
    SubstrateKind,
    SubstrateSpec,
    beta_ratio,
)
from src.physics.substrate_green import SubstrateGreen, create_substrate_green
from src.utils.console import console
from src.utils.quadrature import LegendrePanels

ArrayLike = Union[complex, float, np.ndarray]

BOUND_STATE_GAP = 1e-9
ARGUMENT_PRINCIPLE_POINTS = 64


@lru_cache(maxsize=None)
def _substrate(substrate: SubstrateSpec) -> SubstrateGreen:
    return create_substrate_green(substrate)


def self_energy(
    z: ArrayLike,
    spec: AdatomSpec,
    sheet: Sheet = Sheet.PHYSICAL,
    half: Optional[BandHalf] = None,
):
    """Σ(z) = V₀² G₁₁(z)"""
    return spec.v0**2 * np.asarray(_substrate(spec.substrate).green(z, sheet, half))


def g00(
    z: ArrayLike,
    spec: AdatomSpec,
    sheet: Sheet = Sheet.PHYSICAL,
    half: Optional[BandHalf] = None,
):
    """G₀₀(z) = 1/(z - ε₀ - Σ(z)), Σ는 같은 시트에서 평가"""
    z_arr = np.asarray(z, dtype=complex)
    if spec.v0 == 0:
        denominator = z_arr - spec.epsilon0
    else:
        denominator = z_arr - spec.epsilon0 - self_energy(z_arr, spec, sheet, half)
    if np.any(denominator == 0):
        raise SingularityError("G00 has a pole at the requested energy")
    values = 1.0 / denominator
    return values.item() if np.ndim(z) == 0 else values


def pole_function(z: ArrayLike, spec: AdatomSpec, half: Optional[BandHalf] = None):
    """D^II(z) = z - ε₀ - Σ^II(z)"""
    z_arr = np.asarray(z, dtype=complex)
    values = z_arr - spec.epsilon0 - self_energy(z_arr, spec, Sheet.SECOND, half)
    return values.item() if np.ndim(z) == 0 else values


def ldos0(eps: ArrayLike, spec: AdatomSpec, strict: bool = False):
    """N₀(ε) = -(1/π) Im G₀₀(ε + i0)

    밴드 안 연속 부분만 돌려준다. strict 이면 밴드 밖 속박 상태가 있을 때
    BoundStateError (상태 목록 포함) 를 낸다.
    """
    eps_arr = np.asarray(eps, dtype=float)
    if not np.all(np.isfinite(eps_arr)):
        raise DomainError("ldos0 requires finite energies")
    if strict and spec.v0 != 0:
        require_no_bound_state(spec)
    if spec.v0 == 0:
        if np.any(eps_arr == spec.epsilon0):
            raise SingularityError("decoupled level is a delta function", spec.epsilon0)
        values = np.zeros_like(eps_arr)
    else:
        lower, upper = spec.substrate.band_edges
        inside = (eps_arr > lower) & (eps_arr < upper)
        values = np.zeros_like(eps_arr)
        if np.any(inside):
            green = np.asarray(g00(eps_arr[inside], spec))
            values[inside] = np.maximum(-green.imag / np.pi, 0.0)
    return float(values) if np.ndim(eps) == 0 else values


def ldos0_continued(z: ArrayLike, spec: AdatomSpec, half: Optional[BandHalf] = None):
    """아래 반평면으로 해석 연속한 N₀(z) = (G₀₀^I - G₀₀^II)/(2πi)"""
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr.imag > 0):
        raise DomainError("ldos0_continued is defined for Im z <= 0")
    values = np.zeros(z_arr.shape, dtype=complex)
    on_axis = z_arr.imag == 0
    if np.any(on_axis):
        values[on_axis] = ldos0(z_arr.real[on_axis], spec)
    below = ~on_axis
    if np.any(below) and spec.v0 != 0:
        z_below = z_arr[below]
        physical = np.asarray(g00(z_below, spec, Sheet.PHYSICAL))
        second = np.asarray(g00(z_below, spec, Sheet.SECOND, half))
        values[below] = (physical - second) / (2j * np.pi)
    return values.item() if np.ndim(z) == 0 else values


def edge_line_phase(spec: AdatomSpec, eps_prime: ArrayLike) -> np.ndarray:
    """밴드 하단 수직선 ε_L - iε' 위에서 |Im N₀| / |Re N₀|"""
    lower, _ = spec.substrate.band_edges
    half = BandHalf.LOWER if spec.substrate.kind == SubstrateKind.SQUARE_2D else None
    values = np.asarray(
        ldos0_continued(lower - 1j * np.asarray(eps_prime, dtype=float), spec, half)
    )
    return np.abs(values.imag) / np.abs(values.real)


def _derivative(func: Callable[[complex], complex], z: complex, h: float) -> complex:
    """중앙 차분 + Richardson 외삽 (실수 방향)"""

    def central(step: float) -> complex:
        return (func(z + step) - func(z - step)) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def first_pole_approx(spec: AdatomSpec) -> Tuple[float, float]:
    """Σ(ε₀ + i0) 로 얻은 1차 극 근사 (ε_r, Γ₀) (FGR)"""
    if spec.v0 == 0:
        return spec.epsilon0, 0.0
    sigma = complex(self_energy(spec.epsilon0, spec))
    return spec.epsilon0 + sigma.real, -sigma.imag


def _strip_bounds(spec: AdatomSpec, half: Optional[BandHalf]) -> Tuple[float, float]:
    lower, upper = spec.substrate.band_edges
    if half == BandHalf.LOWER:
        return lower, spec.substrate.band_center
    if half == BandHalf.UPPER:
        return spec.substrate.band_center, upper
    return lower, upper


def _band_half(spec: AdatomSpec, energy: float) -> Optional[BandHalf]:
    if spec.substrate.kind != SubstrateKind.SQUARE_2D:
        return None
    if energy == spec.substrate.band_center:
        raise SingularityError(
            "resonance sits on the band-centre branch point", energy
        )
    return BandHalf.LOWER if energy < spec.substrate.band_center else BandHalf.UPPER


def _newton(
    spec: AdatomSpec,
    half: Optional[BandHalf],
    z0: complex,
    tol: float,
    max_iter: int,
) -> Tuple[complex, int, float]:
    hopping = spec.substrate.hopping
    lower, upper = spec.substrate.band_edges

    def residual(z: complex) -> complex:
        return complex(pole_function(z, spec, half))

    z = complex(z0)
    for iteration in range(1, max_iter + 1):
        value = residual(z)
        if abs(value) <= tol * hopping:
            return z, iteration, abs(value)
        slope = _derivative(residual, z, 1e-6 * hopping)
        z = z - value / slope
        if not (-4 * hopping < z.imag < 0 and lower < z.real < upper):
            raise DomainError(f"pole search left the strip below the band: z={z}")
    raise PoleSearchError(
        f"Newton iteration did not converge in {max_iter} steps",
        last_iterate=z,
        iterations=max_iter,
    )


def _argument_principle_seed(spec: AdatomSpec, half: Optional[BandHalf]) -> complex:
    """직사각형 경로의 편각 원리로 극 위치를 추정"""
    a, b = _strip_bounds(spec, half)
    hopping = spec.substrate.hopping
    margin = 1e-6 * hopping
    top, bottom = -margin, -4 * hopping + margin
    left, right = a + margin, b - margin

    n = ARGUMENT_PRINCIPLE_POINTS
    s = np.linspace(0, 1, n, endpoint=False)
    path = np.concatenate(
        [
            left + (right - left) * s + 1j * bottom,
            right + 1j * (bottom + (top - bottom) * s),
            right - (right - left) * s + 1j * top,
            left + 1j * (top - (top - bottom) * s),
        ]
    )
    path = np.append(path, path[0])
    values = np.asarray(pole_function(path, spec, half))
    dlog = np.log(values[1:] / values[:-1])
    count = np.sum(dlog).imag / (2 * np.pi)
    if round(count) != 1:
        raise PoleSearchError(
            f"argument principle found {count:.2f} zeros in the strip",
            last_iterate=complex(np.nan, np.nan),
            iterations=0,
        )
    midpoints = 0.5 * (path[1:] + path[:-1])
    return complex(np.sum(midpoints * dlog) / (2j * np.pi))


def find_pole(spec: AdatomSpec, tol: float = 1e-12, max_iter: int = 100) -> Resonance:
    """2차 시트에서 D(z) = 0 을 뉴턴법으로 풀어 공명 파라미터를 구함"""
    edges = spec.substrate.band_edges
    if not spec.in_band():
        raise DomainError(f"epsilon0={spec.epsilon0} must lie strictly inside the band")

    if spec.v0 == 0:
        return Resonance(
            epsilon0=spec.epsilon0,
            epsilon_r=spec.epsilon0,
            gamma0=0.0,
            delta0=0.0,
            residue_a=2j * np.pi,
            amplitude=1.0 + 0j,
            beta=beta_ratio(spec.epsilon0, 0.0, edges),
            band_edges=edges,
            band_half=_band_half(spec, spec.epsilon0),
        )

    seed_energy, seed_width = first_pole_approx(spec)
    half = _band_half(spec, seed_energy)
    try:
        z, iterations, residual = _newton(
            spec, half, complex(seed_energy, -seed_width), tol, max_iter
        )
    except (PoleSearchError, DomainError) as e:
        console.warn(f"Newton from the first-pole seed failed ({e}); scanning the strip")
        seed = _argument_principle_seed(spec, half)
        z, iterations, residual = _newton(spec, half, seed, tol, max_iter)

    def sigma(w: complex) -> complex:
        return complex(self_energy(w, spec, Sheet.SECOND, half))

    slope = _derivative(sigma, z, 1e-6 * spec.substrate.hopping)
    amplitude = 1.0 / (1.0 - slope)
    epsilon_r, gamma0 = z.real, -z.imag
    return Resonance(
        epsilon0=spec.epsilon0,
        epsilon_r=epsilon_r,
        gamma0=gamma0,
        delta0=epsilon_r - spec.epsilon0,
        residue_a=2j * np.pi * amplitude,
        amplitude=amplitude,
        beta=beta_ratio(epsilon_r, gamma0, edges),
        band_edges=edges,
        band_half=half,
        iterations=iterations,
        residual=residual,
    )


def _real_pole_function(spec: AdatomSpec) -> Callable[[float], float]:
    def value(energy: float) -> float:
        return energy - spec.epsilon0 - float(np.real(self_energy(energy, spec)))

    return value


def find_bound_states(spec: AdatomSpec, gap: float = BOUND_STATE_GAP) -> List[BoundState]:
    """밴드 밖 실수축에서 D(ε) = 0 인 속박 상태 탐색

    밴드 끝에서 gap·V 보다 가까운 해는 분해능 이하로 보고 무시한다.
    """
    lower, upper = spec.substrate.band_edges
    hopping = spec.substrate.hopping
    func = _real_pole_function(spec)
    states: List[BoundState] = []

    start = lower - gap * hopping
    if func(start) > 0:
        step = hopping
        while func(start - step) >= 0:
            step *= 2
        energy = optimize.brentq(func, start - step, start, xtol=1e-14, rtol=1e-15)
        states.append(_bound_state(spec, energy, "below"))

    start = upper + gap * hopping
    if func(start) < 0:
        step = hopping
        while func(start + step) <= 0:
            step *= 2
        energy = optimize.brentq(func, start, start + step, xtol=1e-14, rtol=1e-15)
        states.append(_bound_state(spec, energy, "above"))
    return states


def _bound_state(spec: AdatomSpec, energy: float, side: str) -> BoundState:
    func = _real_pole_function(spec)
    h = 1e-6 * spec.substrate.hopping
    lower, upper = spec.substrate.band_edges
    # 차분 점이 밴드 안으로 들어가지 않도록 제한
    h = min(h, 0.25 * abs(energy - (lower if side == "below" else upper)))
    slope = _derivative(func, energy, h)
    return BoundState(energy=energy, weight=1.0 / slope, side=side)


def require_no_bound_state(spec: AdatomSpec):
    states = find_bound_states(spec)
    if states:
        listing = ", ".join(f"E={s.energy:.6g} (w={s.weight:.3g})" for s in states)
        raise BoundStateError(f"bound state present outside the band: {listing}", states)


def _resonance_breakpoints(spec: AdatomSpec) -> List[float]:
    lower, upper = spec.substrate.band_edges
    points = list(spec.substrate.branch_points)
    try:
        energy, width = first_pole_approx(spec)
    except SingularityError:
        return points
    width = max(width, 1e-6 * spec.substrate.hopping)
    for offset in (-20, -3, 0, 3, 20):
        candidate = energy + offset * width
        if lower < candidate < upper and all(
            abs(candidate - p) > 1e-9 * spec.substrate.hopping
            for p in spec.substrate.branch_points
        ):
            points.append(candidate)
    return sorted(points)


@lru_cache(maxsize=32)
def ldos0_panels(spec: AdatomSpec, tol: float = 1e-11) -> LegendrePanels:
    """N₀ 의 적응 르장드르 패널 (분기점과 공명 주변에서 분할)"""
    return LegendrePanels.build(
        lambda x: ldos0(x, spec), _resonance_breakpoints(spec), tol=tol
    )


def spectral_moments(
    spec: AdatomSpec,
    n: int,
    about: Optional[float] = None,
    include_bound_states: bool = False,
    tol: float = 1e-11,
) -> float:
    """N₀ 의 n차 모멘트 (about 지정 시 중심 모멘트)"""
    if not 0 <= n <= 4:
        raise DomainError(f"moment order n={n} must be between 0 and 4")
    reference = 0.0 if about is None else float(about)
    if spec.v0 == 0:
        return (spec.epsilon0 - reference) ** n

    states = find_bound_states(spec)
    if states and not include_bound_states:
        raise BoundStateError("bound state present; pass include_bound_states=True", states)

    total = ldos0_panels(spec, tol).integrate(lambda x: (x - reference) ** n)
    total += sum(s.weight * (s.energy - reference) ** n for s in states)
    return total


def second_moment(
    spec: AdatomSpec, reference: MomentReference = MomentReference.EPSILON0
) -> float:
    """기준 에너지(ε₀ 또는 ε_r)에 대한 2차 중심 모멘트"""
    if MomentReference(reference) == MomentReference.EPSILON0:
        return spectral_moments(spec, 2, about=spec.epsilon0)
    return spectral_moments(spec, 2, about=find_pole(spec).epsilon_r)
