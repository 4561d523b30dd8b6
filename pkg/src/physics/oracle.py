"""
유한 격자 파속 전파로 얻는 기준(오라클) 생존 진폭

Green 함수 기계와 독립적으로 ⟨0|e^{-iHt}|0⟩ 을 체비셰프 전개로 계산한다.
"""

from typing import Optional, Tuple

import numpy as np
from scipy import sparse, special

from src.models.errors import DomainError, NormDriftError, ReflectionWindowError
from src.models.schemas import (
    FiniteLattice,
    LdosHistogram,
    SubstrateKind,
    SurvivalMethod,
    SurvivalSeries,
)
from src.utils.console import console

SAFETY_FACTOR = 0.8
GERSHGORIN_MARGIN = 0.05
DENSE_LIMIT = 80


def _substrate_index(lat: FiniteLattice, i: int, j: int) -> int:
    """흡착 원자 = 0, 기판 사이트 = 1 + i·L + j"""
    if lat.spec.substrate.kind == SubstrateKind.SEMI_INFINITE_CHAIN:
        return 1 + i
    return 1 + i * lat.size + j


def build_hamiltonian(lat: FiniteLattice) -> sparse.csr_matrix:
    """흡착 원자 + 열린 경계 기판 희소 해밀토니안"""
    spec = lat.spec
    substrate = spec.substrate
    hopping = substrate.hopping
    size = lat.size

    if substrate.kind == SubstrateKind.SEMI_INFINITE_CHAIN:
        n_sites = size
        sites = np.arange(size)
        bonds_from = sites[:-1]
        bonds_to = sites[1:]
    else:
        n_sites = size * size
        grid = np.arange(n_sites).reshape(size, size)
        bonds_from = np.concatenate([grid[:-1, :].ravel(), grid[:, :-1].ravel()])
        bonds_to = np.concatenate([grid[1:, :].ravel(), grid[:, 1:].ravel()])

    attach = _substrate_index(lat, *lat.attach_site)
    rows = np.concatenate(
        [[0], 1 + np.arange(n_sites), 1 + bonds_from, 1 + bonds_to, [0, attach]]
    )
    cols = np.concatenate(
        [[0], 1 + np.arange(n_sites), 1 + bonds_to, 1 + bonds_from, [attach, 0]]
    )
    values = np.concatenate(
        [
            [spec.epsilon0],
            np.full(n_sites, substrate.onsite),
            np.full(2 * bonds_from.size, -hopping),
            [-spec.v0, -spec.v0],
        ]
    )
    return sparse.coo_matrix((values, (rows, cols)), shape=(n_sites + 1,) * 2).tocsr()


def spectral_bounds(hamiltonian: sparse.csr_matrix) -> Tuple[float, float]:
    """Gershgorin 원판으로 얻은 고유값 범위 (5% 여유)"""
    diagonal = hamiltonian.diagonal()
    radius = np.asarray(abs(hamiltonian).sum(axis=1)).ravel() - np.abs(diagonal)
    lo = float(np.min(diagonal - radius))
    hi = float(np.max(diagonal + radius))
    pad = 0.5 * GERSHGORIN_MARGIN * (hi - lo)
    return lo - pad, hi + pad


def _max_group_speed(lat: FiniteLattice) -> float:
    factor = 4.0 if lat.spec.substrate.kind == SubstrateKind.SQUARE_2D else 2.0
    return factor * lat.spec.substrate.hopping


def _boundary_distance(lat: FiniteLattice) -> int:
    """부착 사이트에서 하드월(인덱스 -1, L)까지 거리"""
    i, j = lat.attach_site
    if lat.spec.substrate.kind == SubstrateKind.SEMI_INFINITE_CHAIN:
        return lat.size
    return min(i + 1, j + 1, lat.size - i, lat.size - j)


def reflection_time(lat: FiniteLattice) -> float:
    """경계 반사가 돌아오기 전까지의 유효 시간 창"""
    return SAFETY_FACTOR * _boundary_distance(lat) / _max_group_speed(lat)


def required_size(lat: FiniteLattice, t_max: float) -> int:
    """t_max 까지 유효한 중심 부착 격자 크기 추정"""
    distance = int(np.ceil(t_max * _max_group_speed(lat) / SAFETY_FACTOR)) + 1
    if lat.spec.substrate.kind == SubstrateKind.SEMI_INFINITE_CHAIN:
        return max(32, distance)
    return max(32, 2 * distance)


def _chebyshev_coefficients(width: float, dt: float, tol: float) -> np.ndarray:
    """e^{-iH̃·a·dt} 전개 계수 (베셀 꼬리 < tol 에서 절단)"""
    x = width * dt
    order = int(1.5 * x) + 40
    bessel = special.jv(np.arange(order), x)
    while np.any(np.abs(bessel[-10:]) >= tol):
        order *= 2
        bessel = special.jv(np.arange(order), x)
    keep = np.nonzero(np.abs(bessel) >= tol)[0]
    n_terms = int(keep[-1]) + 1 if keep.size else 1
    coeffs = 2 * (-1j) ** np.arange(n_terms) * bessel[:n_terms]
    coeffs[0] = bessel[0]
    return coeffs


def chebyshev_step(
    hamiltonian: sparse.csr_matrix,
    state: np.ndarray,
    dt: float,
    bounds: Tuple[float, float],
    tol: float = 1e-14,
) -> np.ndarray:
    """ψ(t + dt) = e^{-iH dt} ψ(t)"""
    if dt == 0:
        return state.copy()
    lo, hi = bounds
    center = 0.5 * (hi + lo)
    width = 0.5 * (hi - lo)
    coeffs = _chebyshev_coefficients(width, dt, tol)

    def scaled(vector: np.ndarray) -> np.ndarray:
        return (hamiltonian @ vector - center * vector) / width

    previous = state
    current = scaled(state)
    result = coeffs[0] * previous
    if coeffs.size > 1:
        result = result + coeffs[1] * current
    for c in coeffs[2:]:
        previous, current = current, 2 * scaled(current) - previous
        result = result + c * current
    return np.exp(-1j * center * dt) * result


def evolve_site(
    hamiltonian: sparse.csr_matrix,
    site: int,
    times: np.ndarray,
    tol: float = 1e-14,
    show_progress: bool = True,
) -> np.ndarray:
    """사이트 site 에서 출발한 상태의 귀환 진폭 ⟨site|e^{-iHt}|site⟩"""
    bounds = spectral_bounds(hamiltonian)
    state = np.zeros(hamiltonian.shape[0], dtype=complex)
    state[site] = 1.0
    amplitudes = np.empty(times.size, dtype=complex)
    previous_time = 0.0
    iterator = console.progress(times, desc="Chebyshev") if show_progress else times
    for k, t in enumerate(iterator):
        state = chebyshev_step(hamiltonian, state, t - previous_time, bounds, tol)
        previous_time = t
        drift = abs(np.linalg.norm(state) - 1.0)
        if drift > 1e-12:
            raise NormDriftError(f"norm drift {drift:.2e} at t={t:.6g}")
        amplitudes[k] = state[site]
    return amplitudes


def propagate(lat: FiniteLattice, times, tol: float = 1e-14) -> SurvivalSeries:
    """유한 격자에서 ⟨0|e^{-iHt}|0⟩ 을 직접 전파"""
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(times < 0):
        raise DomainError("times must be a non-empty non-negative array")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise DomainError("times must be strictly increasing")
    window = reflection_time(lat)
    if times[-1] >= window:
        needed = required_size(lat, float(times[-1]))
        raise ReflectionWindowError(
            f"t={times[-1]:.4g} exceeds the reflection window {window:.4g}; "
            f"use size >= {needed}",
            t_reflect=window,
            required_size=needed,
        )

    amplitude = evolve_site(build_hamiltonian(lat), 0, times, tol)
    return SurvivalSeries(
        times=times,
        p00=np.abs(amplitude) ** 2,
        psi_s=amplitude,
        psi_r=np.zeros_like(amplitude),
        method=SurvivalMethod.ORACLE,
    )


def eigen_histogram(
    lat: FiniteLattice, bins: int = 200, energy_range: Optional[Tuple[float, float]] = None
) -> LdosHistogram:
    """완전 대각화로 얻은 흡착 원자 LDoS 히스토그램 (L <= 80)"""
    if lat.size > DENSE_LIMIT:
        raise DomainError(f"dense diagonalization is limited to L <= {DENSE_LIMIT}")
    hamiltonian = build_hamiltonian(lat).toarray()
    energies, vectors = np.linalg.eigh(hamiltonian)
    weights = np.abs(vectors[0, :]) ** 2
    if energy_range is None:
        energy_range = spectral_bounds(sparse.csr_matrix(hamiltonian))
    counts, edges = np.histogram(energies, bins=bins, range=energy_range, weights=weights)
    density = counts / np.diff(edges)
    return LdosHistogram(bin_edges=edges, density=density, total_weight=float(counts.sum()))
