"""
기판(2D 정사각 격자, 반무한 사슬)의 닫힌 형태 Green 함수와 LDoS

모든 계산은 무차원 변수 ζ = (z - onsite)/V 에서 이루어지고
결과는 1/V 로 스케일된다.
"""

from abc import ABC, abstractmethod
from typing import List, Optional, Union

import numpy as np
from scipy import special

from src.models.errors import DomainError, SingularityError
from src.models.schemas import BandHalf, Sheet, SubstrateKind, SubstrateSpec
from src.utils.special_functions import agm

ArrayLike = Union[complex, float, np.ndarray]


def _restore(values: np.ndarray, like: ArrayLike):
    """입력이 스칼라면 스칼라로 돌려줌"""
    values = np.asarray(values)
    if np.ndim(like) == 0:
        return values.item()
    return values


class SubstrateGreen(ABC):
    """기판 Green 함수의 추상 기본 클래스"""

    def __init__(self, substrate: SubstrateSpec):
        self.substrate = substrate

    @property
    @abstractmethod
    def half_width(self) -> float:
        """무차원 밴드 반폭"""
        pass

    @abstractmethod
    def _physical(self, zeta: np.ndarray) -> np.ndarray:
        """물리 시트 G(ζ) (V = 1)"""
        pass

    @abstractmethod
    def _continued_density(self, zeta: np.ndarray, lower: np.ndarray) -> np.ndarray:
        """실축 밖으로 해석 연속된 기판 LDoS ρ_c(ζ) (V = 1)"""
        pass

    @abstractmethod
    def _density(self, x: np.ndarray) -> np.ndarray:
        """실축 LDoS (V = 1)"""
        pass

    def _singular_points(self) -> List[float]:
        """실축에서 G가 발산하는 무차원 에너지"""
        return []

    def _zeta(self, z: ArrayLike) -> np.ndarray:
        z_arr = np.asarray(z, dtype=complex)
        if not np.all(np.isfinite(z_arr)):
            raise DomainError("Green function requires finite energies")
        return (z_arr - self.substrate.onsite) / self.substrate.hopping

    def _check_singular(self, zeta: np.ndarray):
        on_axis = zeta.imag == 0
        for point in self._singular_points():
            hit = on_axis & (zeta.real == point)
            if np.any(hit):
                energy = self.substrate.onsite + point * self.substrate.hopping
                raise SingularityError(
                    f"Green function is singular at real energy {energy}", point=energy
                )

    def _lower_mask(self, zeta: np.ndarray, half: Optional[BandHalf]) -> np.ndarray:
        if half is not None:
            return np.full(zeta.shape, BandHalf(half) == BandHalf.LOWER)
        if self.substrate.kind == SubstrateKind.SQUARE_2D and np.any(zeta.real == 0):
            raise SingularityError(
                "band half is ambiguous on the band-centre line; pass half explicitly",
                point=complex(self.substrate.onsite),
            )
        return zeta.real < 0

    def green(
        self,
        z: ArrayLike,
        sheet: Sheet = Sheet.PHYSICAL,
        half: Optional[BandHalf] = None,
    ):
        """대각 Green 함수 G₁₁(z) (요청한 리만 시트)"""
        zeta = self._zeta(z)
        self._check_singular(zeta)
        values = self._physical(zeta)
        if Sheet(sheet) == Sheet.SECOND:
            if np.any(zeta.imag >= 0):
                raise DomainError("second-sheet evaluation requires Im z < 0")
            lower = self._lower_mask(zeta, half)
            values = values - 2j * np.pi * self._continued_density(zeta, lower)
        return _restore(values / self.substrate.hopping, z)

    def continued_density(self, z: ArrayLike, half: Optional[BandHalf] = None):
        """(G^I - G^II)/(2πi): 실축 LDoS의 해석 연속"""
        zeta = self._zeta(z)
        lower = self._lower_mask(zeta, half)
        values = self._continued_density(zeta, lower)
        return _restore(values / self.substrate.hopping, z)

    def ldos(self, eps: ArrayLike):
        """실축 기판 LDoS -(1/π) Im G"""
        eps_arr = np.asarray(eps, dtype=float)
        if not np.all(np.isfinite(eps_arr)):
            raise DomainError("substrate_ldos requires finite energies")
        x = (eps_arr - self.substrate.onsite) / self.substrate.hopping
        values = np.where(np.abs(x) <= self.half_width, self._density(x), 0.0)
        return _restore(values / self.substrate.hopping, eps)


class SquareLatticeGreen(SubstrateGreen):
    """주기적 2D 정사각 격자 대각 Green 함수

    G(ζ) = (2/πζ) K(16/ζ²) = 1 / AGM(ζ, sqrt(ζ-4) sqrt(ζ+4))
    """

    @property
    def half_width(self) -> float:
        return 4.0

    def _singular_points(self) -> List[float]:
        return [-4.0, 0.0, 4.0]

    def _physical(self, zeta: np.ndarray) -> np.ndarray:
        s = np.sqrt(zeta - 4) * np.sqrt(zeta + 4)
        # 실축 밴드 내부: 위쪽(지연) 경계값
        on_cut = (zeta.imag == 0) & (np.abs(zeta.real) < 4)
        s = np.where(
            on_cut, 1j * np.sqrt(np.clip(16 - zeta.real**2, 0, None)), s
        )
        return 1.0 / agm(zeta, s)

    def _continued_density(self, zeta: np.ndarray, lower: np.ndarray) -> np.ndarray:
        k_prime = np.where(lower, -zeta / 4, zeta / 4)
        return 1.0 / (4 * np.pi * agm(1.0, k_prime))

    def _density(self, x: np.ndarray) -> np.ndarray:
        if np.any(x == 0):
            raise SingularityError(
                "square-lattice LDoS diverges at the band centre",
                point=self.substrate.onsite,
            )
        inside = np.minimum(np.abs(x), 4.0) / 4
        return np.real(1.0 / (4 * np.pi * agm(1.0, inside)))


class ChainSurfaceGreen(SubstrateGreen):
    """반무한 사슬 표면 사이트 Green 함수 G(ζ) = (ζ - sqrt(ζ² - 4))/2"""

    @property
    def half_width(self) -> float:
        return 2.0

    @staticmethod
    def _root(zeta: np.ndarray) -> np.ndarray:
        s = np.sqrt(zeta - 2) * np.sqrt(zeta + 2)
        on_cut = (zeta.imag == 0) & (np.abs(zeta.real) < 2)
        return np.where(on_cut, 1j * np.sqrt(np.clip(4 - zeta.real**2, 0, None)), s)

    def _physical(self, zeta: np.ndarray) -> np.ndarray:
        return 0.5 * (zeta - self._root(zeta))

    def _continued_density(self, zeta: np.ndarray, lower: np.ndarray) -> np.ndarray:
        s = np.sqrt(zeta - 2) * np.sqrt(zeta + 2)
        return 1j * s / (2 * np.pi)

    def _density(self, x: np.ndarray) -> np.ndarray:
        return np.sqrt(np.clip(4 - x**2, 0, None)) / (2 * np.pi)


def create_substrate_green(substrate: SubstrateSpec) -> SubstrateGreen:
    """기판 Green 함수 팩토리 함수"""
    if substrate.kind == SubstrateKind.SQUARE_2D:
        return SquareLatticeGreen(substrate)
    elif substrate.kind == SubstrateKind.SEMI_INFINITE_CHAIN:
        return ChainSurfaceGreen(substrate)
    else:
        raise DomainError(f"지원하지 않는 기판 종류: {substrate.kind}")


def chain_surface_green(
    z: ArrayLike, spec: SubstrateSpec, sheet: Sheet = Sheet.PHYSICAL
):
    if spec.kind != SubstrateKind.SEMI_INFINITE_CHAIN:
        raise DomainError("chain_surface_green requires a chain substrate")
    return ChainSurfaceGreen(spec).green(z, sheet)


def square_lattice_green(
    z: ArrayLike,
    spec: SubstrateSpec,
    sheet: Sheet = Sheet.PHYSICAL,
    half: Optional[BandHalf] = None,
):
    if spec.kind != SubstrateKind.SQUARE_2D:
        raise DomainError("square_lattice_green requires a square-lattice substrate")
    return SquareLatticeGreen(spec).green(z, sheet, half)


def substrate_ldos(eps: ArrayLike, spec: SubstrateSpec):
    return create_substrate_green(spec).ldos(eps)


def bz_oracle_green(z: complex, spec: SubstrateSpec, grid: int) -> complex:
    """브릴루앙 영역 직접 합 (1/N²) Σ_k 1/(z - ε(k))"""
    if spec.kind != SubstrateKind.SQUARE_2D:
        raise DomainError("the Brillouin-zone oracle covers the square lattice only")
    z = complex(z)
    if z.imag == 0:
        raise DomainError("bz_oracle_green requires Im z != 0")
    if grid < 64:
        raise DomainError(f"grid={grid} is too coarse (minimum 64)")

    k = 2 * np.pi * np.arange(grid) / grid
    band = -2 * spec.hopping * np.cos(k)
    total = 0.0 + 0.0j
    # 메모리 사용을 줄이기 위해 행 단위로 누적
    for row in np.array_split(np.arange(grid), max(1, grid // 256)):
        energies = spec.onsite + band[row, None] + band[None, :]
        total += np.sum(1.0 / (z - energies))
    return total / grid**2


def bare_return_amplitude(t: ArrayLike, spec: SubstrateSpec):
    """결합 없는 기판 사이트의 귀환 진폭 ⟨1|e^{-iHt}|1⟩ (닫힌 형태)"""
    t_arr = np.asarray(t, dtype=float)
    x = 2 * spec.hopping * t_arr
    phase = np.exp(-1j * spec.onsite * t_arr)
    if spec.kind == SubstrateKind.SQUARE_2D:
        values = phase * special.j0(x) ** 2
    else:
        # J1(x)/(x/2) 는 x → 0 에서 1
        safe = np.where(x == 0, 1.0, x)
        values = phase * np.where(x == 0, 1.0, 2 * special.j1(safe) / safe)
    return _restore(np.asarray(values, dtype=complex), t)
