from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.errors import DomainError


class SubstrateKind(str, Enum):
    SQUARE_2D = "square2d"
    SEMI_INFINITE_CHAIN = "chain"


class Sheet(str, Enum):
    PHYSICAL = "physical"
    SECOND = "second"


class BandHalf(str, Enum):
    """2차 시트 연속을 가져오는 반쪽 밴드 (정사각 격자 밴드 중심 분기점 기준)"""

    LOWER = "lower"
    UPPER = "upper"


class SurvivalMethod(str, Enum):
    DIRECT = "direct"
    DECOMPOSED = "decomposed"
    SHORT_TIME = "short_time"
    LONG_TIME = "long_time"
    ORACLE = "oracle"


class TimeSpacing(str, Enum):
    LINEAR = "linear"
    GEOMETRIC = "geometric"


class MomentReference(str, Enum):
    EPSILON0 = "epsilon0"
    EPSILON_R = "epsilon_r"


class SubstrateSpec(BaseModel):
    """기판 파라미터 (onsite 기본값: 정사각 격자 4V, 사슬 0)"""

    model_config = ConfigDict(frozen=True)

    kind: SubstrateKind = Field(SubstrateKind.SQUARE_2D, description="기판 종류")
    hopping: float = Field(1.0, gt=0, description="최근접 hopping V (에너지 단위)")
    onsite: float = Field(description="기판 onsite 에너지 = 밴드 중심")

    @model_validator(mode="before")
    @classmethod
    def _default_onsite(cls, data):
        if isinstance(data, dict) and data.get("onsite") is None:
            data = dict(data)
            kind = SubstrateKind(data.get("kind") or SubstrateKind.SQUARE_2D)
            hopping = float(data.get("hopping") or 1.0)
            data["onsite"] = 4.0 * hopping if kind == SubstrateKind.SQUARE_2D else 0.0
        return data

    @property
    def half_width(self) -> float:
        """밴드 반폭 (4V 또는 2V)"""
        factor = 4.0 if self.kind == SubstrateKind.SQUARE_2D else 2.0
        return factor * self.hopping

    @property
    def band_edges(self) -> Tuple[float, float]:
        return (self.onsite - self.half_width, self.onsite + self.half_width)

    @property
    def band_center(self) -> float:
        return self.onsite

    @property
    def bandwidth(self) -> float:
        return 2.0 * self.half_width

    @property
    def branch_points(self) -> List[float]:
        """LDoS의 실축 분기점 (밴드 끝, 정사각 격자는 중심 포함)"""
        lower, upper = self.band_edges
        if self.kind == SubstrateKind.SQUARE_2D:
            return [lower, self.onsite, upper]
        return [lower, upper]


class AdatomSpec(BaseModel):
    """흡착 원자 + 기판 모델 정의"""

    model_config = ConfigDict(frozen=True)

    epsilon0: float = Field(description="흡착 원자 준위 ε₀")
    v0: float = Field(ge=0, description="흡착 원자-기판 결합 V₀")
    substrate: SubstrateSpec = Field(default_factory=SubstrateSpec)

    @model_validator(mode="after")
    def _weak_coupling(self):
        if self.v0 >= self.substrate.hopping:
            raise ValueError(
                f"v0={self.v0} must be below the substrate hopping {self.substrate.hopping}"
            )
        return self

    def in_band(self) -> bool:
        lower, upper = self.substrate.band_edges
        return lower < self.epsilon0 < upper


class Resonance(BaseModel):
    """2차 시트 극에서 얻은 공명 파라미터"""

    model_config = ConfigDict(frozen=True)

    epsilon0: float
    epsilon_r: float = Field(description="공명 에너지 ε_r = ε₀ + Δ₀")
    gamma0: float = Field(ge=0, description="공명 폭 Γ₀ (극의 허수부 크기)")
    delta0: float = Field(description="에너지 이동 Δ₀")
    residue_a: complex = Field(description="극 기여 계수 2πi/(1 - Σ'(z_p))")
    amplitude: complex = Field(description="생존 진폭 극 계수 ā = 1/(1 - Σ'(z_p))")
    beta: float = Field(gt=0, description="밴드 끝 진폭비 β")
    band_edges: Tuple[float, float]
    band_half: Optional[BandHalf] = Field(None, description="극이 속한 반쪽 밴드")
    iterations: int = 0
    residual: float = 0.0

    @model_validator(mode="after")
    def _consistency(self):
        scale = max(1.0, abs(self.epsilon_r))
        if abs(self.epsilon_r - (self.epsilon0 + self.delta0)) > 1e-12 * scale:
            raise ValueError("epsilon_r must equal epsilon0 + delta0")
        expected = beta_ratio(self.epsilon_r, self.gamma0, self.band_edges)
        if abs(self.beta - expected) > 1e-12 * max(1.0, expected):
            raise ValueError(f"beta={self.beta} inconsistent with band edges ({expected})")
        return self

    @property
    def pole(self) -> complex:
        return complex(self.epsilon_r, -self.gamma0)

    @property
    def normalization(self) -> complex:
        """ā / residue_a (= 1/(2πi))"""
        return self.amplitude / self.residue_a

    @property
    def weight(self) -> float:
        return abs(self.amplitude) ** 2


def beta_ratio(
    epsilon_r: float, gamma0: float, band_edges: Tuple[float, float]
) -> float:
    lower, upper = band_edges
    numerator = (epsilon_r - lower) ** 2 + gamma0**2
    denominator = (upper - epsilon_r) ** 2 + gamma0**2
    return numerator / denominator


class BoundState(BaseModel):
    model_config = ConfigDict(frozen=True)

    energy: float
    weight: float = Field(ge=0, description="스펙트럼 가중치 1/D'(E)")
    side: str = Field(description="below 또는 above")


class CollapseDip(BaseModel):
    """생존 확률 붕괴(dip)"""

    model_config = ConfigDict(frozen=True)

    t_dip: float = Field(ge=0)
    depth: float = Field(gt=1, description="max(|Ψ_S|², |Ψ_R|²) / P₀₀")
    phase_residual: float = Field(ge=-np.pi, le=np.pi)


class ExponentialFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    rate: float
    prefactor: float
    residual: float
    n_points: int


class PowerLawFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    exponent: float
    amplitude: float
    residual: float
    n_points: int


class TsEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    closed_form: float = Field(description="πħ N₁(ε₀)")
    numerical: float = Field(description="단시간 법칙과 지수 법칙의 최근접 시간")

    @property
    def ratio(self) -> float:
        return self.numerical / self.closed_form


class RegimeReport(BaseModel):
    """단시간/지수/멱법칙 영역 요약"""

    model_config = ConfigDict(frozen=True)

    gamma0: float
    t_s: float
    t_s_numerical: float
    t_r: float
    fitted_rate: float
    fitted_prefactor: float
    tail_exponent: float
    modulation_freq: float
    modulation_peaks: List[float] = Field(default=[])
    dips: List[CollapseDip] = Field(default=[])

    @model_validator(mode="after")
    def _ordering(self):
        if not self.t_s < self.t_r:
            raise ValueError(f"t_s={self.t_s} must precede t_r={self.t_r}")
        if self.fitted_rate <= 0:
            raise ValueError("fitted_rate must be positive")
        if self.tail_exponent >= 0:
            raise ValueError("tail_exponent must be negative")
        return self


class FiniteLattice(BaseModel):
    """오라클용 유한 격자 (정사각 L×L 또는 L-사이트 사슬)"""

    model_config = ConfigDict(frozen=True)

    size: int = Field(ge=32, description="격자 한 변 길이 L")
    spec: AdatomSpec
    attach_site: Optional[Tuple[int, int]] = Field(
        None, description="흡착 원자가 붙는 기판 사이트 (기본값: 중심)"
    )

    @model_validator(mode="before")
    @classmethod
    def _default_site(cls, data):
        if isinstance(data, dict) and data.get("attach_site") is None:
            data = dict(data)
            spec = data.get("spec")
            if isinstance(spec, dict):
                spec = AdatomSpec(**spec)
                data["spec"] = spec
            kind = spec.substrate.kind if isinstance(spec, AdatomSpec) else None
            size = int(data.get("size", 0))
            if kind == SubstrateKind.SEMI_INFINITE_CHAIN:
                data["attach_site"] = (0, 0)
            else:
                data["attach_site"] = (size // 2, size // 2)
        return data

    @model_validator(mode="after")
    def _site_inside(self):
        i, j = self.attach_site
        if self.spec.substrate.kind == SubstrateKind.SEMI_INFINITE_CHAIN:
            if (i, j) != (0, 0):
                raise ValueError("chain lattices attach the add atom to site (0, 0)")
        elif not (0 <= i < self.size and 0 <= j < self.size):
            raise ValueError(f"attach_site {self.attach_site} outside the lattice")
        return self


@dataclass
class SurvivalSeries:
    """시간 그리드 위의 생존 확률 결과

    분해하지 않는 방법(direct, oracle, short_time)은 전체 진폭을 psi_s에,
    psi_r에는 0을 담는다.
    """

    times: np.ndarray
    p00: np.ndarray
    psi_s: np.ndarray
    psi_r: np.ndarray
    method: SurvivalMethod

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.p00 = np.asarray(self.p00, dtype=float)
        self.psi_s = np.asarray(self.psi_s, dtype=complex)
        self.psi_r = np.asarray(self.psi_r, dtype=complex)
        self.method = SurvivalMethod(self.method)

        n = self.times.shape[0]
        for name in ("p00", "psi_s", "psi_r"):
            if getattr(self, name).shape != (n,):
                raise DomainError(f"{name} must have the same length as times")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise DomainError("times must be strictly increasing")
        if np.any(self.p00 < 0):
            raise DomainError("survival probability must be non-negative")
        if self.method != SurvivalMethod.LONG_TIME and np.any(self.p00 > 1 + 1e-9):
            raise DomainError(
                f"survival probability exceeds 1 ({self.p00.max():.3e}) for {self.method.value}"
            )

    @property
    def amplitude(self) -> np.ndarray:
        return self.psi_s + self.psi_r

    def to_frame(self) -> pd.DataFrame:
        """CSV 스키마 순서의 DataFrame으로 변환"""
        return pd.DataFrame(
            {
                "t": self.times,
                "p00": self.p00,
                "re_psi_s": self.psi_s.real,
                "im_psi_s": self.psi_s.imag,
                "re_psi_r": self.psi_r.real,
                "im_psi_r": self.psi_r.imag,
                "method": self.method.value,
            }
        )


@dataclass
class LdosHistogram:
    """고유값 분해로 얻은 흡착 원자 LDoS 히스토그램"""

    bin_edges: np.ndarray
    density: np.ndarray
    total_weight: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])
