"""
이름 붙은 실행 설정 프리셋 관리
"""

from typing import Dict, List, Optional

from src.config.run_config import (
    OracleSection,
    RunConfig,
    SweepSection,
    SystemSection,
    TimeSection,
)
from src.models.schemas import SubstrateKind, TimeSpacing


class PresetManager:
    """프리셋 이름별 RunConfig 를 관리하는 클래스"""

    def __init__(self):
        self._configs: Dict[str, RunConfig] = {}
        self._initialize_default_presets()

    def _initialize_default_presets(self):
        """기본 프리셋 초기화"""

        # 정사각 격자, ε₀/V = 2, V₀/V = 0.4 (기본값 그대로)
        self._configs["figure2"] = RunConfig()

        # 반무한 사슬 밴드 중심 (β = 1)
        self._configs["chain_center"] = RunConfig(
            system=SystemSection(
                substrate=SubstrateKind.SEMI_INFINITE_CHAIN, epsilon0=0.0, v0=0.4
            ),
            time=TimeSection(t_min=0.01, t_max=2000.0, points=600),
            oracle=OracleSection(enabled=True, size=400),
        )

        # 약결합 영역 V₀ 스윕
        self._configs["weak_sweep"] = RunConfig(
            time=TimeSection(t_min=0.01, t_max=20000.0, points=800, spacing=TimeSpacing.GEOMETRIC),
            sweep=SweepSection(v0_values=[0.15, 0.2, 0.25, 0.3, 0.35, 0.4], points=400),
        )

    def get_config(self, preset_name: str) -> Optional[RunConfig]:
        """프리셋 이름으로 설정을 가져옴 (사본 반환)"""
        config = self._configs.get(preset_name)
        return config.model_copy(deep=True) if config is not None else None

    def add_config(self, preset_name: str, config: RunConfig) -> None:
        """새 프리셋 추가"""
        self._configs[preset_name] = config

    def list_presets(self) -> List[str]:
        """등록된 모든 프리셋 이름"""
        return list(self._configs.keys())

    def get_presets_for(self, kind: SubstrateKind) -> List[str]:
        """특정 기판 종류의 프리셋들"""
        return [
            key for key, config in self._configs.items() if config.system.substrate == kind
        ]


# 전역 프리셋 관리자 인스턴스
preset_manager = PresetManager()
