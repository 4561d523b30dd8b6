"""
실행 설정 (RunConfig) 과 줄 단위 설정 문법

문법:
  # 또는 ; 로 시작하는 줄은 주석
  [section]          섹션 헤더
  key = value        값은 YAML 스칼라/흐름 리스트로 해석
  헤더 이전의 key = value 는 [system] 에 속한다.
"""

import json
import re
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.models.errors import ConfigError
from src.models.schemas import (
    AdatomSpec,
    MomentReference,
    SubstrateKind,
    SubstrateSpec,
    SurvivalMethod,
    TimeSpacing,
)

SECTION_PATTERN = re.compile(r"^\[\s*([A-Za-z_]\w*)\s*\]$")
KEY_PATTERN = re.compile(r"^[A-Za-z_]\w*$")
DEFAULT_SECTION = "system"


class SystemSection(BaseModel):
    """흡착 원자/기판 파라미터 (V 단위 무차원 비)"""

    model_config = ConfigDict(extra="forbid")

    substrate: SubstrateKind = SubstrateKind.SQUARE_2D
    epsilon0: float = Field(2.0, description="ε₀/V")
    v0: float = Field(0.4, ge=0, description="V₀/V")
    hopping: float = Field(1.0, gt=0)
    onsite: Optional[float] = Field(None, description="기판 onsite (기본값은 기판 종류에 따름)")

    @model_validator(mode="after")
    def _weak_coupling(self):
        if self.v0 >= self.hopping:
            raise ValueError(f"v0={self.v0} must be below hopping={self.hopping}")
        return self

    def to_spec(self) -> AdatomSpec:
        substrate = SubstrateSpec(kind=self.substrate, hopping=self.hopping, onsite=self.onsite)
        return AdatomSpec(epsilon0=self.epsilon0, v0=self.v0, substrate=substrate)


class TimeSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t_min: float = Field(0.01, ge=0)
    t_max: float = Field(5000.0, gt=0)
    points: int = Field(600, ge=2)
    spacing: TimeSpacing = TimeSpacing.GEOMETRIC

    @model_validator(mode="after")
    def _ordered(self):
        if self.t_max <= self.t_min:
            raise ValueError(f"t_max={self.t_max} must exceed t_min={self.t_min}")
        return self


class MethodsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    run: List[SurvivalMethod] = Field(
        default=[SurvivalMethod.DIRECT, SurvivalMethod.DECOMPOSED]
    )
    moment_reference: MomentReference = MomentReference.EPSILON0


class OracleSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    enabled: bool = False
    size: int = Field(400, ge=32)
    points: int = Field(200, ge=2)


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "out"


class TolerancesSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    quadrature: float = Field(1e-11, gt=0)
    newton: float = Field(1e-12, gt=0)
    chebyshev: float = Field(1e-14, gt=0)
    exp_window_start: Optional[float] = Field(None, gt=0)
    exp_window_stop: Optional[float] = Field(None, gt=0)
    tail_window_start: Optional[float] = Field(None, gt=0)
    tail_window_stop: Optional[float] = Field(None, gt=0)

    @staticmethod
    def _window(start, stop) -> Optional[Tuple[float, float]]:
        if start is None or stop is None:
            return None
        return (start, stop)

    @property
    def exp_window(self) -> Optional[Tuple[float, float]]:
        return self._window(self.exp_window_start, self.exp_window_stop)

    @property
    def tail_window(self) -> Optional[Tuple[float, float]]:
        return self._window(self.tail_window_start, self.tail_window_stop)


class LdosSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    points: int = Field(2000, ge=2)
    margin: float = Field(0.5, ge=0, description="밴드 밖으로 확장할 폭 (V 단위)")


class SweepSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    v0_values: List[float] = Field(default=[0.2, 0.3, 0.4])
    points: int = Field(400, ge=2)


class RunConfig(BaseModel):
    """전체 실행 설정 (기본값: ε₀/V = 2, V₀/V = 0.4 정사각 격자)"""

    model_config = ConfigDict(extra="forbid")

    system: SystemSection = Field(default_factory=SystemSection)
    time: TimeSection = Field(default_factory=TimeSection)
    methods: MethodsSection = Field(default_factory=MethodsSection)
    oracle: OracleSection = Field(default_factory=OracleSection)
    output: OutputSection = Field(default_factory=OutputSection)
    tolerances: TolerancesSection = Field(default_factory=TolerancesSection)
    ldos: LdosSection = Field(default_factory=LdosSection)
    sweep: SweepSection = Field(default_factory=SweepSection)

    @model_validator(mode="after")
    def _oracle_enabled(self):
        if SurvivalMethod.ORACLE in self.methods.run and not self.oracle.enabled:
            raise ValueError("methods.run lists oracle but [oracle] enabled = false")
        return self

    @property
    def survival_methods(self) -> List[SurvivalMethod]:
        """survival 에서 실행할 방법 (oracle 은 enabled 일 때 추가)"""
        methods = list(dict.fromkeys(self.methods.run))
        if self.oracle.enabled and SurvivalMethod.ORACLE not in methods:
            methods.append(SurvivalMethod.ORACLE)
        return methods


SECTIONS = tuple(RunConfig.model_fields.keys())


def _parse_value(text: str, line: int) -> Any:
    if not text:
        return None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse value {text!r}: {e}", line=line)


def parse_config(text: str) -> RunConfig:
    """줄 단위 설정 텍스트를 검증된 RunConfig 로 변환"""
    data: Dict[str, Dict[str, Any]] = {}
    key_lines: Dict[Tuple[str, str], int] = {}
    section = DEFAULT_SECTION

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue

        header = SECTION_PATTERN.match(line)
        if header:
            section = header.group(1).lower()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", line=line_number)
            continue

        if "=" not in line:
            raise ConfigError(
                f"expected '[section]' or 'key = value', got {line!r}", line=line_number
            )
        key, value = (part.strip() for part in line.split("=", 1))
        if not KEY_PATTERN.match(key):
            raise ConfigError(f"invalid key {key!r}", line=line_number, key=key)
        entries = data.setdefault(section, {})
        if key in entries:
            raise ConfigError(f"duplicate key {section}.{key}", line=line_number, key=key)
        entries[key] = _parse_value(value, line_number)
        key_lines[(section, key)] = line_number

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = [str(part) for part in first["loc"]]
        if not location:
            # 섹션 사이 조건
            raise ConfigError(first["msg"])
        key = location[1] if len(location) > 1 else location[0]
        line = key_lines.get((location[0], key)) if len(location) > 1 else None
        raise ConfigError(f"{'.'.join(location)}: {first['msg']}", line=line, key=key)


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, list):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def serialize_config(config: RunConfig) -> str:
    """parse_config 로 다시 읽을 수 있는 텍스트로 직렬화"""
    lines: List[str] = []
    for section in SECTIONS:
        values = getattr(config, section).model_dump(mode="json")
        lines.append(f"[{section}]")
        for key, value in values.items():
            if value is None:
                continue
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)


def load_config(path: str) -> RunConfig:
    """설정 파일 로드"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path} is not valid UTF-8 (byte {e.start})")
    return parse_config(text)
