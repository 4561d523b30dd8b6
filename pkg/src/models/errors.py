"""
생존 확률 계산 전반에서 사용하는 예외 계층

DomainError 계열은 입력/정의역 문제(CLI 종료 코드 1),
ConvergenceError 계열은 수치 알고리즘 실패(CLI 종료 코드 2)를 나타낸다.
"""

from typing import Any, List, Optional, Tuple


class SurvivalError(Exception):
    """모든 라이브러리 예외의 기본 클래스"""


class DomainError(SurvivalError, ValueError):
    """입력이 정의역을 벗어남"""


class SingularityError(DomainError):
    """분기점/특이점 위에서의 평가"""

    def __init__(self, message: str, point: Optional[complex] = None):
        super().__init__(message)
        self.point = point


class BoundStateError(DomainError):
    """밴드 밖 실수 극(속박 상태)이 존재함"""

    def __init__(self, message: str, bound_states: Optional[List[Any]] = None):
        super().__init__(message)
        self.bound_states = bound_states or []


class ReflectionWindowError(DomainError):
    """유한 격자의 경계 반사 시간 이후를 요청함"""

    def __init__(self, message: str, t_reflect: float, required_size: int):
        super().__init__(message)
        self.t_reflect = t_reflect
        self.required_size = required_size


class FitWindowError(DomainError):
    """피팅 구간의 데이터 점이 부족함"""


class CrossingNotFoundError(DomainError):
    """|Ψ_S| = |Ψ_R| 교차점이 시간 그리드 안에 없음"""


class ConfigError(DomainError):
    """설정 파일 문법/값 오류"""

    def __init__(
        self, message: str, line: Optional[int] = None, key: Optional[str] = None
    ):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key


class ConvergenceError(SurvivalError, ArithmeticError):
    """수치 알고리즘이 허용오차 안에 수렴하지 못함"""


class PoleSearchError(ConvergenceError):
    """2차 시트 극 탐색 실패"""

    def __init__(self, message: str, last_iterate: complex, iterations: int):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class QuadratureError(ConvergenceError):
    """적응 구적 실패 (가장 나쁜 패널 포함)"""

    def __init__(self, message: str, worst_panel: Tuple[float, float], error: float):
        super().__init__(message)
        self.worst_panel = worst_panel
        self.error = error


class NormDriftError(ConvergenceError):
    """체비셰프 전파 중 노름 보존 위반"""
