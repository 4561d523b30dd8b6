import yaml
from typing import Dict, Any
from pathlib import Path


class ReportManager:
    """YAML 기반 텍스트 보고서 템플릿 관리자"""

    def __init__(self, config_path: str = None):
        if config_path is None:
            # 프로젝트 루트에서 config/reports.yaml 찾기
            project_root = Path(__file__).parent.parent.parent
            config_path = project_root / "config" / "reports.yaml"

        self.config_path = Path(config_path)
        self._reports = self._load_reports()

    def _load_reports(self) -> Dict[str, Any]:
        """YAML 파일에서 보고서 템플릿 로드"""
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                return yaml.safe_load(f) or {}
        except FileNotFoundError:
            raise FileNotFoundError(
                f"보고서 템플릿 파일을 찾을 수 없습니다: {self.config_path}"
            )

    def get_report(self, report_name: str) -> Dict[str, Any]:
        """보고서 템플릿 정보 가져오기"""
        reports = self._reports.get("reports", {})
        if report_name not in reports:
            raise KeyError(f"보고서 '{report_name}'를 찾을 수 없습니다.")
        return reports[report_name]

    def format_report(self, report_name: str, **kwargs) -> str:
        """템플릿 변수를 대체하여 최종 보고서 텍스트 생성"""
        info = self.get_report(report_name)
        return info.get("template", "").format(version=info.get("version", "1.0"), **kwargs)


# 전역 보고서 관리자 인스턴스
report_manager = ReportManager()
