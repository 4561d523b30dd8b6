import sys
from typing import Iterable, Optional

from tqdm import tqdm


class Console:
    """tqdm.write 기반 진단 출력 (항상 stderr)"""

    def __init__(self, quiet: bool = False):
        self.quiet = quiet

    def _write(self, message: str):
        tqdm.write(message, file=sys.stderr)

    def info(self, message: str):
        if not self.quiet:
            self._write(f"📋 {message}")

    def step(self, message: str):
        if not self.quiet:
            self._write(f"🚀 {message}")

    def success(self, message: str):
        if not self.quiet:
            self._write(f"✅ {message}")

    def saved(self, path: str):
        if not self.quiet:
            self._write(f"💾 저장 완료: {path}")

    def warn(self, message: str):
        if not self.quiet:
            self._write(f"⚠️ {message}")

    def error(self, message: str):
        # 오류는 --quiet 에서도 출력
        self._write(f"❌ {message}")

    def progress(
        self, iterable: Iterable, desc: Optional[str] = None, total: Optional[int] = None
    ):
        return tqdm(
            iterable,
            desc=desc,
            total=total,
            disable=self.quiet,
            file=sys.stderr,
            leave=False,
        )


# 전역 콘솔 인스턴스
console = Console()
