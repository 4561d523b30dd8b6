"""
흡착 원자 생존 확률 계산 실행 스크립트
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
