"""
복소 산술-기하 평균(AGM)과 제1종 완전 타원 적분
"""

from typing import Union

import numpy as np

from src.models.errors import DomainError, SingularityError

ArrayLike = Union[complex, float, np.ndarray]


def agm(a: ArrayLike, b: ArrayLike, rtol: float = 1e-14, max_iter: int = 64):
    """복소 AGM (매 단계 |a' - b'| <= |a' + b'| 가 되도록 제곱근 부호 선택)

    이 선택 규칙에서 AGM은 동차함수이고 Re b > 0 영역에서 주값과 일치한다.
    인자 중 하나가 0이면 0을 돌려준다.
    """
    a_arr, b_arr = np.broadcast_arrays(
        np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    )
    a_n = a_arr.copy()
    b_n = b_arr.copy()
    degenerate = (a_n == 0) | (b_n == 0)
    b_n = np.where(degenerate, a_n, b_n)

    for _ in range(max_iter):
        a_next = 0.5 * (a_n + b_n)
        b_next = np.sqrt(a_n * b_n)
        flip = np.abs(a_next - b_next) > np.abs(a_next + b_next)
        b_next = np.where(flip, -b_next, b_next)
        a_n, b_n = a_next, b_next
        if np.all(np.abs(a_n - b_n) <= rtol * np.abs(a_n)):
            break

    result = np.where(degenerate, 0.0, 0.5 * (a_n + b_n))
    if np.ndim(result) == 0:
        return complex(result)
    return result


def elliptic_k(m: ArrayLike):
    """K(m) = π / (2 AGM(1, sqrt(1 - m)))

    실수 m > 1 (분지 절단)에서는 m - i0 쪽 값을 돌려준다.
    """
    m_arr = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m_arr)):
        raise DomainError("elliptic_k requires a finite argument")
    if np.any(m_arr == 1):
        raise SingularityError("elliptic_k diverges at m = 1", point=1.0)

    k_prime = np.sqrt(1 - m_arr)
    result = np.pi / (2 * agm(1.0, k_prime))
    if np.ndim(m) == 0:
        return complex(result)
    return result
