import numpy as np
import pytest

from src.models.errors import DomainError, SingularityError
from src.utils.special_functions import agm, elliptic_k


def test_agm_real_reference_value():
    # 가우스 상수의 역수 관계: AGM(1, √2)
    assert agm(1.0, np.sqrt(2.0)).real == pytest.approx(1.1981402347355922, rel=1e-14)


def test_agm_is_homogeneous_for_complex_arguments():
    a, b = 1.3 - 0.4j, -0.7 + 2.1j
    for scale in (2.0, -1.0, 1j, 0.5 - 3j):
        assert agm(scale * a, scale * b) == pytest.approx(scale * agm(a, b), rel=1e-12)


def test_agm_is_symmetric_and_conjugate_covariant():
    a, b = -2.0 + 0.0j, 3.4641016151377544j
    assert agm(a, b) == pytest.approx(agm(b, a), rel=1e-13)
    assert agm(np.conj(a), np.conj(b)) == pytest.approx(np.conj(agm(a, b)), rel=1e-13)


def test_agm_degenerate_argument_gives_zero():
    assert agm(0.0, 2.0) == 0
    values = agm(np.array([1.0, 0.0]), np.array([1.0, 3.0]))
    np.testing.assert_allclose(values, [1.0, 0.0])


def test_elliptic_k_reference_values():
    assert elliptic_k(0.75).real == pytest.approx(2.1565156474996432, rel=1e-12)
    assert elliptic_k(0.0).real == pytest.approx(np.pi / 2, rel=1e-15)
    assert elliptic_k(0.5).real == pytest.approx(1.8540746773013719, rel=1e-12)


def test_elliptic_k_vectorized():
    m = np.array([0.0, 0.5, 0.75])
    np.testing.assert_allclose(
        elliptic_k(m).real, [np.pi / 2, 1.8540746773013719, 2.1565156474996432], rtol=1e-12
    )


def test_elliptic_k_singular_at_one():
    with pytest.raises(SingularityError):
        elliptic_k(1.0)


def test_elliptic_k_rejects_non_finite():
    with pytest.raises(DomainError):
        elliptic_k(np.nan)
