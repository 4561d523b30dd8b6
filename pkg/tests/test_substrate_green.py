import numpy as np
import pytest
from scipy import integrate

from src.models.errors import DomainError, SingularityError
from src.models.schemas import BandHalf, Sheet, SubstrateKind, SubstrateSpec
from src.physics.substrate_green import (
    bare_return_amplitude,
    bz_oracle_green,
    chain_surface_green,
    create_substrate_green,
    square_lattice_green,
    substrate_ldos,
)

SQUARE = SubstrateSpec()
CHAIN = SubstrateSpec(kind=SubstrateKind.SEMI_INFINITE_CHAIN)


def continued_fraction(z: complex, hopping: float = 1.0, depth: int = 10_000) -> complex:
    """사슬 표면 Green 함수 G = 1/(z - V² G) 를 깊이 depth 에서 잘라 계산"""
    g = 0.0
    for _ in range(depth):
        g = 1.0 / (z - hopping**2 * g)
    return g


def test_default_onsite_depends_on_substrate():
    assert SQUARE.onsite == 4.0
    assert SQUARE.band_edges == (0.0, 8.0)
    assert CHAIN.onsite == 0.0
    assert CHAIN.band_edges == (-2.0, 2.0)
    assert SubstrateSpec(hopping=0.5).band_edges == (0.0, 4.0)


def test_square_lattice_ldos_reference_value():
    # ε = 2V 는 밴드 중심에서 -2V
    assert substrate_ldos(2.0, SQUARE) == pytest.approx(0.10925, abs=5e-6)
    g = square_lattice_green(2.0, SQUARE)
    assert g.imag == pytest.approx(-np.pi * substrate_ldos(2.0, SQUARE), rel=1e-10)
    assert g.imag == pytest.approx(-0.3432, abs=1e-4)


def test_square_lattice_scalar_input_gives_scalar():
    g = square_lattice_green(2.0, SQUARE)
    assert isinstance(g, complex)
    assert g.imag == pytest.approx(-0.3432, abs=1e-4)
    below = square_lattice_green(2.0 - 0.1j, SQUARE, Sheet.SECOND, BandHalf.LOWER)
    assert isinstance(below, complex)
    assert isinstance(substrate_ldos(2.0, SQUARE), float)


def test_square_lattice_ldos_is_nonnegative_and_even():
    eps = np.linspace(1e-6, 8 - 1e-6, 20001)
    eps = eps[eps != 4.0]
    rho = substrate_ldos(eps, SQUARE)
    assert np.all(rho >= 0)
    np.testing.assert_allclose(rho, rho[::-1], rtol=1e-10)
    assert substrate_ldos(9.0, SQUARE) == 0.0


def test_substrate_ldos_integrates_to_one():
    # 적분 구간 끝(분기점)은 quad 가 평가하지 않음
    square = sum(
        integrate.quad(lambda e: substrate_ldos(e, SQUARE), a, b, limit=200)[0]
        for a, b in ((0.0, 4.0), (4.0, 8.0))
    )
    assert abs(square - 1.0) <= 1e-6
    chain = integrate.quad(lambda e: substrate_ldos(e, CHAIN), -2.0, 2.0, limit=200)[0]
    assert abs(chain - 1.0) <= 1e-6


def test_square_lattice_herglotz_decay(rng):
    for _ in range(10):
        modulus = 10 ** rng.uniform(2.0, 4.0)
        z = modulus * np.exp(1j * rng.uniform(0.05, np.pi - 0.05))
        g = square_lattice_green(z, SQUARE)
        assert g.imag < 0
        # onsite 4 때문에 zG - 1 ≈ 4/z
        assert abs(z * g - 1) <= 5.0 / abs(z)


def test_second_sheet_is_continuous_across_the_band(rng):
    energies = np.concatenate([rng.uniform(0.2, 3.8, 10), rng.uniform(4.2, 7.8, 10)])
    for energy in energies:
        half = BandHalf.LOWER if energy < 4.0 else BandHalf.UPPER
        above = square_lattice_green(energy + 1e-9j, SQUARE)
        below = square_lattice_green(energy - 1e-9j, SQUARE, Sheet.SECOND, half)
        assert abs(below - above) <= 1e-7


def test_square_lattice_matches_brillouin_zone_sum(rng):
    for _ in range(20):
        z = complex(rng.uniform(-1.0, 9.0), rng.choice([-1, 1]) * rng.uniform(0.3, 1.5))
        exact = square_lattice_green(z, SQUARE)
        oracle = bz_oracle_green(z, SQUARE, grid=512)
        assert abs(exact - oracle) <= 1e-3 * abs(oracle)


def test_square_lattice_far_field():
    z = 1e4 + 1e3j
    assert square_lattice_green(z, SQUARE) == pytest.approx(1 / (z - 4.0), rel=1e-6)


def test_square_lattice_singular_points():
    for energy in (0.0, 4.0, 8.0):
        with pytest.raises(SingularityError):
            square_lattice_green(energy, SQUARE)


def test_second_sheet_continues_the_upper_boundary_value():
    for energy, half in ((2.0, BandHalf.LOWER), (6.5, BandHalf.UPPER)):
        above = square_lattice_green(energy, SQUARE)
        below = square_lattice_green(energy - 1e-9j, SQUARE, Sheet.SECOND, half)
        assert abs(below - above) <= 1e-7


def test_second_sheet_requires_lower_half_plane():
    with pytest.raises(DomainError):
        square_lattice_green(2.0 + 0.1j, SQUARE, Sheet.SECOND, BandHalf.LOWER)


def test_second_sheet_half_inferred_from_real_part():
    z = 2.0 - 0.3j
    assert square_lattice_green(z, SQUARE, Sheet.SECOND) == square_lattice_green(
        z, SQUARE, Sheet.SECOND, BandHalf.LOWER
    )
    with pytest.raises(SingularityError):
        square_lattice_green(4.0 - 0.3j, SQUARE, Sheet.SECOND)


def test_chain_matches_continued_fraction(rng):
    for _ in range(50):
        z = complex(rng.uniform(-3.0, 3.0), rng.uniform(0.05, 1.0))
        assert abs(chain_surface_green(z, CHAIN) - continued_fraction(z)) <= 1e-10
        # 아래 반평면은 켤레 대칭
        assert abs(
            chain_surface_green(np.conj(z), CHAIN) - np.conj(continued_fraction(z))
        ) <= 1e-10


def test_chain_band_centre_and_density():
    assert chain_surface_green(0.0, CHAIN) == pytest.approx(-1j, abs=1e-15)
    assert substrate_ldos(0.0, CHAIN) == pytest.approx(1 / np.pi, rel=1e-14)
    assert substrate_ldos(1.0, CHAIN) == pytest.approx(np.sqrt(3) / (2 * np.pi), rel=1e-14)
    assert substrate_ldos(2.5, CHAIN) == 0.0


def test_chain_second_sheet_continues_boundary_value():
    above = chain_surface_green(0.7, CHAIN)
    below = chain_surface_green(0.7 - 1e-10j, CHAIN, Sheet.SECOND)
    assert abs(below - above) <= 1e-8


def test_chain_second_sheet_is_other_root():
    z = 0.3 - 0.2j
    first = chain_surface_green(z, CHAIN)
    second = chain_surface_green(z, CHAIN, Sheet.SECOND)
    # 두 근의 합은 z, 곱은 1
    assert first + second == pytest.approx(z, abs=1e-14)
    assert first * second == pytest.approx(1.0, abs=1e-14)


def test_kind_checks():
    with pytest.raises(DomainError):
        chain_surface_green(1j, SQUARE)
    with pytest.raises(DomainError):
        square_lattice_green(1j, CHAIN)
    with pytest.raises(DomainError):
        bz_oracle_green(1j, CHAIN, grid=128)


def test_bz_oracle_input_checks():
    with pytest.raises(DomainError):
        bz_oracle_green(2.0, SQUARE, grid=128)
    with pytest.raises(DomainError):
        bz_oracle_green(2.0 + 1j, SQUARE, grid=16)


def test_green_rejects_non_finite():
    with pytest.raises(DomainError):
        create_substrate_green(SQUARE).green(np.nan)


def test_bare_return_amplitude_at_zero_and_magnitude():
    assert bare_return_amplitude(0.0, SQUARE) == pytest.approx(1.0)
    assert bare_return_amplitude(0.0, CHAIN) == pytest.approx(1.0)
    t = np.linspace(0.0, 20.0, 50)
    assert np.all(np.abs(bare_return_amplitude(t, SQUARE)) <= 1.0 + 1e-12)
