import numpy as np
import pytest

from src.models.errors import BoundStateError, DomainError
from src.models.schemas import (
    AdatomSpec,
    MomentReference,
    SubstrateKind,
    SubstrateSpec,
    SurvivalMethod,
    TimeSpacing,
)
from src.physics.dynamics import (
    ReturnAmplitude,
    arc_contribution_bound,
    long_time_asymptote,
    make_time_grid,
    refine_around,
    short_time,
    survival_decomposed,
    survival_direct,
    worker_count,
)
from src.physics.resonance import find_pole


def test_time_grids():
    linear = make_time_grid(0.0, 10.0, 11, TimeSpacing.LINEAR)
    np.testing.assert_allclose(linear, np.arange(11.0))
    geometric = make_time_grid(0.01, 100.0, 5)
    np.testing.assert_allclose(geometric, [0.01, 0.1, 1.0, 10.0, 100.0])
    with_zero = make_time_grid(0.0, 100.0, 10)
    assert with_zero[0] == 0.0 and np.all(np.diff(with_zero) > 0)
    with pytest.raises(DomainError):
        make_time_grid(1.0, 0.5, 10)


def test_refine_around_keeps_sorted_unique_grid():
    times = np.array([0.0, 1.0, 2.0, 3.0])
    refined = refine_around(times, 1.5, 0.5, 0.1)
    assert np.all(np.diff(refined) > 0)
    assert set(times).issubset(set(refined))
    assert refined.size > times.size


def test_worker_count_prefers_argument(monkeypatch):
    monkeypatch.setenv("SURVIVAL_THREADS", "3")
    assert worker_count(2) == 2
    assert worker_count() == 3
    monkeypatch.delenv("SURVIVAL_THREADS")
    assert worker_count() is None


def test_direct_starts_at_one(square_spec):
    series = survival_direct(square_spec, [0.0, 0.5])
    assert series.p00[0] == pytest.approx(1.0, abs=1e-8)
    assert series.method == SurvivalMethod.DIRECT
    assert np.all(series.psi_r == 0)


def test_short_time_law_from_direct(square_spec):
    t = 0.02
    series = survival_direct(square_spec, [t])
    m2 = (1 - series.p00[0]) / t**2
    assert m2 == pytest.approx(0.16, rel=0.01)


def test_short_time_series(square_spec):
    series = short_time(square_spec, [0.0, 0.1])
    assert series.p00[1] == pytest.approx(1 - 0.16 * 0.01, rel=1e-12)
    assert series.p00[1] == pytest.approx(0.9984)
    with pytest.raises(DomainError):
        short_time(square_spec, [0.0, 10.0])


def test_short_time_about_resonance_energy(square_spec):
    series = short_time(square_spec, [0.1], MomentReference.EPSILON_R)
    assert series.p00[0] < 1.0
    assert series.p00[0] == pytest.approx(0.9984, abs=1e-4)


def test_direct_and_decomposed_agree(square_spec, square_res):
    times = make_time_grid(0.1, 200.0, 100)
    direct = survival_direct(square_spec, times)
    decomposed = survival_decomposed(square_spec, square_res, times)
    assert np.max(np.abs(direct.p00 - decomposed.p00)) <= 1e-6
    np.testing.assert_allclose(decomposed.amplitude, direct.psi_s, atol=1e-6)


def test_direct_and_decomposed_agree_on_chain(chain_spec, chain_res):
    times = make_time_grid(0.1, 200.0, 60)
    direct = survival_direct(chain_spec, times)
    decomposed = survival_decomposed(chain_spec, chain_res, times)
    assert np.max(np.abs(direct.p00 - decomposed.p00)) <= 1e-6


def test_results_do_not_depend_on_thread_count(square_spec, square_res):
    times = make_time_grid(0.5, 500.0, 80)
    one = survival_decomposed(square_spec, square_res, times, threads=1)
    four = survival_decomposed(square_spec, square_res, times, threads=4)
    assert np.array_equal(one.p00, four.p00)
    assert np.array_equal(
        survival_direct(square_spec, times, threads=1).p00,
        survival_direct(square_spec, times, threads=4).p00,
    )


def test_decoupled_level_never_decays():
    spec = AdatomSpec(epsilon0=2.0, v0=0.0)
    times = np.linspace(0.0, 50.0, 20)
    np.testing.assert_allclose(survival_direct(spec, times).p00, 1.0)
    decomposed = survival_decomposed(spec, find_pole(spec), times)
    np.testing.assert_allclose(decomposed.p00, 1.0)
    assert np.all(decomposed.psi_r == 0)


def test_time_validation(square_spec):
    with pytest.raises(DomainError):
        survival_direct(square_spec, [1.0, 0.5])
    with pytest.raises(DomainError):
        survival_direct(square_spec, [-1.0])
    with pytest.raises(DomainError):
        survival_direct(square_spec, [])


def test_bound_state_refused():
    spec = AdatomSpec(
        epsilon0=-1.9,
        v0=0.9,
        substrate=SubstrateSpec(kind=SubstrateKind.SEMI_INFINITE_CHAIN),
    )
    with pytest.raises(BoundStateError):
        survival_direct(spec, [1.0])


def test_pole_term_decays_at_twice_gamma(square_spec, square_res):
    evaluator = ReturnAmplitude(square_spec, square_res)
    psi = evaluator.pole_term(np.array([0.0, 10.0]))
    assert abs(psi[0]) == pytest.approx(abs(square_res.amplitude))
    assert abs(psi[1]) ** 2 == pytest.approx(
        square_res.weight * np.exp(-20 * square_res.gamma0), rel=1e-12
    )


def test_square_lattice_has_centre_hairpin(square_spec, square_res):
    evaluator = ReturnAmplitude(square_spec, square_res)
    energies = sorted({energy for energy, _ in evaluator.lines})
    assert energies == [0.0, 4.0, 8.0]
    assert len(evaluator.lines) == 4


def test_long_time_asymptote_on_chain(chain_spec, chain_res):
    times = np.linspace(2000.0, 2100.0, 2001)
    exact = survival_decomposed(chain_spec, chain_res, times)
    asymptote = long_time_asymptote(chain_spec, chain_res, times)
    assert asymptote.method == SurvivalMethod.LONG_TIME
    assert np.mean(asymptote.p00) == pytest.approx(np.mean(exact.p00), rel=0.05)
    # β = 1 이면 변조 인자는 [0, 4]
    edge = ReturnAmplitude(chain_spec, chain_res).edge_integral(times)
    assert np.all(asymptote.p00 <= (4 + 1e-9) * np.abs(edge) ** 2)


def test_arc_contribution_is_negligible(square_spec, chain_spec):
    assert arc_contribution_bound(square_spec) < 1e-3
    assert arc_contribution_bound(chain_spec) < 1e-3
    assert arc_contribution_bound(square_spec, radius=1e-6) < arc_contribution_bound(
        square_spec
    )
