import math
from unittest.mock import Mock

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy import stats

from manifold_repair import (
    InfeasibleParameters,
    MonteCarloEvents,
    TheoryParams,
    chi_squared_tail_bound,
    hoeffding_tail,
    monte_carlo_bound_check,
    optimal_gamma,
    sample_masked_sq_distance,
    sample_masked_sq_distances,
    theorem_bound,
    wilson_half_width,
)


@pytest.fixture
def params() -> TheoryParams:
    return TheoryParams(n=100, mu1=1.0, mu2=0.0, p_present=0.7, epsilon=0.5, gamma=0.1)


def test_derived_quantities(params: TheoryParams) -> None:
    assert params.mu == 1.0
    assert params.q == pytest.approx(0.49)
    assert params.gamma_max == pytest.approx(0.24)
    assert params.dof == pytest.approx(39.0)
    assert params.noncentrality == pytest.approx(39.0)
    assert params.threshold == pytest.approx(50.0)


def test_pinned_bound(params: TheoryParams) -> None:
    # exp(-2) + exp(-0.28**2 / 4.68)**100
    expected = math.exp(-2.0) + math.exp(-100 * 0.28**2 / 4.68)
    assert theorem_bound(params) == pytest.approx(expected, rel=1e-12)
    assert theorem_bound(params) == pytest.approx(0.3226, abs=1e-4)


def test_bound_is_sum_of_tails(params: TheoryParams) -> None:
    tails = hoeffding_tail(params.n, 0.1) + chi_squared_tail_bound(
        params.dof, params.noncentrality, params.threshold
    )
    assert theorem_bound(params) == pytest.approx(tails, rel=1e-12)


@pytest.mark.parametrize("dof", [1, 5, 50])
@pytest.mark.parametrize("lam", [0.5, 10.0])
@pytest.mark.parametrize("frac", [0.1, 0.5, 0.9])
def test_chi_squared_bound_dominates_cdf(dof: int, lam: float, frac: float) -> None:
    c = frac * (dof + lam)
    assert stats.ncx2.cdf(c, dof, lam) <= chi_squared_tail_bound(dof, lam, c)


def test_chi_squared_preconditions() -> None:
    with pytest.raises(ValueError, match="dof"):
        chi_squared_tail_bound(0.5, 1.0, 0.5)
    with pytest.raises(ValueError, match="noncentrality"):
        chi_squared_tail_bound(2, -1.0, 0.5)
    with pytest.raises(ValueError, match="c must satisfy"):
        chi_squared_tail_bound(2, 1.0, 3.0)


@pytest.mark.parametrize("n", [10, 100, 1000])
@pytest.mark.parametrize("gamma", [0.05, 0.2])
def test_hoeffding_dominates_binomial_tail(n: int, gamma: float) -> None:
    q = 0.49
    tail = stats.binom.cdf(math.floor((q - gamma) * n), n, q)
    assert tail <= hoeffding_tail(n, gamma)
    assert hoeffding_tail(n, gamma, two_sided=True) == 2 * hoeffding_tail(n, gamma)


@pytest.mark.parametrize("gamma", [0.02, 0.03, 0.05])
def test_hoeffding_covers_simulated_coin_flips(gamma: float) -> None:
    heads = np.random.default_rng(11).binomial(1000, 0.5, size=100_000)
    freq = np.mean(np.abs(heads / 1000 - 0.5) >= gamma)
    assert freq <= hoeffding_tail(1000, gamma, two_sided=True)


def test_hoeffding_preconditions() -> None:
    with pytest.raises(ValueError, match="n_trials"):
        hoeffding_tail(0, 0.1)
    with pytest.raises(ValueError, match="gamma"):
        hoeffding_tail(10, -0.1)


def test_infeasible_epsilon() -> None:
    with pytest.raises(InfeasibleParameters, match="infeasible epsilon") as exc:
        TheoryParams(n=10, mu1=1.0, p_present=0.7, epsilon=0.98)
    assert exc.value.constraint == "epsilon"
    with pytest.raises(InfeasibleParameters):
        TheoryParams(n=10, p_present=0.7, epsilon=0.0)


def test_infeasible_gamma() -> None:
    with pytest.raises(InfeasibleParameters) as exc:
        TheoryParams(n=10, mu1=1.0, p_present=0.7, epsilon=0.5, gamma=0.3)
    assert exc.value.constraint == "gamma"
    # an unset gamma is only an error once the bound needs it
    params = TheoryParams(n=10, mu1=1.0, p_present=0.7, epsilon=0.5)
    with pytest.raises(InfeasibleParameters, match="not set"):
        theorem_bound(params)


def test_copies_are_checked(params: TheoryParams) -> None:
    with pytest.raises(InfeasibleParameters, match="epsilon"):
        params.model_copy(update={"epsilon": 50.0})
    assert params.model_copy(update={"n": 10}).n == 10
    unchecked = TheoryParams.model_construct(
        **{**params.model_dump(), "epsilon": 50.0}
    )
    with pytest.raises(InfeasibleParameters, match="epsilon"):
        theorem_bound(unchecked)
    with pytest.raises(InfeasibleParameters, match="epsilon"):
        optimal_gamma(unchecked)


@pytest.mark.parametrize(
    ("field", "values"),
    [
        ("n", [10, 50, 100, 500]),
        ("mu1", [1.0, 1.5, 2.0, 3.0]),
        ("p_present", [0.7, 0.8, 0.9, 1.0]),
    ],
)
def test_bound_is_nonincreasing(
    params: TheoryParams, field: str, values: list[float]
) -> None:
    bounds = [theorem_bound(params.model_copy(update={field: v})) for v in values]
    assert (np.diff(bounds) <= 0).all()


def test_field_validation() -> None:
    with pytest.raises(ValidationError):
        TheoryParams(n=0, p_present=0.7, epsilon=0.1)
    with pytest.raises(ValidationError):
        TheoryParams(n=10, p_present=0.0, epsilon=0.1)
    with pytest.raises(ValidationError):
        TheoryParams(n=10, p_present=1.5, epsilon=0.1)


def test_optimal_gamma(params: TheoryParams) -> None:
    gamma, bound = optimal_gamma(params, grid=50)
    assert 0 < gamma < params.gamma_max
    grid = [params.gamma_max * i / 51 for i in range(1, 51)]
    values = [theorem_bound(params.with_gamma(g)) for g in grid]
    assert bound == min(values)
    assert gamma == grid[values.index(bound)]
    with pytest.raises(ValueError, match="grid"):
        optimal_gamma(params, grid=0)


def test_wilson_half_width() -> None:
    z = 1.96
    # with no successes the interval is [0, 2 * half]
    assert wilson_half_width(0, 100) == pytest.approx(z**2 / (2 * (100 + z**2)))
    assert wilson_half_width(50, 100) < wilson_half_width(50, 10)
    assert wilson_half_width(30, 100) == pytest.approx(wilson_half_width(70, 100))
    with pytest.raises(ValueError):
        wilson_half_width(5, 0)
    with pytest.raises(ValueError):
        wilson_half_width(11, 10)


def test_samples_follow_chi_squared() -> None:
    # everything observed and equal means: d2 is chi-squared with n dof
    params = TheoryParams(n=10, p_present=1.0, epsilon=0.5)
    d2 = sample_masked_sq_distances(params, 20_000, np.random.default_rng(0))
    assert d2.shape == (20_000,)
    assert d2.mean() == pytest.approx(10.0, abs=0.2)
    assert d2.var() == pytest.approx(20.0, rel=0.1)


def test_masked_samples_drop_coordinates() -> None:
    params = TheoryParams(n=50, p_present=0.5, epsilon=0.1)
    d2 = sample_masked_sq_distances(params, 20_000, np.random.default_rng(1))
    # E[d2] = q n for equal means
    assert d2.mean() == pytest.approx(0.25 * 50, rel=0.05)


def test_single_sample_is_seeded(params: TheoryParams) -> None:
    a = sample_masked_sq_distance(params, seed=7)
    assert a == sample_masked_sq_distance(params, seed=7)
    assert a != sample_masked_sq_distance(params, seed=8)


def test_monte_carlo_check(params: TheoryParams) -> None:
    events = MonteCarloEvents()
    progress = Mock()
    events.batch_finished.connect(progress)
    result = monte_carlo_bound_check(params, 10_000, seed=3, events=events)
    assert result.ok
    assert result.trials == 10_000
    assert result.gamma_used == 0.1
    assert result.bound == theorem_bound(params)
    assert result.empirical == result.hits / 10_000
    assert result.empirical <= result.bound
    assert progress.call_count == 3
    progress.assert_called_with(10_000, 10_000)
    assert sorted(result.to_dict()) == [
        "bound",
        "empirical",
        "gamma_used",
        "half_width",
        "hits",
        "ok",
        "trials",
    ]


def test_monte_carlo_is_reproducible(params: TheoryParams) -> None:
    a = monte_carlo_bound_check(params.model_copy(update={"n": 10}), 5000, seed=1)
    b = monte_carlo_bound_check(params.model_copy(update={"n": 10}), 5000, seed=1)
    assert a == b


def test_monte_carlo_picks_gamma() -> None:
    params = TheoryParams(n=20, mu1=1.0, p_present=0.7, epsilon=0.5)
    result = monte_carlo_bound_check(params, 2000, grid=20)
    gamma, bound = optimal_gamma(params, grid=20)
    assert result.gamma_used == gamma
    assert_allclose(result.bound, bound)
    with pytest.raises(ValueError, match="trials"):
        monte_carlo_bound_check(params, 0)
