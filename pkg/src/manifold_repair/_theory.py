"""Concentration bound for masked distances between two Gaussian clusters.

Model: ``x ~ N(mu1 1, 0.5 I_n)`` and ``y ~ N(mu2 1, 0.5 I_n)``, every coordinate
of each point present independently with probability ``p``.  A coordinate is
observed in both points with probability ``q = p**2``, and on those
coordinates ``z = x - y ~ N(mu, 1)`` with ``mu = mu1 - mu2``.

For ``0 < eps < q (1 + mu**2)`` and ``0 < gamma < (q (1 + mu**2) - eps) / (1 + mu**2)``
the *squared* masked distance satisfies::

    P[d2 < eps n] <= exp(-2 gamma**2 n)
                     + exp(-((q - gamma)(1 + mu**2) - eps)**2
                           / (4 (q - gamma)(1 + 2 mu**2)))**n

The first term bounds the chance that fewer than ``(q - gamma) n`` coordinates
are shared (Hoeffding); the second is the noncentral chi-squared lower tail
with ``D = (q - gamma) n`` degrees of freedom, noncentrality ``D mu**2`` and
threshold ``eps n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
from psygnal import Signal, SignalGroup
from pydantic import BaseModel, ConfigDict, Field

from ._exceptions import InfeasibleParameters
from ._synthetic import Stream

if TYPE_CHECKING:
    from collections.abc import Mapping

    from numpy.typing import NDArray

__all__ = [
    "MonteCarloEvents",
    "MonteCarloResult",
    "TheoryParams",
    "chi_squared_tail_bound",
    "hoeffding_tail",
    "monte_carlo_bound_check",
    "optimal_gamma",
    "sample_masked_sq_distance",
    "sample_masked_sq_distances",
    "theorem_bound",
    "wilson_half_width",
]

VARIANCE = 0.5
# trials per Monte Carlo batch; each batch has its own spawned seed
BATCH_TRIALS = 4096


class TheoryParams(BaseModel):
    """Parameters of the two-cluster model and of the bound.

    Parameters
    ----------
    n : int
        Ambient dimension.
    mu1, mu2 : float
        Cluster means (every coordinate).
    p_present : float
        Probability that a coordinate is observed, in ``(0, 1]``.
    epsilon : float
        Threshold per dimension: the bound is on ``P[d2 < epsilon * n]``.
    gamma : float, optional
        Slack of the Hoeffding step.  Left unset, `optimal_gamma` picks it.

    Raises
    ------
    InfeasibleParameters
        If `epsilon` or `gamma` lies outside its feasible interval; the
        `constraint` attribute names which one.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(ge=1)
    mu1: float = 0.0
    mu2: float = 0.0
    p_present: float = Field(gt=0.0, le=1.0)
    epsilon: float
    gamma: float | None = None

    def __init__(self, **data: Any) -> None:
        super().__init__(**data)
        # raised outside pydantic validation so the exception type survives
        self._check_feasible()

    def _check_feasible(self) -> None:
        eps_max = self.q * (1.0 + self.mu**2)
        if not 0.0 < self.epsilon < eps_max:
            raise InfeasibleParameters(
                "epsilon",
                f"need 0 < epsilon < q(1 + mu^2) = {eps_max:.6g}, "
                f"got {self.epsilon}",
            )
        if self.gamma is not None and not 0.0 < self.gamma < self.gamma_max:
            raise InfeasibleParameters(
                "gamma",
                f"need 0 < gamma < (q(1 + mu^2) - epsilon)/(1 + mu^2) = "
                f"{self.gamma_max:.6g}, got {self.gamma}",
            )

    @property
    def mu(self) -> float:
        return self.mu1 - self.mu2

    @property
    def q(self) -> float:
        return self.p_present**2

    @property
    def gamma_max(self) -> float:
        """Upper end of the open feasible interval of `gamma`."""
        s = 1.0 + self.mu**2
        return (self.q * s - self.epsilon) / s

    @property
    def dof(self) -> float:
        """``D = (q - gamma) n``."""
        return (self.q - self._require_gamma()) * self.n

    @property
    def noncentrality(self) -> float:
        """``lambda = D mu**2``."""
        return self.dof * self.mu**2

    @property
    def threshold(self) -> float:
        """``c = epsilon n``."""
        return self.epsilon * self.n

    def _require_gamma(self) -> float:
        if self.gamma is None:
            raise InfeasibleParameters("gamma", "gamma is not set")
        return self.gamma

    def with_gamma(self, gamma: float) -> TheoryParams:
        return TheoryParams(**{**self.model_dump(), "gamma": gamma})

    def model_copy(  # type: ignore[override]
        self, *, update: Mapping[str, Any] | None = None, deep: bool = False
    ) -> TheoryParams:
        """Copy with `update` applied, validated like a new instance."""
        return TheoryParams(**{**self.model_dump(), **(update or {})})


def chi_squared_tail_bound(dof: float, lam: float, c: float) -> float:
    """Lower-tail bound for a noncentral chi-squared variable.

    ``P[X <= c] <= exp(-(D + lam - c)**2 / (4 (D + 2 lam)))`` for ``X`` with
    ``D >= 1`` degrees of freedom and noncentrality ``lam``.
    """
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    if lam < 0:
        raise ValueError(f"noncentrality must be >= 0, got {lam}")
    if not 0 < c < dof + lam:
        raise ValueError(f"c must satisfy 0 < c < dof + lam = {dof + lam}, got {c}")
    return math.exp(-((dof + lam - c) ** 2) / (4.0 * (dof + 2.0 * lam)))


def hoeffding_tail(n_trials: int, gamma: float, *, two_sided: bool = False) -> float:
    """Hoeffding bound ``exp(-2 gamma**2 n)`` on a mean deviating by `gamma`.

    With ``two_sided=True`` returns ``2 exp(-2 gamma**2 n)``.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    tail = math.exp(-2.0 * gamma**2 * n_trials)
    return 2.0 * tail if two_sided else tail


def theorem_bound(params: TheoryParams) -> float:
    """Bound on ``P[squared masked distance < epsilon n]``.

    Raises
    ------
    InfeasibleParameters
        If `params.gamma` is not set, or `params` is not feasible.
    """
    params._check_feasible()
    gamma = params._require_gamma()
    q, mu2, eps, n = params.q, params.mu**2, params.epsilon, params.n
    hoeffding = math.exp(-2.0 * gamma**2 * n)
    per_dim = math.exp(
        -(((q - gamma) * (1.0 + mu2) - eps) ** 2)
        / (4.0 * (q - gamma) * (1.0 + 2.0 * mu2))
    )
    return hoeffding + per_dim**n


def optimal_gamma(params: TheoryParams, grid: int = 200) -> tuple[float, float]:
    """Smallest bound over `grid` equally spaced gammas in ``(0, gamma_max)``.

    Returns ``(gamma, bound)``; the first minimizer wins ties.
    """
    if grid < 1:
        raise ValueError(f"grid must be >= 1, got {grid}")
    params._check_feasible()
    g_max = params.gamma_max
    best = (math.nan, math.inf)
    for i in range(1, grid + 1):
        gamma = g_max * i / (grid + 1)
        bound = theorem_bound(params.with_gamma(gamma))
        if bound < best[1]:
            best = (gamma, bound)
    return best


def wilson_half_width(successes: int, trials: int, z: float = 1.96) -> float:
    """Half-width of the Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must be in [0, {trials}], got {successes}")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    return z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials**2)) / denom


def sample_masked_sq_distances(
    params: TheoryParams, trials: int, rng: np.random.Generator
) -> NDArray[np.float64]:
    """Draw `trials` squared masked distances between the two clusters."""
    n, sd = params.n, math.sqrt(VARIANCE)
    x = rng.normal(params.mu1, sd, size=(trials, n))
    y = rng.normal(params.mu2, sd, size=(trials, n))
    both = (rng.random((trials, n)) < params.p_present) & (
        rng.random((trials, n)) < params.p_present
    )
    z = np.where(both, x - y, 0.0)
    return np.einsum("ij,ij->i", z, z)


def sample_masked_sq_distance(params: TheoryParams, seed: int = 0) -> float:
    """One squared masked distance, seeded."""
    rng = np.random.Generator(np.random.Philox(seed))
    return float(sample_masked_sq_distances(params, 1, rng)[0])


class MonteCarloEvents(SignalGroup):
    """Signals emitted by `monte_carlo_bound_check`.

    Attributes
    ----------
    batch_finished : Signal[int, int]
        Trials done so far and the total.
    """

    batch_finished = Signal(int, int)


@dataclass(frozen=True)
class MonteCarloResult:
    """Outcome of `monte_carlo_bound_check`."""

    empirical: float
    bound: float
    ok: bool
    trials: int
    hits: int
    half_width: float
    gamma_used: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "bound": self.bound,
            "empirical": self.empirical,
            "gamma_used": self.gamma_used,
            "half_width": self.half_width,
            "hits": self.hits,
            "ok": self.ok,
            "trials": self.trials,
        }


def monte_carlo_bound_check(
    params: TheoryParams,
    trials: int,
    seed: int = 0,
    *,
    grid: int = 200,
    events: MonteCarloEvents | None = None,
) -> MonteCarloResult:
    """Compare the empirical ``P[d2 < epsilon n]`` with `theorem_bound`.

    Trials are split into batches of `BATCH_TRIALS`, each drawn from its own
    stream spawned from `seed`, so the result only depends on `seed` and
    `trials`.  The check passes when the empirical frequency is at most the
    bound plus three Wilson half-widths.

    Parameters
    ----------
    params : TheoryParams
        Model parameters.  If `gamma` is unset, `optimal_gamma` chooses it.
    trials : int
        Number of samples.
    seed : int
        Root seed.
    grid : int
        Grid size for `optimal_gamma`.
    events : MonteCarloEvents, optional
        Notified after every batch.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if params.gamma is None:
        gamma, bound = optimal_gamma(params, grid)
    else:
        gamma, bound = params.gamma, theorem_bound(params)

    n_batches = -(-trials // BATCH_TRIALS)
    root = np.random.SeedSequence(seed, spawn_key=(int(Stream.MONTE_CARLO),))
    hits = done = 0
    for child in root.spawn(n_batches):
        size = min(BATCH_TRIALS, trials - done)
        d2 = sample_masked_sq_distances(
            params, size, np.random.Generator(np.random.Philox(child))
        )
        hits += int(np.count_nonzero(d2 < params.threshold))
        done += size
        if events is not None:
            events.batch_finished.emit(done, trials)

    empirical = hits / trials
    half = wilson_half_width(hits, trials)
    return MonteCarloResult(
        empirical=empirical,
        bound=bound,
        ok=empirical <= bound + 3.0 * half,
        trials=trials,
        hits=hits,
        half_width=half,
        gamma_used=gamma,
    )
