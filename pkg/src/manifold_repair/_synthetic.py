"""Synthetic manifolds, masking operators and distance corruption.

All randomness goes through `numpy.random.Philox` generators.  Each operation
derives its own stream from the user seed (see `rng_for`), so masking a dataset
or corrupting its distances never perturbs the stream that generated it.

The swiss roll uses the usual parameterization::

    t ~ U[1.5 pi, 4.5 pi],  h ~ U[0, 21],  (x, y, z) = (t cos t, h, t sin t)
"""

from __future__ import annotations

from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ._masked import Dissimilarity, MaskedDataset

if TYPE_CHECKING:
    from numpy.typing import NDArray

__all__ = [
    "ManifoldKind",
    "ManifoldSpec",
    "Stream",
    "corrupt_distances_gaussian",
    "generate",
    "mask_bernoulli",
    "mask_uniform_fraction",
    "rng_for",
    "swiss_roll",
]


class Stream(int, Enum):
    """Independent random streams derived from one seed."""

    GENERATE = 0
    MASK = 1
    NOISE = 2
    MONTE_CARLO = 3


def rng_for(seed: int, stream: Stream | int = Stream.GENERATE) -> np.random.Generator:
    """Philox generator for `stream` of `seed`."""
    ss = np.random.SeedSequence(seed, spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


class ManifoldKind(str, Enum):
    """The synthetic manifolds.

    Parsing is case-insensitive: ``ManifoldKind("m3") is ManifoldKind.M3``.
    """

    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"
    M5 = "M5"
    M6 = "M6"
    SWISS_ROLL = "swissroll"

    @classmethod
    def _missing_(cls, value: object) -> ManifoldKind | None:
        if isinstance(value, str):
            key = value.strip().lower().replace("_", "").replace("-", "")
            for member in cls:
                if member.value.lower() == key:
                    return member
        return None

    @property
    def ambient_dim(self) -> int:
        return _AMBIENT_DIMS[self]

    def __str__(self) -> str:
        return self.value


_AMBIENT_DIMS = {
    ManifoldKind.M1: 30,
    ManifoldKind.M2: 300,
    ManifoldKind.M3: 3,
    ManifoldKind.M4: 3,
    ManifoldKind.M5: 3,
    ManifoldKind.M6: 3,
    ManifoldKind.SWISS_ROLL: 3,
}


class ManifoldSpec(BaseModel):
    """What to generate: manifold kind, point count and seed."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ManifoldKind
    n: int = Field(ge=1)
    seed: int = Field(0, ge=0, lt=2**64)

    @property
    def ambient_dim(self) -> int:
        return self.kind.ambient_dim


def _sigmoid(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return 1.0 / (1.0 + np.exp(-x))


def _swiss_roll_points(
    rng: np.random.Generator, n: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, size=n)
    h = rng.uniform(0.0, 21.0, size=n)
    x = np.column_stack([t * np.cos(t), h, t * np.sin(t)])
    return x, np.column_stack([t, h])


def generate(spec: ManifoldSpec) -> tuple[MaskedDataset, NDArray[np.float64]]:
    """Sample `spec.n` points of a synthetic manifold.

    Parameters
    ----------
    spec : ManifoldSpec
        Manifold kind, point count and seed.

    Returns
    -------
    tuple[MaskedDataset, NDArray]
        The fully observed dataset (``n x ambient_dim``) and the generator
        coordinates of every point: the ``U(n, 2)`` draw for M1/M2, ``(x, y)``
        for M3/M4, ``(t, h)`` for M5 and the swiss roll, ``u`` for M6.
    """
    rng = rng_for(spec.seed, Stream.GENERATE)
    n = spec.n
    kind = spec.kind
    if kind is ManifoldKind.M1:
        u = rng.uniform(size=(n, 2))
        x = np.cos(u @ rng.standard_normal((2, 30)))
        params = u
    elif kind is ManifoldKind.M2:
        u = rng.uniform(size=(n, 2))
        hidden = _sigmoid(u @ rng.standard_normal((2, 30)))
        x = np.cos(hidden @ rng.standard_normal((30, 300)))
        params = u
    elif kind is ManifoldKind.M3:
        xy = rng.standard_normal((n, 2))
        z = np.exp(-np.sqrt((xy**2).sum(axis=1)))
        x, params = np.column_stack([xy, z]), xy
    elif kind is ManifoldKind.M4:
        xy = rng.uniform(size=(n, 2))
        z = 20.0 * np.exp(-(xy**2).sum(axis=1))
        x, params = np.column_stack([xy, z]), xy
    elif kind is ManifoldKind.M5:
        roll, params = _swiss_roll_points(rng, n)
        x = np.cos(roll)
    elif kind is ManifoldKind.M6:
        u = rng.uniform(0.0, 4.0 * np.pi, size=n)
        v = u / 2.0
        r = 3.0 + np.cos(u)
        x = np.column_stack([r * np.cos(v), r * np.sin(v), np.sin(u)])
        params = u[:, None]
    else:
        x, params = _swiss_roll_points(rng, n)
    return MaskedDataset.full(x), params


def swiss_roll(n: int, seed: int = 0) -> tuple[MaskedDataset, NDArray[np.float64]]:
    """Sample `n` swiss roll points; returns the dataset and ``(t, h)``."""
    return generate(ManifoldSpec(kind=ManifoldKind.SWISS_ROLL, n=n, seed=seed))


def _uniform_count(fraction: float, size: int) -> int:
    # floor(fraction * size), forgiving representation error such as 0.29 * 100
    return int(np.floor(round(fraction * size, 9)))


def mask_uniform_fraction(
    data: MaskedDataset, fraction: float, seed: int = 0
) -> MaskedDataset:
    """Hide exactly ``floor(fraction * n * m)`` entries chosen uniformly.

    Entries are drawn without replacement over the whole matrix; entries that
    were already missing stay missing.  Values are never changed.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    size = data.n * data.m
    count = _uniform_count(fraction, size)
    hidden = rng_for(seed, Stream.MASK).permutation(size)[:count]
    mask = data.mask.copy().reshape(-1)
    mask[hidden] = False
    return data.with_mask(mask.reshape(data.mask.shape))


def mask_bernoulli(
    data: MaskedDataset, p_present: float, seed: int = 0
) -> MaskedDataset:
    """Keep each entry independently with probability `p_present`."""
    if not 0.0 < p_present <= 1.0:
        raise ValueError(f"p_present must be in (0, 1], got {p_present}")
    keep = rng_for(seed, Stream.MASK).random(data.mask.shape) < p_present
    return data.with_mask(data.mask & keep)


def corrupt_distances_gaussian(
    d: Dissimilarity, sigma: float, seed: int = 0
) -> Dissimilarity:
    """Perturb every off-diagonal entry with ``N(0, sigma**2)`` noise.

    Negative entries are clamped to 0 and the result is symmetrized as
    ``(M + M.T) / 2``; the diagonal stays 0.

    Parameters
    ----------
    d : Dissimilarity
        Clean dissimilarities.
    sigma : float
        Standard deviation of the noise (0.1 for variance 0.01).
    seed : int
        Seed of the noise stream.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return d
    n = d.n
    noise = rng_for(seed, Stream.NOISE).normal(0.0, sigma, size=(n, n))
    np.fill_diagonal(noise, 0.0)
    m = np.maximum(d.d + noise, 0.0)
    out = (m + m.T) / 2.0
    np.fill_diagonal(out, 0.0)
    return Dissimilarity(out)
