"""Seeded sampling of the random link flow ``z``.

Randomness comes from numpy's PCG64 bit generator, whose output stream is
fixed by the seed on every platform.  Uniform variates are
``Generator.random()`` (the top 53 bits of a 64-bit draw scaled to [0, 1))
mapped to [-1, 1] by ``u = 2 r - 1``.  Draws are consumed edge by edge in
edge order, one vector per iteration.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class MultiplicativeUniform:
    """``z_e = beta x_e u_e`` with ``u_e ~ U[-1, 1]``; ``|z_e| <= beta x_e``."""

    beta: float

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"spread beta must lie in [0, 1], got {self.beta}")


@dataclass(frozen=True)
class UniformZ:
    half_width: float

    def moments(self) -> tuple[float, float, float, float]:
        c = self.half_width
        return (0.0, c**2 / 3.0, 0.0, c**4 / 5.0)


@dataclass(frozen=True)
class NormalZ:
    sigma: float

    def moments(self) -> tuple[float, float, float, float]:
        s = self.sigma
        return (0.0, s**2, 0.0, 3.0 * s**4)


EdgeDistribution = Union[UniformZ, NormalZ]


@dataclass(frozen=True)
class AdditiveIndependent:
    """Zero-mean ``z_e`` drawn independently of ``x``, one distribution per edge."""

    distributions: tuple[EdgeDistribution, ...]

    def __post_init__(self):
        for d in self.distributions:
            if isinstance(d, UniformZ):
                ok = d.half_width >= 0
            elif isinstance(d, NormalZ):
                ok = d.sigma >= 0
            else:
                raise TypeError(f"unsupported edge distribution {d!r}")
            if not ok:
                raise ValueError(f"negative scale in {d!r}")

    @classmethod
    def uniform(cls, half_widths: Sequence[float]) -> "AdditiveIndependent":
        return cls(tuple(UniformZ(float(c)) for c in half_widths))

    @classmethod
    def normal(cls, sigmas: Sequence[float]) -> "AdditiveIndependent":
        return cls(tuple(NormalZ(float(s)) for s in sigmas))

    def moments(self) -> np.ndarray:
        """Raw moments ``E[z^k]``, shape ``(4, n_edges)``."""
        return np.array([d.moments() for d in self.distributions], dtype=float).T


NoiseKind = Union[MultiplicativeUniform, AdditiveIndependent]


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind
    seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def multiplicative(cls, beta: float, seed: int = 0) -> "NoiseModel":
        return cls(MultiplicativeUniform(float(beta)), seed)

    @property
    def is_multiplicative(self) -> bool:
        return isinstance(self.kind, MultiplicativeUniform)

    @property
    def beta(self) -> float:
        if not self.is_multiplicative:
            raise AttributeError("additive noise has no spread parameter")
        return self.kind.beta


class NoiseSample(NamedTuple):
    z: np.ndarray
    u: np.ndarray | None  # uniform variates, multiplicative model only


def splitmix64(value: int) -> int:
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Seed for run ``index`` of a batch: ``master XOR splitmix64(index)``."""
    return (int(master) ^ splitmix64(int(index))) & MASK64


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_noise(x: np.ndarray, noise: NoiseModel, gen: np.random.Generator) -> NoiseSample:
    """Draw one random-flow vector; ``gen`` advances in place."""
    kind = noise.kind
    if isinstance(kind, MultiplicativeUniform):
        u = 2.0 * gen.random(x.shape[0]) - 1.0
        return NoiseSample(kind.beta * x * u, u)
    if len(kind.distributions) != x.shape[0]:
        raise ValueError("one distribution per edge is required")
    z = np.empty(x.shape[0])
    for k, d in enumerate(kind.distributions):
        if isinstance(d, UniformZ):
            z[k] = d.half_width * (2.0 * gen.random() - 1.0)
        else:
            z[k] = d.sigma * gen.standard_normal()
    return NoiseSample(z, None)


def sample_uniform_block(gen: np.random.Generator, n: int, n_edges: int) -> np.ndarray:
    """``n`` consecutive per-iteration uniform vectors, same stream as ``n`` calls to
    :func:`sample_noise` under the multiplicative model."""
    return 2.0 * gen.random((n, n_edges)) - 1.0
