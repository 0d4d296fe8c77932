"""Heater physics, agent types and the pressure function g."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidParameterError
from .seeding import derive_rng


@dataclass(frozen=True)
class HeaterType:
    """First-order thermal model of one dwelling class.

    ``a`` is the thermal decay rate (1/h), ``b`` the control gain (degC per kWh),
    ``x_out`` the ambient temperature (degC), ``sigma`` the volatility (degC/sqrt(h)).
    """

    a: float
    b: float
    x_out: float
    sigma: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidParameterError(f"a must be positive, got {self.a}")
        if not self.b > 0:
            raise InvalidParameterError(f"b must be positive, got {self.b}")
        if not self.sigma >= 0:
            raise InvalidParameterError(f"sigma must be nonnegative, got {self.sigma}")

    @classmethod
    def from_physical(cls, C_a, U_a, x_out, sigma=0.0) -> "HeaterType":
        return derive_rates(C_a, U_a, x_out, sigma)


def derive_rates(C_a: float, U_a: float, x_out: float, sigma: float = 0.0) -> HeaterType:
    """Build a HeaterType from air thermal mass ``C_a`` (kWh/degC) and wall conductance ``U_a`` (kW/degC)."""
    if not C_a > 0:
        raise InvalidParameterError(f"C_a must be positive, got {C_a}")
    if not U_a > 0:
        raise InvalidParameterError(f"U_a must be positive, got {U_a}")
    return HeaterType(a=U_a / C_a, b=1.0 / C_a, x_out=x_out, sigma=sigma)


@dataclass(frozen=True)
class TypeDistribution:
    types: tuple[HeaterType, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.types) == 0:
            raise InvalidParameterError("at least one heater type is required")
        if len(self.types) != len(self.weights):
            raise InvalidParameterError("types and weights differ in length")
        if any(not w > 0 for w in self.weights):
            raise InvalidParameterError("every type weight must be positive")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise InvalidParameterError(f"weights sum to {math.fsum(self.weights)}, not 1")

    @classmethod
    def uniform(cls, heater: HeaterType) -> "TypeDistribution":
        return cls((heater,), (1.0,))

    @property
    def m(self) -> int:
        return len(self.types)

    @property
    def min_a(self) -> float:
        return min(h.a for h in self.types)


@dataclass(frozen=True)
class InitialDistribution:
    """Gaussian law of the initial temperatures (not truncated to the comfort band)."""

    mean: float
    std: float

    def __post_init__(self):
        if not self.std >= 0:
            raise InvalidParameterError(f"std must be nonnegative, got {self.std}")


@dataclass(frozen=True)
class ComfortBand:
    """Comfort limits ``l < h``, boundary target ``z`` (one of l, h) and mean target ``y``."""

    l: float
    h: float
    z: float
    y: float

    def __post_init__(self):
        if not self.l < self.h:
            raise InvalidParameterError(f"comfort band needs l < h, got l={self.l}, h={self.h}")
        if self.z not in (self.l, self.h):
            raise InvalidParameterError("z must equal l or h")

    @classmethod
    def for_target(cls, l, h, y, x0_mean) -> "ComfortBand":
        """Pick ``z = l`` for an energy release (y <= mean) and ``z = h`` otherwise."""
        return cls(l=l, h=h, z=l if y <= x0_mean else h, y=y)

    def check_initial_mean(self, x0_mean: float) -> None:
        if not self.l <= x0_mean <= self.h:
            raise InvalidParameterError(f"initial mean {x0_mean} outside comfort band [{self.l}, {self.h}]")
        lo, hi = sorted((self.z, x0_mean))
        if not lo <= self.y <= hi:
            raise InvalidParameterError(f"target y={self.y} not between z={self.z} and initial mean {x0_mean}")

    @property
    def release(self) -> bool:
        return self.z == self.l


@dataclass(frozen=True)
class GFunction:
    """Pressure function g: ``linear`` (mu*x) or ``exp`` (mu*(exp(beta*x)-1) clamped outside [lo, hi])."""

    kind: str
    mu: float
    beta: float = 0.0
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if self.kind not in ("linear", "exp"):
            raise InvalidParameterError(f"unknown g kind {self.kind!r}")
        if not self.mu > 0:
            raise InvalidParameterError(f"mu must be positive, got {self.mu}")
        if self.kind == "exp":
            if not self.beta > 0:
                raise InvalidParameterError(f"beta must be positive, got {self.beta}")
            if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo <= self.hi):
                raise InvalidParameterError("exp g needs a finite clamp interval lo <= hi")

    @classmethod
    def linear(cls, mu: float) -> "GFunction":
        return cls("linear", mu)

    @classmethod
    def exp_clamped(cls, mu: float, beta: float, z: float, y: float, x0_mean: float) -> "GFunction":
        lo, hi = sorted((z - y, x0_mean - y))
        return cls("exp", mu, beta, lo, hi)

    def with_mu(self, mu: float) -> "GFunction":
        return GFunction(self.kind, mu, self.beta, self.lo, self.hi)

    def __call__(self, x):
        if self.kind == "linear":
            return self.mu * np.asarray(x, dtype=float)
        xc = np.clip(x, self.lo, self.hi)
        return self.mu * np.expm1(self.beta * xc)

    def lipschitz(self) -> float:
        """Lipschitz constant on the clamp interval (everywhere for linear)."""
        if self.kind == "linear":
            return self.mu
        return self.mu * self.beta * math.exp(self.beta * self.hi)

    def max_abs(self, radius: float) -> float:
        """max |g(x)| over |x| <= radius; g is monotone so the endpoints suffice."""
        return float(max(abs(self(-radius)), abs(self(radius))))


def g_eval(g: GFunction, x):
    return g(x)


@dataclass(frozen=True)
class Agent:
    type_index: int
    x0: float
    x: float | None = None

    def __post_init__(self):
        if self.x is None:
            object.__setattr__(self, "x", self.x0)


def u_free(agent: Agent, heater: HeaterType):
    """Power holding the agent at its initial temperature; not penalized."""
    return heater.a * (agent.x0 - heater.x_out) / heater.b


def drift(x, u, agent: Agent, heater: HeaterType):
    return -heater.a * (x - heater.x_out) + heater.b * (u + u_free(agent, heater))


@dataclass(frozen=True)
class Population:
    """Array-backed finite population; iterating yields :class:`Agent` records."""

    type_index: np.ndarray
    x0: np.ndarray
    dist: TypeDistribution = field(repr=False)

    def __len__(self):
        return len(self.x0)

    def __getitem__(self, i) -> Agent:
        return Agent(int(self.type_index[i]), float(self.x0[i]))

    def __iter__(self) -> Iterator[Agent]:
        return (self[i] for i in range(len(self)))

    def param(self, name: str) -> np.ndarray:
        """Per-agent heater parameter (``a``, ``b``, ``x_out`` or ``sigma``)."""
        table = np.array([getattr(h, name) for h in self.dist.types])
        return table[self.type_index]

    def type_frequencies(self) -> np.ndarray:
        return np.bincount(self.type_index, minlength=self.dist.m) / len(self)

    def with_x0(self, x0: Sequence[float]) -> "Population":
        return Population(self.type_index.copy(), np.asarray(x0, dtype=float), self.dist)

    def centered(self, mean: float) -> "Population":
        """Shift initial temperatures so their sample mean is exactly ``mean``."""
        return self.with_x0(self.x0 - self.x0.mean() + mean)


def sample_population(dist: TypeDistribution, init: InitialDistribution, N: int, seed: int) -> Population:
    if N < 1:
        raise InvalidParameterError(f"population size must be at least 1, got {N}")
    rng = derive_rng(seed, "population")
    if dist.m == 1:
        types = np.zeros(N, dtype=int)
    else:
        types = rng.choice(dist.m, size=N, p=np.asarray(dist.weights))
    x0 = init.mean + init.std * rng.standard_normal(N)
    return Population(types, x0, dist)
