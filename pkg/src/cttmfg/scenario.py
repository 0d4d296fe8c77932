"""Scenario bundle shared by the operators, the near fixed point search and the simulators."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .lqg import CostParams, TimeGrid
from .population import ComfortBand, GFunction, HeaterType, InitialDistribution, TypeDistribution, derive_rates


@dataclass(frozen=True)
class Scenario:
    dist: TypeDistribution
    band: ComfortBand
    init: InitialDistribution
    cost: CostParams
    g: GFunction
    grid: TimeGrid

    def __post_init__(self):
        self.band.check_initial_mean(self.init.mean)

    @property
    def x0_mean(self) -> float:
        return self.init.mean

    @property
    def y(self) -> float:
        return self.band.y

    @property
    def z(self) -> float:
        return self.band.z

    def with_g(self, g: GFunction) -> "Scenario":
        return replace(self, g=g)

    def with_mu(self, mu: float) -> "Scenario":
        return replace(self, g=self.g.with_mu(mu))

    def with_grid(self, grid: TimeGrid) -> "Scenario":
        return replace(self, grid=grid)

    @property
    def heater(self) -> HeaterType:
        """The single heater type of a uniform population."""
        if self.dist.m != 1:
            raise ValueError("scenario has more than one heater type")
        return self.dist.types[0]


# Experimental setup of the uniform 200-heater study.
REF_C_A = 0.57
REF_U_A = 0.27
REF_X_OUT = -10.0
REF_SIGMA = 0.15


def reference_heater(x_out: float = REF_X_OUT, sigma: float = REF_SIGMA) -> HeaterType:
    return derive_rates(REF_C_A, REF_U_A, x_out, sigma)


def reference_scenario(g: str = "linear", mu: float = 1484.0, beta: float = 3.0, x0_mean: float = 21.0,
                       x_out: float = REF_X_OUT, sigma: float = REF_SIGMA, grid: TimeGrid | None = None) -> Scenario:
    band = ComfortBand.for_target(17.0, 25.0, 20.0, x0_mean)
    if g == "linear":
        gf = GFunction.linear(mu)
    else:
        gf = GFunction.exp_clamped(mu, beta, band.z, band.y, x0_mean)
    return Scenario(
        dist=TypeDistribution.uniform(reference_heater(x_out, sigma)),
        band=band,
        init=InitialDistribution(x0_mean, 1.0),
        cost=CostParams(delta=0.001, q_x0=200.0, r=10.0),
        g=gf,
        grid=grid or TimeGrid(1e-3, 6000),
    )
