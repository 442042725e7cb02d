"""Deterministic SEIR compartment model and basic-reproduction-number fit.

Forward-Euler integration with per-step flows:
    new_inf = beta * S * I / N * dt   (S -> E)
    e_out   = sigma * E * dt          (E -> I)
    i_out   = gamma * I * dt          (I -> R)
The flows cancel pairwise, so S+E+I+R stays at N up to rounding. If a
step would drive a compartment negative (dt too large) it is clamped at
zero and the series is flagged; totals are never renormalized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares


class InsufficientSignalError(ValueError):
    """The case series carries no usable signal (all zero)."""


@dataclass(frozen=True)
class SeirParams:
    beta: float   # transmission rate per time unit
    sigma: float  # incubation (E -> I) rate
    gamma: float  # recovery (I -> R) rate
    n: float      # population
    i0: float = 1.0
    e0: float = 0.0
    dt: float = 0.1

    def __post_init__(self) -> None:
        if min(self.beta, self.sigma, self.gamma) < 0:
            raise ValueError("rates must be nonnegative")
        if self.n <= 0:
            raise ValueError(f"population must be positive, got {self.n}")
        if self.i0 < 0 or self.e0 < 0 or self.i0 + self.e0 > self.n:
            raise ValueError("initial counts must be nonnegative and fit the population")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def r0(self) -> float:
        return self.beta / self.gamma


@dataclass(frozen=True)
class EpidemicSeries:
    """Compartments at each tick boundary (length ticks+1) and per-step
    new-infection flow (length ticks)."""

    s: np.ndarray
    e: np.ndarray
    i: np.ndarray
    r: np.ndarray
    new_infections: np.ndarray
    clamped: bool  # a compartment underflowed zero (dt too large)

    @property
    def ticks(self) -> int:
        return len(self.new_infections)

    def totals(self) -> np.ndarray:
        return self.s + self.e + self.i + self.r


def seir_simulate(params: SeirParams, ticks: int) -> EpidemicSeries:
    if ticks < 0:
        raise ValueError(f"ticks must be >= 0, got {ticks}")
    n = ticks + 1
    s = np.empty(n)
    e = np.empty(n)
    i = np.empty(n)
    r = np.empty(n)
    flow = np.empty(ticks)
    s[0] = params.n - params.i0 - params.e0
    e[0] = params.e0
    i[0] = params.i0
    r[0] = 0.0
    clamped = False
    for t in range(ticks):
        new_inf = params.beta * s[t] * i[t] / params.n * params.dt
        e_out = params.sigma * e[t] * params.dt
        i_out = params.gamma * i[t] * params.dt
        s[t + 1] = s[t] - new_inf
        e[t + 1] = e[t] + new_inf - e_out
        i[t + 1] = i[t] + e_out - i_out
        r[t + 1] = r[t] + i_out
        flow[t] = new_inf
        for arr in (s, e, i, r):
            if arr[t + 1] < 0.0:
                arr[t + 1] = 0.0
                clamped = True
    return EpidemicSeries(s, e, i, r, flow, clamped)


def estimate_r0(series, params: SeirParams, r0_max: float = 20.0) -> float:
    """Least-squares fit of the transmission rate against the forward model.

    `series` is a per-tick new-infection (case proxy) count sequence;
    sigma, gamma, population, initial conditions and dt are taken from
    `params` as known, and only beta is fitted (params.beta is ignored).
    Returns the fitted beta divided by gamma.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or len(series) == 0:
        raise ValueError("case series must be a nonempty 1-d sequence")
    if np.any(series < 0):
        raise ValueError("case series must be nonnegative")
    if not np.any(series > 0):
        raise InsufficientSignalError("case series is identically zero")
    ticks = len(series)

    def model(beta: float) -> np.ndarray:
        p = SeirParams(beta, params.sigma, params.gamma, params.n,
                       i0=params.i0, e0=params.e0, dt=params.dt)
        return seir_simulate(p, ticks).new_infections

    beta_hi = params.gamma * r0_max
    # Coarse scan keeps the local refinement away from flat far-field minima.
    candidates = np.linspace(0.0, beta_hi, 41)[1:]
    sse = [float(np.sum((model(b) - series) ** 2)) for b in candidates]
    start = float(candidates[int(np.argmin(sse))])
    fit = least_squares(
        lambda x: model(float(x[0])) - series,
        x0=[start],
        bounds=([0.0], [beta_hi]),
    )
    return float(fit.x[0]) / params.gamma
