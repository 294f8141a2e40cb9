"""Seeded synthetic actigraphy sampled from a fully specified HMM.

States follow the Markov chain; each sleep epoch emits exactly zero with
probability alpha and otherwise a non-negative draw from the sleep
Gaussian, each wake epoch a non-negative draw from the wake Gaussian
(rejection sampling below zero).  The sampled log value becomes an
integer count via round(exp(v) - 1), so fixtures flow through the same
ingest path as real data; the rounding perturbation is acknowledged in
fitting-recovery tolerances.

The random source is numpy's PCG64 generator seeded from the spec, so
identical specs produce bit-identical output on a platform.  Table-based
default parameters matching typical wrist-actigraphy fits are exposed as
``reference_params``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .emissions import SleepEmission, WakeEmission
from .errors import InputError
from .hmm import HmmParams
from .series import EpochSeries, State, StateSequence

DEFAULT_START_TIME = datetime(2012, 5, 1, 21, 30, 0, tzinfo=timezone.utc)


def reference_params() -> HmmParams:
    """Cohort-mean parameters used as simulation defaults."""
    return HmmParams(
        a=np.array([[0.960, 0.040], [0.055, 0.945]]),
        sleep=SleepEmission(alpha=0.731, mu1=2.486, sigma1=1.248),
        wake=WakeEmission(mu2=4.803, sigma2=0.866),
        pi=np.array([0.5, 0.5]),
    )


@dataclass(frozen=True)
class SimSpec:
    """Everything needed to reproduce one synthetic recording."""

    params: HmmParams
    t_epochs: int
    epoch_seconds: int = 30
    seed: int = 0
    start_time: datetime = field(default=DEFAULT_START_TIME)

    def __post_init__(self) -> None:
        if self.t_epochs < 1:
            raise InputError("t_epochs must be >= 1")


def _sample_states(params: HmmParams, t_epochs: int, rng: np.random.Generator) -> np.ndarray:
    states = np.empty(t_epochs, dtype=np.int8)
    u = rng.random(t_epochs)
    states[0] = State.WAKE if u[0] >= params.pi[0] else State.SLEEP
    stay0, stay1 = params.a[0, 0], params.a[1, 0]
    for t in range(1, t_epochs):
        p_sleep = stay0 if states[t - 1] == State.SLEEP else stay1
        states[t] = State.SLEEP if u[t] < p_sleep else State.WAKE
    return states


def _draw_nonnegative_normal(mu: float, sigma: float, rng: np.random.Generator) -> float:
    while True:
        v = rng.normal(mu, sigma)
        if v >= 0.0:
            return float(v)


def sample_log_values(
    states: np.ndarray, params: HmmParams, rng: np.random.Generator
) -> np.ndarray:
    """Per-epoch log-scale emission draws for a given state path."""
    values = np.empty(states.size, dtype=np.float64)
    sleep, wake = params.sleep, params.wake
    for t, s in enumerate(states):
        if s == State.SLEEP:
            if rng.random() < sleep.alpha:
                values[t] = 0.0
            else:
                values[t] = _draw_nonnegative_normal(sleep.mu1, sleep.sigma1, rng)
        else:
            values[t] = _draw_nonnegative_normal(wake.mu2, wake.sigma2, rng)
    return values


def _values_to_counts(values: np.ndarray) -> np.ndarray:
    return np.maximum(np.round(np.expm1(values)), 0.0).astype(np.int64)


def simulate(spec: SimSpec) -> tuple[EpochSeries, StateSequence]:
    """Sample one recording with its ground-truth state path."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    states = _sample_states(spec.params, spec.t_epochs, rng)
    values = sample_log_values(states, spec.params, rng)
    series = EpochSeries(spec.start_time, spec.epoch_seconds, _values_to_counts(values))
    return series, StateSequence(states, spec.epoch_seconds)


def simulate_from_states(
    states: StateSequence,
    params: HmmParams,
    seed: int = 0,
    start_time: datetime = DEFAULT_START_TIME,
) -> EpochSeries:
    """Sample counts for a fixed state path (e.g. a consolidated night)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    values = sample_log_values(states.states, params, rng)
    return EpochSeries(start_time, states.epoch_seconds, _values_to_counts(values))
