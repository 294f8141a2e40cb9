"""Two-state sleep/wake HMM: forward-backward, EM fitting, Viterbi.

State index 0 is sleep (zero-inflated truncated Gaussian emission),
index 1 is wake (Gaussian emission); the labeling convention mu1 < mu2
is enforced after fitting.  The forward-backward pass uses per-step
normalization so posteriors come out normalized; Viterbi runs in pure
log space with ties broken toward sleep.  Exhaustive path-enumeration
oracles are included for short sequences and used by tests and the
``verify`` command.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .emissions import (
    SleepEmission,
    WakeEmission,
    fit_sleep_weighted,
    fit_wake_weighted,
    sleep_log_emission,
    wake_log_emission,
)
from .errors import DegenerateWeightError, FormatError, InputError
from .series import LogSeries, State, StateSequence

_STOCHASTIC_TOL = 1e-12
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500
_MIN_FIT_LENGTH = 10
_BRUTE_FORCE_MAX_T = 16


@dataclass(frozen=True)
class HmmParams:
    """Full parameter set: transition matrix, emissions, initial probabilities."""

    a: np.ndarray
    sleep: SleepEmission
    wake: WakeEmission
    pi: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=np.float64)
        pi = np.asarray(self.pi, dtype=np.float64)
        if a.shape != (2, 2):
            raise InputError("transition matrix must be 2x2")
        if np.any(a < 0) or np.any(a > 1):
            raise InputError("transition entries must lie in [0, 1]")
        if np.any(np.abs(a.sum(axis=1) - 1.0) > _STOCHASTIC_TOL):
            raise InputError("transition rows must each sum to 1")
        if pi.shape != (2,) or np.any(pi < 0) or abs(pi.sum() - 1.0) > _STOCHASTIC_TOL:
            raise InputError("pi must be a length-2 probability vector")
        a.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "pi", pi)


@dataclass(frozen=True)
class FitReport:
    """Outcome of one Baum-Welch run."""

    params: HmmParams
    log_likelihood_trace: list[float]
    iterations: int
    converged: bool
    swapped: bool = field(default=False)


def _log_b(obs: LogSeries, params: HmmParams) -> np.ndarray:
    """(T, 2) matrix of per-epoch log emission densities."""
    return np.column_stack(
        [
            sleep_log_emission(obs.values, params.sleep),
            wake_log_emission(obs.values, params.wake),
        ]
    )


def _forward_backward(obs: LogSeries, params: HmmParams):
    """Scaled forward-backward pass.

    Returns (log_likelihood, gamma, xi) where gamma is (T, 2) state
    posteriors and xi is (T-1, 2, 2) pairwise posteriors, each slice
    normalized to sum 1.
    """
    logb = _log_b(obs, params)
    T = logb.shape[0]
    shift = logb.max(axis=1)
    b = np.exp(logb - shift[:, None])
    a = params.a

    alpha = np.empty((T, 2))
    c = np.empty(T)
    alpha[0] = params.pi * b[0]
    c[0] = alpha[0].sum()
    alpha[0] /= c[0]
    for t in range(1, T):
        alpha[t] = (alpha[t - 1] @ a) * b[t]
        c[t] = alpha[t].sum()
        alpha[t] /= c[t]
    log_likelihood = float(np.sum(np.log(c)) + np.sum(shift))

    beta = np.empty((T, 2))
    beta[-1] = 1.0
    for t in range(T - 2, -1, -1):
        beta[t] = (a @ (b[t + 1] * beta[t + 1])) / c[t + 1]

    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)

    xi = np.empty((T - 1, 2, 2)) if T > 1 else np.empty((0, 2, 2))
    for t in range(T - 1):
        m = alpha[t][:, None] * a * (b[t + 1] * beta[t + 1])[None, :]
        xi[t] = m / m.sum()
    return log_likelihood, gamma, xi


def forward_log_likelihood(obs: LogSeries, params: HmmParams) -> float:
    """log P(observations | params) by the scaled forward recursion."""
    log_likelihood, _, _ = _forward_backward(obs, params)
    return log_likelihood


def posterior_marginals(obs: LogSeries, params: HmmParams) -> np.ndarray:
    """(T, 2) per-epoch state posteriors given the full observation sequence."""
    _, gamma, _ = _forward_backward(obs, params)
    return gamma


def default_init(obs: LogSeries) -> HmmParams:
    """Deterministic moment-based initialization for Baum-Welch.

    Low/high nonzero quantile means seed the two emission locations; the
    zero fraction seeds alpha.
    """
    values = obs.values
    nonzero = values[values > 0]
    if nonzero.size == 0:
        mu1, mu2 = 1.0, 3.0
    else:
        q40 = np.percentile(nonzero, 40)
        q60 = np.percentile(nonzero, 60)
        low = nonzero[nonzero < q40]
        mu1 = float(low.mean()) if low.size else 1.0
        high = nonzero[nonzero > q60]
        mu2 = float(high.mean()) if high.size else mu1 + 2.0
    alpha = float(np.clip(np.mean(values == 0.0), 0.05, 0.95))
    return HmmParams(
        a=np.array([[0.95, 0.05], [0.05, 0.95]]),
        sleep=SleepEmission(alpha=alpha, mu1=mu1, sigma1=1.0),
        wake=WakeEmission(mu2=mu2, sigma2=1.0),
        pi=np.array([0.5, 0.5]),
    )


def _swap_states(params: HmmParams) -> HmmParams:
    """Relabel the two states; the zero-inflation mass stays with sleep."""
    a = params.a[::-1, ::-1].copy()
    return HmmParams(
        a=a,
        sleep=SleepEmission(
            alpha=params.sleep.alpha, mu1=params.wake.mu2, sigma1=params.wake.sigma2
        ),
        wake=WakeEmission(mu2=params.sleep.mu1, sigma2=params.sleep.sigma1),
        pi=params.pi[::-1].copy(),
    )


def baum_welch(
    obs: LogSeries,
    init: HmmParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> FitReport:
    """EM fit of the full parameter set to one observation sequence.

    Stops when the relative log-likelihood change drops below ``tol`` or
    after ``max_iter`` iterations.  The trace records the log-likelihood
    of the parameters entering each E-step and is non-decreasing.
    """
    if len(obs) < _MIN_FIT_LENGTH:
        raise InputError(f"need at least {_MIN_FIT_LENGTH} epochs to fit")
    if tol <= 0:
        raise InputError("tol must be positive")

    params = init
    trace: list[float] = []
    converged = False
    iterations = 0
    for _ in range(max_iter + 1):
        log_likelihood, gamma, xi = _forward_backward(obs, params)
        if trace and abs(log_likelihood - trace[-1]) <= tol * max(
            1.0, abs(trace[-1])
        ):
            trace.append(log_likelihood)
            converged = True
            break
        trace.append(log_likelihood)
        if iterations >= max_iter:
            break
        # M-step
        expected = xi.sum(axis=0)
        occupancy = np.maximum(gamma[:-1].sum(axis=0), 1e-300)
        a = expected / occupancy[:, None]
        a /= np.maximum(a.sum(axis=1, keepdims=True), 1e-300)
        try:
            sleep = fit_sleep_weighted(obs.values, gamma[:, 0], params.sleep)
            wake = fit_wake_weighted(obs.values, gamma[:, 1])
        except DegenerateWeightError as exc:
            raise DegenerateWeightError(
                f"EM iteration {iterations + 1}: {exc}"
            ) from exc
        params = HmmParams(a=a, sleep=sleep, wake=wake, pi=gamma[0].copy())
        iterations += 1

    swapped = params.sleep.mu1 >= params.wake.mu2
    if swapped:
        params = _swap_states(params)
    return FitReport(
        params=params,
        log_likelihood_trace=trace,
        iterations=iterations,
        converged=converged,
        swapped=swapped,
    )


def viterbi(obs: LogSeries, params: HmmParams) -> StateSequence:
    """Most probable state path in log space; ties resolve toward sleep."""
    logb = _log_b(obs, params)
    T = logb.shape[0]
    with np.errstate(divide="ignore"):
        log_a = np.log(params.a)
        log_pi = np.log(params.pi)
    delta = log_pi + logb[0]
    backptr = np.zeros((T, 2), dtype=np.int8)
    for t in range(1, T):
        scores = delta[:, None] + log_a  # scores[i, j]
        backptr[t] = np.argmax(scores, axis=0)  # argmax favors sleep on ties
        delta = scores[backptr[t], [0, 1]] + logb[t]
    path = np.empty(T, dtype=np.int8)
    path[-1] = np.argmax(delta)
    for t in range(T - 1, 0, -1):
        path[t - 1] = backptr[t, path[t]]
    return StateSequence(path, obs.epoch_seconds)


def _enumerate_paths(T: int) -> np.ndarray:
    """(2^T, T) matrix of all state paths in lexicographic order."""
    n = np.arange(2**T, dtype=np.int64)
    shifts = np.arange(T - 1, -1, -1)
    return ((n[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def _path_log_probs(obs: LogSeries, params: HmmParams) -> tuple[np.ndarray, np.ndarray]:
    T = len(obs)
    if T > _BRUTE_FORCE_MAX_T:
        raise InputError(
            f"brute-force oracle refuses T={T} > {_BRUTE_FORCE_MAX_T}"
        )
    logb = _log_b(obs, params)
    with np.errstate(divide="ignore"):
        log_a = np.log(params.a)
        log_pi = np.log(params.pi)
    paths = _enumerate_paths(T)
    # accumulate left to right in the dynamic program's operation order,
    # so coincidentally tied paths (e.g. two zero epochs swapping states)
    # tie bitwise here exactly when they tie inside Viterbi
    logp = log_pi[paths[:, 0]] + logb[0, paths[:, 0]]
    for t in range(1, T):
        logp = (logp + log_a[paths[:, t - 1], paths[:, t]]) + logb[t, paths[:, t]]
    return logp, paths


def brute_force_likelihood(obs: LogSeries, params: HmmParams) -> float:
    """log P(observations | params) by summing over all 2^T paths."""
    logp, _ = _path_log_probs(obs, params)
    return float(logsumexp(logp))


def brute_force_posteriors(obs: LogSeries, params: HmmParams) -> np.ndarray:
    """(T, 2) state posteriors by exhaustive enumeration."""
    logp, paths = _path_log_probs(obs, params)
    weights = np.exp(logp - logsumexp(logp))
    gamma = np.empty((paths.shape[1], 2))
    gamma[:, 1] = weights @ paths
    gamma[:, 0] = 1.0 - gamma[:, 1]
    return gamma


def path_log_probability(obs: LogSeries, params: HmmParams, states: StateSequence) -> float:
    """log P(states, observations | params) for one explicit path.

    Accumulated in the same left-to-right order as the Viterbi recursion,
    so a returned Viterbi path scores bitwise-identically here.
    """
    logb = _log_b(obs, params)
    with np.errstate(divide="ignore"):
        log_a = np.log(params.a)
        log_pi = np.log(params.pi)
    s = states.states
    logp = float(log_pi[s[0]] + logb[0, s[0]])
    for t in range(1, len(s)):
        logp = (logp + float(log_a[s[t - 1], s[t]])) + float(logb[t, s[t]])
    return logp


def brute_force_viterbi(obs: LogSeries, params: HmmParams) -> StateSequence:
    """Enumeration argmax path under the same sleep-leaning tie rule.

    Viterbi backpointer ties favor sleep from the final epoch backwards,
    which selects the maximizing path whose reversed state tuple is
    lexicographically smallest; the enumeration reproduces that rule.
    """
    logp, paths = _path_log_probs(obs, params)
    best = np.max(logp)
    tied = np.flatnonzero(logp == best)
    # reversed-lex order: compare final states first
    rev_keys = paths[tied][:, ::-1]
    order = np.lexsort(rev_keys.T[::-1])
    winner = paths[tied[order[0]]]
    return StateSequence(winner, obs.epoch_seconds)


_PARAM_KEYS = (
    "a11",
    "a12",
    "a21",
    "a22",
    "pi_sleep",
    "pi_wake",
    "alpha",
    "mu1",
    "sigma1",
    "mu2",
    "sigma2",
)


def write_params(params: HmmParams, path) -> None:
    """Serialize parameters as key=value lines with 17 significant digits."""
    values = {
        "a11": params.a[0, 0],
        "a12": params.a[0, 1],
        "a21": params.a[1, 0],
        "a22": params.a[1, 1],
        "pi_sleep": params.pi[0],
        "pi_wake": params.pi[1],
        "alpha": params.sleep.alpha,
        "mu1": params.sleep.mu1,
        "sigma1": params.sleep.sigma1,
        "mu2": params.wake.mu2,
        "sigma2": params.wake.sigma2,
    }
    with open(path, "w") as fh:
        for key in _PARAM_KEYS:
            fh.write(f"{key}={values[key]:.17g}\n")


def read_params(path) -> HmmParams:
    values: dict[str, float] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}: line {line_no}: expected key=value")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in _PARAM_KEYS:
                raise FormatError(f"{path}: line {line_no}: unknown key {key!r}")
            try:
                values[key] = float(raw)
            except ValueError:
                raise FormatError(
                    f"{path}: line {line_no}: bad value {raw!r}"
                ) from None
    missing = [k for k in _PARAM_KEYS if k not in values]
    if missing:
        raise FormatError(f"{path}: missing keys {missing}")
    return HmmParams(
        a=np.array(
            [
                [values["a11"], values["a12"]],
                [values["a21"], values["a22"]],
            ]
        ),
        sleep=SleepEmission(
            alpha=values["alpha"], mu1=values["mu1"], sigma1=values["sigma1"]
        ),
        wake=WakeEmission(mu2=values["mu2"], sigma2=values["sigma2"]),
        pi=np.array([values["pi_sleep"], values["pi_wake"]]),
    )


def score(obs: LogSeries, params: HmmParams) -> StateSequence:
    """Viterbi decode; convenience alias used by the pipeline."""
    return viterbi(obs, params)


__all__ = [
    "HmmParams",
    "FitReport",
    "forward_log_likelihood",
    "posterior_marginals",
    "baum_welch",
    "default_init",
    "viterbi",
    "brute_force_likelihood",
    "brute_force_posteriors",
    "brute_force_viterbi",
    "read_params",
    "write_params",
    "State",
]
