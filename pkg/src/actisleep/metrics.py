"""Epoch-level agreement statistics and derived sleep variables.

Agreement is computed epoch by epoch against reference labels with sleep
as the positive class: accuracy, sensitivity for sleep, specificity for
sleep (correct wake), and predictive values for sleep and wake.  Any 0/0
rate is reported as None (undefined), never silently zero.

Derived sleep variables cover one analysis window from lights-out
(inclusive) to lights-on (exclusive): total sleep time, sleep latency
(lights-out to first sleep epoch), WASO (wake at or after the first
sleep epoch), and sleep efficiency as a percentage of the window.
Pearson correlation and the paired t-test support across-subject
comparisons of those variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import InputError, UndefinedStatisticError
from .series import State, StateSequence, StudyWindow


@dataclass(frozen=True)
class Confusion:
    """2x2 epoch counts with the reference as truth and sleep positive."""

    tp_sleep: int
    fn_sleep: int
    fp_sleep: int
    tn_sleep: int

    @property
    def total(self) -> int:
        return self.tp_sleep + self.fn_sleep + self.fp_sleep + self.tn_sleep


@dataclass(frozen=True)
class EpochMetrics:
    """Agreement rates; None marks an undefined (0/0) rate."""

    accuracy: float
    sensitivity_sleep: float | None
    specificity_sleep: float | None
    ppv_sleep: float | None
    ppv_wake: float | None
    confusion: Confusion


@dataclass(frozen=True)
class SleepVariables:
    """Derived sleep variables for one analysis window, in minutes/percent."""

    total_epochs_min: float
    total_sleep_time_min: float
    sleep_latency_min: float
    waso_min: float
    sleep_efficiency_pct: float


def confusion(pred: StateSequence, truth: StateSequence) -> Confusion:
    if len(pred) != len(truth):
        raise InputError(
            f"label length mismatch: predicted {len(pred)}, reference {len(truth)}"
        )
    p = pred.states == State.SLEEP
    t = truth.states == State.SLEEP
    return Confusion(
        tp_sleep=int(np.sum(p & t)),
        fn_sleep=int(np.sum(~p & t)),
        fp_sleep=int(np.sum(p & ~t)),
        tn_sleep=int(np.sum(~p & ~t)),
    )


def _rate(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def epoch_metrics(c: Confusion) -> EpochMetrics:
    if c.total == 0:
        raise InputError("empty confusion table")
    return EpochMetrics(
        accuracy=(c.tp_sleep + c.tn_sleep) / c.total,
        sensitivity_sleep=_rate(c.tp_sleep, c.tp_sleep + c.fn_sleep),
        specificity_sleep=_rate(c.tn_sleep, c.tn_sleep + c.fp_sleep),
        ppv_sleep=_rate(c.tp_sleep, c.tp_sleep + c.fp_sleep),
        ppv_wake=_rate(c.tn_sleep, c.tn_sleep + c.fn_sleep),
        confusion=c,
    )


def sleep_variables(pred: StateSequence, window: StudyWindow) -> SleepVariables:
    """Sleep variables over [lights_out, lights_on).

    With no sleep epoch in the window, latency spans the whole window,
    WASO is zero, and efficiency is zero.
    """
    if window.lights_on > len(pred):
        raise InputError("window exceeds sequence length")
    minutes_per_epoch = pred.epoch_seconds / 60.0
    segment = pred.states[window.lights_out : window.lights_on]
    n_window = segment.size
    sleep_mask = segment == State.SLEEP
    n_sleep = int(np.sum(sleep_mask))
    total_min = n_window * minutes_per_epoch
    tst_min = n_sleep * minutes_per_epoch
    if n_sleep == 0:
        latency_min = total_min
        waso_min = 0.0
        efficiency = 0.0
    else:
        first_sleep = int(np.flatnonzero(sleep_mask)[0])
        latency_min = first_sleep * minutes_per_epoch
        waso_min = int(np.sum(~sleep_mask[first_sleep:])) * minutes_per_epoch
        efficiency = 100.0 * tst_min / total_min
    return SleepVariables(
        total_epochs_min=total_min,
        total_sleep_time_min=tst_min,
        sleep_latency_min=latency_min,
        waso_min=waso_min,
        sleep_efficiency_pct=efficiency,
    )


def pearson_r(x, y) -> float:
    """Sample Pearson correlation; both sequences need positive variance."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1 or xa.size < 2:
        raise InputError("need two equal-length sequences of length >= 2")
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    sx = np.sqrt(np.dot(xc, xc))
    sy = np.sqrt(np.dot(yc, yc))
    if sx == 0 or sy == 0:
        raise UndefinedStatisticError("correlation undefined for zero variance")
    return float(np.clip(np.dot(xc, yc) / (sx * sy), -1.0, 1.0))


def paired_t(x, y) -> tuple[float, int, float]:
    """Paired t-test: (t statistic, degrees of freedom, two-sided p).

    The p-value comes from the Student-t distribution via the
    regularized incomplete beta function.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1 or xa.size < 2:
        raise InputError("need two equal-length sequences of length >= 2")
    d = xa - ya
    n = d.size
    sd = float(np.std(d, ddof=1))
    if sd == 0:
        raise UndefinedStatisticError("paired t undefined: zero-variance differences")
    t = float(d.mean() / (sd / np.sqrt(n)))
    df = n - 1
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return t, df, p
