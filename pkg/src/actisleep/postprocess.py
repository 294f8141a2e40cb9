"""Run-length smoothing of a decoded sleep/wake sequence.

Same-state runs shorter than a duration threshold (15 minutes by
default) are iteratively absorbed into their neighbors so that only
stable bouts survive.  The shortest offending run goes first (earliest
on ties); an interior run takes the state of the longer adjacent run
(the preceding run's state on ties), a boundary run takes its single
neighbor's state.  Absorbing an interior run merges it with both
neighbors, so the run list shrinks until every run meets the threshold
or a single run remains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .series import StateSequence


@dataclass(frozen=True)
class RunLength:
    """One maximal same-state run."""

    state: int
    start: int
    length: int


def runs_of(states: np.ndarray) -> list[RunLength]:
    """Partition a label array into maximal same-state runs."""
    out: list[RunLength] = []
    start = 0
    for i in range(1, len(states) + 1):
        if i == len(states) or states[i] != states[start]:
            out.append(RunLength(int(states[start]), start, i - start))
            start = i
    return out


def smooth(states: StateSequence, min_minutes: float = 15.0) -> StateSequence:
    """Absorb same-state runs shorter than ``min_minutes``.

    Runs lasting at least ``min_minutes`` survive; strictly shorter runs
    are relabeled and merged until none remain (or the whole sequence is
    one run).  The output has the same length as the input and the
    operation is idempotent.
    """
    if min_minutes < 0:
        raise InputError("min_minutes must be non-negative")
    min_epochs = min_minutes * 60.0 / states.epoch_seconds
    run_list = runs_of(states.states)
    while len(run_list) > 1:
        short = [r for r in run_list if r.length < min_epochs]
        if not short:
            break
        victim = min(short, key=lambda r: (r.length, r.start))
        i = run_list.index(victim)
        if i == 0:
            new_state = run_list[1].state
        elif i == len(run_list) - 1:
            new_state = run_list[i - 1].state
        else:
            prev_run, next_run = run_list[i - 1], run_list[i + 1]
            new_state = (
                prev_run.state if prev_run.length >= next_run.length else next_run.state
            )
        merged = RunLength(new_state, victim.start, victim.length)
        run_list[i] = merged
        # merge with equal-state neighbors
        j = i
        while j > 0 and run_list[j - 1].state == run_list[j].state:
            left = run_list[j - 1]
            run_list[j - 1 : j + 1] = [
                RunLength(left.state, left.start, left.length + run_list[j].length)
            ]
            j -= 1
        while j < len(run_list) - 1 and run_list[j + 1].state == run_list[j].state:
            cur = run_list[j]
            run_list[j : j + 2] = [
                RunLength(cur.state, cur.start, cur.length + run_list[j + 1].length)
            ]
    out = np.empty(len(states), dtype=np.int8)
    for run in run_list:
        out[run.start : run.start + run.length] = run.state
    return StateSequence(out, states.epoch_seconds)
