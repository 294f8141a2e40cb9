"""Unsupervised sleep/wake scoring of actigraphy epoch counts.

A two-state hidden Markov model with a zero-inflated truncated Gaussian
sleep emission and a Gaussian wake emission is fitted per recording by
Baum-Welch and decoded by Viterbi; short state runs are smoothed away.
An Actiwatch-style threshold scorer is included as a comparator, along
with epoch-level agreement metrics, derived sleep variables, and a
seeded simulator for validation.
"""

from .actiwatch import AsConfig, AsResult, as_score, find_sleep_end, find_sleep_start, rescore
from .emissions import (
    SleepEmission,
    WakeEmission,
    fit_sleep_weighted,
    fit_wake_weighted,
    sleep_log_emission,
    wake_log_emission,
)
from .hmm import (
    FitReport,
    HmmParams,
    baum_welch,
    brute_force_likelihood,
    brute_force_posteriors,
    brute_force_viterbi,
    default_init,
    forward_log_likelihood,
    posterior_marginals,
    read_params,
    viterbi,
    write_params,
)
from .metrics import (
    Confusion,
    EpochMetrics,
    SleepVariables,
    confusion,
    epoch_metrics,
    paired_t,
    pearson_r,
    sleep_variables,
)
from .postprocess import RunLength, runs_of, smooth
from .series import (
    EpochSeries,
    LogSeries,
    State,
    StateSequence,
    StudyWindow,
    log_transform,
    read_epoch_csv,
    read_label_csv,
    read_window_file,
    write_epoch_csv,
    write_label_csv,
)
from .simulate import SimSpec, reference_params, simulate, simulate_from_states
from .verify import VerifyReport, run_verification

__version__ = "0.1.0"
