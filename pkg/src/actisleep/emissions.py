"""Per-state emission distributions for log-transformed activity counts.

The sleep state mixes a point mass at exactly zero (probability ``alpha``)
with a Gaussian truncated to the non-negative half line; a zero
observation picks up both the point mass and the density value at zero.
The wake state is a plain Gaussian.  Both are evaluated in log space via
erfc-based normal tail functions, so extreme standardized values stay
finite.

Weighted maximum-likelihood updates for both states are provided for use
as the M-step of EM fitting.  The wake update is closed form; the sleep
update assigns exact zeros to the point mass and runs a bounded Newton
iteration for the truncated-Gaussian part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import log_ndtr

from .errors import DegenerateWeightError, InputError

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

# Clamps guarding against degenerate likelihood blow-ups.
ALPHA_MIN = 1e-6
ALPHA_MAX = 1.0 - 1e-6
SIGMA_FLOOR = 1e-3
MU1_BOUNDS = (-5.0, 10.0)
SIGMA1_BOUNDS = (SIGMA_FLOOR, 5.0)

_FIT_TOL = 1e-8
_FIT_MAX_ITER = 100


@dataclass(frozen=True)
class SleepEmission:
    """Zero-inflated truncated Gaussian for the sleep state."""

    alpha: float
    mu1: float
    sigma1: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.sigma1 >= SIGMA_FLOOR:
            raise InputError(f"sigma1 must be >= {SIGMA_FLOOR}, got {self.sigma1}")


@dataclass(frozen=True)
class WakeEmission:
    """Gaussian for the wake state."""

    mu2: float
    sigma2: float

    def __post_init__(self) -> None:
        if not self.sigma2 >= SIGMA_FLOOR:
            raise InputError(f"sigma2 must be >= {SIGMA_FLOOR}, got {self.sigma2}")


def _log_norm_pdf(z):
    return -0.5 * z * z - _LOG_SQRT_2PI


def _log_trunc_mass(mu: float, sigma: float) -> float:
    """log P(N(mu, sigma^2) > 0), the truncation normalizer."""
    return float(log_ndtr(mu / sigma))


def sleep_log_emission(obs, p: SleepEmission):
    """Log density of the sleep emission at ``obs`` (scalar or array).

    A bit-exact zero observation receives the point mass plus the
    truncated-Gaussian density value at zero; positive observations only
    the density.
    """
    o = np.asarray(obs, dtype=np.float64)
    if not np.all(np.isfinite(o)):
        raise InputError("observations must be finite")
    if np.any(o < 0):
        raise InputError("log-count observations must be non-negative")
    z = (o - p.mu1) / p.sigma1
    log_cont = (
        np.log1p(-p.alpha)
        + _log_norm_pdf(z)
        - np.log(p.sigma1)
        - _log_trunc_mass(p.mu1, p.sigma1)
    )
    out = np.where(o == 0.0, np.logaddexp(np.log(p.alpha), log_cont), log_cont)
    return float(out) if out.ndim == 0 else out


def wake_log_emission(obs, p: WakeEmission):
    """Log density of the wake Gaussian at ``obs`` (scalar or array)."""
    o = np.asarray(obs, dtype=np.float64)
    if not np.all(np.isfinite(o)):
        raise InputError("observations must be finite")
    z = (o - p.mu2) / p.sigma2
    out = _log_norm_pdf(z) - np.log(p.sigma2)
    return float(out) if out.ndim == 0 else out


def sleep_objective(obs, weights, p: SleepEmission) -> float:
    """Weighted sleep log-likelihood, the quantity fit_sleep_weighted maximizes."""
    return float(np.dot(np.asarray(weights, float), sleep_log_emission(obs, p)))


def _check_weights(obs, weights) -> tuple[np.ndarray, np.ndarray]:
    o = np.asarray(obs, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if o.shape != w.shape or o.ndim != 1:
        raise InputError("obs and weights must be 1-d sequences of equal length")
    if np.any(w < 0) or np.any(w > 1):
        raise InputError("weights must lie in [0, 1]")
    if not np.sum(w) > 0:
        raise DegenerateWeightError("all weights are zero")
    return o, w


def fit_wake_weighted(obs, weights) -> WakeEmission:
    """Closed-form weighted Gaussian MLE, with the sigma floor applied."""
    o, w = _check_weights(obs, weights)
    wsum = np.sum(w)
    mu = float(np.dot(w, o) / wsum)
    var = float(np.dot(w, (o - mu) ** 2) / wsum)
    sigma = max(np.sqrt(var), SIGMA_FLOOR)
    return WakeEmission(mu2=mu, sigma2=float(sigma))


def _trunc_loglik(mu: float, sigma: float, o, wt) -> float:
    """Weighted truncated-normal log-likelihood."""
    z = (o - mu) / sigma
    wsum = np.sum(wt)
    return float(
        np.dot(wt, _log_norm_pdf(z)) - wsum * (np.log(sigma) + log_ndtr(mu / sigma))
    )


def _trunc_grad_hess(mu: float, sigma: float, o, wt):
    """Gradient and Hessian of the weighted truncated-normal log-likelihood."""
    z = (o - mu) / sigma
    s = mu / sigma
    W = float(np.sum(wt))
    m1 = float(np.dot(wt, z))
    m2 = float(np.dot(wt, z * z))
    # hazard phi(s)/Phi(s) and its derivative, stable via the log domain
    h = float(np.exp(_log_norm_pdf(s) - log_ndtr(s)))
    hp = -s * h - h * h
    g_mu = m1 / sigma - W * h / sigma
    g_sigma = -W / sigma + m2 / sigma + W * h * mu / sigma**2
    h_mumu = -(W / sigma**2) * (1.0 + hp)
    h_musigma = -2.0 * m1 / sigma**2 + W * mu * hp / sigma**3 + W * h / sigma**2
    h_sigsig = (
        W / sigma**2
        - 3.0 * m2 / sigma**2
        - W * mu**2 * hp / sigma**4
        - 2.0 * W * mu * h / sigma**3
    )
    grad = np.array([g_mu, g_sigma])
    hess = np.array([[h_mumu, h_musigma], [h_musigma, h_sigsig]])
    return grad, hess


def _in_box(mu: float, sigma: float) -> bool:
    return MU1_BOUNDS[0] <= mu <= MU1_BOUNDS[1] and SIGMA1_BOUNDS[0] <= sigma <= SIGMA1_BOUNDS[1]


def _coordinate_search(o, wt, mu: float, sigma: float) -> tuple[float, float]:
    """Bounded per-coordinate maximization, the fallback when Newton leaves the box."""
    for _ in range(20):
        mu_prev, sigma_prev = mu, sigma
        res = minimize_scalar(
            lambda m: -_trunc_loglik(m, sigma, o, wt),
            bounds=MU1_BOUNDS,
            method="bounded",
        )
        if -res.fun >= _trunc_loglik(mu, sigma, o, wt):
            mu = float(res.x)
        res = minimize_scalar(
            lambda sg: -_trunc_loglik(mu, sg, o, wt),
            bounds=SIGMA1_BOUNDS,
            method="bounded",
        )
        if -res.fun >= _trunc_loglik(mu, sigma, o, wt):
            sigma = float(res.x)
        if max(abs(mu - mu_prev), abs(sigma - sigma_prev)) < _FIT_TOL:
            break
    return mu, sigma


def _fit_truncnorm_weighted(
    o, wt, mu0: float, sigma0: float, allow_fallback: bool = True
) -> tuple[float, float]:
    """Maximize the weighted truncated-normal log-likelihood from a warm start.

    Newton iteration on the gradient with step-halving keeps the search at
    the stationary point nearest the current parameters; if a Newton step
    cannot stay inside the parameter box (and the fallback is allowed) a
    bounded coordinate search takes over.  With the fallback disabled the
    search simply stops, which deliberately leaves data without an
    interior stationary point (e.g. all weight at zero) where it stands.
    """
    if not np.sum(wt) > 0:
        return mu0, sigma0
    wmean = float(np.dot(wt, o) / np.sum(wt))
    if not np.dot(wt, (o - wmean) ** 2) > 0:
        # a single repeated value: the likelihood grows without bound as
        # sigma shrinks, so pin it at the floor instead of collapsing
        return float(np.clip(wmean, *MU1_BOUNDS)), SIGMA_FLOOR
    mu = float(np.clip(mu0, *MU1_BOUNDS))
    sigma = float(np.clip(sigma0, *SIGMA1_BOUNDS))
    ll = _trunc_loglik(mu, sigma, o, wt)
    for _ in range(_FIT_MAX_ITER):
        grad, hess = _trunc_grad_hess(mu, sigma, o, wt)
        try:
            # require a negative-definite Hessian: an indefinite one can
            # yield a locally-ascending saddle direction that marches to
            # the mu boundary instead of the interior maximum
            np.linalg.cholesky(-hess)
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)) or np.dot(step, grad) <= 0:
            if allow_fallback:
                return _coordinate_search(o, wt, mu, sigma)
            break
        scale = 1.0
        accepted = False
        for _ in range(40):
            mu_try = mu + scale * step[0]
            sigma_try = sigma + scale * step[1]
            if _in_box(mu_try, sigma_try):
                ll_try = _trunc_loglik(mu_try, sigma_try, o, wt)
                if ll_try >= ll:
                    mu, sigma, ll = mu_try, sigma_try, ll_try
                    accepted = True
                    break
            scale *= 0.5
        if not accepted:
            if allow_fallback:
                return _coordinate_search(o, wt, mu, sigma)
            break
        if max(abs(scale * step[0]), abs(scale * step[1])) < _FIT_TOL:
            break
    return mu, sigma


def fit_sleep_weighted(obs, weights, init: SleepEmission) -> SleepEmission:
    """Weighted MLE of the zero-inflated truncated Gaussian.

    The continuous component is a density, so under the model an exact
    zero comes from the point mass with probability one; the M-step
    responsibilities are therefore deterministic.  alpha becomes the
    weighted zero fraction, and (mu1, sigma1) maximize the weighted
    truncated-Gaussian log-likelihood of the positive observations via
    warm-started Newton steps with a bounded coordinate-search fallback.

    Splitting the zero weight in proportion to the density value at zero
    instead would let the point mass and a density value compete on
    unequal terms: on discretized counts that inner EM drifts to a
    boundary solution (mu1 far negative, the truncated Gaussian piling
    density just above zero) whose mixed-measure likelihood exceeds the
    generating parameters', so the hard assignment is what keeps the
    continuous part anchored to actual movement data.  The returned
    parameters never score worse than ``init`` on the weighted
    log-likelihood.
    """
    o, w = _check_weights(obs, weights)
    zero = o == 0.0
    wsum = float(np.sum(w))

    alpha = float(np.clip(np.sum(w[zero]) / wsum, ALPHA_MIN, ALPHA_MAX))
    pos_w = np.where(zero, 0.0, w)
    mu, sigma = _fit_truncnorm_weighted(o, pos_w, init.mu1, init.sigma1)

    fitted = SleepEmission(alpha=alpha, mu1=mu, sigma1=sigma)
    if sleep_objective(o, w, fitted) < sleep_objective(o, w, init):
        return init
    return fitted
