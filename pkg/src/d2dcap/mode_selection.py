"""Pathloss-based mode selection as a binary hypothesis test.

H0 is the direct mode (D_T -> D_R), H1 the cellular mode (D_T -> eNB -> D_R).
The test statistic is the difference of two noisy dB pathloss measurements,
T = L_d_hat - L_c1_hat, modelled as T | H0 ~ N(-m_T, sigma_T^2) and
T | H1 ~ N(+m_T, sigma_T^2) with sigma_T = sqrt(2) * sigma.

The log-likelihood ratio reduces to 2*m_T*T/sigma_T^2 compared with
ln(pi0/pi1). For m_T > 0 that is "decide H1 iff T > eta"; for m_T < 0 the
inequality flips. Both signs are handled everywhere below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy import special

from .errors import DegenerateModeSelection, DomainError

SQRT2 = math.sqrt(2.0)


class Hypothesis(IntEnum):
    H0 = 0  # direct
    H1 = 1  # cellular


def _check_priors(prior_h0, prior_h1):
    if not (0.0 < prior_h0 < 1.0 and 0.0 < prior_h1 < 1.0):
        raise DomainError(f"priors must lie in (0, 1), got ({prior_h0}, {prior_h1})")
    if abs(prior_h0 + prior_h1 - 1.0) > 1e-12:
        raise DomainError(f"priors must sum to 1, got {prior_h0 + prior_h1}")


def _check_m_t(m_t):
    if m_t == 0:
        raise DegenerateModeSelection("m_T = 0: mode selection collapses")


def q_function(x):
    """Standard normal tail probability Q(x) = P(N(0,1) > x)."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def q_inverse(p):
    """Inverse of :func:`q_function` on (0, 1)."""
    return -special.ndtri(p) if np.ndim(p) else -float(special.ndtri(p))


def threshold_eta(prior_h0: float, prior_h1: float, m_t: float, sigma_t: float) -> float:
    _check_priors(prior_h0, prior_h1)
    _check_m_t(m_t)
    if sigma_t < 0:
        raise DomainError("sigma_T must be non-negative")
    return math.log(prior_h0 / prior_h1) * sigma_t**2 / (2.0 * m_t)


def error_probabilities(m_t: float, sigma_t: float, eta: float) -> tuple[float, float]:
    """Return (P_e1, P_e2) = (P(decide H1 | H0), P(decide H0 | H1))."""
    _check_m_t(m_t)
    if sigma_t < 0:
        raise DomainError("sigma_T must be non-negative")
    if sigma_t == 0:
        return 0.0, 0.0
    if m_t > 0:
        # H1 region is T > eta
        return q_function((eta + m_t) / sigma_t), q_function((m_t - eta) / sigma_t)
    # H1 region is T < eta
    return q_function(-(eta + m_t) / sigma_t), q_function((eta - m_t) / sigma_t)


def kld(m_t: float, sigma_t: float) -> float:
    if not sigma_t > 0:
        raise DomainError("KLD diverges for sigma_T = 0")
    return m_t**2 / sigma_t**2


def decision_marginals(prior_h0, prior_h1, m_t, sigma_t, eta) -> tuple[float, float]:
    """Per-slot probabilities of deciding H0 and H1, mixed over the priors."""
    _check_priors(prior_h0, prior_h1)
    p_e1, p_e2 = error_probabilities(m_t, sigma_t, eta)
    p_h0 = (1.0 - p_e1) * prior_h0 + p_e2 * prior_h1
    return p_h0, 1.0 - p_h0


def decide_mode(t_statistic: float, eta: float, m_t: float) -> Hypothesis:
    """Threshold rule; a tie T == eta goes to H0."""
    if m_t > 0:
        return Hypothesis.H1 if t_statistic > eta else Hypothesis.H0
    if m_t < 0:
        return Hypothesis.H1 if t_statistic < eta else Hypothesis.H0
    raise DegenerateModeSelection("m_T = 0: mode selection collapses")


def decide_h1(t_statistic: np.ndarray, eta: float, m_t: float) -> np.ndarray:
    """Vectorised :func:`decide_mode`; True where H1 is chosen."""
    _check_m_t(m_t)
    t = np.asarray(t_statistic)
    return t > eta if m_t > 0 else t < eta


def sigma_t_for_error(p_e1: float, m_t: float) -> float:
    """Invert P_e1 = Q(|m_T|/sigma_T) (equal priors only) for sigma_T."""
    _check_m_t(m_t)
    if not 0.0 <= p_e1 < 0.5:
        raise DomainError(f"P_e1 must lie in [0, 0.5) to invert, got {p_e1}")
    if p_e1 == 0.0:
        return 0.0
    return abs(m_t) / q_inverse(p_e1)


@dataclass(frozen=True)
class ModeSelectDiagnostics:
    p_e1: float
    p_e2: float
    kld: float
    p_decide_h0: float
    p_decide_h1: float


@dataclass(frozen=True)
class ModeSelectParams:
    """Priors, measurement noise and the pathloss gap of one scenario.

    ``sigma`` is the per-measurement noise std in dB; the statistic's std is
    ``sigma_t = sqrt(2) * sigma``.
    """

    sigma: float
    m_t: float
    prior_h0: float = 0.5
    prior_h1: float = 0.5

    def __post_init__(self):
        _check_priors(self.prior_h0, self.prior_h1)
        _check_m_t(self.m_t)
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be finite and non-negative, got {self.sigma}")

    @classmethod
    def from_sigma_t(cls, sigma_t, m_t, prior_h0=0.5, prior_h1=0.5):
        return cls(sigma=sigma_t / SQRT2, m_t=m_t, prior_h0=prior_h0, prior_h1=prior_h1)

    @property
    def sigma_t(self) -> float:
        return SQRT2 * self.sigma

    @property
    def delta(self) -> float:
        return self.prior_h0 / self.prior_h1

    @property
    def eta(self) -> float:
        return threshold_eta(self.prior_h0, self.prior_h1, self.m_t, self.sigma_t)

    def diagnostics(self) -> ModeSelectDiagnostics:
        eta = self.eta
        p_e1, p_e2 = error_probabilities(self.m_t, self.sigma_t, eta)
        p_h0, p_h1 = decision_marginals(self.prior_h0, self.prior_h1, self.m_t, self.sigma_t, eta)
        k = kld(self.m_t, self.sigma_t) if self.sigma_t > 0 else math.inf
        return ModeSelectDiagnostics(p_e1, p_e2, k, p_h0, p_h1)
