"""Effective capacity of the four-state Markov ON/OFF D2D service process.

States: s1 = (H0, ON), s2 = (H0, OFF), s3 = (H1, ON), s4 = (H1, OFF). Mode
decisions and fading are redrawn independently every slot, so every row of
the transition matrix equals (p1, p2, p3, p4) and the matrix has rank one.
A slot in an ON state delivers r*tau bits, an OFF slot delivers nothing.

``theta`` is the QoS exponent per bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import link_model
from .errors import DomainError
from .geometry import Scenario
from .link_model import OVERLAY, OnProbs, RadioParams
from .mode_selection import ModeSelectParams


@dataclass(frozen=True)
class TransitionProbs:
    p1: float
    p2: float
    p3: float
    p4: float

    @property
    def p_on(self) -> float:
        return self.p1 + self.p3

    @property
    def p_off(self) -> float:
        return self.p2 + self.p4

    @property
    def p_h0(self) -> float:
        return self.p1 + self.p2

    @property
    def p_h1(self) -> float:
        return self.p3 + self.p4

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3, self.p4])


@dataclass(frozen=True)
class QosParams:
    theta: float
    rate: float
    slot_len: float = 0.1

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")
        if not self.rate >= 0:
            raise DomainError(f"rate must be non-negative, got {self.rate}")
        if not self.slot_len > 0:
            raise DomainError(f"slot_len must be positive, got {self.slot_len}")


@dataclass(frozen=True)
class EcResult:
    ec: float
    p_on: float
    probs: TransitionProbs
    qos: QosParams
    scenario_kind: str = OVERLAY


def _split(total: float, part: float) -> tuple[float, float]:
    """(part, total - part) adjusted so the two floats sum to ``total`` exactly.

    The larger piece is rounded and the smaller one recovered from it, which
    is exact because the subtraction then has no rounding error.
    """
    if part <= 0.5 * total:
        big = total - part
        return total - big, big
    return part, total - part


def transition_probs(p_decide_h0: float, p_decide_h1: float, on: OnProbs) -> TransitionProbs:
    p1, p2 = _split(p_decide_h0, p_decide_h0 * on.p_on_direct)
    p3, p4 = _split(p_decide_h1, p_decide_h1 * on.p_on_cellular)
    return TransitionProbs(p1, p2, p3, p4)


def transition_matrix(probs: TransitionProbs) -> np.ndarray:
    return np.tile(probs.as_array(), (4, 1))


def service_mgf_matrix(theta: float, rate: float, slot_len: float) -> np.ndarray:
    """diag(E[exp(-theta*s)]) over the four states: exp(-theta*r*tau) when ON, 1 when OFF."""
    on = math.exp(-theta * rate * slot_len)
    return np.diag([on, 1.0, on, 1.0])


def log_mgf(p_on: float, p_off: float, x: float) -> float:
    """ln(p_on * exp(-x) + p_off) for x = theta*r*tau >= 0, accurate in every regime."""
    y = p_on * math.expm1(-x)
    if y > -0.5:
        # sum close to one: stay in log1p to keep small-theta digits
        return math.log1p(y)
    # sum of two positive terms, combined in the log domain (no underflow at large x)
    a = math.log(p_on) - x if p_on > 0 else -math.inf
    b = math.log(p_off) if p_off > 0 else -math.inf
    return float(np.logaddexp(a, b))


def effective_capacity(probs: TransitionProbs, qos: QosParams, scenario_kind: str = OVERLAY) -> EcResult:
    x = qos.theta * qos.rate * qos.slot_len
    ec = -log_mgf(probs.p_on, probs.p_off, x) / (qos.theta * qos.slot_len)
    # rounding can push ec a hair outside [0, p_on * r]
    ec = min(max(ec, 0.0), probs.p_on * qos.rate)
    return EcResult(ec=ec, p_on=probs.p_on, probs=probs, qos=qos, scenario_kind=scenario_kind)


def ec_theta_limits(probs: TransitionProbs, rate: float, slot_len: float) -> tuple[float, float]:
    """(theta -> 0, theta -> inf) limits of the effective capacity in bit/s."""
    at_zero = probs.p_on * rate
    at_inf = 0.0 if probs.p_off > 0 else float(rate)
    return at_zero, at_inf


def ec_large_theta(probs: TransitionProbs, theta: float, slot_len: float) -> float:
    """Leading large-theta behaviour, -ln(p2 + p4) / (theta * tau)."""
    return -math.log(probs.p_off) / (theta * slot_len)


def power_iteration(a: np.ndarray, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Dominant eigenvalue magnitude of a non-negative square matrix."""
    a = np.asarray(a, dtype=float)
    x = np.ones(a.shape[0]) / math.sqrt(a.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        y = a @ x
        lam_new = float(np.linalg.norm(y))
        if lam_new == 0.0:
            return 0.0
        x = y / lam_new
        if abs(lam_new - lam) <= tol * lam_new:
            return lam_new
        lam = lam_new
    raise RuntimeError(f"power iteration did not converge in {max_iter} iterations")


def spectral_radius_oracle(probs: TransitionProbs, qos: QosParams) -> float:
    """Effective capacity (bit/s) from the spectral radius of the explicit 4x4 matrix."""
    m = service_mgf_matrix(qos.theta, qos.rate, qos.slot_len) @ transition_matrix(probs)
    sp = power_iteration(m)
    return -math.log(sp) / (qos.theta * qos.slot_len)


def analyze(scenario: Scenario, radio: RadioParams, mode_select: ModeSelectParams, theta: float,
            rate: float, kind: str = OVERLAY, paper_literal: bool = False) -> EcResult:
    """Closed-form effective capacity for one operating point."""
    diag = mode_select.diagnostics()
    on = link_model.on_probs(scenario, radio, rate, kind, paper_literal)
    probs = transition_probs(diag.p_decide_h0, diag.p_decide_h1, on)
    return effective_capacity(probs, QosParams(theta, rate, radio.slot_len), kind)


def rate_grid(r_min: float, r_max: float, r_step: float) -> np.ndarray:
    if not (0 <= r_min < r_max) or not r_step > 0:
        raise DomainError(f"empty rate grid ({r_min}, {r_max}, {r_step})")
    n = int(math.floor((r_max - r_min) / r_step + 1e-9)) + 1
    return r_min + r_step * np.arange(n)


def optimal_rate_search(scenario, radio, mode_select, theta, r_min=1.0, r_max=200.0, r_step=1.0,
                        kind=OVERLAY, paper_literal=False):
    """Exhaustive grid search for the EC-maximising fixed rate.

    Returns ``(r_star, ec_star, curve)`` with ``curve`` a list of (r, EC)
    pairs. Ties go to the smallest rate.
    """
    grid = rate_grid(r_min, r_max, r_step)
    curve = [(float(r), analyze(scenario, radio, mode_select, theta, float(r), kind, paper_literal).ec)
             for r in grid]
    i_best = int(np.argmax([ec for _, ec in curve]))  # first occurrence
    return curve[i_best][0], curve[i_best][1], curve
