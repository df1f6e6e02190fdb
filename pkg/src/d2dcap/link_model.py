"""SNR / SIR statistics of the direct and two-hop cellular D2D links.

All channels are Rayleigh block-fading, so received powers are exponential.
The overlay case is noise-limited; the underlay case is treated as
interference-limited (noise neglected), with U_T interfering at D_R and at
the eNB.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .geometry import Scenario

OVERLAY = "overlay"
UNDERLAY = "underlay"
SCENARIO_KINDS = (OVERLAY, UNDERLAY)

THERMAL_DBM_PER_HZ = -174.0


def thermal_noise_watts(bandwidth: float) -> float:
    """kT noise power over ``bandwidth`` Hz, from -174 dBm/Hz."""
    dbm = THERMAL_DBM_PER_HZ + 10.0 * math.log10(bandwidth)
    return 10.0 ** (dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class RadioParams:
    """Transmit powers (W), receiver noise power N0 (W over B), B (Hz), tau (s).

    ``n0=None`` resolves to thermal noise over the configured bandwidth.
    """

    # -42 dBm: low enough that the shipped scenario's EC-optimal rate sits
    # inside the 1..200 bit/s grid at B = 10 kHz
    p_bar: float = 6e-8
    p_enb: float = 10.0
    p_ut: float = 0.2
    n0: float | None = None
    bandwidth: float = 10e3
    slot_len: float = 0.1
    noise: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("p_bar", "p_enb", "p_ut", "bandwidth", "slot_len"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v}")
        n0 = thermal_noise_watts(self.bandwidth) if self.n0 is None else self.n0
        if not n0 > 0:
            raise DomainError(f"n0 must be positive, got {n0}")
        object.__setattr__(self, "noise", float(n0))


@dataclass(frozen=True)
class OnProbs:
    p_on_direct: float
    p_on_cellular: float
    scenario_kind: str = OVERLAY


def snr_threshold(rate, bandwidth, mode="direct", paper_literal=False):
    """SNR needed for a fixed rate (bit/s) to fit under the link capacity.

    The cellular link pays a 1/2 pre-log for its two hops, so by default its
    threshold is 2**(2r/B) - 1. ``paper_literal`` reuses 2**(r/B) - 1 instead.
    """
    if np.any(np.asarray(rate) < 0):
        raise DomainError("rate must be non-negative")
    if mode == "direct" or paper_literal:
        factor = 1.0
    elif mode == "cellular":
        factor = 2.0
    else:
        raise DomainError(f"unknown link mode {mode!r}")
    exponent = factor * np.asarray(rate, dtype=float) / bandwidth * math.log(2.0)
    with np.errstate(over="ignore"):
        # rates far beyond capacity saturate to an unreachable (infinite) threshold
        out = np.expm1(exponent)
    return out if np.ndim(rate) else float(out)


def mean_snr_direct(params: RadioParams, L_d: float) -> float:
    return params.p_bar / (L_d * params.noise)


def mean_snr_uplink(params: RadioParams, L_c1: float) -> float:
    return params.p_bar / (L_c1 * params.noise)


def mean_snr_downlink(params: RadioParams, L_c2: float) -> float:
    return params.p_enb / (L_c2 * params.noise)


def mean_snr_cellular(params: RadioParams, L_c1: float, L_c2: float) -> float:
    """Mean of min(gamma_ul, gamma_dl): exponential with the harmonic-type mean."""
    ul = mean_snr_uplink(params, L_c1)
    dl = mean_snr_downlink(params, L_c2)
    if math.isinf(dl):
        return ul
    return ul * dl / (ul + dl)


def on_probs_overlay(mean_snr_d, mean_snr_c, gamma_req_d, gamma_req_c) -> OnProbs:
    if not (mean_snr_d > 0 and mean_snr_c > 0):
        raise DomainError("mean SNRs must be positive")
    return OnProbs(
        p_on_direct=math.exp(-gamma_req_d / mean_snr_d),
        p_on_cellular=math.exp(-gamma_req_c / mean_snr_c),
        scenario_kind=OVERLAY,
    )


def _ratio_cdf(z, signal_rate, interference_rate):
    # P(S/I < z) for S ~ Exp(rate a), I ~ Exp(rate b): a / (a + b/z)
    if z <= 0:
        return 0.0
    if math.isinf(z):
        return 1.0
    if math.isinf(interference_rate):
        return 0.0
    return signal_rate / (signal_rate + interference_rate / z)


def sir_cdf_direct_underlay(z, alpha, beta) -> float:
    """CDF of the direct-link SIR.

    ``alpha = L_d / P_bar`` and ``beta = L_utdr / P_ut`` are the exponential
    rates of the received signal and interference powers.
    """
    return _ratio_cdf(z, alpha, beta)


def sir_cdf_cellular_underlay(z, xi, zeta, nu, beta) -> float:
    """CDF of min(uplink SIR, downlink SIR), hops independent.

    Rates: ``xi = L_c1/P_bar`` (uplink signal), ``zeta = L_utenb/P_ut``
    (interference at the eNB), ``nu = L_c2/P_eNB`` (downlink signal),
    ``beta = L_utdr/P_ut`` (interference at D_R).
    """
    f_ul = _ratio_cdf(z, xi, zeta)
    f_dl = _ratio_cdf(z, nu, beta)
    return f_ul + f_dl - f_ul * f_dl


def underlay_rates(scenario: Scenario, params: RadioParams) -> dict[str, float]:
    """Exponential rates (1/mean power) of every received signal and interferer."""
    return {
        "alpha": scenario.L_d / params.p_bar,
        "beta": scenario.L_utdr / params.p_ut,
        "xi": scenario.L_c1 / params.p_bar,
        "zeta": scenario.L_utenb / params.p_ut,
        "nu": scenario.L_c2 / params.p_enb,
    }


def on_probs_underlay(scenario: Scenario, params: RadioParams, gamma_req_d, gamma_req_c) -> OnProbs:
    k = underlay_rates(scenario, params)
    return OnProbs(
        p_on_direct=1.0 - sir_cdf_direct_underlay(gamma_req_d, k["alpha"], k["beta"]),
        p_on_cellular=1.0 - sir_cdf_cellular_underlay(gamma_req_c, k["xi"], k["zeta"], k["nu"], k["beta"]),
        scenario_kind=UNDERLAY,
    )


def on_probs(scenario: Scenario, params: RadioParams, rate: float, kind: str = OVERLAY,
             paper_literal: bool = False) -> OnProbs:
    """ON probabilities of both links at a fixed rate for either scenario kind."""
    g_d = snr_threshold(rate, params.bandwidth, "direct")
    g_c = snr_threshold(rate, params.bandwidth, "cellular", paper_literal)
    if kind == OVERLAY:
        return on_probs_overlay(
            mean_snr_direct(params, scenario.L_d),
            mean_snr_cellular(params, scenario.L_c1, scenario.L_c2),
            g_d,
            g_c,
        )
    if kind == UNDERLAY:
        return on_probs_underlay(scenario, params, g_d, g_c)
    raise DomainError(f"unknown scenario kind {kind!r}")
