"""Slot-level Monte Carlo simulator of the D2D service process.

Each slot draws the true hypothesis, the noisy test statistic, the mode
decision, the Rayleigh fading (and, in underlay, the interference) of the
chosen link, and declares the slot ON when the fixed rate is below the
instantaneous Shannon capacity. Nothing here goes through the SNR thresholds
or closed-form CDFs of :mod:`link_model`, so the simulator is an independent
check on them.

Every path owns an RNG stream derived from ``(master_seed, path_index)``;
results do not depend on how paths are distributed over worker processes.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import Scenario
from .link_model import OVERLAY, UNDERLAY, RadioParams
from .mode_selection import Hypothesis, ModeSelectParams, decide_h1

# state codes: s1=(H0,ON) s2=(H0,OFF) s3=(H1,ON) s4=(H1,OFF)
S1, S2, S3, S4 = range(4)

# uniforms per slot: hypothesis, signal 1, signal 2, interference 1, interference 2
_N_UNIFORM = 5
_CHUNK = 4096
BOOTSTRAP_RESAMPLES = 200


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    radio: RadioParams
    mode_select: ModeSelectParams
    rate: float
    kind: str = OVERLAY
    with_noise: bool = False  # underlay only: SINR instead of SIR

    def __post_init__(self):
        if self.kind not in (OVERLAY, UNDERLAY):
            raise DomainError(f"unknown scenario kind {self.kind!r}")
        if not self.rate >= 0:
            raise DomainError("rate must be non-negative")


@dataclass(frozen=True)
class SlotOutcome:
    true_hyp: Hypothesis
    t_statistic: float
    decided_hyp: Hypothesis
    link_ratio: float
    on: bool
    service: float


@dataclass(frozen=True)
class SimEstimate:
    ec_hat: float
    stderr: float
    n_paths: int
    path_len: int
    seed: int
    scenario_kind: str
    theta: float


@dataclass
class SlotBatch:
    true_h1: np.ndarray
    t_statistic: np.ndarray
    decided_h1: np.ndarray
    link_ratio: np.ndarray
    on: np.ndarray

    @property
    def states(self) -> np.ndarray:
        return 2 * self.decided_h1.astype(np.int64) + (~self.on).astype(np.int64)


def _exp1(u):
    # inverse-CDF unit exponential
    return -np.log1p(-u)


def simulate_slots(cfg: SimConfig, uniforms: np.ndarray, normals: np.ndarray) -> SlotBatch:
    """Vectorised slot model on pre-drawn variates (``uniforms[..., 5]``, ``normals[...]``)."""
    sc, radio, ms = cfg.scenario, cfg.radio, cfg.mode_select
    u_hyp, u_s1, u_s2, u_i1, u_i2 = np.moveaxis(uniforms, -1, 0)

    true_h1 = u_hyp < ms.prior_h1
    t_stat = np.where(true_h1, ms.m_t, -ms.m_t) + ms.sigma_t * normals
    dec_h1 = decide_h1(t_stat, ms.eta, ms.m_t)

    if cfg.kind == OVERLAY:
        direct = radio.p_bar / sc.L_d * _exp1(u_s1) / radio.noise
        ul = radio.p_bar / sc.L_c1 * _exp1(u_s1) / radio.noise
        dl = radio.p_enb / sc.L_c2 * _exp1(u_s2) / radio.noise
    else:
        floor = radio.noise if cfg.with_noise else 0.0
        i_dr = radio.p_ut / sc.L_utdr * _exp1(u_i1) + floor
        i_enb = radio.p_ut / sc.L_utenb * _exp1(u_i2) + floor
        with np.errstate(divide="ignore"):
            direct = radio.p_bar / sc.L_d * _exp1(u_s1) / i_dr
            ul = radio.p_bar / sc.L_c1 * _exp1(u_s1) / i_enb
            dl = radio.p_enb / sc.L_c2 * _exp1(u_s2) / i_dr
    cellular = np.minimum(ul, dl)

    bw = radio.bandwidth
    cap = np.where(dec_h1, 0.5 * bw * np.log2(1.0 + cellular), bw * np.log2(1.0 + direct))
    on = (cfg.rate < cap) | (cfg.rate == 0)
    return SlotBatch(true_h1, t_stat, dec_h1, np.where(dec_h1, cellular, direct), on)


def _draw(rng: np.random.Generator, n: int):
    return rng.random((n, _N_UNIFORM)), rng.standard_normal(n)


def simulate_slot(cfg: SimConfig, rng: np.random.Generator) -> SlotOutcome:
    u, z = _draw(rng, 1)
    b = simulate_slots(cfg, u, z)
    on = bool(b.on[0])
    return SlotOutcome(
        true_hyp=Hypothesis(int(b.true_h1[0])),
        t_statistic=float(b.t_statistic[0]),
        decided_hyp=Hypothesis(int(b.decided_h1[0])),
        link_ratio=float(b.link_ratio[0]),
        on=on,
        service=cfg.rate * cfg.radio.slot_len if on else 0.0,
    )


def simulate_trace(cfg: SimConfig, n_slots: int, seed: int) -> SlotBatch:
    """One long sequence of consecutive slots from a single stream."""
    u, z = _draw(np.random.default_rng(seed), n_slots)
    return simulate_slots(cfg, u, z)


def path_rng(master_seed: int, path_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(path_index,))))


def _on_counts_range(cfg, start, stop, path_len, master_seed):
    counts = np.empty(stop - start, dtype=np.int64)
    for lo in range(start, stop, _CHUNK):
        hi = min(lo + _CHUNK, stop)
        u = np.empty((hi - lo, path_len, _N_UNIFORM))
        z = np.empty((hi - lo, path_len))
        for j, i in enumerate(range(lo, hi)):
            u[j], z[j] = _draw(path_rng(master_seed, i), path_len)
        counts[lo - start:hi - start] = simulate_slots(cfg, u, z).on.sum(axis=1)
    return counts


def simulate_on_counts(cfg: SimConfig, n_paths: int, path_len: int, master_seed: int,
                       workers: int = 1) -> np.ndarray:
    """Number of ON slots on each of ``n_paths`` independent paths."""
    if n_paths < 1 or path_len < 1:
        raise DomainError("n_paths and path_len must be >= 1")
    if workers <= 1:
        return _on_counts_range(cfg, 0, n_paths, path_len, master_seed)
    edges = np.linspace(0, n_paths, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_on_counts_range, [cfg] * workers, edges[:-1], edges[1:],
                         [path_len] * workers, [master_seed] * workers)
        return np.concatenate(list(parts))


def log_mean_exp(a: np.ndarray, weights: np.ndarray | None = None) -> float:
    """ln(mean(exp(a))) with the maximum factored out; optional frequency weights."""
    a = np.asarray(a, dtype=float)
    if weights is not None:
        keep = weights > 0
        a, weights = a[keep], np.asarray(weights, dtype=float)[keep]
    m = float(np.max(a))
    if weights is None:
        return m + math.log(float(np.mean(np.exp(a - m))))
    return m + math.log(float(np.sum(weights * np.exp(a - m)) / np.sum(weights)))


def ec_from_on_counts(counts: np.ndarray, theta: float, rate: float, slot_len: float,
                      path_len: int) -> float:
    """Empirical EC (bit/s) from per-path ON-slot counts."""
    if not theta > 0:
        raise DomainError("theta must be positive")
    hist = np.bincount(counts, minlength=path_len + 1)
    return _ec_from_hist(hist, theta, rate, slot_len, path_len)


def _ec_from_hist(hist, theta, rate, slot_len, path_len):
    k = np.arange(path_len + 1)
    lme = log_mean_exp(-theta * rate * slot_len * k, hist)
    return -lme / (theta * path_len * slot_len)


def bootstrap_stderr(counts: np.ndarray, theta: float, rate: float, slot_len: float, path_len: int,
                     seed: int, n_resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    """Nonparametric bootstrap over paths.

    Resampling paths with replacement is the same as drawing a multinomial
    histogram of ON counts, which is what is done here.
    """
    hist = np.bincount(counts, minlength=path_len + 1)
    freq = hist / hist.sum()
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31 - 1,)))
    reps = [_ec_from_hist(rng.multinomial(len(counts), freq), theta, rate, slot_len, path_len)
            for _ in range(n_resamples)]
    return float(np.std(reps, ddof=1))


def estimate_from_counts(counts, cfg: SimConfig, theta: float, path_len: int, seed: int) -> SimEstimate:
    tau = cfg.radio.slot_len
    return SimEstimate(
        ec_hat=ec_from_on_counts(counts, theta, cfg.rate, tau, path_len),
        stderr=bootstrap_stderr(counts, theta, cfg.rate, tau, path_len, seed),
        n_paths=len(counts),
        path_len=path_len,
        seed=seed,
        scenario_kind=cfg.kind,
        theta=theta,
    )


def simulate_paths(cfg: SimConfig, n_paths: int, path_len: int, theta: float, master_seed: int,
                   workers: int = 1) -> SimEstimate:
    """Monte Carlo effective capacity from the log-MGF of per-path service."""
    counts = simulate_on_counts(cfg, n_paths, path_len, master_seed, workers)
    return estimate_from_counts(counts, cfg, theta, path_len, master_seed)


def empirical_transition_matrix(states) -> np.ndarray:
    """Row-normalised transition counts between consecutive states (codes 0..3).

    Rows of states that are never left are NaN rather than zero.
    """
    s = np.asarray(states, dtype=np.int64)
    counts = np.zeros((4, 4))
    np.add.at(counts, (s[:-1], s[1:]), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(totals > 0, counts / totals, np.nan)


def empirical_error_rates(n_trials: int, mode_select: ModeSelectParams, seed: int) -> tuple[float, float]:
    """Sampled (P_e1, P_e2): wrong decisions among true-H0 and true-H1 trials."""
    rng = np.random.default_rng(seed)
    true_h1 = rng.random(n_trials) < mode_select.prior_h1
    m = mode_select.m_t
    t = np.where(true_h1, m, -m) + mode_select.sigma_t * rng.standard_normal(n_trials)
    dec_h1 = decide_h1(t, mode_select.eta, m)
    n1 = int(true_h1.sum())
    n0 = n_trials - n1
    p_e1 = float(np.sum(dec_h1 & ~true_h1)) / n0 if n0 else math.nan
    p_e2 = float(np.sum(~dec_h1 & true_h1)) / n1 if n1 else math.nan
    return p_e1, p_e2
