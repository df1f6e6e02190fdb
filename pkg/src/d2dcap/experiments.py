"""Experiment configuration, parameter sweeps and table output.

Config files are flat ``key = value`` lines with dotted section prefixes
(``radio.p_bar = 6e-8``); ``#`` starts a comment. Every key has a default,
so an empty file is a valid configuration.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .effective_capacity import analyze, optimal_rate_search, rate_grid
from .errors import ConfigError, DomainError
from .geometry import NodePosition, Positions, Scenario, build_scenario, random_positions
from .link_model import SCENARIO_KINDS, RadioParams
from .mode_selection import ModeSelectParams, sigma_t_for_error
from .monte_carlo import SimConfig, estimate_from_counts, simulate_on_counts

SWEEP_VARIABLES = ("sigma_t", "theta", "rate", "p_e1")

CSV_COLUMNS = (
    "sweep_var", "sweep_value", "scenario_kind", "ec_analytic", "ec_mc", "ec_mc_stderr",
    "p1", "p2", "p3", "p4", "p_e1", "p_e2", "kld", "r_star", "seed",
)

# The shipped scenario: direct link much shorter than the uplink, U_T on the far side of the cell.
DEFAULT_POSITIONS = {
    "placement.enb": (0.0, 0.0),
    "placement.dt": (-450.0, 0.0),
    "placement.dr": (-300.0, -60.0),
    "placement.ut": (600.0, 200.0),
}

DEFAULTS = {
    "seed": 12345,
    "scenario.kind": "overlay",
    "scenario.paper_literal_threshold": False,
    "cell.radius": 700.0,
    "placement.mode": "explicit",
    "placement.seed": 1,
    **DEFAULT_POSITIONS,
    "radio.bandwidth": 10e3,
    "radio.slot_len": 0.1,
    "radio.p_bar": RadioParams.p_bar,
    "radio.p_enb": RadioParams.p_enb,
    "radio.p_ut": RadioParams.p_ut,
    "radio.n0": "thermal",
    "mode.prior_h0": 0.5,
    "mode.prior_h1": 0.5,
    "mode.sigma_t": 1.0,
    "qos.theta": (1e-3,),
    "qos.rate": 25.0,
    "sweep.variable": "sigma_t",
    "sweep.from": 0.1,
    "sweep.to": 15.0,
    "sweep.steps": 30,
    "sweep.scale": "linear",
    "rate_grid.min": 1.0,
    "rate_grid.max": 200.0,
    "rate_grid.step": 1.0,
    "optrate.enabled": False,
    "mc.enabled": False,
    "mc.n_paths": 100_000,
    "mc.path_len": 50,
    "mc.with_noise": False,
    "run.workers": 1,
}


def _parse_bool(key, text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}", key)


def _parse_float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", key) from None


def _parse_int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", key) from None


def _parse_value(key, text):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        return _parse_bool(key, text)
    if isinstance(default, int):
        return _parse_int(key, text)
    if isinstance(default, float):
        return _parse_float(key, text)
    if isinstance(default, tuple):
        items = [t for t in (s.strip() for s in text.split(",")) if t]
        vals = tuple(_parse_float(key, t) for t in items)
        if key.startswith("placement.") and len(vals) != 2:
            raise ConfigError("expected 'x, y'", key)
        if not vals:
            raise ConfigError("expected at least one value", key)
        return vals
    if key == "radio.n0":
        return "thermal" if text.strip().lower() == "thermal" else _parse_float(key, text)
    return text.strip()


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError("unknown key", key)
        values[key] = _parse_value(key, val)
    return values


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def from_overrides(cls, overrides: dict | None = None) -> "ExperimentConfig":
        merged = dict(DEFAULTS)
        for k, v in (overrides or {}).items():
            if k not in DEFAULTS:
                raise ConfigError("unknown key", k)
            merged[k] = tuple(v) if isinstance(DEFAULTS[k], tuple) else v
        cfg = cls(merged)
        cfg.validate()
        return cfg

    def replace(self, **overrides) -> "ExperimentConfig":
        """Copy with overrides; keyword names use ``__`` for dots (``radio__p_bar``)."""
        new = dict(self.values)
        new.update({k.replace("__", "."): v for k, v in overrides.items()})
        return ExperimentConfig.from_overrides(new)

    def validate(self):
        v = self.values
        if v["scenario.kind"] not in SCENARIO_KINDS:
            raise ConfigError(f"must be one of {SCENARIO_KINDS}", "scenario.kind")
        for key in ("cell.radius", "radio.bandwidth", "radio.slot_len", "radio.p_bar", "radio.p_enb",
                    "radio.p_ut", "rate_grid.step"):
            if not (v[key] > 0 and math.isfinite(v[key])):
                raise ConfigError("must be positive and finite", key)
        if v["radio.n0"] != "thermal" and not v["radio.n0"] > 0:
            raise ConfigError("must be positive or 'thermal'", "radio.n0")
        for key in ("mode.prior_h0", "mode.prior_h1"):
            if not 0 < v[key] < 1:
                raise ConfigError("prior must lie in (0, 1)", key)
        if abs(v["mode.prior_h0"] + v["mode.prior_h1"] - 1.0) > 1e-12:
            raise ConfigError("priors must sum to 1", "mode.prior_h1")
        if not v["mode.sigma_t"] >= 0:
            raise ConfigError("must be non-negative", "mode.sigma_t")
        if any(not t > 0 for t in v["qos.theta"]):
            raise ConfigError("QoS exponents must be positive", "qos.theta")
        if not v["qos.rate"] >= 0:
            raise ConfigError("must be non-negative", "qos.rate")
        if v["sweep.variable"] not in SWEEP_VARIABLES:
            raise ConfigError(f"must be one of {SWEEP_VARIABLES}", "sweep.variable")
        if v["sweep.steps"] < 2:
            raise ConfigError("need at least 2 steps", "sweep.steps")
        if not v["sweep.from"] < v["sweep.to"]:
            raise ConfigError("sweep range is empty", "sweep.to")
        if v["sweep.scale"] not in ("linear", "log"):
            raise ConfigError("must be 'linear' or 'log'", "sweep.scale")
        if v["sweep.scale"] == "log" and not v["sweep.from"] > 0:
            raise ConfigError("log sweep needs a positive start", "sweep.from")
        if not 0 <= v["rate_grid.min"] < v["rate_grid.max"]:
            raise ConfigError("rate grid is empty", "rate_grid.max")
        if v["placement.mode"] not in ("explicit", "random"):
            raise ConfigError("must be 'explicit' or 'random'", "placement.mode")
        if v["placement.mode"] == "explicit":
            enb = NodePosition(*v["placement.enb"])
            for key in ("placement.dt", "placement.dr", "placement.ut"):
                if NodePosition(*v[key]).distance_to(enb) > v["cell.radius"]:
                    raise ConfigError("node lies outside the cell", key)
        if v["mc.n_paths"] < 1 or v["mc.path_len"] < 1:
            raise ConfigError("must be >= 1", "mc.n_paths")
        if v["run.workers"] < 1:
            raise ConfigError("must be >= 1", "run.workers")

    def canonical(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.values.items())}

    def sha256(self) -> str:
        return hashlib.sha256(json.dumps(self.canonical(), sort_keys=True).encode()).hexdigest()

    # -- model objects -------------------------------------------------

    def positions(self) -> Positions:
        v = self.values
        if v["placement.mode"] == "random":
            return random_positions(v["cell.radius"], v["placement.seed"])
        return Positions(*(NodePosition(*v[f"placement.{n}"]) for n in ("enb", "dt", "dr", "ut")))

    def scenario(self) -> Scenario:
        return build_scenario(self.positions(), self["cell.radius"])

    def radio(self) -> RadioParams:
        v = self.values
        return RadioParams(
            p_bar=v["radio.p_bar"], p_enb=v["radio.p_enb"], p_ut=v["radio.p_ut"],
            n0=None if v["radio.n0"] == "thermal" else v["radio.n0"],
            bandwidth=v["radio.bandwidth"], slot_len=v["radio.slot_len"],
        )

    def mode_select(self, m_t: float, sigma_t: float | None = None) -> ModeSelectParams:
        sigma_t = self["mode.sigma_t"] if sigma_t is None else sigma_t
        return ModeSelectParams.from_sigma_t(sigma_t, m_t, self["mode.prior_h0"], self["mode.prior_h1"])

    def sweep_values(self) -> np.ndarray:
        lo, hi, n = self["sweep.from"], self["sweep.to"], self["sweep.steps"]
        if self["sweep.scale"] == "log":
            return np.geomspace(lo, hi, n)
        return np.linspace(lo, hi, n)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    return ExperimentConfig.from_overrides(parse_config_text(text))


@dataclass(frozen=True)
class OutputRow:
    sweep_var: str
    sweep_value: float
    scenario_kind: str
    ec_analytic: float
    p1: float
    p2: float
    p3: float
    p4: float
    p_e1: float
    p_e2: float
    kld: float
    seed: int
    theta: float
    ec_mc: float | None = None
    ec_mc_stderr: float | None = None
    r_star: float | None = None


def _point(cfg: ExperimentConfig, sweep_var: str, value: float, theta: float, mc_cache: dict | None):
    """Evaluate one sweep point; returns an OutputRow."""
    sc = cfg.scenario()
    radio = cfg.radio()
    kind = cfg["scenario.kind"]
    literal = cfg["scenario.paper_literal_threshold"]
    sigma_t, rate = cfg["mode.sigma_t"], cfg["qos.rate"]
    if sweep_var == "sigma_t":
        sigma_t = value
    elif sweep_var == "p_e1":
        sigma_t = sigma_t_for_error(value, sc.m_t)
    elif sweep_var == "theta":
        theta = value
    elif sweep_var == "rate":
        rate = value
    ms = cfg.mode_select(sc.m_t, sigma_t)
    diag = ms.diagnostics()
    res = analyze(sc, radio, ms, theta, rate, kind, literal)

    r_star = None
    if cfg["optrate.enabled"]:
        r_star, _, _ = optimal_rate_search(sc, radio, ms, theta, cfg["rate_grid.min"], cfg["rate_grid.max"],
                                           cfg["rate_grid.step"], kind, literal)
    ec_mc = ec_se = None
    if cfg["mc.enabled"]:
        sim = SimConfig(sc, radio, ms, rate, kind, cfg["mc.with_noise"])
        key = (sigma_t, rate)
        counts = None if mc_cache is None else mc_cache.get(key)
        if counts is None:
            counts = simulate_on_counts(sim, cfg["mc.n_paths"], cfg["mc.path_len"], cfg["seed"])
            if mc_cache is not None:
                mc_cache[key] = counts
        est = estimate_from_counts(counts, sim, theta, cfg["mc.path_len"], cfg["seed"])
        ec_mc, ec_se = est.ec_hat, est.stderr

    p = res.probs
    return OutputRow(
        sweep_var=sweep_var, sweep_value=float(value), scenario_kind=kind, ec_analytic=res.ec,
        p1=p.p1, p2=p.p2, p3=p.p3, p4=p.p4, p_e1=diag.p_e1, p_e2=diag.p_e2, kld=diag.kld,
        seed=cfg["seed"], theta=float(theta), ec_mc=ec_mc, ec_mc_stderr=ec_se, r_star=r_star,
    )


def _point_star(args):
    return _point(*args, None)


def _tasks(cfg: ExperimentConfig, sweep_var: str, values) -> list:
    if sweep_var == "p_e1" and cfg["mode.prior_h0"] != cfg["mode.prior_h1"]:
        raise ConfigError("a P_e1 sweep needs equal priors", "sweep.variable")
    thetas = (cfg["qos.theta"][0],) if sweep_var == "theta" else cfg["qos.theta"]
    return [(cfg, sweep_var, float(v), float(th)) for th in thetas for v in values]


def evaluate(cfg: ExperimentConfig, sweep_var: str, values) -> list[OutputRow]:
    """Rows for the given values of one variable, theta-major over ``qos.theta``."""
    tasks = _tasks(cfg, sweep_var, values)
    workers = cfg["run.workers"]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point_star, tasks))
    cache: dict = {}
    return [_point(*t, cache) for t in tasks]


def run_sweep(cfg: ExperimentConfig) -> list[OutputRow]:
    return evaluate(cfg, cfg["sweep.variable"], cfg.sweep_values())


def run_optrate(cfg: ExperimentConfig) -> list[OutputRow]:
    """EC over the rate grid for every theta, each row carrying that theta's r*."""
    grid = rate_grid(cfg["rate_grid.min"], cfg["rate_grid.max"], cfg["rate_grid.step"])
    rows = evaluate(cfg.replace(optrate__enabled=False), "rate", grid)
    out = []
    for theta in cfg["qos.theta"]:
        block = [r for r in rows if r.theta == theta]
        best = max(block, key=lambda r: r.ec_analytic)  # first maximum wins
        out.extend(replace(r, r_star=best.sweep_value) for r in block)
    return out


# -- output ---------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def metadata(cfg: ExperimentConfig, rows) -> dict:
    return {
        "tool": f"d2dcap {__version__}",
        "config_sha256": cfg.sha256(),
        "master_seed": cfg["seed"],
        "theta": sorted({r.theta for r in rows}, key=[r.theta for r in rows].index),
        "theta_unit": "1/bit",
    }


def to_csv(rows, cfg: ExperimentConfig) -> str:
    if not rows:
        raise DomainError("nothing to emit")
    buf = io.StringIO()
    for k, val in metadata(cfg, rows).items():
        buf.write(f"# {k}: {val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def to_json(rows, cfg: ExperimentConfig) -> str:
    if not rows:
        raise DomainError("nothing to emit")
    doc = {"meta": metadata(cfg, rows), "rows": [asdict(r) for r in rows]}
    return json.dumps(doc, indent=1) + "\n"


def rows_from_json(text: str) -> list[OutputRow]:
    names = {f.name for f in fields(OutputRow)}
    return [OutputRow(**{k: v for k, v in d.items() if k in names}) for d in json.loads(text)["rows"]]


def emit(rows, cfg: ExperimentConfig, fmt: str = "csv", destination=None) -> str:
    """Serialise rows; write to ``destination`` (path) when given. Returns the text."""
    if fmt == "csv":
        text = to_csv(rows, cfg)
    elif fmt == "json":
        text = to_json(rows, cfg)
    else:
        raise DomainError(f"unknown output format {fmt!r}")
    if destination is not None:
        try:
            Path(destination).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {destination}: {exc.strerror}") from exc
    return text
