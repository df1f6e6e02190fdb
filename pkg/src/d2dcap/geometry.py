"""Single-cell geometry and log-distance pathloss.

The eNB sits at the centre of a disc-shaped cell. Four UEs are placed in it:
the D2D candidate pair (D_T, D_R) and the cellular pair's transmitter U_T
(the cellular receiver plays no role in the D2D link and is not modelled).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

D_MIN = 1.0  # metres; the log-distance law is clamped below this
PL_INTERCEPT_DB = 36.3
PL_SLOPE_DB = 37.6


@dataclass(frozen=True)
class NodePosition:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite node position ({self.x}, {self.y})")

    def distance_to(self, other: "NodePosition") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class Positions:
    enb: NodePosition
    dt: NodePosition
    dr: NodePosition
    ut: NodePosition


@dataclass(frozen=True)
class Scenario:
    """Node placement plus the five pathlosses the link model needs.

    Linear pathlosses are power ratios (>= 1 after clamping); the ``*_db``
    fields hold the same quantities in dB.
    """

    cell_radius: float
    pos_enb: NodePosition
    pos_dt: NodePosition
    pos_dr: NodePosition
    pos_ut: NodePosition
    L_d_db: float
    L_c1_db: float
    L_c2_db: float
    L_utdr_db: float
    L_utenb_db: float
    L_d: float
    L_c1: float
    L_c2: float
    L_utdr: float
    L_utenb: float

    @property
    def m_t(self) -> float:
        """Signed dB gap between the direct and the D_T->eNB pathloss."""
        return self.L_d_db - self.L_c1_db

    def pathlosses_db(self) -> dict[str, float]:
        return {
            "L_d": self.L_d_db,
            "L_c1": self.L_c1_db,
            "L_c2": self.L_c2_db,
            "L_utdr": self.L_utdr_db,
            "L_utenb": self.L_utenb_db,
        }


def pathloss_db(distance: float) -> float:
    """Log-distance pathloss in dB, distance in metres (clamped to ``D_MIN``)."""
    distance = float(distance)
    if not math.isfinite(distance) or distance < 0:
        raise DomainError(f"distance must be finite and non-negative, got {distance}")
    return PL_INTERCEPT_DB + PL_SLOPE_DB * math.log10(max(distance, D_MIN))


def db_to_linear(x_db):
    """10**(x/10); scalars in, float out, arrays in, arrays out."""
    if np.ndim(x_db):
        return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)
    return 10.0 ** (float(x_db) / 10.0)


def linear_to_db(x):
    if np.ndim(x):
        arr = np.asarray(x, dtype=float)
        if np.any(~(arr > 0)):
            raise DomainError("linear value must be strictly positive")
        return 10.0 * np.log10(arr)
    x = float(x)
    if not x > 0:
        raise DomainError(f"linear value must be strictly positive, got {x}")
    return 10.0 * math.log10(x)


def sample_uniform_positions(cell_radius: float, rng_seed: int, n: int = 3) -> list[NodePosition]:
    """Draw ``n`` points uniformly over a disc centred on the eNB (origin).

    Uses r = R*sqrt(u), phi = 2*pi*v so that the density is flat in area.
    """
    if not cell_radius > 0:
        raise DomainError("cell_radius must be positive")
    rng = np.random.default_rng(rng_seed)
    u = rng.random(n)
    v = rng.random(n)
    r = cell_radius * np.sqrt(u)
    phi = 2.0 * np.pi * v
    return [NodePosition(float(ri * np.cos(p)), float(ri * np.sin(p))) for ri, p in zip(r, phi)]


def random_positions(cell_radius: float, rng_seed: int) -> Positions:
    dt, dr, ut = sample_uniform_positions(cell_radius, rng_seed, 3)
    return Positions(enb=NodePosition(0.0, 0.0), dt=dt, dr=dr, ut=ut)


def build_scenario(positions: Positions, cell_radius: float) -> Scenario:
    enb, dt, dr, ut = positions.enb, positions.dt, positions.dr, positions.ut
    db = {
        "L_d": pathloss_db(dt.distance_to(dr)),
        "L_c1": pathloss_db(dt.distance_to(enb)),
        "L_c2": pathloss_db(enb.distance_to(dr)),
        "L_utdr": pathloss_db(ut.distance_to(dr)),
        "L_utenb": pathloss_db(ut.distance_to(enb)),
    }
    lin = {k: db_to_linear(v) for k, v in db.items()}
    return Scenario(
        cell_radius=float(cell_radius),
        pos_enb=enb,
        pos_dt=dt,
        pos_dr=dr,
        pos_ut=ut,
        **{f"{k}_db": v for k, v in db.items()},
        **lin,
    )
