"""Parameter sweeps over gamma producing one row of times and bounds per point."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .bounds import BoundsReport, evaluate
from .errors import QSLError
from .protocols import ProtocolKind, ProtocolSpec, c_from_factor

log = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "gamma",
    "theta",
    "s",
    "T",
    "T_A_closed",
    "T_A_traj",
    "T_B_closed",
    "T_B_traj",
    "T_C_closed",
    "T_m",
    "T_piecewise",
    "fidelity",
    "s_path",
    # appended after the documented block
    "T_C_traj",
    "duration",
    "status",
)

DEFAULT_C_FACTOR = {ProtocolKind.BANG_OFF_BANG: 1.5, ProtocolKind.BANG_BANG: 0.5}


@dataclass
class SweepConfig:
    omega: float = 1.0
    gamma: float = 2.0
    gamma_min: float = 0.0
    gamma_max: float = 10.0
    gamma_steps: int = 101
    protocol: ProtocolKind = ProtocolKind.COMPOSITE
    lambda0: float | None = None
    c_factor: float | None = None
    step: float | None = None
    output: str = "-"
    format: str = "csv"
    log_gamma: bool = False

    def __post_init__(self):
        self.protocol = ProtocolKind.parse(self.protocol)

    def validate(self) -> None:
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.gamma_min < 0 or not self.gamma_max > self.gamma_min:
            raise ValueError("need 0 <= gamma_min < gamma_max")
        if self.gamma_steps < 2:
            raise ValueError("gamma_steps must be at least 2")
        if self.log_gamma and self.gamma_min <= 0:
            raise ValueError("a logarithmic gamma grid needs gamma_min > 0")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if self.lambda0 is not None and not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if self.c_factor is not None and not self.c_factor > 0:
            raise ValueError("c_factor must be positive")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")

    @property
    def effective_lambda0(self) -> float:
        return self.lambda0 if self.lambda0 is not None else 10.0 * self.omega

    @property
    def effective_c_factor(self) -> float | None:
        if self.protocol is ProtocolKind.COMPOSITE:
            return None
        return self.c_factor if self.c_factor is not None else DEFAULT_C_FACTOR[self.protocol]

    def grid(self) -> np.ndarray:
        if self.log_gamma:
            return np.geomspace(self.gamma_min, self.gamma_max, self.gamma_steps)
        return np.linspace(self.gamma_min, self.gamma_max, self.gamma_steps)

    def spec_for(self, gamma: float) -> ProtocolSpec:
        if self.protocol is ProtocolKind.COMPOSITE:
            return ProtocolSpec(self.protocol, self.omega, gamma, lambda0=self.effective_lambda0)
        c = c_from_factor(self.omega, gamma, self.effective_c_factor) if gamma > 0 else None
        return ProtocolSpec(self.protocol, self.omega, gamma, c=c)


def row_from_report(report: BoundsReport) -> dict:
    return {
        "gamma": report.gamma,
        "theta": report.theta,
        "s": report.s,
        "T": report.T,
        "T_A_closed": report.T_A_closed,
        "T_A_traj": report.T_A,
        "T_B_closed": report.T_B_closed,
        "T_B_traj": report.T_B,
        "T_C_closed": report.T_C_closed,
        "T_m": report.T_m,
        "T_piecewise": report.T_piecewise,
        "fidelity": report.fidelity,
        "s_path": report.s_path,
        "T_C_traj": report.T_C,
        "duration": report.duration,
        "status": "ok",
    }


def evaluate_point(config: SweepConfig, gamma: float) -> tuple[dict, BoundsReport | None]:
    """One sweep row; solver and consistency failures become an error row."""
    try:
        _, _, report = evaluate(config.spec_for(float(gamma)), h=config.step)
    except (QSLError, ValueError, ArithmeticError) as exc:
        log.warning("gamma=%g failed: %s", gamma, exc)
        row = {name: None for name in SWEEP_COLUMNS}
        row["gamma"] = float(gamma)
        row["status"] = f"error: {type(exc).__name__}: {exc}"
        return row, None
    return row_from_report(report), report


def run_sweep(config: SweepConfig) -> list[dict]:
    """Rows ordered by gamma."""
    config.validate()
    rows = []
    for gamma in config.grid():
        row, _ = evaluate_point(config, gamma)
        rows.append(row)
    return rows


def success_fraction(rows: list[dict]) -> float:
    if not rows:
        return 0.0
    return sum(1 for r in rows if r["status"] == "ok") / len(rows)


def sign_changes(values) -> int:
    """Number of strict sign changes in a sequence, ignoring exact zeros."""
    signs = [math.copysign(1.0, v) for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)
