"""Reference critical velocity by bisection on the captured/transmitted outcome."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, ValidationError
from .ssfm import Outcome


@dataclass
class BisectionResult:
    strength: float | None
    v_c: float
    history: list[tuple[float, float]]
    classifications: list[tuple[float, str]]
    calls: int
    solver_runs: int
    tol: float
    wall_time_s: float | None = None

    def record(self) -> dict:
        lo, hi = self.history[-1]
        return {
            "epsilon": self.strength,
            "V_a": self.history[0][0],
            "V_b": self.history[0][1],
            "V_lo": lo,
            "V_hi": hi,
            "tol": self.tol,
            "V_c": self.v_c,
            "calls": self.calls,
            "solver_runs": self.solver_runs,
            "classifications": [{"V": v, "outcome": o} for v, o in self.classifications],
            "wall_time_s": self.wall_time_s,
        }


def expected_calls(v_lo: float, v_hi: float, tol: float) -> int:
    """Classifier calls for a bracket of this width: two endpoint checks plus the halvings."""
    return max(0, math.ceil(math.log2((v_hi - v_lo) / tol))) + 2


@dataclass
class _Counter:
    model: object
    calls: int = 0
    runs: int = 0
    log: list[tuple[float, str]] = field(default_factory=list)

    def __call__(self, v: float) -> Outcome:
        outcome, runs = self.model.classify_velocity(v)
        self.calls += 1
        self.runs += runs
        self.log.append((float(v), outcome.value))
        return outcome


def bisect_critical(model, v_lo: float, v_hi: float, tol: float,
                    strength: float | None = None) -> BisectionResult:
    """Halve [v_lo, v_hi] until it is narrower than ``tol``.

    The slow end must be captured (trapped or reflected) and the fast end
    transmitted; the outcome is assumed monotone in between. Returns the
    midpoint of the final bracket.
    """
    if not tol > 0:
        raise ValidationError("tol must be positive")
    if not 0 < v_lo < v_hi:
        raise ValidationError(f"need 0 < v_lo < v_hi, got [{v_lo}, {v_hi}]")
    if strength is None and hasattr(model, "defect"):
        strength = model.defect.strength
    classify = _Counter(model)
    lo_outcome = classify(v_lo)
    hi_outcome = classify(v_hi)
    if not lo_outcome.captured or hi_outcome.captured:
        raise BracketError(
            f"[{v_lo:g}, {v_hi:g}] classifies as {lo_outcome.value} / {hi_outcome.value}; "
            "need captured below and transmitted above"
        )
    history = [(float(v_lo), float(v_hi))]
    while v_hi - v_lo >= tol:
        mid = 0.5 * (v_lo + v_hi)
        if mid in (v_lo, v_hi):
            break
        if classify(mid).captured:
            v_lo = mid
        else:
            v_hi = mid
        history.append((v_lo, v_hi))
    return BisectionResult(strength, 0.5 * (v_lo + v_hi), history, classify.log,
                           classify.calls, classify.runs, tol)


def find_bracket(model, velocities) -> tuple[float, float, list[tuple[float, str]]]:
    """First adjacent (captured, transmitted) pair on an increasing velocity scan.

    Returns the pair and the scan log. Inconclusive points are logged and
    skipped.
    """
    from .errors import InconclusiveError

    velocities = [float(v) for v in np.sort(np.asarray(velocities, dtype=float))]
    scan: list[tuple[float, str]] = []
    last_captured = None
    for v in velocities:
        try:
            outcome, _ = model.classify_velocity(v)
        except InconclusiveError:
            scan.append((v, "inconclusive"))
            continue
        scan.append((v, outcome.value))
        if outcome.captured:
            last_captured = v
        elif last_captured is not None:
            return last_captured, v, scan
    raise BracketError(f"no captured/transmitted pair in scan {scan}")
