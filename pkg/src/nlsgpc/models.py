"""Per-velocity solvers used by the ensemble estimator and the bisection oracle.

A model maps a launch velocity and a final time to the final wave field and
its trapped/reflected/transmitted outcome. :class:`PdeModel` runs the split
step solver; :class:`StepSurrogate` replaces the PDE by a sharp threshold and
is used to test the estimator in isolation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InconclusiveError, ValidationError
from .grid import Grid, WaveField
from .soliton import DefectParams, SolitonParams, initial_soliton
from .ssfm import (
    CLEARANCE_MARGIN,
    DEFAULT_WINDOW,
    Outcome,
    SolverConfig,
    classify,
    propagate,
)

log = logging.getLogger(__name__)

INCONCLUSIVE = "inconclusive"


@dataclass
class NodeResult:
    velocity: float
    field: np.ndarray
    outcome: str
    t_final: float
    mass_drift: float = 0.0
    wrapped: bool = False


@dataclass(frozen=True)
class PdeModel:
    """Launch a soliton at the defect and integrate to a common final time.

    ``soliton.velocity`` is ignored; each solve substitutes its own velocity.
    """

    grid: Grid
    defect: DefectParams
    soliton: SolitonParams
    solver: SolverConfig
    window: float = DEFAULT_WINDOW
    margin: float = CLEARANCE_MARGIN
    check_influence: bool = True

    def clearance_time(self, velocity: float) -> float:
        return (abs(self.soliton.position) + self.window + self.margin) / velocity

    def wrap_time(self, velocity: float) -> float:
        """Time for a soliton at ``velocity`` to come within one guard width of the boundary."""
        distance = abs(self.soliton.position) + self.grid.half_width - self.solver.wrap_width
        return (distance - self.soliton.influence_radius / 2) / velocity

    def solve(self, velocity: float, t_final: float) -> NodeResult:
        if velocity <= 0:
            raise ValidationError(f"launch velocity must be positive, got {velocity}")
        p = self.soliton.with_velocity(velocity)
        f0 = initial_soliton(p, self.grid, check_influence=self.check_influence)
        traj = propagate(f0, self.defect, self.solver.with_final_time(t_final),
                         amplitude=p.amplitude)
        try:
            outcome = classify(traj, self.window).value
        except InconclusiveError:
            outcome = INCONCLUSIVE
        return NodeResult(velocity, traj.final.values, outcome, t_final,
                          traj.mass_drift(), bool(traj.wrap_warnings))

    def classify_velocity(self, velocity: float, *, max_retries: int = 3,
                          extension: float = 1.5) -> tuple[Outcome, int]:
        """Outcome at ``velocity`` with the final time set by the clearance rule.

        An inconclusive result is retried with the final time multiplied by
        ``extension``, at most ``max_retries`` times. Returns the outcome and
        the number of solver runs used.
        """
        t_final = max(self.clearance_time(velocity) * (1 + 1e-9), self.solver.t_final)
        for attempt in range(max_retries + 1):
            res = self.solve(velocity, t_final)
            if res.outcome != INCONCLUSIVE:
                return Outcome(res.outcome), attempt + 1
            log.info("V=%g inconclusive at t=%g, extending", velocity, t_final)
            t_final *= extension
        raise InconclusiveError(
            f"V={velocity:g} still inconclusive after {max_retries} extensions"
        )


@dataclass(frozen=True)
class StepSurrogate:
    """Indicator model: trapped iff V < threshold.

    Every trapped node returns the same sech bump at the defect and every
    transmitted node the same bump at ``far_position``, so the ensemble mean
    is a two-bump field whose weights are the quadrature mass on each side of
    the threshold.
    """

    grid: Grid
    threshold: float
    far_position: float | None = None

    def solve(self, velocity: float, t_final: float = 0.0) -> NodeResult:
        x = self.grid.x
        far = self.far_position if self.far_position is not None else self.grid.half_width / 2
        if velocity < self.threshold:
            values, outcome = 1.0 / np.cosh(x), Outcome.TRAPPED.value
        else:
            values, outcome = 1.0 / np.cosh(x - far), Outcome.TRANSMITTED.value
        return NodeResult(velocity, values.astype(complex), outcome, t_final)

    def clearance_time(self, velocity: float) -> float:
        return 0.0

    def classify_velocity(self, velocity: float, **_) -> tuple[Outcome, int]:
        return Outcome(self.solve(velocity).outcome), 1


def solve_node(model, t_final: float, velocity: float) -> NodeResult:
    """Module-level entry point so process pools can pickle the call."""
    return model.solve(velocity, t_final)


def wave(model, result: NodeResult) -> WaveField:
    return WaveField(model.grid, result.field)
