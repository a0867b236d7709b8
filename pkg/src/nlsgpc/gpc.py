"""
Stochastic-collocation estimate of the critical velocity.

The launch velocity is treated as a random variable on [V_a, V_b]. One
deterministic run per quadrature node gives the chaos coefficients of the
final field; only the mean mode is needed for the estimate. Its energy to the
left of the separation point L', divided by the total, is the fraction of the
velocity interval that stays behind, so

    V_c = V_a + (V_b - V_a) * E(-L, L') / E(-L, L).
"""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .errors import DetectionError, NumericalError, ValidationError
from .grid import Grid, WaveField
from .models import INCONCLUSIVE, NodeResult, solve_node
from .quadrature import QuadratureRule, eval_basis, gauss_rule, reference_from_velocity
from .ssfm import Outcome

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-3
DEFAULT_MIN_GAP = 2.0


class BracketWarning(RuntimeWarning):
    """The ensemble endpoints do not straddle the transition."""


@dataclass
class GpcEnsemble:
    rule: QuadratureRule
    grid: Grid
    t_final: float
    velocities: np.ndarray
    fields: np.ndarray
    coefficients: np.ndarray
    outcomes: list[str]
    strength: float | None = None
    wrapped: list[bool] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.velocities)


def chaos_coefficients(rule: QuadratureRule, fields: np.ndarray) -> np.ndarray:
    """u_m = sum_j u_j P_m(alpha_j) w_j, accumulated in node order."""
    basis = eval_basis(rule.basis(), rule.nodes)
    coeffs = np.zeros((rule.n_nodes, fields.shape[1]), dtype=complex)
    for j in range(rule.n_nodes):
        coeffs += (rule.weights[j] * basis[j])[:, None] * fields[j][None, :]
    return coeffs


def _map_nodes(model, t_final, velocities, workers):
    solve = partial(solve_node, model, t_final)
    if workers <= 1 or len(velocities) == 1:
        return [solve(v) for v in velocities]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(solve, velocities))


def run_ensemble(rule: QuadratureRule, model, *, t_final: float | None = None,
                 workers: int = 1) -> GpcEnsemble:
    """Solve at every quadrature velocity and assemble the chaos coefficients.

    Parameters
    ----------
    rule : QuadratureRule
        Rule already mapped onto a velocity interval.
    model : PdeModel or StepSurrogate
        Per-velocity solver.
    t_final : float, optional
        Common final time. Defaults to the clearance time of the slowest
        node, or the model's configured final time if that is longer.
    workers : int
        Process count for the independent solves. Results are reduced in
        node order, so the output does not depend on this value.
    """
    velocities = rule.velocities
    if np.any(velocities <= 0):
        raise ValidationError("all ensemble velocities must be positive")
    if t_final is None:
        t_final = auto_final_time(model, velocities)
    results: list[NodeResult] = _map_nodes(model, t_final, velocities, workers)
    fields = np.array([r.field for r in results])
    wrapped = [r.wrapped for r in results]
    if any(wrapped):
        warnings.warn(
            f"{sum(wrapped)} of {len(wrapped)} ensemble runs reached the periodic boundary",
            RuntimeWarning,
            stacklevel=2,
        )
    defect = getattr(model, "defect", None)
    return GpcEnsemble(
        rule=rule,
        grid=model.grid,
        t_final=float(t_final),
        velocities=velocities,
        fields=fields,
        coefficients=chaos_coefficients(rule, fields),
        outcomes=[r.outcome for r in results],
        strength=None if defect is None else defect.strength,
        wrapped=wrapped,
    )


def auto_final_time(model, velocities) -> float:
    """Clearance time of the slowest node, floored by the configured final time.

    Warns when the fastest node would reach the periodic boundary first.
    """
    v_min, v_max = float(np.min(velocities)), float(np.max(velocities))
    t_final = model.clearance_time(v_min) * (1 + 1e-9)
    solver = getattr(model, "solver", None)
    if solver is not None:
        t_final = max(t_final, solver.t_final)
    if hasattr(model, "wrap_time") and t_final > model.wrap_time(v_max):
        warnings.warn(
            f"final time {t_final:g} lets the fastest soliton (V={v_max:g}) reach the "
            "periodic boundary; widen the domain or narrow the velocity interval",
            RuntimeWarning,
            stacklevel=2,
        )
    return t_final


def mean_mode(e: GpcEnsemble) -> WaveField:
    return WaveField(e.grid, e.coefficients[0])


def detect_separation(mean: WaveField, threshold: float = DEFAULT_THRESHOLD,
                      min_gap: float = DEFAULT_MIN_GAP, manual: float | None = None) -> float:
    """Separation abscissa L' between the defect cluster and the transmitted cluster.

    Scans x > 0 for runs where |u| < threshold * max|u|. Among runs at least
    ``min_gap`` wide, the widest one with mass on both sides wins; if every
    such run extends to the boundary (nothing transmitted), that run is used.
    The left edge of the chosen run is returned. ``manual`` bypasses the scan.
    """
    if manual is not None:
        return float(manual)
    g = mean.grid
    amp = mean.modulus()
    peak = amp.max()
    if peak == 0:
        raise DetectionError("mean mode is identically zero")
    start = g.origin_index + 1
    below = amp[start:] < threshold * peak
    runs = []
    i, n = 0, len(below)
    while i < n:
        if below[i]:
            j = i
            while j + 1 < n and below[j + 1]:
                j += 1
            runs.append((start + i, start + j, j + 1 == n))
            i = j + 1
        else:
            i += 1
    candidates = [
        (g.x[b] - g.x[a] + g.dx, not open_end, a)
        for a, b, open_end in runs
        if g.x[b] - g.x[a] + g.dx >= min_gap
    ]
    if not candidates:
        raise DetectionError(
            f"no gap of width >= {min_gap:g} below {threshold:g} of the peak for x > 0"
        )
    bounded = [c for c in candidates if c[1]]
    width, _, a = max(bounded or candidates, key=lambda c: c[0])
    return float(g.x[a])


def energy_ratio(mean: WaveField, l_prime: float) -> tuple[float, float, float]:
    """(E_L, E_L', E_L'/E_L) with E = (1/2) int |u0|^2 dx by the rectangle rule."""
    g = mean.grid
    if not -g.half_width < l_prime < g.half_width:
        raise ValidationError(f"L'={l_prime:g} must lie inside (-L, L)")
    rho = 0.5 * mean.density() * g.dx
    e_total = float(rho.sum())
    if e_total <= 0:
        raise NumericalError("mean mode carries no energy")
    e_left = float(rho[g.x <= l_prime].sum())
    return e_total, e_left, e_left / e_total


@dataclass
class CriticalResult:
    strength: float | None
    v_a: float
    v_b: float
    n_nodes: int
    family: str
    l_prime: float
    l_prime_source: str
    e_l: float
    e_lprime: float
    ratio: float
    v_c: float
    outcomes: list[str]
    bracketed: bool
    wall_time_s: float | None = None

    def record(self) -> dict:
        return {
            "epsilon": self.strength,
            "V_a": self.v_a,
            "V_b": self.v_b,
            "N": self.n_nodes,
            "family": self.family,
            "L_prime": self.l_prime,
            "L_prime_source": self.l_prime_source,
            "E_L": self.e_l,
            "E_Lprime": self.e_lprime,
            "R": self.ratio,
            "V_c": self.v_c,
            "bracketed": self.bracketed,
            "outcomes": list(self.outcomes),
            "wall_time_s": self.wall_time_s,
        }


def _is_bracketing(outcomes: list[str]) -> bool:
    first, last = outcomes[0], outcomes[-1]
    return (first not in (INCONCLUSIVE, Outcome.TRANSMITTED.value)
            and last == Outcome.TRANSMITTED.value)


def critical_velocity(e: GpcEnsemble, l_prime: float | None = None, *,
                      threshold: float = DEFAULT_THRESHOLD,
                      min_gap: float = DEFAULT_MIN_GAP) -> CriticalResult:
    """Critical velocity from the mean-mode energy ratio.

    ``l_prime`` fixes the separation point; otherwise it is detected from the
    mean mode. A warning is issued when the slowest node is not captured or
    the fastest node is not transmitted.
    """
    mean = mean_mode(e)
    source = "manual" if l_prime is not None else "auto"
    l_prime = detect_separation(mean, threshold, min_gap, manual=l_prime)
    e_l, e_lp, ratio = energy_ratio(mean, l_prime)
    bracketed = _is_bracketing(e.outcomes)
    if not bracketed:
        warnings.warn(
            f"ensemble endpoints are {e.outcomes[0]} / {e.outcomes[-1]}; "
            "the velocity interval may not contain the transition",
            BracketWarning,
            stacklevel=2,
        )
    v_a, v_b = e.rule.v_a, e.rule.v_b
    v_c = min(max(v_a + (v_b - v_a) * ratio, v_a), v_b)
    return CriticalResult(
        strength=e.strength, v_a=v_a, v_b=v_b, n_nodes=e.n_nodes, family=e.rule.family,
        l_prime=l_prime, l_prime_source=source, e_l=e_l, e_lprime=e_lp, ratio=ratio,
        v_c=v_c, outcomes=list(e.outcomes), bracketed=bracketed,
    )


def reconstruct(e: GpcEnsemble, velocity: float) -> WaveField:
    """Truncated chaos expansion evaluated at ``velocity``.

    Diagnostic only: across the trapping transition the field is
    discontinuous in the velocity and the expansion oscillates.
    """
    if not e.rule.v_a <= velocity <= e.rule.v_b:
        raise ValidationError(f"V={velocity:g} outside [{e.rule.v_a:g}, {e.rule.v_b:g}]")
    ref = reference_from_velocity(e.rule, velocity)
    if e.rule.family == "legendre":
        ref = min(max(ref, -1.0), 1.0)
    p = eval_basis(e.rule.basis(), ref)
    return WaveField(e.grid, p @ e.coefficients)


def ensemble_variance(e: GpcEnsemble) -> np.ndarray:
    """Pointwise variance sum_{m>=1} |u_m|^2 of the truncated expansion."""
    c = e.coefficients[1:]
    return np.sum(c.real**2 + c.imag**2, axis=0)


@dataclass
class ConvergenceRow:
    n_nodes: int
    v_c: float
    error: float | None
    result: CriticalResult


def convergence_study(model, interval: tuple[float, float], n_list, *,
                      family: str = "legendre", sd: float = 0.1,
                      l_prime: float | None = None, threshold: float = DEFAULT_THRESHOLD,
                      min_gap: float = DEFAULT_MIN_GAP, t_final: float | None = None,
                      workers: int = 1, timed: bool = False) -> list[ConvergenceRow]:
    """V_c(N) for each node count and Error(N) = |V_c(N) - V_c(N_prev)|.

    Every node count gets a fresh ensemble, since Gauss nodes are not nested.
    The final time is shared across all counts (the clearance time of V_a
    unless given), so the ensembles differ only in their nodes.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValidationError("node counts must be strictly increasing")
    v_a, v_b = interval
    if t_final is None:
        t_final = auto_final_time(model, [v_a, v_b])
    rows: list[ConvergenceRow] = []
    for n in n_list:
        start = time.perf_counter()
        rule = gauss_rule(family, n).on_interval(v_a, v_b, sd)
        ens = run_ensemble(rule, model, t_final=t_final, workers=workers)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BracketWarning)
            res = critical_velocity(ens, l_prime, threshold=threshold, min_gap=min_gap)
        if timed:
            res.wall_time_s = time.perf_counter() - start
        err = None if not rows else abs(res.v_c - rows[-1].v_c)
        log.info("N=%d V_c=%.12g error=%s", n, res.v_c, err)
        rows.append(ConvergenceRow(n, res.v_c, err, res))
    return rows
