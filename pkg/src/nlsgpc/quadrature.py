"""
Orthonormal polynomial chaos bases and Gauss rules for the soliton velocity.

Two families are supported:

* ``legendre``: uniform probability measure on [-1, 1], mapped affinely onto
  the velocity interval [V_a, V_b].
* ``hermite``: standard normal measure (probabilists' convention). A standard
  node z is scaled to gamma = sd * z and squashed into (-1, 1) by
  xi = (-1 + sqrt(1 + 4 gamma^2)) / (2 gamma) before the same affine map.

Weights are normalized to the probability measure, so they sum to one and the
zeroth chaos coefficient is the ensemble mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, ValidationError

FAMILIES = ("legendre", "hermite")
MAX_NODES = 64


def _check_family(family: str):
    if family not in FAMILIES:
        raise ValidationError(f"unknown chaos family {family!r}; expected one of {FAMILIES}")


def recurrence_coefficients(family: str, n: int) -> np.ndarray:
    """Off-diagonal Jacobi-matrix entries b_1..b_{n-1} of the orthonormal family.

    Both measures are symmetric, so the diagonal vanishes and the orthonormal
    polynomials satisfy x p_k = b_{k+1} p_{k+1} + b_k p_{k-1}.
    """
    _check_family(family)
    k = np.arange(1, n, dtype=float)
    if family == "legendre":
        return k / np.sqrt(4.0 * k * k - 1.0)
    return np.sqrt(k)


@dataclass(frozen=True)
class OrthoBasis:
    family: str
    degree: int

    def __post_init__(self):
        _check_family(self.family)
        if self.degree < 0:
            raise ValidationError("basis degree must be non-negative")

    def __call__(self, xi) -> np.ndarray:
        return eval_basis(self, xi)


def eval_basis(b: OrthoBasis, xi) -> np.ndarray:
    """Values P_0(xi) .. P_Q(xi) by the orthonormal three-term recurrence.

    Returns an array of shape ``np.shape(xi) + (Q + 1,)``.
    """
    xi = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi)):
        raise DomainError("basis argument must be finite")
    if b.family == "legendre" and np.any(np.abs(xi) > 1.0 + 1e-12):
        raise DomainError("Legendre basis is defined on [-1, 1]")
    beta = recurrence_coefficients(b.family, b.degree + 1)
    out = np.empty(xi.shape + (b.degree + 1,))
    out[..., 0] = 1.0
    if b.degree >= 1:
        out[..., 1] = xi / beta[0]
    for k in range(1, b.degree):
        out[..., k + 1] = (xi * out[..., k] - beta[k - 1] * out[..., k - 1]) / beta[k]
    return out


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss nodes and probability weights, optionally tied to a velocity interval.

    ``nodes`` live in the reference space of the family: [-1, 1] for
    Legendre, the real line (standard normal) for Hermite.
    """

    family: str
    nodes: np.ndarray
    weights: np.ndarray
    v_a: float | None = None
    v_b: float | None = None
    sd: float = 0.1

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def order(self) -> int:
        """Q, the highest chaos degree supported (n_nodes - 1)."""
        return len(self.nodes) - 1

    def basis(self) -> OrthoBasis:
        return OrthoBasis(self.family, self.order)

    def on_interval(self, v_a: float, v_b: float, sd: float | None = None) -> "QuadratureRule":
        if not (np.isfinite(v_a) and np.isfinite(v_b) and v_a < v_b):
            raise ValidationError(f"velocity interval must satisfy V_a < V_b, got [{v_a}, {v_b}]")
        return QuadratureRule(self.family, self.nodes, self.weights, float(v_a), float(v_b),
                              self.sd if sd is None else float(sd))

    @property
    def velocities(self) -> np.ndarray:
        return np.array([velocity_from_node(self, a) for a in self.nodes])

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def gauss_rule(family: str, n_nodes: int) -> QuadratureRule:
    """Gauss rule with ``n_nodes`` = Q + 1 points (Golub-Welsch).

    Nodes are the eigenvalues of the symmetric Jacobi matrix. Weights are taken
    from the Christoffel function 1 / sum_k P_k(x_j)^2, which equals the
    squared first eigenvector component but keeps full relative accuracy for
    the small Hermite tail weights. Both families are symmetric, and the rule
    is symmetrized explicitly so that mirrored nodes carry identical weights.
    """
    _check_family(family)
    if not 1 <= n_nodes <= MAX_NODES:
        raise ValidationError(f"number of nodes must be in [1, {MAX_NODES}], got {n_nodes}")
    if n_nodes == 1:
        return QuadratureRule(family, np.zeros(1), np.ones(1))
    beta = recurrence_coefficients(family, n_nodes)
    nodes = eigh_tridiagonal(np.zeros(n_nodes), beta, eigvals_only=True)
    nodes = 0.5 * (nodes - nodes[::-1])
    if n_nodes % 2:
        nodes[n_nodes // 2] = 0.0
    values = eval_basis(OrthoBasis(family, n_nodes - 1), nodes)
    weights = 1.0 / np.sum(values * values, axis=-1)
    weights = 0.5 * (weights + weights[::-1])
    weights /= weights.sum()
    return QuadratureRule(family, nodes, weights)


def squash(gamma):
    """Map gamma in R to xi in (-1, 1), the inverse of gamma = xi / (1 - xi^2)."""
    gamma = np.asarray(gamma, dtype=float)
    safe = np.where(gamma == 0.0, 1.0, gamma)
    # (-1 + sqrt(1 + 4g^2)) / (2g) rewritten as 2g / (1 + sqrt(1 + 4g^2)) to avoid cancellation
    xi = 2.0 * safe / (1.0 + np.sqrt(1.0 + 4.0 * safe * safe))
    return np.where(gamma == 0.0, 0.0, xi)


def unsquash(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(xi) >= 1.0):
        raise DomainError("xi must lie strictly inside (-1, 1)")
    return xi / (1.0 - xi * xi)


def _require_interval(rule: QuadratureRule):
    if rule.v_a is None or rule.v_b is None:
        raise ValidationError("quadrature rule has no velocity interval; use on_interval()")


def velocity_from_node(rule: QuadratureRule, node: float) -> float:
    """Velocity for a reference-space node (always inside [V_a, V_b])."""
    _require_interval(rule)
    if rule.family == "legendre":
        xi = float(node)
    else:
        xi = float(squash(rule.sd * node))
    return 0.5 * (rule.v_b - rule.v_a) * xi + 0.5 * (rule.v_a + rule.v_b)


def reference_from_velocity(rule: QuadratureRule, velocity: float) -> float:
    """Inverse of :func:`velocity_from_node`."""
    _require_interval(rule)
    xi = (2.0 * velocity - (rule.v_a + rule.v_b)) / (rule.v_b - rule.v_a)
    if rule.family == "legendre":
        return float(xi)
    return float(unsquash(xi)) / rule.sd
