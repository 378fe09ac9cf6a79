"""Quadrature rules on [-1, 1] and their full and sparse N-dimensional grids.

Two 1D families are provided:

* Gauss-Legendre with n nodes, exact for polynomials of degree 2n - 1.
  Nodes are the roots of L_n, found by Newton iteration on the recurrence
  (no tables), then mirrored so the rule is exactly symmetric.
* Clenshaw-Curtis at level k with n_k nodes, where n_1 = 1 and
  n_k = 2^(k-1) + 1 for k >= 2.  Nodes are cosine-spaced, so the rules are
  nested: every node of level k reappears, bit-identically, at level k + 1.

Multi-dimensional grids are either full tensor products of Gauss-Legendre
rules or Smolyak sparse combinations of the nested Clenshaw-Curtis rules.
The sparse combination at level l sums signed tensor rules over the shells
l+1 <= |k|_1 <= l+N with coefficient (-1)^(l+N-|k|_1) * C(N-1, l+N-|k|_1),
merging coincident points; it integrates every polynomial whose term orders
lie in the total-order neighbourhood of order 2l + 1 exactly.  Sparse-grid
weights can be negative; that is expected and not an error.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, IO

import numpy as np

from .errors import ConfigurationError, EvaluationError

GAUSS_LEGENDRE = "gauss-legendre"
CLENSHAW_CURTIS = "clenshaw-curtis"

MAX_GAUSS_NODES = 64
MAX_CC_LEVEL = 12

# Default ceiling on grid sizes; protects against misconfigured builds.
POINT_COUNT_CAP = 10_000_000


@dataclass(frozen=True)
class QuadratureRule1D:
    """A one-dimensional rule: strictly increasing nodes with matching weights."""

    nodes: np.ndarray
    weights: np.ndarray
    family: str
    exact_degree: int

    def __len__(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class GridQuadrature:
    """An N-dimensional rule: points (one row each) with signed weights.

    `provenance` records how the grid was built:
    {"method": "full-grid", "order": p} or {"method": "sparse-grid", "level": l}.
    """

    dim: int
    points: np.ndarray
    weights: np.ndarray
    provenance: dict

    def __len__(self) -> int:
        return self.weights.size


def _legendre_value_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """L_n(x) and L_n'(x), with the derivative from n(x L_n - L_{n-1})/(x^2 - 1)."""
    prev = np.ones_like(x)
    cur = x.copy()
    for k in range(2, n + 1):
        prev, cur = cur, ((2 * k - 1) * x * cur - (k - 1) * prev) / k
    deriv = n * (x * cur - prev) / (x * x - 1.0)
    return cur, deriv


def gauss_legendre_1d(n: int) -> QuadratureRule1D:
    """The n-node Gauss-Legendre rule on [-1, 1].

    Roots of L_n are found by Newton iteration from the Chebyshev-like
    initial guesses cos(pi (i - 1/4) / (n + 1/2)) to a tolerance of 1e-15,
    and weights are 2 / ((1 - x^2) L_n'(x)^2).  Only the non-negative half
    is iterated; the rule is assembled by exact mirroring, so symmetric
    monomials integrate to exactly zero.
    """
    if not 1 <= n <= MAX_GAUSS_NODES:
        raise ConfigurationError(
            f"Gauss-Legendre node count must be in [1, {MAX_GAUSS_NODES}], got {n}"
        )
    if n == 1:
        return QuadratureRule1D(np.array([0.0]), np.array([2.0]), GAUSS_LEGENDRE, 1)

    half = (n + 1) // 2
    i = np.arange(1, half + 1, dtype=float)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))  # descending, all > 0 except a center ~0
    for _ in range(100):
        value, deriv = _legendre_value_and_derivative(n, x)
        step = value / deriv
        x -= step
        if np.max(np.abs(step)) < 1e-15:
            break
    else:  # pragma: no cover - Newton on Legendre roots converges in < 10 steps
        raise ConfigurationError(f"Gauss-Legendre iteration failed to converge for n={n}")
    _, deriv = _legendre_value_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * deriv * deriv)

    nodes = np.empty(n)
    weights = np.empty(n)
    pairs = n // 2
    nodes[:pairs] = -x[:pairs]
    weights[:pairs] = w[:pairs]
    nodes[n - pairs:] = x[:pairs][::-1]
    weights[n - pairs:] = w[:pairs][::-1]
    if n % 2 == 1:
        nodes[pairs] = 0.0
        weights[pairs] = w[half - 1]
    return QuadratureRule1D(nodes, weights, GAUSS_LEGENDRE, 2 * n - 1)


def cc_node_count(level: int) -> int:
    """Node count of the Clenshaw-Curtis rule at a level: 1, 3, 5, 9, 17, ...

    The single-node convention at level 1 is what makes the nested sparse
    grids below as small as they are.
    """
    if not 1 <= level <= MAX_CC_LEVEL:
        raise ConfigurationError(
            f"Clenshaw-Curtis level must be in [1, {MAX_CC_LEVEL}], got {level}"
        )
    return 1 if level == 1 else 2 ** (level - 1) + 1


def clenshaw_curtis_1d(level: int) -> QuadratureRule1D:
    """The nested Clenshaw-Curtis rule at a level.

    Nodes are -cos(j pi / m) for j = 0..m with m = n_k - 1, computed for
    the lower half only and mirrored, with the center forced to exactly
    0.0.  Mirroring keeps levels nested bit-for-bit: the arguments j pi / m
    halve exactly when the level increases, so shared nodes are identical
    floats, and point merging in sparse grids can use exact equality.
    Weights come from the standard cosine-sum formula.
    """
    count = cc_node_count(level)
    if count == 1:
        return QuadratureRule1D(np.array([0.0]), np.array([2.0]), CLENSHAW_CURTIS, 1)

    m = count - 1  # number of intervals, a power of two
    j = np.arange(m // 2 + 1)
    half_nodes = -np.cos(j * np.pi / m)
    half_nodes[-1] = 0.0

    # w_j = (c_j / m) (1 - sum_i b_i cos(2 i j pi / m) / (4 i^2 - 1)),
    # b_i = 1 at i = m/2 else 2, c_j = 1 at the endpoints else 2.
    i = np.arange(1, m // 2 + 1, dtype=float)
    b = np.where(i == m / 2, 1.0, 2.0)
    cosine_sum = np.cos(2.0 * np.outer(j, i) * np.pi / m) @ (b / (4.0 * i * i - 1.0))
    half_weights = (2.0 / m) * (1.0 - cosine_sum)
    half_weights[0] /= 2.0  # endpoint

    nodes = np.concatenate([half_nodes[:-1], [0.0], -half_nodes[:-1][::-1]])
    weights = np.concatenate([half_weights[:-1], [half_weights[-1]], half_weights[:-1][::-1]])
    # count is odd and the rule symmetric, so degree count is integrated too.
    return QuadratureRule1D(nodes, weights, CLENSHAW_CURTIS, count)


def full_grid(dim: int, order: int, *, point_cap: int = POINT_COUNT_CAP) -> GridQuadrature:
    """Tensor product of (order + 1)-node Gauss-Legendre rules in each dimension.

    Has exactly (order + 1)^dim points and integrates every polynomial whose
    term orders lie in the tensor-product neighbourhood of order
    2 * order + 1 exactly.  Points are in ascending lexicographic order.
    """
    if dim < 1:
        raise ConfigurationError(f"grid dimension must be >= 1, got {dim}")
    n1 = order + 1
    count = n1**dim
    if count > point_cap:
        raise ConfigurationError(
            f"full grid with order {order} in dimension {dim} has {count} points, "
            f"above the cap of {point_cap}"
        )
    rule = gauss_legendre_1d(n1)
    coord_grids = np.meshgrid(*([rule.nodes] * dim), indexing="ij")
    points = np.stack([g.ravel() for g in coord_grids], axis=1)
    weight_grids = np.meshgrid(*([rule.weights] * dim), indexing="ij")
    weights = np.ones(count)
    for g in weight_grids:
        weights *= g.ravel()
    return GridQuadrature(dim, points, weights, {"method": "full-grid", "order": order})


def _positive_compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """Tuples of `parts` integers >= 1 summing to `total`, lexicographically."""
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(1, total - parts + 2):
        out.extend((first,) + rest for rest in _positive_compositions(total - first, parts - 1))
    return out


def sparse_grid(dim: int, level: int, *, point_cap: int = POINT_COUNT_CAP) -> GridQuadrature:
    """Smolyak sparse grid over nested Clenshaw-Curtis rules.

    Coincident points across the signed tensor terms are merged by exact
    floating-point equality (safe because every coordinate comes from the
    same mirrored cosine evaluations) and their signed weights summed in a
    fixed term order, so the grid is deterministic.  Points come out in
    ascending lexicographic order.
    """
    if dim < 1:
        raise ConfigurationError(f"grid dimension must be >= 1, got {dim}")
    if not 1 <= level <= 3 * dim:
        raise ConfigurationError(
            f"sparse level must be in [1, {3 * dim}] for dimension {dim} (the "
            f"regime where total-order exactness 2*level+1 holds), got {level}"
        )
    if level + 1 > MAX_CC_LEVEL:
        raise ConfigurationError(
            f"sparse level {level} needs 1D Clenshaw-Curtis level {level + 1}, "
            f"above the cap of {MAX_CC_LEVEL}"
        )

    rules = {k: clenshaw_curtis_1d(k) for k in range(1, level + 2)}
    merged: dict[tuple[float, ...], float] = {}
    for shell in range(level + 1, level + dim + 1):
        coeff = (-1.0) ** (level + dim - shell) * math.comb(dim - 1, level + dim - shell)
        for k in _positive_compositions(shell, dim):
            node_axes = [rules[kj].nodes for kj in k]
            weight_axes = [rules[kj].weights for kj in k]
            for combo in itertools.product(*(range(len(axis)) for axis in node_axes)):
                point = tuple(node_axes[j][combo[j]] for j in range(dim))
                w = coeff
                for j in range(dim):
                    w *= weight_axes[j][combo[j]]
                merged[point] = merged.get(point, 0.0) + w
            if len(merged) > point_cap:
                raise ConfigurationError(
                    f"sparse grid at level {level} in dimension {dim} exceeds "
                    f"the cap of {point_cap} points"
                )

    ordered = sorted(merged.items())
    points = np.array([pt for pt, _ in ordered])
    weights = np.array([w for _, w in ordered])
    return GridQuadrature(dim, points, weights, {"method": "sparse-grid", "level": level})


def integrate(grid: GridQuadrature, f: Callable[[np.ndarray], float]) -> float:
    """Weighted sum of f over the grid points.

    Evaluation failures are re-raised with the offending point attached.
    The reduction runs in the stored point order, so the result is
    deterministic regardless of how f was evaluated.
    """
    values = np.empty(len(grid))
    for idx, point in enumerate(grid.points):
        try:
            values[idx] = f(point)
        except Exception as exc:
            raise EvaluationError(
                f"integrand evaluation failed at point {point.tolist()}: {exc}"
            ) from exc
    return float(values @ grid.weights)


def write_grid_csv(grid: GridQuadrature, dest: IO[str]) -> None:
    """Write one row per point: the coordinates, then the weight.

    All values use 17 significant digits, which round-trips doubles exactly.
    """
    dest.write(",".join([f"x{j + 1}" for j in range(grid.dim)] + ["weight"]) + "\n")
    for point, weight in zip(grid.points, grid.weights):
        cells = [format(c, ".17g") for c in point] + [format(weight, ".17g")]
        dest.write(",".join(cells) + "\n")
