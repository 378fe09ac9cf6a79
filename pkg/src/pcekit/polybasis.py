"""Legendre basis for uniformly distributed inputs on [-1, 1].

Univariate polynomials are generated with the three-term recurrence

    L_0(x) = 1,   L_1(x) = x,
    (n + 1) L_{n+1}(x) = (2n + 1) x L_n(x) - n L_{n-1}(x),

and are orthogonal with respect to the uniform density 1/2 on [-1, 1]:
the inner product of L_i with L_j is 1/(2i + 1) when i == j and 0
otherwise.  Multivariate basis functions are tensor products of the
univariate polynomials, one factor per input dimension, identified by a
multi-index of per-dimension degrees.

Only the Legendre/uniform pairing is implemented.  Bases for other input
distributions (Hermite for normal, Laguerre for exponential, ...) are a
documented extension point, not provided here.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ConfigurationError

# Guards against runaway configuration (e.g. an order/level typo); degrees
# used in practice stay far below this.
DEGREE_CAP = 64


def _check_degree(n: int, degree_cap: int) -> None:
    if n < 0:
        raise ConfigurationError(f"polynomial degree must be >= 0, got {n}")
    if n > degree_cap:
        raise ConfigurationError(
            f"polynomial degree {n} exceeds the cap of {degree_cap}; "
            "raise degree_cap explicitly if this is intentional"
        )


def legendre_eval(n: int, x, *, degree_cap: int = DEGREE_CAP):
    """Evaluate the Legendre polynomial L_n at x.

    Uses the upward three-term recurrence in double precision, accurate to
    near machine precision for the moderate degrees used here.  `x` may be
    a scalar or an ndarray; values slightly outside [-1, 1] are evaluated
    as-is (the polynomial is total on the reals).
    """
    _check_degree(n, degree_cap)
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)

    prev = np.ones_like(arr)
    if n == 0:
        return float(prev[0]) if scalar else prev
    cur = arr.copy()
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1) * arr * cur - k * prev) / (k + 1)
    return float(cur[0]) if scalar else cur


def legendre_table(max_degree: int, x, *, degree_cap: int = DEGREE_CAP) -> np.ndarray:
    """Evaluate L_0 .. L_max_degree at each x, as a (len(x), max_degree + 1) array.

    One recurrence pass shared by all degrees; used on hot paths where many
    degrees are needed at the same points.
    """
    _check_degree(max_degree, degree_cap)
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    table = np.empty((arr.size, max_degree + 1))
    table[:, 0] = 1.0
    if max_degree == 0:
        return table
    table[:, 1] = arr
    for k in range(1, max_degree):
        table[:, k + 1] = ((2 * k + 1) * arr * table[:, k] - k * table[:, k - 1]) / (k + 1)
    return table


def legendre_norm(n: int, *, degree_cap: int = DEGREE_CAP) -> float:
    """Squared norm of L_n under the uniform weight 1/2: equals 1/(2n + 1)."""
    _check_degree(n, degree_cap)
    return 1.0 / (2 * n + 1)


def eval_basis_product(index: Sequence[int], point: Sequence[float]) -> float:
    """Evaluate the tensor-product basis function: the product of L_{i_j}(x_j).

    `index` holds the per-dimension degrees; `point` the coordinates.  Both
    must have the same length.
    """
    idx = tuple(index)
    pt = np.asarray(point, dtype=float)
    if len(idx) != pt.size:
        raise ConfigurationError(
            f"multi-index has {len(idx)} components but the point has {pt.size}"
        )
    value = 1.0
    for degree, coord in zip(idx, pt):
        value *= legendre_eval(degree, float(coord))
    return value
