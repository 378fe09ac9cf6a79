"""Multi-index neighbourhoods: enumeration and cardinality.

A multi-index is a tuple of per-dimension polynomial degrees.  Two families
of neighbourhoods are supported:

* total-order:    all indices whose component sum is at most p;
* tensor-product: all indices whose every component is at most p.

Enumeration is in graded-lexicographic order (sorted by component sum,
ties broken lexicographically) so that coefficient vectors, serialized
models, and test goldens are reproducible, with the all-zero index always
first.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import ConfigurationError

TOTAL_ORDER = "total-order"
TENSOR_PRODUCT = "tensor-product"

# Reject configurations that would enumerate absurdly many indices before
# any memory is committed.
INDEX_COUNT_CAP = 10_000_000


@dataclass(frozen=True)
class Neighborhood:
    """A family of multi-indices of a given kind, order, and dimension."""

    kind: str
    order: int
    dim: int

    def __post_init__(self) -> None:
        if self.kind not in (TOTAL_ORDER, TENSOR_PRODUCT):
            raise ConfigurationError(
                f"unknown neighbourhood kind {self.kind!r}; "
                f"expected {TOTAL_ORDER!r} or {TENSOR_PRODUCT!r}"
            )
        if self.order < 0:
            raise ConfigurationError(f"neighbourhood order must be >= 0, got {self.order}")
        if self.dim < 1:
            raise ConfigurationError(f"neighbourhood dim must be >= 1, got {self.dim}")


def cardinality(nbhd: Neighborhood, *, cap: int = INDEX_COUNT_CAP) -> int:
    """Number of members, from the closed forms C(p+N, N) and (p+1)^N.

    Python integers do not overflow, so the count is exact; counts above
    `cap` are rejected to catch runaway configurations early.
    """
    if nbhd.kind == TOTAL_ORDER:
        count = math.comb(nbhd.order + nbhd.dim, nbhd.dim)
    else:
        count = (nbhd.order + 1) ** nbhd.dim
    if count > cap:
        raise ConfigurationError(
            f"{nbhd.kind} neighbourhood with order {nbhd.order} in dimension "
            f"{nbhd.dim} has {count} members, above the cap of {cap}"
        )
    return count


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of `parts` non-negative integers summing to `total`, in
    ascending lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_indices(nbhd: Neighborhood, *, cap: int = INDEX_COUNT_CAP) -> list[tuple[int, ...]]:
    """All members of the neighbourhood, each exactly once, in graded-lex order.

    The sequence is deterministic: two calls with equal arguments return
    identical lists.
    """
    count = cardinality(nbhd, cap=cap)
    if nbhd.kind == TOTAL_ORDER:
        out: list[tuple[int, ...]] = []
        for total in range(nbhd.order + 1):
            out.extend(_compositions(total, nbhd.dim))
    else:
        out = sorted(
            itertools.product(range(nbhd.order + 1), repeat=nbhd.dim),
            key=lambda idx: (sum(idx), idx),
        )
    assert len(out) == count
    return out


def contains(nbhd: Neighborhood, index: Sequence[int]) -> bool:
    """Membership test without enumeration."""
    idx = tuple(index)
    if len(idx) != nbhd.dim or any(component < 0 for component in idx):
        return False
    if nbhd.kind == TOTAL_ORDER:
        return sum(idx) <= nbhd.order
    return max(idx) <= nbhd.order
