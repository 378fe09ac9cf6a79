"""Polynomial chaos surrogates: build, evaluate, moments, persistence.

A surrogate approximates a black-box model as a sum of coefficient vectors
times tensor-product Legendre polynomials over a multi-index neighbourhood.
Coefficients are computed non-intrusively, by quadrature projection:

    c_i = prod_j((2 i_j + 1) / 2) * sum_q  M(x_q) * prod_j L_{i_j}(xi_q_j) * w_q

with one model evaluation per grid point, shared by every coefficient and
every output.  The grid and the neighbourhood are linked: a full
Gauss-Legendre grid of order p serves a tensor-product neighbourhood of
order p, a sparse Clenshaw-Curtis grid of level l serves a total-order
neighbourhood of order l; in both cases the quadrature integrates the
projection integrand exactly when the model itself is a polynomial over the
neighbourhood.

Physical inputs live on [min, max] ranges and are rescaled to [-1, 1]
internally; the black box is always called in physical units.
"""
from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import multiindex, polybasis, quadrature
from .errors import ConfigurationError, ModelFormatError

MODEL_SCHEMA = "pcekit/pce-model"
MODEL_SCHEMA_VERSION = 1

# Coefficients below this relative threshold are quadrature noise; storing
# exact zeros keeps serialized models stable.
COEFFICIENT_SNAP = 1e-14

FULL_GRID = "full-grid"
SPARSE_GRID = "sparse-grid"


@dataclass(frozen=True)
class FullGrid:
    """Build method: full Gauss-Legendre grid serving order-p tensor neighbourhood."""

    order: int


@dataclass(frozen=True)
class SparseGrid:
    """Build method: sparse Clenshaw-Curtis grid serving level-l total-order neighbourhood."""

    level: int


@dataclass(frozen=True)
class InputVariable:
    """An uncertain input, uniform over [v_min, v_max]."""

    name: str
    v_min: float
    v_max: float
    distribution: str = "uniform"

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigurationError("input variable needs a non-empty name")
        if self.distribution != "uniform":
            raise ConfigurationError(
                f"variable {self.name!r}: only the uniform distribution is supported, "
                f"got {self.distribution!r}"
            )
        if not (np.isfinite(self.v_min) and np.isfinite(self.v_max)):
            raise ConfigurationError(f"variable {self.name!r}: range must be finite")
        if not self.v_min < self.v_max:
            raise ConfigurationError(
                f"variable {self.name!r}: range minimum {self.v_min} must be "
                f"strictly below maximum {self.v_max}"
            )


def rescale(v: float, var: InputVariable) -> float:
    """Map a physical value onto [-1, 1]: (2v - max - min) / (max - min).

    Exactly -1 at v_min and +1 at v_max; values outside the range map
    outside [-1, 1] (caller's policy).
    """
    return 2.0 * (v - var.v_min) / (var.v_max - var.v_min) - 1.0


def unscale(xi: float, var: InputVariable) -> float:
    """Inverse of rescale: -1 maps to v_min, +1 to v_max."""
    return var.v_min + 0.5 * (xi + 1.0) * (var.v_max - var.v_min)


def rescale_points(values: np.ndarray, inputs: Sequence[InputVariable]) -> np.ndarray:
    """Columnwise rescale of an (M, N) physical array onto [-1, 1]^N."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[1] != len(inputs):
        raise ConfigurationError(
            f"points have {values.shape[1]} columns but {len(inputs)} inputs are declared"
        )
    out = np.empty_like(values)
    for j, var in enumerate(inputs):
        out[:, j] = 2.0 * (values[:, j] - var.v_min) / (var.v_max - var.v_min) - 1.0
    return out


def unscale_points(xi: np.ndarray, inputs: Sequence[InputVariable]) -> np.ndarray:
    """Columnwise inverse of rescale_points."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if xi.shape[1] != len(inputs):
        raise ConfigurationError(
            f"points have {xi.shape[1]} columns but {len(inputs)} inputs are declared"
        )
    out = np.empty_like(xi)
    for j, var in enumerate(inputs):
        out[:, j] = var.v_min + 0.5 * (xi[:, j] + 1.0) * (var.v_max - var.v_min)
    return out


def _basis_matrix(index_array: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Evaluate every tensor-product basis function at every point.

    index_array is (terms, dim) of degrees, xi is (points, dim) in
    [-1, 1]^dim; the result is (points, terms).
    """
    n_points, dim = xi.shape
    out = np.ones((n_points, index_array.shape[0]))
    for j in range(dim):
        table = polybasis.legendre_table(int(index_array[:, j].max()), xi[:, j])
        out *= table[:, index_array[:, j]]
    return out


@dataclass
class PceModel:
    """A built surrogate: inputs, outputs, neighbourhood, and coefficients.

    `indices` is the graded-lex enumeration of the neighbourhood (the
    all-zero index first) and `coefficients` the matching (terms, outputs)
    array.  Instances are treated as immutable after construction.
    """

    inputs: list[InputVariable]
    output_names: list[str]
    neighborhood: multiindex.Neighborhood
    indices: list[tuple[int, ...]]
    coefficients: np.ndarray
    build_meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        n = len(self.inputs)
        if self.neighborhood.dim != n:
            raise ConfigurationError(
                f"neighbourhood dimension {self.neighborhood.dim} does not match "
                f"{n} declared inputs"
            )
        if len(self.indices) != multiindex.cardinality(self.neighborhood):
            raise ConfigurationError(
                "coefficient table does not cover the neighbourhood: "
                f"{len(self.indices)} entries for "
                f"{multiindex.cardinality(self.neighborhood)} members"
            )
        if any(not multiindex.contains(self.neighborhood, idx) for idx in self.indices):
            raise ConfigurationError("coefficient table has an index outside the neighbourhood")
        if self.coefficients.shape != (len(self.indices), len(self.output_names)):
            raise ConfigurationError(
                f"coefficient array shape {self.coefficients.shape} does not match "
                f"{len(self.indices)} indices x {len(self.output_names)} outputs"
            )
        self._index_array = np.array(self.indices, dtype=int)
        self._tensor_coefficients: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.inputs)

    @property
    def coefficient_map(self) -> dict[tuple[int, ...], np.ndarray]:
        """Read-only view of the coefficients keyed by multi-index."""
        return {idx: self.coefficients[t].copy() for t, idx in enumerate(self.indices)}

    def basis_norms(self) -> np.ndarray:
        """Per-term squared norms: prod_j 1 / (2 i_j + 1)."""
        return np.prod(1.0 / (2.0 * self._index_array + 1.0), axis=1)

    def evaluate(self, v: Sequence[float]) -> np.ndarray:
        """Evaluate the surrogate at one physical point: one value per output."""
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.size != self.dim:
            raise ConfigurationError(
                f"expected a point with {self.dim} coordinates, got shape {v.shape}"
            )
        return self.evaluate_batch(v[None, :])[0]

    def _tensor_layout(self) -> np.ndarray:
        """Coefficients rearranged into C-order tensor layout, lazily cached.

        Only valid for tensor-product neighbourhoods, where the terms fill
        the whole (order+1)^dim block.
        """
        if self._tensor_coefficients is None:
            shape = (self.neighborhood.order + 1,) * self.dim
            flat = np.ravel_multi_index(self._index_array.T, shape)
            dense = np.empty((len(self.indices), len(self.output_names)))
            dense[flat] = self.coefficients
            self._tensor_coefficients = dense
        return self._tensor_coefficients

    def _evaluate_tensor_chunk(self, xi: np.ndarray) -> np.ndarray:
        """Tensor-product evaluation via one GEMM.

        Splits the dimensions in two halves A|B, forms per-point Kronecker
        rows W_A and W_B of the 1D Legendre tables, and contracts
        out = W_B . (W_A @ C) with C reshaped to (|A| block, |B| block *
        outputs).  Much faster than gathering a full basis matrix when the
        term count is large.
        """
        tables = [
            polybasis.legendre_table(self.neighborhood.order, xi[:, j])
            for j in range(self.dim)
        ]

        def kron_rows(columns: list[np.ndarray]) -> np.ndarray:
            acc = columns[0]
            for table in columns[1:]:
                acc = np.einsum("ma,mb->mab", acc, table).reshape(xi.shape[0], -1)
            return acc

        split = (self.dim + 1) // 2
        w_a = kron_rows(tables[:split])
        n_out = len(self.output_names)
        dense = self._tensor_layout()
        if split == self.dim:
            return w_a @ dense
        w_b = kron_rows(tables[split:])
        partial = w_a @ dense.reshape(w_a.shape[1], w_b.shape[1] * n_out)
        return np.einsum(
            "mb,mbo->mo", w_b, partial.reshape(xi.shape[0], w_b.shape[1], n_out)
        )

    def evaluate_batch(self, points: np.ndarray, *, chunk_size: int | None = None) -> np.ndarray:
        """Evaluate the surrogate at many physical points, (M, outputs).

        Work is chunked so transient arrays stay within a few tens of MB
        regardless of M; tensor-product neighbourhoods take a GEMM-based
        fast path.
        """
        xi = rescale_points(points, self.inputs)
        n_terms = len(self.indices)
        tensor_path = self.neighborhood.kind == multiindex.TENSOR_PRODUCT and n_terms > 64
        if chunk_size is None:
            chunk_size = max(1, 8_000_000 // max(1, n_terms)) if not tensor_path else 65536
        out = np.empty((xi.shape[0], len(self.output_names)))
        for start in range(0, xi.shape[0], chunk_size):
            block = xi[start:start + chunk_size]
            if tensor_path:
                out[start:start + block.shape[0]] = self._evaluate_tensor_chunk(block)
            else:
                out[start:start + block.shape[0]] = (
                    _basis_matrix(self._index_array, block) @ self.coefficients
                )
        return out

    def mean(self) -> np.ndarray:
        """Analytic mean per output: the constant-term coefficient."""
        return self.coefficients[0].copy()

    def variance(self) -> np.ndarray:
        """Analytic variance per output: sum of squared coefficients times norms,
        minus the squared mean."""
        norms = self.basis_norms()
        return norms @ (self.coefficients**2) - self.coefficients[0] ** 2

    def std_dev(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.variance(), 0.0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PceModel):
            return NotImplemented
        return (
            self.inputs == other.inputs
            and self.output_names == other.output_names
            and self.neighborhood == other.neighborhood
            and self.indices == other.indices
            and np.array_equal(self.coefficients, other.coefficients)
            and self.build_meta == other.build_meta
        )


def _method_pieces(
    method: FullGrid | SparseGrid, dim: int, point_cap: int
) -> tuple[multiindex.Neighborhood, quadrature.GridQuadrature, str, int]:
    if isinstance(method, FullGrid):
        nbhd = multiindex.Neighborhood(multiindex.TENSOR_PRODUCT, method.order, dim)
        grid = quadrature.full_grid(dim, method.order, point_cap=point_cap)
        return nbhd, grid, FULL_GRID, method.order
    if isinstance(method, SparseGrid):
        nbhd = multiindex.Neighborhood(multiindex.TOTAL_ORDER, method.level, dim)
        grid = quadrature.sparse_grid(dim, method.level, point_cap=point_cap)
        return nbhd, grid, SPARSE_GRID, method.level
    raise ConfigurationError(f"unknown build method {method!r}")


def build_pce(
    model: Callable[[np.ndarray], np.ndarray],
    inputs: Sequence[InputVariable],
    output_names: Sequence[str],
    method: FullGrid | SparseGrid,
    *,
    point_cap: int = quadrature.POINT_COUNT_CAP,
    model_identity: str | None = None,
    record_timestamp: bool = True,
) -> PceModel:
    """Build a surrogate by quadrature projection against a black box.

    `model` is called once, with the full (points, dim) array of grid points
    in physical units, and must return a (points, outputs) array (a 1D array
    is accepted for a single output).  Evaluation failures raised by the
    model propagate and abort the build.
    """
    inputs = list(inputs)
    output_names = list(output_names)
    if not inputs:
        raise ConfigurationError("at least one input variable is required")
    if not output_names:
        raise ConfigurationError("at least one output name is required")
    if len(set(var.name for var in inputs)) != len(inputs):
        raise ConfigurationError("input variable names must be unique")
    if len(set(output_names)) != len(output_names):
        raise ConfigurationError("output names must be unique")

    nbhd, grid, method_name, parameter = _method_pieces(method, len(inputs), point_cap)
    indices = multiindex.enumerate_indices(nbhd)
    index_array = np.array(indices, dtype=int)

    physical = unscale_points(grid.points, inputs)
    outputs = np.asarray(model(physical), dtype=float)
    if outputs.ndim == 1:
        outputs = outputs[:, None]
    if outputs.shape != (len(grid), len(output_names)):
        raise ConfigurationError(
            f"model returned shape {outputs.shape}, expected "
            f"({len(grid)}, {len(output_names)})"
        )

    basis = _basis_matrix(index_array, grid.points)
    prefactor = np.prod((2.0 * index_array + 1.0) / 2.0, axis=1)
    coefficients = prefactor[:, None] * (basis.T @ (grid.weights[:, None] * outputs))

    for col in range(coefficients.shape[1]):
        scale = np.max(np.abs(coefficients[:, col]))
        if scale > 0.0:
            coefficients[np.abs(coefficients[:, col]) < COEFFICIENT_SNAP * scale, col] = 0.0

    if model_identity is None:
        model_identity = getattr(model, "fingerprint", None)
    build_meta = {
        "method": method_name,
        "parameter": parameter,
        "evaluation_count": len(grid),
        "model_identity": model_identity,
        "timestamp": (
            _dt.datetime.now(_dt.timezone.utc).isoformat() if record_timestamp else None
        ),
    }
    return PceModel(inputs, output_names, nbhd, indices, coefficients, build_meta)


def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def save(model: PceModel, dest) -> None:
    """Write the model as a versioned JSON document.

    All floating-point values are serialized as decimal strings with 17
    significant digits, which reproduce the doubles bit-for-bit on load.
    `dest` is a path or an open text file.
    """
    doc = {
        "schema": MODEL_SCHEMA,
        "schema_version": MODEL_SCHEMA_VERSION,
        "inputs": [
            {
                "name": var.name,
                "min": _format_float(var.v_min),
                "max": _format_float(var.v_max),
                "distribution": var.distribution,
            }
            for var in model.inputs
        ],
        "output_names": list(model.output_names),
        "neighborhood": {
            "kind": model.neighborhood.kind,
            "order": model.neighborhood.order,
            "dim": model.neighborhood.dim,
        },
        "coefficients": {
            ",".join(map(str, idx)): [_format_float(c) for c in model.coefficients[t]]
            for t, idx in enumerate(model.indices)
        },
        "build_meta": model.build_meta,
    }
    text = json.dumps(doc, indent=2)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as handle:
            handle.write(text)


def _require(doc: dict, key: str, kind) -> object:
    if key not in doc:
        raise ModelFormatError(f"model document is missing the {key!r} field")
    value = doc[key]
    if not isinstance(value, kind):
        raise ModelFormatError(f"model field {key!r} has the wrong type: {type(value).__name__}")
    return value


def load(source) -> PceModel:
    """Read a model written by save(); the round trip compares equal.

    Raises ModelFormatError naming the offending field for malformed or
    truncated documents, and an explicit version error for documents
    written by a future schema.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as handle:
            text = handle.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")

    schema = _require(doc, "schema", str)
    if schema != MODEL_SCHEMA:
        raise ModelFormatError(f"unexpected schema id {schema!r}, wanted {MODEL_SCHEMA!r}")
    version = _require(doc, "schema_version", int)
    if version > MODEL_SCHEMA_VERSION:
        raise ModelFormatError(
            f"model schema_version {version} is newer than the supported "
            f"version {MODEL_SCHEMA_VERSION}"
        )

    try:
        inputs = [
            InputVariable(
                name=entry["name"],
                v_min=float(entry["min"]),
                v_max=float(entry["max"]),
                distribution=entry.get("distribution", "uniform"),
            )
            for entry in _require(doc, "inputs", list)
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model field 'inputs' is malformed: {exc}") from exc

    nb = _require(doc, "neighborhood", dict)
    try:
        neighborhood = multiindex.Neighborhood(nb["kind"], int(nb["order"]), int(nb["dim"]))
    except (KeyError, TypeError, ValueError, ConfigurationError) as exc:
        raise ModelFormatError(f"model field 'neighborhood' is malformed: {exc}") from exc

    output_names = [str(name) for name in _require(doc, "output_names", list)]
    raw_coeffs = _require(doc, "coefficients", dict)
    indices: list[tuple[int, ...]] = []
    rows: list[list[float]] = []
    try:
        for key, values in raw_coeffs.items():
            indices.append(tuple(int(part) for part in key.split(",")))
            rows.append([float(v) for v in values])
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"model field 'coefficients' is malformed: {exc}") from exc

    build_meta = _require(doc, "build_meta", dict)
    try:
        return PceModel(inputs, output_names, neighborhood, indices, np.array(rows), build_meta)
    except ConfigurationError as exc:
        raise ModelFormatError(f"model document is inconsistent: {exc}") from exc
