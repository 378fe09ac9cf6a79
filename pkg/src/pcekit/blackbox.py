"""Uniform access to the expensive model: builtins, external processes, cache.

A ModelSpec binds either a registered builtin function or an external
command to declared input/output names.  The external protocol is CSV in,
CSV out: the command is launched once per batch, receives the input rows
(header = input names) either on a file path appended as its final argument
or on standard input, and must write the output rows (header = output
names) in the same order to standard output, exiting 0.  Failed launches
are retried once before erroring.

Evaluations are memoized in an append-only JSON-lines cache.  Keys combine
the spec fingerprint with the inputs rendered as decimal strings (17
significant digits), so regenerated grids hit the cache reliably; every
line carries a checksum, and corrupt lines are logged and treated as
misses, never returned as data.  The cache location can be forced with the
PCEKIT_CACHE environment variable.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import subprocess
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import polybasis
from .errors import ConfigurationError, EvaluationError

logger = logging.getLogger(__name__)

BUILTIN = "builtin"
EXTERNAL = "external"
IO_ARGFILE = "argfile"
IO_STDIN = "stdin"

FRESH = "fresh"
CACHED = "cached"

CACHE_ENV_VAR = "PCEKIT_CACHE"
DEFAULT_TIMEOUT_SECONDS = 3600.0

# The synthetic 4-input demonstration model; ranges for its bundled config.
CSG_PROXY_INPUTS = (
    ("fracture_porosity", 0.005, 0.05),
    ("fracture_permeability", 10.0, 1000.0),
    ("langmuir_pressure_reciprocal", 0.00017, 0.0003),
    ("langmuir_volume", 0.2, 1.0),
)
CSG_PROXY_OUTPUTS = ("cumulative_gas", "peak_gas")


@dataclass(frozen=True)
class ModelSpec:
    """Binding of a black-box model: a builtin by name, or an external command."""

    kind: str
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]
    name: str = ""
    parameters: Mapping = field(default_factory=dict)
    command: tuple[str, ...] = ()
    working_dir: str = "."
    io_format: str = IO_ARGFILE
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS

    def __post_init__(self) -> None:
        if self.kind not in (BUILTIN, EXTERNAL):
            raise ConfigurationError(f"model kind must be builtin or external, got {self.kind!r}")
        if not self.input_names:
            raise ConfigurationError("model needs at least one input name")
        if not self.output_names:
            raise ConfigurationError("model needs at least one output name")
        if self.kind == BUILTIN:
            if self.name not in BUILTIN_MODELS:
                raise ConfigurationError(
                    f"unknown builtin model {self.name!r}; "
                    f"registered: {sorted(BUILTIN_MODELS)}"
                )
        else:
            if not self.command:
                raise ConfigurationError("external model needs a non-empty command")
            if self.io_format not in (IO_ARGFILE, IO_STDIN):
                raise ConfigurationError(
                    f"io_format must be {IO_ARGFILE!r} or {IO_STDIN!r}, got {self.io_format!r}"
                )

    def fingerprint(self) -> str:
        """Stable hash of everything that determines the model's outputs."""
        payload = {
            "kind": self.kind,
            "name": self.name,
            "parameters": self.parameters,
            "command": list(self.command),
            "input_names": list(self.input_names),
            "output_names": list(self.output_names),
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class EvaluationRecord:
    """One model evaluation: inputs, outputs, and whether the cache served it."""

    input: tuple[float, ...]
    output: tuple[float, ...]
    source: str
    model_fingerprint: str


def _make_constant(spec: ModelSpec) -> Callable[[np.ndarray], np.ndarray]:
    values = spec.parameters.get("values")
    if isinstance(values, (int, float)):
        values = [values]
    if values is None or len(values) != len(spec.output_names):
        raise ConfigurationError(
            "constant model needs parameters.values with one number per output"
        )
    out = np.array([float(v) for v in values])
    return lambda point: out.copy()


def _make_polynomial(spec: ModelSpec) -> Callable[[np.ndarray], np.ndarray]:
    """A Legendre-combination polynomial over declared multi-index terms.

    parameters.terms is a list of {"orders": [...], "coefficients": [...]}
    with one coefficient per output; parameters.variables, when present,
    gives [min, max] per input for rescaling, otherwise inputs are taken to
    be on [-1, 1] already.  Matches the surrogate's own expansion form, so a
    polynomial built from a surrogate's coefficient map reproduces it.
    """
    dim = len(spec.input_names)
    n_out = len(spec.output_names)
    terms = spec.parameters.get("terms")
    if not isinstance(terms, list) or not terms:
        raise ConfigurationError("polynomial model needs a non-empty parameters.terms list")
    orders = []
    coefficients = []
    for term in terms:
        order = tuple(int(o) for o in term["orders"])
        coeff = [float(c) for c in term["coefficients"]]
        if len(order) != dim:
            raise ConfigurationError(
                f"polynomial term {order} does not match {dim} declared inputs"
            )
        if len(coeff) != n_out:
            raise ConfigurationError(
                f"polynomial term {order} needs one coefficient per output ({n_out})"
            )
        orders.append(order)
        coefficients.append(coeff)
    index_array = np.array(orders, dtype=int)
    coeff_array = np.array(coefficients)

    ranges = spec.parameters.get("variables")
    if ranges is not None:
        if len(ranges) != dim:
            raise ConfigurationError("polynomial parameters.variables must list one range per input")
        lo = np.array([float(r[0]) for r in ranges])
        hi = np.array([float(r[1]) for r in ranges])
        if np.any(lo >= hi):
            raise ConfigurationError("polynomial variable ranges must have min < max")
    else:
        lo = hi = None

    max_degrees = index_array.max(axis=0)

    def evaluate(point: np.ndarray) -> np.ndarray:
        xi = point if lo is None else 2.0 * (point - lo) / (hi - lo) - 1.0
        basis = np.ones(index_array.shape[0])
        for j in range(dim):
            table = polybasis.legendre_table(int(max_degrees[j]), xi[j])[0]
            basis *= table[index_array[:, j]]
        return basis @ coeff_array

    return evaluate


def _make_sobol_example_1(spec: ModelSpec) -> Callable[[np.ndarray], np.ndarray]:
    if len(spec.input_names) != 2 or len(spec.output_names) != 1:
        raise ConfigurationError("sobol-example-1 takes exactly 2 inputs and 1 output")
    return lambda point: np.array([point[0] ** 2 + point[1] ** 2])


def _make_sobol_example_2(spec: ModelSpec) -> Callable[[np.ndarray], np.ndarray]:
    if len(spec.input_names) != 2 or len(spec.output_names) != 1:
        raise ConfigurationError("sobol-example-2 takes exactly 2 inputs and 1 output")
    return lambda point: np.array([point[0] ** 3 + point[1]])


def _make_csg_proxy(spec: ModelSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Synthetic smooth stand-in for a coal-seam-gas reservoir simulator.

    Inputs, in order: fracture porosity, fracture permeability (mD),
    reciprocal Langmuir pressure (1/kPa), Langmuir volume (mol/kg).
    Outputs: cumulative gas and peak gas rate, both strictly positive.

    The formula is documented here in full and is NOT a reservoir model; it
    exists to exercise the pipeline end to end with a cheap analytic
    function that has plausible shape (saturating in permeability, a
    Langmuir-isotherm pressure factor, monotone non-decreasing in Langmuir
    volume by construction):

        release(b)    = b*2750 / (1 + b*2750) - b*101.3 / (1 + b*101.3)
        cumulative    = 1.6e8 * V_L * release(b)
                        * (0.3 + 0.7 * (1 - exp(-k / 250))) * exp(-3 * phi)
        peak          = 3.2e5 * (1 - exp(-k / 180))
                        * (0.35 + 0.65 * (1 - exp(-40 * phi)))
                        * (0.55 + 0.45 * V_L) * (1 + 0.1 * b * 2750)
    """
    if len(spec.input_names) != 4 or len(spec.output_names) != 2:
        raise ConfigurationError("csg-proxy takes exactly 4 inputs and 2 outputs")

    def evaluate(point: np.ndarray) -> np.ndarray:
        porosity, permeability, inv_pressure, volume = point
        release = (
            inv_pressure * 2750.0 / (1.0 + inv_pressure * 2750.0)
            - inv_pressure * 101.3 / (1.0 + inv_pressure * 101.3)
        )
        cumulative = (
            1.6e8
            * volume
            * release
            * (0.3 + 0.7 * (1.0 - math.exp(-permeability / 250.0)))
            * math.exp(-3.0 * porosity)
        )
        peak = (
            3.2e5
            * (1.0 - math.exp(-permeability / 180.0))
            * (0.35 + 0.65 * (1.0 - math.exp(-40.0 * porosity)))
            * (0.55 + 0.45 * volume)
            * (1.0 + 0.1 * inv_pressure * 2750.0)
        )
        return np.array([cumulative, peak])

    return evaluate


BUILTIN_MODELS: dict[str, Callable[[ModelSpec], Callable[[np.ndarray], np.ndarray]]] = {
    "constant": _make_constant,
    "polynomial": _make_polynomial,
    "sobol-example-1": _make_sobol_example_1,
    "sobol-example-2": _make_sobol_example_2,
    "csg-proxy": _make_csg_proxy,
}


def builtin_function(spec: ModelSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Resolve a builtin spec to its (pure, deterministic) point function."""
    if spec.kind != BUILTIN:
        raise ConfigurationError("builtin_function requires a builtin model spec")
    return BUILTIN_MODELS[spec.name](spec)


def render_value(v: float) -> str:
    """Canonical decimal rendering used in cache keys and cache records."""
    return format(float(v), ".17g")


def _record_checksum(fingerprint: str, inputs: list[str], outputs: list[str]) -> str:
    payload = json.dumps(
        {"fingerprint": fingerprint, "inputs": inputs, "outputs": outputs},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def resolve_cache_path(configured: str | os.PathLike | None) -> Path | None:
    """Configured cache path, unless the environment variable overrides it."""
    override = os.environ.get(CACHE_ENV_VAR)
    if override:
        return Path(override)
    return Path(configured) if configured is not None else None


class EvaluationCache:
    """Append-only, checksummed JSON-lines store of model evaluations.

    Each line is {"fingerprint", "inputs", "outputs", "checksum"} with the
    numbers as canonical decimal strings.  The in-memory index is loaded
    once at construction; appends are serialized through a lock so batch
    workers can share one cache.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[str, tuple[float, ...]] = {}
        self.corrupt_lines = 0
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    fingerprint = record["fingerprint"]
                    inputs = record["inputs"]
                    outputs = record["outputs"]
                    checksum = record["checksum"]
                    if _record_checksum(fingerprint, inputs, outputs) != checksum:
                        raise ValueError("checksum mismatch")
                    key = fingerprint + "|" + ",".join(inputs)
                    self._index[key] = tuple(float(v) for v in outputs)
                except (ValueError, KeyError, TypeError) as exc:
                    self.corrupt_lines += 1
                    logger.warning(
                        "cache %s line %d is corrupt (%s); treating as a miss",
                        self.path, lineno, exc,
                    )

    def __len__(self) -> int:
        return len(self._index)

    @staticmethod
    def point_key(fingerprint: str, values: Sequence[float]) -> str:
        return fingerprint + "|" + ",".join(render_value(v) for v in values)

    def lookup(self, fingerprint: str, values: Sequence[float]) -> tuple[float, ...] | None:
        return self._index.get(self.point_key(fingerprint, values))

    def store(self, fingerprint: str, values: Sequence[float], outputs: Sequence[float]) -> None:
        inputs = [render_value(v) for v in values]
        rendered = [render_value(v) for v in outputs]
        record = {
            "fingerprint": fingerprint,
            "inputs": inputs,
            "outputs": rendered,
            "checksum": _record_checksum(fingerprint, inputs, rendered),
        }
        line = json.dumps(record, separators=(",", ":")) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(line)
            self._index[fingerprint + "|" + ",".join(inputs)] = tuple(
                float(v) for v in rendered
            )

    def verify(self) -> tuple[int, int]:
        """Re-scan the file; returns (valid_lines, corrupt_lines)."""
        valid = corrupt = 0
        if not self.path.exists():
            return 0, 0
        with open(self.path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    expected = _record_checksum(
                        record["fingerprint"], record["inputs"], record["outputs"]
                    )
                    if record["checksum"] != expected:
                        raise ValueError
                    valid += 1
                except (ValueError, KeyError, TypeError):
                    corrupt += 1
        return valid, corrupt


def _write_input_csv(handle, names: Sequence[str], points: np.ndarray) -> None:
    writer = csv.writer(handle)
    writer.writerow(names)
    for row in points:
        writer.writerow([render_value(v) for v in row])


def _parse_output_csv(text: str, output_names: Sequence[str], expected_rows: int) -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows:
        raise EvaluationError("external model wrote no output")
    header = [cell.strip() for cell in rows[0]]
    if header != list(output_names):
        raise EvaluationError(
            f"external model output header {header} does not match "
            f"declared outputs {list(output_names)}"
        )
    data = rows[1:]
    if len(data) != expected_rows:
        raise EvaluationError(
            f"external model wrote {len(data)} rows for {expected_rows} input points"
        )
    try:
        return np.array([[float(cell) for cell in row] for row in data])
    except ValueError as exc:
        raise EvaluationError(f"external model wrote a non-numeric value: {exc}") from exc


def _launch_external(spec: ModelSpec, points: np.ndarray) -> np.ndarray:
    buffer = io.StringIO()
    _write_input_csv(buffer, spec.input_names, points)
    csv_text = buffer.getvalue()

    command = list(spec.command)
    stdin_text = None
    temp_path = None
    try:
        if spec.io_format == IO_ARGFILE:
            fd, temp_path = tempfile.mkstemp(prefix="pcekit_batch_", suffix=".csv")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(csv_text)
            command = command + [temp_path]
        else:
            stdin_text = csv_text
        try:
            proc = subprocess.run(
                command,
                input=stdin_text,
                capture_output=True,
                text=True,
                cwd=spec.working_dir,
                timeout=spec.timeout_seconds,
            )
        except subprocess.TimeoutExpired as exc:
            raise EvaluationError(
                f"external model timed out after {spec.timeout_seconds} s "
                f"(command: {command[0]})"
            ) from exc
        except OSError as exc:
            raise EvaluationError(f"external model could not be launched: {exc}") from exc
        if proc.returncode != 0:
            excerpt = (proc.stderr or "").strip()[:500]
            raise EvaluationError(
                f"external model exited with code {proc.returncode}; stderr: {excerpt!r}"
            )
        outputs = _parse_output_csv(proc.stdout, spec.output_names, len(points))
        if not np.all(np.isfinite(outputs)):
            raise EvaluationError("external model wrote a non-finite value")
        return outputs
    finally:
        if temp_path is not None:
            try:
                os.unlink(temp_path)
            except OSError:
                pass


def _run_external_batch(spec: ModelSpec, points: np.ndarray, workers: int) -> np.ndarray:
    """Launch the external command over the points, retrying each launch once.

    With workers == 1 the whole batch goes through a single launch; more
    workers split it into that many contiguous chunks run concurrently.
    """

    def run_chunk(chunk: np.ndarray) -> np.ndarray:
        try:
            return _launch_external(spec, chunk)
        except EvaluationError as exc:
            logger.warning("external model failed (%s); retrying once", exc)
            return _launch_external(spec, chunk)

    if workers <= 1 or len(points) <= 1:
        return run_chunk(points)
    chunk_count = min(workers, len(points))
    chunks = np.array_split(points, chunk_count)
    with ThreadPoolExecutor(max_workers=chunk_count) as pool:
        results = list(pool.map(run_chunk, chunks))
    return np.vstack(results)


def evaluate_batch(
    spec: ModelSpec,
    points,
    *,
    cache: EvaluationCache | None = None,
    workers: int = 1,
) -> list[EvaluationRecord]:
    """Evaluate the model at each point, in order, through the cache.

    Cache hits are returned bit-identically to the original evaluation;
    misses are computed (builtin call or external launch) and appended to
    the cache before returning.  Builtin failures are reported per point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != len(spec.input_names):
        raise ConfigurationError(
            f"points have {points.shape[1]} columns but the model declares "
            f"{len(spec.input_names)} inputs"
        )
    fingerprint = spec.fingerprint()
    records: list[EvaluationRecord | None] = [None] * len(points)
    miss_rows: list[int] = []
    for i, point in enumerate(points):
        hit = cache.lookup(fingerprint, point) if cache is not None else None
        if hit is not None:
            records[i] = EvaluationRecord(tuple(point), hit, CACHED, fingerprint)
        else:
            miss_rows.append(i)

    if miss_rows:
        miss_points = points[miss_rows]
        if spec.kind == BUILTIN:
            func = builtin_function(spec)
            outputs = np.empty((len(miss_rows), len(spec.output_names)))
            for r, point in enumerate(miss_points):
                try:
                    value = np.asarray(func(point), dtype=float)
                except Exception as exc:
                    raise EvaluationError(
                        f"builtin model {spec.name!r} failed at point "
                        f"{point.tolist()}: {exc}"
                    ) from exc
                if value.shape != (len(spec.output_names),) or not np.all(np.isfinite(value)):
                    raise EvaluationError(
                        f"builtin model {spec.name!r} returned an invalid value at "
                        f"point {point.tolist()}"
                    )
                outputs[r] = value
        else:
            outputs = _run_external_batch(spec, miss_points, workers)
        for r, i in enumerate(miss_rows):
            if cache is not None:
                cache.store(fingerprint, points[i], outputs[r])
                stored = cache.lookup(fingerprint, points[i])
            else:
                stored = tuple(float(v) for v in outputs[r])
            records[i] = EvaluationRecord(tuple(points[i]), stored, FRESH, fingerprint)
    return records  # type: ignore[return-value]


def outputs_array(records: Sequence[EvaluationRecord]) -> np.ndarray:
    """Stack record outputs into an (M, outputs) array."""
    return np.array([record.output for record in records])


class BlackBoxModel:
    """Callable adapter: (points, dim) physical array -> (points, outputs) array.

    Wraps a spec plus an optional shared cache, counts fresh and cached
    evaluations, and exposes the spec fingerprint for build metadata.
    Instances are safe to call from several threads; counters are summed
    under a lock.
    """

    def __init__(
        self,
        spec: ModelSpec,
        cache: EvaluationCache | None = None,
        workers: int = 1,
    ):
        self.spec = spec
        self.cache = cache
        self.workers = workers
        self.fingerprint = spec.fingerprint()
        self.fresh_count = 0
        self.cached_count = 0
        self._lock = threading.Lock()

    def __call__(self, points) -> np.ndarray:
        records = evaluate_batch(self.spec, points, cache=self.cache, workers=self.workers)
        fresh = sum(1 for r in records if r.source == FRESH)
        with self._lock:
            self.fresh_count += fresh
            self.cached_count += len(records) - fresh
        return outputs_array(records)
