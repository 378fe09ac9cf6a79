"""Latin hypercube designs, validation metrics, and empirical summaries.

Random numbers come from numpy's PCG64 generator, seeded explicitly, so any
design is reproducible bit-for-bit from its seed.  Percentiles use linear
interpolation between order statistics at position h = (n - 1) q + 1 (the
widespread "type 7" convention); the choice is deliberate and recorded here
because goldens depend on it.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

import numpy as np

ANALYTIC = "analytic"
EMPIRICAL = "empirical"


@dataclass(frozen=True)
class LhsDesign:
    """One or more stratified designs on [-1, 1]^dim, concatenated.

    Within each design, every dimension has exactly one point in each of
    the `strata` equal-width bins [-1 + 2k/n, -1 + 2(k+1)/n).
    """

    strata: int
    dim: int
    repeats: int
    seed: int
    points: np.ndarray


def latin_hypercube(strata: int, dim: int, repeats: int = 1, seed: int = 0) -> LhsDesign:
    """Generate `repeats` independent Latin hypercube designs of `strata` points.

    Per design and dimension, the strata are visited in a random permutation
    and the point sits uniformly at random inside its stratum.  The draw
    order (designs outer, dimensions inner, permutation before offsets) is
    part of the reproducibility contract.
    """
    if strata < 1:
        raise ValueError(f"strata count must be >= 1, got {strata}")
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    rng = np.random.Generator(np.random.PCG64(seed))
    points = np.empty((strata * repeats, dim))
    for r in range(repeats):
        block = points[r * strata:(r + 1) * strata]
        for j in range(dim):
            cells = rng.permutation(strata)
            offsets = rng.random(strata)
            block[:, j] = -1.0 + 2.0 * (cells + offsets) / strata
    return LhsDesign(strata, dim, repeats, seed, points)


def rmse(predictions: Sequence[float], truths: Sequence[float]) -> float:
    """Root mean square difference between two equal-length vectors."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(truths, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("rmse of empty vectors is undefined")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def rrmse(predictions: Sequence[float], truths: Sequence[float]) -> float:
    """Root mean square of the relative differences (p - t) / t.

    Dimensionless; every truth value must be bounded away from zero.
    """
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(truths, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("rrmse of empty vectors is undefined")
    bad = np.nonzero(np.abs(t) < 1e-300)[0]
    if bad.size:
        raise ValueError(f"rrmse undefined: truth value at index {bad[0]} is zero")
    return float(np.sqrt(np.mean(((p - t) / t) ** 2)))


@dataclass(frozen=True)
class SummaryStats:
    """Mean, spread, and standard percentiles of one output.

    `derivations` records, per field, whether the value came from samples
    or from the surrogate's analytic moments.
    """

    mean: float
    std_dev: float
    sample_min: float
    p10: float
    p25: float
    p50: float
    p75: float
    p90: float
    sample_max: float
    derivations: Mapping[str, str]


def percentile_values(samples: np.ndarray, qs: Sequence[float]) -> np.ndarray:
    """Percentiles (q in 0..100) by linear order-statistic interpolation."""
    return np.percentile(np.asarray(samples, dtype=float), list(qs), method="linear")


def summarize(
    samples: Sequence[float],
    *,
    analytic_mean: float | None = None,
    analytic_std: float | None = None,
) -> SummaryStats:
    """Summary statistics of a sample vector (n >= 2; std dev uses n - 1).

    When a surrogate's analytic mean/std are supplied they replace the
    empirical ones and are tagged accordingly; percentiles and extremes stay
    empirical.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    p10, p25, p50, p75, p90 = percentile_values(x, [10, 25, 50, 75, 90])
    derivations = {
        "mean": ANALYTIC if analytic_mean is not None else EMPIRICAL,
        "std_dev": ANALYTIC if analytic_std is not None else EMPIRICAL,
        "sample_min": EMPIRICAL,
        "p10": EMPIRICAL,
        "p25": EMPIRICAL,
        "p50": EMPIRICAL,
        "p75": EMPIRICAL,
        "p90": EMPIRICAL,
        "sample_max": EMPIRICAL,
    }
    return SummaryStats(
        mean=float(analytic_mean) if analytic_mean is not None else float(np.mean(x)),
        std_dev=float(analytic_std) if analytic_std is not None else float(np.std(x, ddof=1)),
        sample_min=float(np.min(x)),
        p10=float(p10),
        p25=float(p25),
        p50=float(p50),
        p75=float(p75),
        p90=float(p90),
        sample_max=float(np.max(x)),
        derivations=derivations,
    )


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted samples with ranks k/n, plus an equal-width histogram."""

    values: np.ndarray
    cumulative: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray


def empirical_distribution(samples: Sequence[float], bins: int) -> EmpiricalDistribution:
    """CDF over the full sorted sample and a histogram spanning [min, max]."""
    x = np.asarray(samples, dtype=float)
    if x.size < 1:
        raise ValueError("need at least 1 sample")
    if bins < 1:
        raise ValueError(f"bin count must be >= 1, got {bins}")
    values = np.sort(x)
    cumulative = np.arange(1, x.size + 1) / x.size
    # np.histogram widens a degenerate [c, c] range by itself.
    counts, bin_edges = np.histogram(x, bins=bins, range=(values[0], values[-1]))
    return EmpiricalDistribution(values, cumulative, bin_edges, counts)


def _open_dest(dest):
    if hasattr(dest, "write"):
        return dest, False
    return open(dest, "w", encoding="utf-8", newline=""), True


def _write_comments(handle: IO[str], comments: Sequence[str] | None) -> None:
    for line in comments or ():
        handle.write(f"# {line}\n")


def write_samples_csv(
    dest,
    input_names: Sequence[str],
    inputs: np.ndarray,
    output_names: Sequence[str],
    outputs: np.ndarray,
    *,
    comments: Sequence[str] | None = None,
) -> None:
    """One row per point: input coordinates then output values."""
    handle, owned = _open_dest(dest)
    try:
        _write_comments(handle, comments)
        writer = csv.writer(handle)
        writer.writerow(list(input_names) + list(output_names))
        for row_in, row_out in zip(np.atleast_2d(inputs), np.atleast_2d(outputs)):
            writer.writerow([format(v, ".17g") for v in row_in]
                            + [format(v, ".17g") for v in row_out])
    finally:
        if owned:
            handle.close()


def write_cdf_csv(
    dest,
    distributions: Mapping[str, EmpiricalDistribution],
    *,
    comments: Sequence[str] | None = None,
) -> None:
    """Per output: a value column and a cumulative-probability column."""
    handle, owned = _open_dest(dest)
    try:
        _write_comments(handle, comments)
        writer = csv.writer(handle)
        names = list(distributions)
        writer.writerow(
            sum(([f"{n}_value", f"{n}_cumulative_probability"] for n in names), [])
        )
        length = max(d.values.size for d in distributions.values())
        for i in range(length):
            row = []
            for n in names:
                dist = distributions[n]
                if i < dist.values.size:
                    row += [format(dist.values[i], ".17g"), format(dist.cumulative[i], ".17g")]
                else:
                    row += ["", ""]
            writer.writerow(row)
    finally:
        if owned:
            handle.close()


def write_histogram_csv(
    dest,
    distributions: Mapping[str, EmpiricalDistribution],
    *,
    comments: Sequence[str] | None = None,
) -> None:
    """Long-format histogram table: output, bin_left, bin_right, count."""
    handle, owned = _open_dest(dest)
    try:
        _write_comments(handle, comments)
        writer = csv.writer(handle)
        writer.writerow(["output", "bin_left", "bin_right", "count"])
        for name, dist in distributions.items():
            for left, right, count in zip(dist.bin_edges[:-1], dist.bin_edges[1:], dist.counts):
                writer.writerow([name, format(left, ".17g"), format(right, ".17g"), int(count)])
    finally:
        if owned:
            handle.close()
