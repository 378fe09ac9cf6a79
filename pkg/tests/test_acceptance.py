"""Acceptance suite: one test per release criterion, each printing a verdict.

Run with `pytest -v tests/test_acceptance.py` for one line per criterion,
or add -s to see the printed PASS lines and measured numbers.
"""
import itertools
import math
import time

import numpy as np
import pytest

import pcekit as pk
from pcekit.blackbox import CSG_PROXY_INPUTS, CSG_PROXY_OUTPUTS, BlackBoxModel, ModelSpec
from pcekit.cli import main
from pcekit.multiindex import enumerate_indices
from pcekit.surrogate import unscale_points

UNIT_SQUARE = [pk.InputVariable("x1", -1.0, 1.0), pk.InputVariable("x2", -1.0, 1.0)]


def example_box(name):
    return BlackBoxModel(
        ModelSpec(kind="builtin", name=name, input_names=("x1", "x2"),
                  output_names=("value",))
    )


def csg_inputs():
    return [pk.InputVariable(n, lo, hi) for n, lo, hi in CSG_PROXY_INPUTS]


def csg_box():
    return BlackBoxModel(
        ModelSpec(
            kind="builtin", name="csg-proxy",
            input_names=tuple(n for n, _, _ in CSG_PROXY_INPUTS),
            output_names=CSG_PROXY_OUTPUTS,
        )
    )


def test_criterion_1_worked_sensitivity_example():
    started = time.perf_counter()
    sum_of_squares = pk.build_pce(
        example_box("sobol-example-1"), UNIT_SQUARE, ["value"], pk.FullGrid(3)
    )
    cubic_plus_linear = pk.build_pce(
        example_box("sobol-example-2"), UNIT_SQUARE, ["value"], pk.FullGrid(3)
    )

    assert sum_of_squares.mean()[0] == pytest.approx(2 / 3, abs=1e-10)
    assert sum_of_squares.variance()[0] == pytest.approx(8 / 45, abs=1e-10)
    assert pk.sobol_index(sum_of_squares, [0], "value") == pytest.approx(0.5, abs=1e-10)
    assert pk.sobol_index(sum_of_squares, [1], "value") == pytest.approx(0.5, abs=1e-10)

    assert cubic_plus_linear.mean()[0] == pytest.approx(0.0, abs=1e-10)
    assert cubic_plus_linear.variance()[0] == pytest.approx(10 / 21, abs=1e-10)
    assert pk.sobol_index(cubic_plus_linear, [0], "value") == pytest.approx(0.3, abs=1e-10)
    assert pk.sobol_index(cubic_plus_linear, [1], "value") == pytest.approx(0.7, abs=1e-10)

    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    print(f"\n[criterion 1] PASS — worked example exact to 1e-10 in {elapsed:.3f} s")


def test_criterion_2_grid_cardinalities_and_nesting():
    sparse4 = pk.sparse_grid(4, 4)
    sparse5 = pk.sparse_grid(4, 5)
    assert len(sparse4) == 401
    assert len(sparse5) == 1105
    assert len(pk.full_grid(4, 5)) == 1296
    assert len(pk.full_grid(4, 6)) == 2401
    coarse = {tuple(p) for p in sparse4.points}
    fine = {tuple(p) for p in sparse5.points}
    assert coarse <= fine  # exact floating-point coordinate equality
    print("\n[criterion 2] PASS — 401/1105/1296/2401 points, 401-set nested in 1105-set")


def test_criterion_3_quadrature_exactness():
    def exact_monomial(degree):
        return 0.0 if degree % 2 else 2.0 / (degree + 1)

    for n in range(1, 11):
        rule = pk.gauss_legendre_1d(n)
        for degree in range(2 * n):
            value = float(np.sum(rule.nodes**degree * rule.weights))
            exact = exact_monomial(degree)
            assert value == pytest.approx(exact, rel=1e-12, abs=1e-12), (n, degree)

    level = 2
    grid = pk.sparse_grid(3, level)
    for degrees in itertools.product(range(2 * level + 2), repeat=3):
        if sum(degrees) > 2 * level + 1:
            continue
        value = float(np.sum(np.prod(grid.points ** np.array(degrees), axis=1) * grid.weights))
        exact = math.prod(exact_monomial(d) for d in degrees)
        assert value == pytest.approx(exact, abs=1e-10), degrees
    print("\n[criterion 3] PASS — Gauss-Legendre exact to 2n-1, sparse exact to total order 5")


def _random_polynomial_case(rng, dim, method):
    inputs = [
        pk.InputVariable(f"v{j}", float(low), float(low + span))
        for j, (low, span) in enumerate(
            zip(rng.uniform(-5, 5, dim), rng.uniform(0.5, 10, dim))
        )
    ]
    if isinstance(method, pk.FullGrid):
        nbhd = pk.Neighborhood(pk.TENSOR_PRODUCT, method.order, dim)
    else:
        nbhd = pk.Neighborhood(pk.TOTAL_ORDER, method.level, dim)
    terms = [
        {"orders": list(idx), "coefficients": [float(c)]}
        for idx, c in zip(enumerate_indices(nbhd), rng.uniform(-1, 1, pk.cardinality(nbhd)))
    ]
    spec = ModelSpec(
        kind="builtin", name="polynomial",
        input_names=tuple(v.name for v in inputs), output_names=("y",),
        parameters={
            "terms": terms,
            "variables": [[v.v_min, v.v_max] for v in inputs],
        },
    )
    surrogate = pk.build_pce(BlackBoxModel(spec), inputs, ["y"], method)
    points = np.column_stack(
        [rng.uniform(v.v_min, v.v_max, 100) for v in inputs]
    )
    truth = BlackBoxModel(spec)(points)
    prediction = surrogate.evaluate_batch(points)
    scale = np.max(np.abs(truth))
    return np.max(np.abs(prediction - truth)) / scale


def test_criterion_4_polynomial_reproduction():
    rng = np.random.Generator(np.random.PCG64(20240617))
    worst = 0.0
    for dim in range(1, 5):
        for order in range(1, 6):
            worst = max(worst, _random_polynomial_case(rng, dim, pk.FullGrid(order)))
        # sparse levels above 3*dim are outside the rule's validity regime
        for level in range(1, min(5, 3 * dim) + 1):
            worst = max(worst, _random_polynomial_case(rng, dim, pk.SparseGrid(level)))
    assert worst <= 1e-10
    print(f"\n[criterion 4] PASS — worst relative reproduction error {worst:.3e}")


# Dev-run goldens for the proxy model at the pinned design (strata=10,
# repeats=300, seed=2024); per-output pairs are (cumulative_gas, peak_gas).
PROXY_RRMSE_GOLDENS = {
    2: (4.764601e-02, 3.701639e-01),
    3: (1.073927e-02, 1.144499e-01),
    4: (2.001938e-03, 2.901454e-02),
    5: (3.182352e-04, 6.229634e-03),
}


def test_criterion_5_proxy_error_decay_and_threshold():
    inputs = csg_inputs()
    design = pk.latin_hypercube(10, 4, 300, seed=2024)
    physical = unscale_points(design.points, inputs)
    truths = csg_box()(physical)

    measured = {}
    for order in [2, 3, 4, 5]:
        model = pk.build_pce(csg_box(), inputs, list(CSG_PROXY_OUTPUTS), pk.FullGrid(order))
        predictions = model.evaluate_batch(physical)
        measured[order] = tuple(
            pk.rrmse(predictions[:, j], truths[:, j]) for j in range(2)
        )

    for j in range(2):
        decay = [measured[order][j] for order in [2, 3, 4, 5]]
        assert decay == sorted(decay, reverse=True), f"output {j} not non-increasing: {decay}"
    assert measured[5][0] < 0.05 and measured[5][1] < 0.05
    for order, golden in PROXY_RRMSE_GOLDENS.items():
        for j in range(2):
            assert measured[order][j] == pytest.approx(golden[j], rel=1e-3)
    print(
        "\n[criterion 5] PASS — rRMSE decays "
        + " -> ".join(f"({measured[o][0]:.2e}, {measured[o][1]:.2e})" for o in [2, 3, 4, 5])
    )


def test_criterion_6_surrogate_throughput():
    inputs = csg_inputs()
    model = pk.build_pce(csg_box(), inputs, list(CSG_PROXY_OUTPUTS), pk.FullGrid(6))

    rng = np.random.Generator(np.random.PCG64(99))
    small = unscale_points(rng.uniform(-1, 1, size=(3000, 4)), inputs)
    started = time.perf_counter()
    model.evaluate_batch(small)
    small_elapsed = time.perf_counter() - started
    assert small_elapsed < 1.0

    big = unscale_points(rng.uniform(-1, 1, size=(1_000_000, 4)), inputs)
    started = time.perf_counter()
    values = model.evaluate_batch(big)
    big_elapsed = time.perf_counter() - started
    assert values.shape == (1_000_000, 2)
    assert big_elapsed < 300.0
    print(
        f"\n[criterion 6] PASS — 3000 evaluations in {small_elapsed:.3f} s, "
        f"1e6 in {big_elapsed:.1f} s"
    )


def test_criterion_7_sensitivity_normalization_and_consistency():
    for seed in range(5):
        rng = np.random.Generator(np.random.PCG64(seed))
        nbhd = pk.Neighborhood(pk.TENSOR_PRODUCT, 3, 4)
        indices = enumerate_indices(nbhd)
        model = pk.PceModel(
            [pk.InputVariable(f"v{j}", -1.0, 1.0) for j in range(4)],
            ["y"],
            nbhd,
            indices,
            rng.normal(size=(len(indices), 1)),
        )
        report = pk.full_report(model, max_subset_size=4)
        assert float(sum(report.indices.values())[0]) == pytest.approx(1.0, abs=1e-12)
        for u in range(4):
            enumerated = sum(
                pk.sobol_index(model, subset, "y")
                for size in range(1, 5)
                for subset in itertools.combinations(range(4), size)
                if u in subset
            )
            assert pk.total_index(model, u, "y") == pytest.approx(enumerated, abs=1e-12)
    print("\n[criterion 7] PASS — indices sum to 1 and totals match subset sums (5 seeds)")


def test_criterion_8_lhs_stratification():
    for seed in range(100):
        design = pk.latin_hypercube(10, 4, repeats=1, seed=seed)
        for j in range(4):
            strata = np.floor((design.points[:, j] + 1.0) / 2.0 * 10).astype(int)
            strata = np.minimum(strata, 9)
            assert np.bincount(strata, minlength=10).tolist() == [1] * 10, (seed, j)
    print("\n[criterion 8] PASS — 100 seeded designs all perfectly stratified")


def test_criterion_9_end_to_end_determinism(tmp_path):
    import json

    config_doc = {
        "model": {"kind": "builtin", "name": "csg-proxy"},
        "inputs": [
            {"name": name, "min": lo, "max": hi} for name, lo, hi in CSG_PROXY_INPUTS
        ],
        "outputs": list(CSG_PROXY_OUTPUTS),
        "method": {"type": "sparse-grid", "level": 3},
        "validation": {"lhs_strata": 10, "lhs_repeats": 20, "seed": 424242},
        "report": {"sobol_max_subset_size": 2},
        "paths": {"cache": "cache.jsonl", "model_file": "model.json", "report_dir": "report"},
    }
    config = tmp_path / "run.json"
    config.write_text(json.dumps(config_doc, indent=1))
    artifacts = [
        tmp_path / "model.json",
        tmp_path / "report" / "run.log",
        tmp_path / "report" / "validate.csv",
        tmp_path / "report" / "scatter.csv",
        tmp_path / "report" / "sobol.json",
        tmp_path / "report" / "sobol.txt",
    ]

    def run_pipeline():
        assert main(["build", "--config", str(config), "--reproducible"]) == 0
        assert main(["validate", "--config", str(config), "--reproducible"]) == 0
        assert main(["sobol", "--config", str(config)]) == 0
        snapshot = {path.name: path.read_bytes() for path in artifacts}
        for path in artifacts:
            path.unlink()
        return snapshot

    first = run_pipeline()   # cold cache
    second = run_pipeline()  # warm cache: must not change a single byte
    assert first == second
    print("\n[criterion 9] PASS — repeated pipeline runs byte-identical (cold and warm cache)")
