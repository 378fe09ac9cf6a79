import itertools
import json

import numpy as np
import pytest

from pcekit.blackbox import BlackBoxModel, ModelSpec
from pcekit.errors import ConfigurationError, ZeroVarianceError
from pcekit.multiindex import TENSOR_PRODUCT, Neighborhood, enumerate_indices
from pcekit.sobol import full_report, sobol_index, total_index
from pcekit.surrogate import FullGrid, InputVariable, PceModel, build_pce

UNIT_SQUARE = [InputVariable("x1", -1.0, 1.0), InputVariable("x2", -1.0, 1.0)]


def build_example(name, order=3):
    spec = ModelSpec(
        kind="builtin", name=name, input_names=("x1", "x2"), output_names=("value",)
    )
    return build_pce(BlackBoxModel(spec), UNIT_SQUARE, ["value"], FullGrid(order))


def decomposition_oracle(func, nodes=32):
    """Brute-force variance decomposition of a 2D function on [-1, 1]^2.

    Integrates the orthogonal summands with dense Gauss-Legendre tensor
    quadrature: the mean, the two one-variable conditional means, and the
    variance split they induce.  Entirely independent of the coefficient
    formula under test.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    grid = np.array([[func(a, b) for b in x] for a in x])
    half_w = w / 2.0
    mean = half_w @ grid @ half_w
    main_1 = grid @ half_w - mean          # conditional mean over x2, centered
    main_2 = grid.T @ half_w - mean        # conditional mean over x1, centered
    d1 = np.sum(main_1**2 * half_w)
    d2 = np.sum(main_2**2 * half_w)
    total_variance = half_w @ (grid**2) @ half_w - mean**2
    d12 = total_variance - d1 - d2
    return {
        "variance": total_variance,
        (0,): d1 / total_variance,
        (1,): d2 / total_variance,
        (0, 1): d12 / total_variance,
    }


class TestWorkedExamples:
    def test_sum_of_squares_splits_evenly(self):
        model = build_example("sobol-example-1")
        assert sobol_index(model, [0], "value") == pytest.approx(0.5, abs=1e-12)
        assert sobol_index(model, [1], "value") == pytest.approx(0.5, abs=1e-12)

    def test_cubic_plus_linear_split(self):
        model = build_example("sobol-example-2")
        assert sobol_index(model, [0], "value") == pytest.approx(0.3, abs=1e-12)
        assert sobol_index(model, [1], "value") == pytest.approx(0.7, abs=1e-12)

    def test_additive_models_have_no_interaction(self):
        for name in ["sobol-example-1", "sobol-example-2"]:
            model = build_example(name)
            assert sobol_index(model, [0, 1], "value") == pytest.approx(0.0, abs=1e-13)
            assert total_index(model, 0, "value") == pytest.approx(
                sobol_index(model, [0], "value"), abs=1e-13
            )

    def test_total_equals_main_for_sum_of_squares(self):
        model = build_example("sobol-example-1")
        assert total_index(model, 0, "value") == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize(
        "name,func",
        [
            ("sobol-example-1", lambda a, b: a**2 + b**2),
            ("sobol-example-2", lambda a, b: a**3 + b),
        ],
    )
    def test_matches_decomposition_oracle(self, name, func):
        oracle = decomposition_oracle(func)
        model = build_example(name)
        assert model.variance()[0] == pytest.approx(oracle["variance"], abs=1e-10)
        for subset in [(0,), (1,), (0, 1)]:
            assert sobol_index(model, subset, "value") == pytest.approx(
                oracle[subset], abs=1e-10
            )

    def test_interacting_model_against_oracle(self):
        func = lambda a, b: a * b + 0.5 * a + b**2
        oracle = decomposition_oracle(func)
        spec = ModelSpec(
            kind="builtin", name="polynomial",
            input_names=("x1", "x2"), output_names=("value",),
            parameters={
                "terms": [
                    {"orders": [1, 1], "coefficients": [1.0]},
                    {"orders": [1, 0], "coefficients": [0.5]},
                    {"orders": [0, 2], "coefficients": [2.0 / 3.0]},
                    {"orders": [0, 0], "coefficients": [1.0 / 3.0]},
                ]
            },
        )
        model = build_pce(BlackBoxModel(spec), UNIT_SQUARE, ["value"], FullGrid(2))
        for subset in [(0,), (1,), (0, 1)]:
            assert sobol_index(model, subset, "value") == pytest.approx(
                oracle[subset], abs=1e-10
            )


def random_model(seed, dim=4, order=3, outputs=1):
    rng = np.random.Generator(np.random.PCG64(seed))
    nbhd = Neighborhood(TENSOR_PRODUCT, order, dim)
    indices = enumerate_indices(nbhd)
    coefficients = rng.normal(size=(len(indices), outputs))
    inputs = [InputVariable(f"v{j}", -1.0, 1.0) for j in range(dim)]
    names = [f"out{k}" for k in range(outputs)]
    return PceModel(inputs, names, nbhd, indices, coefficients)


class TestProperties:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_indices_partition_the_variance(self, seed):
        model = random_model(seed)
        report = full_report(model, max_subset_size=4)
        total = sum(report.indices.values())
        assert total == pytest.approx(np.ones_like(total), abs=1e-12)
        assert np.all(np.abs(report.remainder) < 1e-12)

    @pytest.mark.parametrize("seed", [3, 4])
    def test_total_matches_superset_enumeration(self, seed):
        model = random_model(seed)
        for u in range(model.dim):
            direct = total_index(model, u, "out0")
            by_enumeration = sum(
                sobol_index(model, subset, "out0")
                for size in range(1, model.dim + 1)
                for subset in itertools.combinations(range(model.dim), size)
                if u in subset
            )
            assert direct == pytest.approx(by_enumeration, abs=1e-12)

    def test_indices_lie_in_unit_interval(self):
        model = random_model(9)
        report = full_report(model, max_subset_size=4)
        for vec in report.indices.values():
            assert np.all(vec >= -1e-12) and np.all(vec <= 1 + 1e-12)

    def test_scale_invariance(self):
        model = random_model(5)
        scaled = PceModel(
            model.inputs, model.output_names, model.neighborhood,
            model.indices, model.coefficients * -17.3,
        )
        for subset in [(0,), (2,), (0, 3)]:
            assert sobol_index(scaled, subset, "out0") == pytest.approx(
                sobol_index(model, subset, "out0"), abs=1e-12
            )
        assert total_index(scaled, 1, "out0") == pytest.approx(
            total_index(model, 1, "out0"), abs=1e-12
        )

    def test_main_effects_never_exceed_totals(self):
        model = random_model(6)
        for u in range(model.dim):
            assert sobol_index(model, [u], "out0") <= total_index(model, u, "out0") + 1e-12


class TestErrors:
    def test_zero_variance_is_explicit(self):
        spec = ModelSpec(
            kind="builtin", name="constant",
            input_names=("x1", "x2"), output_names=("value",),
            parameters={"values": [4.0]},
        )
        model = build_pce(BlackBoxModel(spec), UNIT_SQUARE, ["value"], FullGrid(2))
        with pytest.raises(ZeroVarianceError, match="value"):
            sobol_index(model, [0], "value")
        with pytest.raises(ZeroVarianceError):
            full_report(model, 1)

    def test_empty_subset_rejected(self):
        model = random_model(7)
        with pytest.raises(ConfigurationError):
            sobol_index(model, [], "out0")

    def test_out_of_range_position_rejected(self):
        model = random_model(7)
        with pytest.raises(ConfigurationError):
            sobol_index(model, [4], "out0")

    def test_unknown_output_rejected(self):
        model = random_model(7)
        with pytest.raises(ConfigurationError, match="unknown output"):
            sobol_index(model, [0], "nope")

    def test_bad_subset_size(self):
        model = random_model(7)
        with pytest.raises(ConfigurationError):
            full_report(model, 0)
        with pytest.raises(ConfigurationError):
            full_report(model, 5)


class TestReport:
    def test_structure_for_four_inputs(self):
        model = random_model(8)
        report = full_report(model, max_subset_size=2)
        singles = [s for s in report.indices if len(s) == 1]
        pairs = [s for s in report.indices if len(s) == 2]
        assert len(singles) == 4 and len(pairs) == 6
        assert list(report.totals) == [0, 1, 2, 3]
        assert list(report.indices) == sorted(report.indices, key=lambda s: (len(s), s))

    def test_worked_pair_report(self):
        model = build_example("sobol-example-2")
        report = full_report(model, max_subset_size=2)
        assert report.indices[(0,)][0] == pytest.approx(0.3, abs=1e-12)
        assert report.indices[(1,)][0] == pytest.approx(0.7, abs=1e-12)
        assert report.indices[(0, 1)][0] == pytest.approx(0.0, abs=1e-13)
        assert report.remainder[0] == pytest.approx(0.0, abs=1e-12)

    def test_text_layout(self):
        model = random_model(10, dim=2)
        text = full_report(model, 2).to_text()
        assert "Main effect indices" in text
        assert "Pairwise interaction indices" in text
        assert "Total indices" in text
        assert "Higher-order remainder" in text
        assert "T(v0)" in text and "S(v0,v1)" in text

    def test_json_round_trip(self):
        model = random_model(11)
        report = full_report(model, 2)
        doc = json.loads(json.dumps(report.to_json_dict()))
        assert doc["schema"] == "pcekit/sobol-report"
        assert len(doc["indices"]) == 10
        assert set(doc["total_variance"]) == {"out0"}
