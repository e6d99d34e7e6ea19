import numpy as np
import pytest

from cli.gradcheck import CHECKS, TOLERANCE, run_grad_checks
from nnkit.gradcheck import numeric_gradient, relative_error
from trajcore.errors import ArgumentError


def test_numeric_gradient_of_a_quadratic():
    x = np.array([1.0, -2.0, 0.5])
    grad = numeric_gradient(lambda: float(np.sum(x ** 2)), x)
    np.testing.assert_allclose(grad, 2 * x, atol=1e-8)
    np.testing.assert_array_equal(x, [1.0, -2.0, 0.5])


def test_relative_error_floors_the_denominator():
    assert relative_error(np.array([1e-7]), np.array([0.0])) == pytest.approx(1e-7)
    assert relative_error(np.array([2.0]), np.array([4.0])) == pytest.approx(0.5)


def test_every_target_passes_on_a_few_draws():
    table = run_grad_checks(draws=2, seed=1)
    assert set(table["target"]) == set(CHECKS)
    assert table["rel_error"].max() < TOLERANCE
    assert table["passed"].all()


def test_selected_targets_only():
    table = run_grad_checks(draws=1, targets=["lstm", "mse"])
    assert set(table["target"]) == {"lstm", "mse"}
    assert "input" in set(table.loc[table["target"] == "lstm", "param"])


def test_unknown_target():
    with pytest.raises(ArgumentError):
        run_grad_checks(draws=1, targets=["conv"])


@pytest.mark.slow
def test_twenty_draws_per_target():
    table = run_grad_checks(draws=20, seed=0)
    assert table.groupby("target")["draw"].nunique().eq(20).all()
    assert table["passed"].all()
