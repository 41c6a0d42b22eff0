import math

import pytest

from MTE.utils.newton import safeguarded_newton


def test_safeguarded_newton_sqrt():
    assert safeguarded_newton(lambda x: (x * x - 2.0, 2.0 * x), 0.0, 2.0) == pytest.approx(math.sqrt(2), abs=1e-14)


def test_safeguarded_newton_decreasing():
    assert safeguarded_newton(lambda x: (math.cos(x), -math.sin(x)), 1.0, 2.0) == pytest.approx(math.pi / 2, abs=1e-14)


def test_safeguarded_newton_flat_derivative():
    # df vanishes at the left end of the bracket
    root = safeguarded_newton(lambda x: (x**3 - 0.125, 3 * x * x), 0.0, 1.0)
    assert root == pytest.approx(0.5, abs=1e-13)


def test_safeguarded_newton_bracket_end():
    assert safeguarded_newton(lambda x: (x - 1.0, 1.0), 1.0, 2.0) == 1.0


def test_safeguarded_newton_rejects():
    with pytest.raises(ValueError):
        safeguarded_newton(lambda x: (x * x + 1.0, 2.0 * x), -1.0, 1.0)


@pytest.mark.parametrize("root", [0.3, 0.25, 0.7])
def test_safeguarded_newton_exact_newton_step(root):
    # a linear function is solved exactly by the first Newton step
    assert safeguarded_newton(lambda x: (x - root, 1.0), 0.0, 1.0) == pytest.approx(root, abs=1e-15)
    assert safeguarded_newton(lambda x: (root - x, -1.0), 0.0, 1.0) == pytest.approx(root, abs=1e-15)
