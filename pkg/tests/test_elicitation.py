import pytest

from cyrisk.errors import ConfigurationError
from cyrisk.risk.elicitation import curve_to_pnp, pnp_mode

CURVE = [(0.0, 0.99), (0.1, 0.93), (0.2, 0.87), (0.3, 0.70)]


def test_mode_interpolation():
    assert pnp_mode(CURVE, 0.1) == pytest.approx(0.07)
    assert pnp_mode(CURVE, 0.2) == pytest.approx(0.13)
    assert pnp_mode(CURVE, 0.15) == pytest.approx(0.10)
    # point order does not matter
    assert pnp_mode(CURVE[::-1], 0.25) == pytest.approx(pnp_mode(CURVE, 0.25))


def test_beta_has_requested_mode():
    for x, k in ((0.1, 100), (0.2, 50), (0.05, 3)):
        b = curve_to_pnp(CURVE, x, k)
        assert (b.a - 1) / (b.a + b.b - 2) == pytest.approx(pnp_mode(CURVE, x))
        assert b.a + b.b == pytest.approx(k)


def test_perfect_accuracy():
    b = curve_to_pnp([(0, 1.0), (1, 1.0)], 0.5, 10)
    assert b.a == pytest.approx(1.0) and b.b == pytest.approx(9.0)


@pytest.mark.parametrize("curve,x,k", [
    (CURVE, 0.5, 100),              # outside the curve
    (CURVE, 0.1, 2),                # k must exceed 2
    ([(0, 0.9)], 0.0, 10),          # too few points
    ([(0, 0.9), (0, 0.8)], 0, 10),  # duplicate intensity
    ([(0, 1.2), (1, 0.8)], 0.5, 10),
])
def test_errors(curve, x, k):
    with pytest.raises(ConfigurationError):
        curve_to_pnp(curve, x, k)
