import math

import pytest

from rabiring.params import (
    MOMENTA,
    FrequencyRatio,
    ModelParams,
    bare_coupling,
    flux,
    wrap_angle,
)


def test_wrap_angle_canonical_interval():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.3) == pytest.approx(0.3)
    assert wrap_angle(2 * math.pi + 0.3) == pytest.approx(0.3)
    assert wrap_angle(-0.4) == pytest.approx(-0.4)


def test_theta_wrapped_on_construction():
    p = ModelParams(omega=0.2, delta=1.0, g1=0.1, j=0.01, theta=2 * math.pi + 0.5)
    assert p.theta == pytest.approx(0.5)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(omega=0.0, delta=1.0, g1=0.1, j=0.01, theta=0.0),
        dict(omega=-0.2, delta=1.0, g1=0.1, j=0.01, theta=0.0),
        dict(omega=0.2, delta=0.0, g1=0.1, j=0.01, theta=0.0),
        dict(omega=0.2, delta=1.0, g1=-0.1, j=0.01, theta=0.0),
        dict(omega=0.2, delta=1.0, g1=0.1, j=-0.01, theta=0.0),
    ],
)
def test_invalid_parameters_rejected(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**kwargs)


def test_momenta():
    assert MOMENTA == (0.0, 2 * math.pi / 3, -2 * math.pi / 3)


def test_bare_coupling_definition():
    p = ModelParams(omega=0.2, delta=5.0, g1=0.7, j=0.0, theta=0.0)
    assert bare_coupling(p) == pytest.approx(0.7 * math.sqrt(5.0 * 0.2), rel=1e-15)


def test_flux_is_three_theta():
    p = ModelParams(omega=0.2, delta=1.0, g1=0.1, j=0.01, theta=0.2)
    assert flux(p) == pytest.approx(0.6)
    p = ModelParams(omega=0.2, delta=1.0, g1=0.1, j=0.01, theta=0.9 * math.pi)
    assert flux(p) == pytest.approx(wrap_angle(2.7 * math.pi))


def test_frequency_ratio_builds_params():
    p = FrequencyRatio(50.0).params(omega=0.2, g1=0.7, j=0.01, theta=0.1)
    assert p.delta == pytest.approx(10.0)
    assert p.eta == pytest.approx(50.0)
    with pytest.raises(ValueError):
        FrequencyRatio(0.0)
