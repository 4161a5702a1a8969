import math

import pytest

from secrecy_relay.errors import InvalidParameterError, QuadratureConvergenceError
from secrecy_relay.services.quadrature import (
    QuadratureConfig,
    RadialKernel,
    integrate_1d,
    integrate_2d_polar,
    radial_tail_bound,
    radial_truncation,
)

CFG = QuadratureConfig()


def test_semi_infinite_gaussian():
    value, error = integrate_1d(lambda x: math.exp(-x * x), 0.0, math.inf, CFG)
    assert value == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-10)
    assert error < 1e-8


def test_empty_interval_is_zero():
    assert integrate_1d(math.exp, 2.0, 2.0, CFG) == (0.0, 0.0)


def test_reversed_limits_rejected():
    with pytest.raises(InvalidParameterError):
        integrate_1d(math.exp, 1.0, 0.0, CFG)


def test_polar_integral_of_gaussian_disc():
    # int_0^inf int_0^pi d exp(-d^2) dtheta dd = pi / 2
    value, _ = integrate_2d_polar(lambda d, theta: d * math.exp(-d * d), CFG, radial_limit=12.0)
    assert value == pytest.approx(math.pi / 2.0, rel=1e-9)


def test_polar_integral_with_angular_dependence():
    # int_0^1 int_0^pi d cos(theta)^2 = (1/2)(pi/2)
    value, _ = integrate_2d_polar(lambda d, theta: d * math.cos(theta) ** 2, CFG, radial_limit=1.0)
    assert value == pytest.approx(math.pi / 4.0, rel=1e-10)


def test_non_convergence_carries_best_estimate():
    cfg = QuadratureConfig(max_subdivisions=16)
    with pytest.raises(QuadratureConvergenceError) as excinfo:
        integrate_1d(lambda x: math.sin(1.0 / x) / x, 1e-6, 1.0, cfg)
    assert math.isfinite(excinfo.value.best_estimate)
    assert excinfo.value.error_estimate >= 0


def test_truncation_radius_uses_widest_kernel():
    narrow = RadialKernel(decay=10.0)
    wide = RadialKernel(decay=0.1, centre_offset=1.0)
    radius = radial_truncation([narrow, wide], 2.0, CFG)
    expected = 1.0 + CFG.radial_truncation_factor * math.sqrt(math.log(1e12) / 0.1)
    assert radius == pytest.approx(expected)


def test_tail_beyond_truncation_is_negligible():
    kernel = RadialKernel(decay=0.5, centre_offset=1.0)
    radius = radial_truncation([kernel], 4.0, CFG)
    assert radial_tail_bound(kernel, 4.0, radius, CFG) < CFG.abs_tol


@pytest.mark.parametrize(
    "kwargs",
    [{"rel_tol": 0.0}, {"abs_tol": -1.0}, {"max_subdivisions": 4}, {"radial_truncation_factor": 0.5}],
)
def test_config_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        QuadratureConfig(**kwargs)


# -----------------------------
# Reference integrals
# -----------------------------


def test_exponential_tail():
    value, _ = integrate_1d(lambda t: math.exp(-t), 0.0, math.inf, CFG)
    assert value == pytest.approx(1.0, rel=1e-10)


def test_gaussian_moment():
    value, _ = integrate_1d(lambda t: t * math.exp(-t * t), 0.0, math.inf, CFG)
    assert value == pytest.approx(0.5, rel=1e-10)


def test_integrable_singularity_at_origin():
    def f(t):
        return math.exp(-t) / math.sqrt(t)

    # The singular end gets its own finite panel.
    head, _ = integrate_1d(f, 0.0, 1.0, CFG)
    tail, _ = integrate_1d(f, 1.0, math.inf, CFG)
    assert head + tail == pytest.approx(math.sqrt(math.pi), rel=1e-8)


def _relay_kernel(decay, dist_sr, eta):
    def g(dist_si, theta):
        squared = dist_sr * dist_sr + dist_si * dist_si - 2.0 * dist_sr * dist_si * math.cos(theta)
        return dist_si * math.exp(-decay * max(0.0, squared) ** (eta / 2.0))

    return g


def test_polar_integral_of_eta2_relay_kernel():
    decay, dist_sr = 0.5, 1.5
    limit = dist_sr + 12.0 / math.sqrt(decay)
    value, _ = integrate_2d_polar(_relay_kernel(decay, dist_sr, 2.0), CFG, limit, radial_breakpoints=[dist_sr])
    assert value == pytest.approx(math.pi / (2.0 * decay), rel=1e-7)


def test_tightening_tolerance_stays_within_error_estimate():
    g = _relay_kernel(1.0, 1.0, 4.0)
    coarse, coarse_error = integrate_2d_polar(g, QuadratureConfig(rel_tol=1e-6), 6.0, radial_breakpoints=[1.0])
    fine, _ = integrate_2d_polar(g, QuadratureConfig(rel_tol=5e-7), 6.0, radial_breakpoints=[1.0])
    assert abs(fine - coarse) <= coarse_error
