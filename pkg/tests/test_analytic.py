import math

import numpy as np
import pytest
from scipy import special

from secrecy_relay.errors import InvalidParameterError, QuadratureConvergenceError
from secrecy_relay.models import SystemParams, WiretapCode, an_attenuation
from secrecy_relay.services import analytic
from secrecy_relay.services.analytic import TermMethod
from secrecy_relay.services.quadrature import QuadratureConfig

TIGHT = QuadratureConfig(rel_tol=1e-10, abs_tol=1e-15)
POLAR = QuadratureConfig(rel_tol=1e-9, abs_tol=1e-15)


def _random_params(rng, path_loss_exp):
    """Powers, noises and d_sr log-uniform over two decades."""

    def log_uniform():
        return float(10.0 ** rng.uniform(-1.0, 1.0))

    return SystemParams(
        num_antennas=int(rng.integers(2, 9)),
        path_loss_exp=path_loss_exp,
        eav_density=1.0,
        power_source=log_uniform(),
        power_relay=log_uniform(),
        dist_sr=log_uniform(),
        dist_rd=1.0,
        noise_relay=1.0,
        noise_dest=1.0,
        noise_eav_slot1=log_uniform(),
        noise_eav_slot2=log_uniform(),
    )


def _random_beta(rng):
    return float(rng.uniform(0.02, 1.0))


# -----------------------------
# Transmission outage
# -----------------------------


def test_p_to_matches_erlang_sum(fig2_params):
    beta, tau_b = 0.5, 3.0
    x = tau_b / (beta * 10.0)
    partial = sum(x**n / math.factorial(n) for n in range(4))
    expected = 1.0 - math.exp(-tau_b / 10.0) * math.exp(-x) * partial
    code = WiretapCode.from_thresholds(tau_b, 0.0)
    assert analytic.p_to(fig2_params, beta, code) == pytest.approx(expected, rel=1e-12)


def test_p_to_single_antenna_is_min_of_exponentials():
    params = SystemParams.from_mean_snr(1, 4.0, 1.0, mean_snr_b=1.0, mean_snr_e=1.0)
    code = WiretapCode.from_thresholds(0.7, 0.0)
    assert analytic.p_to(params, 1.0, code) == pytest.approx(1.0 - math.exp(-1.4), rel=1e-12)


def test_p_to_is_zero_at_zero_threshold(fig2_params):
    assert analytic.p_to(fig2_params, 0.5, WiretapCode(0.0, 0.0)) == 0.0


def test_p_to_rejects_zero_beta(fig2_params):
    with pytest.raises(InvalidParameterError):
        analytic.p_to(fig2_params, 0.0, WiretapCode(1.0, 0.0))


def test_p_to_monotone_in_threshold_and_snr(rng):
    for _ in range(20):
        gamma_b = float(10.0 ** rng.uniform(-1.0, 2.0))
        params = SystemParams.from_mean_snr(int(rng.integers(1, 9)), 4.0, 1.0, gamma_b, 1.0)
        beta = 1.0 if params.num_antennas == 1 else _random_beta(rng)
        taus = np.geomspace(0.01, 50.0, 10)
        values = [analytic.p_to(params, beta, WiretapCode.from_thresholds(t, 0.0)) for t in taus]
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))
        code = WiretapCode.from_thresholds(float(rng.uniform(0.1, 10.0)), 0.0)
        by_snr = [
            analytic.p_to(SystemParams.from_mean_snr(params.num_antennas, 4.0, 1.0, g, 1.0), beta, code)
            for g in np.geomspace(0.1, 1000.0, 10)
        ]
        assert all(b <= a + 1e-15 for a, b in zip(by_snr, by_snr[1:]))


# -----------------------------
# Per-link CDFs
# -----------------------------


def test_cdf_sr_is_erlang(fig2_params):
    assert analytic.cdf_gamma_sr(2.0, fig2_params, 0.5) == pytest.approx(special.gammainc(4, 2.0 / 5.0))
    assert analytic.cdf_gamma_sr(0.0, fig2_params, 0.5) == 0.0


def test_cdf_si_without_an_is_exponential(unit_params):
    gamma, dist = 0.8, 1.5
    mean = dist**-4
    assert analytic.cdf_gamma_si(gamma, unit_params, 1.0, dist) == pytest.approx(1.0 - math.exp(-gamma / mean))


def test_cdf_si_with_an(unit_params):
    gamma, dist, beta = 0.8, 1.5, 0.5
    mean = dist**-4
    survival = math.exp(-gamma / (beta * mean)) * (1.0 + (1.0 - beta) * gamma / (beta * 3)) ** -3
    assert analytic.cdf_gamma_si(gamma, unit_params, beta, dist) == pytest.approx(1.0 - survival, rel=1e-12)


def test_cdf_ri(unit_params):
    assert analytic.cdf_gamma_ri(0.3, unit_params, 2.0) == pytest.approx(1.0 - math.exp(-0.3 * 16.0))


def test_psi_uses_law_of_cosines(unit_params):
    # Eavesdropper straight behind the source: d_ri = d_sr + d_si.
    assert analytic.psi(math.pi, 1.0, unit_params, 2.0) == pytest.approx(2.0 * 2.0**4)
    assert analytic.psi(0.0, 1.0, unit_params, 2.0) == pytest.approx(0.0)


def test_p_to_is_complement_of_both_links_surviving(rng):
    for _ in range(50):
        params = _random_params(rng, float(rng.uniform(2.0, 6.0)))
        beta = _random_beta(rng)
        tau_b = float(10.0 ** rng.uniform(-2.0, 2.0))
        survival_sr = 1.0 - analytic.cdf_gamma_sr(tau_b, params, beta)
        survival_rd = 1.0 - analytic.cdf_gamma_rd(tau_b, params)
        expected = 1.0 - survival_sr * survival_rd
        code = WiretapCode.from_thresholds(tau_b, 0.0)
        assert analytic.p_to(params, beta, code) == pytest.approx(expected, abs=1e-12)


def test_cdfs_are_bounded_and_monotone(rng):
    gammas = np.concatenate(([0.0], np.geomspace(1e-3, 1e3, 40)))
    for _ in range(50):
        params = _random_params(rng, float(rng.uniform(2.0, 6.0)))
        beta = _random_beta(rng)
        dist = float(10.0 ** rng.uniform(-1.0, 1.0))
        curves = [
            [analytic.cdf_gamma_sr(g, params, beta) for g in gammas],
            [analytic.cdf_gamma_rd(g, params) for g in gammas],
            [analytic.cdf_gamma_si(g, params, beta, dist) for g in gammas],
            [analytic.cdf_gamma_ri(g, params, dist) for g in gammas],
        ]
        for values in curves:
            assert all(0.0 <= v <= 1.0 for v in values)
            assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))


# -----------------------------
# J1
# -----------------------------


def test_j1_reference_value():
    params = SystemParams(4, 4.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    expected = math.pi / 4.0 * math.sqrt(0.5) * (3.0 / 4.0) ** 3 * math.sqrt(math.pi)
    assert analytic.j1(params, 0.5, 1.0) == pytest.approx(expected, rel=1e-12)


def test_j1_eta2_without_an(unit_params):
    params = unit_params.replace(path_loss_exp=2.0)
    assert analytic.j1(params, 1.0, 2.0) == pytest.approx(math.pi / 4.0, rel=1e-14)


@pytest.mark.parametrize("eta", [2.0, 2.5, 3.0, 4.0, 6.0])
def test_j1_closed_form_matches_radial_integral(eta):
    rng = np.random.default_rng(int(eta * 100))
    for _ in range(20):
        params = _random_params(rng, eta)
        beta = _random_beta(rng)
        tau_e = float(rng.uniform(0.1, 10.0))
        closed = analytic.j1(params, beta, tau_e)
        assert analytic.j1_integral(params, beta, tau_e, TIGHT) == pytest.approx(closed, rel=1e-8)


# -----------------------------
# J2 / J3 at eta = 2
# -----------------------------


def test_j2_closed_form_value(unit_params):
    params = unit_params.replace(path_loss_exp=2.0, power_relay=3.0)
    assert analytic.j2(params, 2.0) == pytest.approx(math.pi * 3.0 / 4.0)


def test_j3_closed_form_value(unit_params):
    params = unit_params.replace(path_loss_exp=2.0)
    expected = math.pi * 0.5 / (2.0 * 1.5) * math.exp(-1.0 / 1.5) * an_attenuation(4, 0.5, 1.0)
    assert analytic.j3(params, 0.5, 1.0) == pytest.approx(expected, rel=1e-14)


def _closed_vs_quadrature(draws, seed):
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        params = _random_params(rng, 2.0)
        beta = _random_beta(rng)
        tau_e = float(rng.uniform(0.1, 10.0))
        j2_closed = analytic.j2(params, tau_e, method="closed-form")
        j2_quad = analytic.j2(params, tau_e, POLAR, method="quadrature")
        assert j2_quad == pytest.approx(j2_closed, rel=1e-6)
        j3_closed = analytic.j3(params, beta, tau_e, method="closed-form")
        j3_quad = analytic.j3(params, beta, tau_e, POLAR, method="quadrature")
        assert j3_quad == pytest.approx(j3_closed, rel=1e-6)


def test_eta2_closed_forms_match_quadrature():
    _closed_vs_quadrature(draws=8, seed=7)


@pytest.mark.slow
def test_eta2_closed_forms_match_quadrature_randomised():
    _closed_vs_quadrature(draws=100, seed=2024)


def test_closed_form_rejected_off_eta2(unit_params):
    with pytest.raises(InvalidParameterError):
        analytic.j2(unit_params, 1.0, method="closed-form")
    with pytest.raises(InvalidParameterError):
        analytic.j2_bessel_form(unit_params, 1.0)


@pytest.mark.parametrize("tau_e", [0.1, 1.0, 7.5])
def test_j2_derivation_forms_agree(unit_params, tau_e):
    params = unit_params.replace(path_loss_exp=2.0, dist_sr=1.7, noise_eav_slot2=0.4)
    closed = analytic.j2(params, tau_e)
    assert analytic.j2_bessel_form(params, tau_e, TIGHT) == pytest.approx(closed, rel=1e-8)
    assert analytic.j2_series_form(params, tau_e, terms=200) == pytest.approx(closed, rel=1e-10)


def test_j2_series_partial_sum_falls_short(unit_params):
    params = unit_params.replace(path_loss_exp=2.0, dist_sr=2.0)
    assert analytic.j2_series_form(params, 3.0, terms=3) < analytic.j2(params, 3.0)


def test_cross_check_passes_when_enabled(unit_params):
    params = unit_params.replace(path_loss_exp=2.0)
    cfg = QuadratureConfig(cross_check_closed_forms=True)
    assert analytic.j3(params, 0.5, 1.0, cfg) == pytest.approx(analytic.j3(params, 0.5, 1.0))


# -----------------------------
# J2 / J3 beyond eta = 2
# -----------------------------


@pytest.mark.parametrize("eta", [2.5, 3.0, 4.0, 6.0])
def test_j2_quadrature_is_half_the_plane(eta):
    # The kernel is symmetric about the source-relay line, so the half plane
    # holds half of (2 pi / eta) Gamma(2 / eta) k^(-2 / eta).
    rng = np.random.default_rng(int(eta * 10))
    for _ in range(5):
        params = _random_params(rng, eta)
        tau_e = float(rng.uniform(0.1, 10.0))
        decay = tau_e * params.noise_eav_slot2 / params.power_relay
        expected = math.pi / eta * special.gamma(2.0 / eta) * decay ** (-2.0 / eta)
        assert analytic.j2(params, tau_e) == pytest.approx(expected, rel=1e-6)


def test_j2_eta4_reference_value(unit_params):
    assert analytic.j2(unit_params, 1.0) == pytest.approx(math.pi * math.sqrt(math.pi) / 4.0, rel=1e-7)


def test_j3_eta4_matches_importance_sampling(unit_params):
    # Sample eavesdroppers from the source kernel exp(-a d^4) over the whole
    # plane and average the relay kernel; J3 is half of that plane integral.
    beta, tau_e, eta = 0.5, 1.0, 4.0
    source_decay = tau_e / beta
    rng = np.random.default_rng(44)
    n = 1_000_000
    dist = (rng.gamma(2.0 / eta, size=n) / source_decay) ** (1.0 / eta)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    dist_ri_squared = 1.0 + dist**2 - 2.0 * dist * np.cos(theta)
    weights = np.exp(-tau_e * dist_ri_squared ** (eta / 2.0))
    normaliser = 2.0 * math.pi * special.gamma(2.0 / eta) / (eta * source_decay ** (2.0 / eta))
    scale = 0.5 * normaliser * an_attenuation(4, beta, tau_e)
    estimate = scale * weights.mean()
    std_error = scale * weights.std(ddof=1) / math.sqrt(n)
    assert abs(analytic.j3(unit_params, beta, tau_e) - estimate) <= 4.0 * std_error


# -----------------------------
# Secrecy outage
# -----------------------------


def test_so_terms_methods(unit_params):
    terms = analytic.so_terms(unit_params, 0.5, 1.0)
    assert terms.j1_method is TermMethod.CLOSED_FORM
    assert terms.j2_method is TermMethod.QUADRATURE
    assert terms.j3_method is TermMethod.QUADRATURE
    assert terms.total > 0
    eta2 = analytic.so_terms(unit_params.replace(path_loss_exp=2.0), 0.5, 1.0)
    assert eta2.j2_method is TermMethod.CLOSED_FORM
    assert eta2.error_estimate == 0.0


def test_p_so_pgfl_form(unit_params):
    code = WiretapCode(1.0, 1.0)
    terms = analytic.so_terms(unit_params, 0.5, code.tau_e)
    expected = 1.0 - math.exp(-2.0 * unit_params.eav_density * (terms.j1 + terms.j2 - terms.j3))
    assert analytic.p_so(unit_params, 0.5, code) == pytest.approx(expected, rel=1e-12)


def test_p_so_limits(unit_params):
    assert analytic.p_so(unit_params.replace(eav_density=0.0), 0.5, WiretapCode(1.0, 0.5)) == 0.0
    assert analytic.p_so(unit_params, 0.5, WiretapCode(1.0, 0.0)) == 1.0


def test_p_so_saturates_for_dense_eavesdroppers(unit_params):
    assert analytic.p_so(unit_params.replace(eav_density=1e6), 0.5, WiretapCode(1.0, 1.0)) == 1.0


def test_p_so_single_antenna_without_an(unit_params):
    params = unit_params.replace(num_antennas=1)
    value = analytic.p_so(params, 1.0, WiretapCode(1.0, 1.0))
    assert 0.0 < value < 1.0


def test_negative_pgfl_sum_beyond_error_raises(unit_params, monkeypatch):
    monkeypatch.setattr(analytic, "j1", lambda *args: 0.0)
    monkeypatch.setattr(analytic, "_j2_with_error", lambda *args: (1.0, 1e-9, TermMethod.QUADRATURE))
    monkeypatch.setattr(analytic, "_j3_with_error", lambda *args: (1.5, 1e-9, TermMethod.QUADRATURE))
    with pytest.raises(QuadratureConvergenceError):
        analytic.so_terms(unit_params, 0.5, 1.0)


def test_negative_pgfl_sum_within_error_is_clamped(unit_params, monkeypatch, caplog):
    monkeypatch.setattr(analytic, "j1", lambda *args: 0.0)
    monkeypatch.setattr(analytic, "_j2_with_error", lambda *args: (1.0, 1e-6, TermMethod.QUADRATURE))
    monkeypatch.setattr(analytic, "_j3_with_error", lambda *args: (1.0 + 1e-7, 1e-6, TermMethod.QUADRATURE))
    terms = analytic.so_terms(unit_params, 0.5, 1.0)
    assert terms.total == 0.0
    assert "Clamping" in caplog.text


def _monotone(values, increasing, tol=1e-9):
    pairs = zip(values, values[1:])
    if increasing:
        return all(b >= a - tol for a, b in pairs)
    return all(b <= a + tol for a, b in pairs)


def _check_p_so_monotone(draws, points, seed):
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        params = _random_params(rng, 4.0)
        beta = _random_beta(rng)
        rates = np.linspace(0.2, 4.0, points)
        assert _monotone([analytic.p_so(params, beta, WiretapCode(r, r)) for r in rates], increasing=False)
        code = WiretapCode(2.0, float(rng.uniform(0.2, 2.0)))
        densities = np.geomspace(0.01, 10.0, points)
        assert _monotone(
            [analytic.p_so(params.replace(eav_density=float(d)), beta, code) for d in densities], increasing=True
        )
        powers = np.geomspace(0.1, 10.0, points)
        assert _monotone(
            [analytic.p_so(params.replace(power_source=float(p)), beta, code) for p in powers], increasing=True
        )
        assert _monotone(
            [analytic.p_so(params.replace(power_relay=float(p)), beta, code) for p in powers], increasing=True
        )


def test_p_so_monotonicity_suite():
    _check_p_so_monotone(draws=3, points=8, seed=99)


@pytest.mark.slow
def test_p_so_monotonicity_suite_randomised():
    _check_p_so_monotone(draws=20, points=10, seed=2025)


# -----------------------------
# Throughput
# -----------------------------


def test_throughput_bundle(fig2_params):
    code = WiretapCode(3.0, 1.0)
    metrics = analytic.throughput(fig2_params, 0.5, code)
    assert metrics.p_to == pytest.approx(analytic.p_to(fig2_params, 0.5, code))
    assert metrics.throughput == pytest.approx(0.5 * 2.0 * (1.0 - metrics.p_to))
    assert 0.0 < metrics.p_so < 1.0


def test_cdf_si_reference_point(unit_params):
    # N = 4, beta = 0.5, gamma = 3 at unit mean SNR: 1 - 2^-3 e^-6
    assert analytic.cdf_gamma_si(3.0, unit_params, 0.5, 1.0) == pytest.approx(1.0 - math.exp(-6.0) / 8.0, rel=1e-14)
