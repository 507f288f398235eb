"""
Tests del modelo de dispersión: S21, cooperatividad, eficiencias, ancho de banda
"""
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from src.config.settings import BandwidthMethod
from src.core.errors import ConfigurationError, InsufficientResolutionError, MultiPeakResponseError
from src.core import scattering
from src.core.scattering import (
    bandwidth, chain_memory_efficiency, cooperativity, cooperativity_closed_form, eta_4wm, filter_grid,
    memory_efficiency, pulse_filtered_efficiency, pump_frequencies, pump_resonance_lines, scan,
    solve_single_excitation, transmission, transmission_closed_form_n1, transmission_closed_form_n2,
)

from conftest import TWO_PI, lossless_n1, lossless_n2, make_chain


def _random_chain(rng, n, lossless=False, detuned=False):
    kappas = rng.uniform(1e6, 8e6, n + 1)
    couplings = -rng.uniform(2e5, 1.5e6, n)
    kappa_ints = [0.0] * (n + 1) if lossless else list(rng.uniform(0.0, 5e5, n + 1))
    if lossless:
        kappa_ints[0] = 0.0
    delta_ps = list(rng.uniform(-5e5, 5e5, n)) if detuned else None
    return make_chain(kappas, couplings, kappa_ints, delta_ps)


# ----------------------------------------------------------------------
# S21
# ----------------------------------------------------------------------
def test_solver_matches_closed_forms():
    """El solver tridiagonal coincide con las formas cerradas N=1 y N=2"""
    rng = np.random.default_rng(11)
    for _ in range(20):
        for n, closed in ((1, transmission_closed_form_n1), (2, transmission_closed_form_n2)):
            chain = _random_chain(rng, n, detuned=True)
            for delta in rng.uniform(-5e6, 5e6, 5):
                expected = closed(chain, delta)
                assert transmission(chain, delta)[0] == pytest.approx(expected, rel=1e-10)


def test_s21_magnitude_never_exceeds_one():
    rng = np.random.default_rng(3)
    for n in (1, 2, 3, 4):
        chain = _random_chain(rng, n, detuned=True)
        values = transmission(chain, np.linspace(-2e7, 2e7, 4001))
        assert np.all(values <= 1.0 + 1e-12)
        assert np.all(values >= 0.0)


def test_impedance_matched_chains_reach_unit_transmission():
    """C = 1 sin pérdidas internas da |S21(0)|² = 1"""
    assert transmission(lossless_n1(), 0.0)[0] == pytest.approx(1.0, abs=1e-12)
    assert transmission(lossless_n2(), 0.0)[0] == pytest.approx(1.0, abs=1e-12)
    assert transmission(lossless_n2(g=8e5), 0.0)[0] == pytest.approx(1.0, abs=1e-12)


def test_peak_transmission_is_conversion_efficiency():
    """Con memorias ideales |S21(0)|² = 4C/(1+C)²"""
    rng = np.random.default_rng(5)
    for n in (1, 2, 3):
        for _ in range(5):
            chain = _random_chain(rng, n, lossless=True)
            c = cooperativity(chain)
            assert transmission(chain, 0.0)[0] == pytest.approx(eta_4wm(c), rel=1e-9)


def test_solve_single_excitation_returns_output_amplitude(reference_chain):
    psi, s21 = solve_single_excitation(reference_chain, 0.0)
    assert psi.shape == (3,)
    assert s21 == pytest.approx(math.sqrt(reference_chain.waste.kappa_total) * psi[-1])
    assert abs(s21) ** 2 == pytest.approx(transmission(reference_chain, 0.0)[0])


def test_scan_reports_ports_and_metrics(reference_chain):
    grid = np.linspace(-2e7, 2e7, 801)
    result = scan(reference_chain, grid)
    np.testing.assert_allclose(result.transmission, transmission(reference_chain, grid), rtol=1e-12)
    assert result.memory_loss is not None
    assert result.cooperativity == pytest.approx(0.6266, abs=1e-3)
    assert result.eta_4wm == pytest.approx(transmission(reference_chain, 0.0)[0])
    loss = scattering.memory_loss_amplitude(reference_chain, 0.0)
    assert abs(loss) ** 2 == pytest.approx(abs(result.port(scattering.MEMORY_LOSS_PORT)[400]) ** 2, rel=1e-9)


def test_energy_balance_at_resonance(reference_chain):
    """Transmisión, pérdidas y reflexión suman la potencia de entrada"""
    psi, s21 = solve_single_excitation(reference_chain, 0.0)
    kappas = reference_chain.kappas()
    buffer = reference_chain.buffer
    reflected = abs(1.0 - math.sqrt(buffer.kappa_ext) * psi[0]) ** 2
    dissipated = kappas[1] * abs(psi[1]) ** 2 + buffer.kappa_int * abs(psi[0]) ** 2
    assert reflected + dissipated + abs(s21) ** 2 == pytest.approx(1.0, rel=1e-9)


# ----------------------------------------------------------------------
# Cooperatividad y eficiencias
# ----------------------------------------------------------------------
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_cooperativity_recursion_matches_closed_form(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(10):
        chain = _random_chain(rng, n)
        assert cooperativity(chain) == pytest.approx(cooperativity_closed_form(chain), rel=1e-12)


def test_memory_losses_reduce_cooperativity():
    chain = make_chain([5.8e6, 0.0, 3.36e6], [-8e5, -7.8e5], kappa_ints=[0.0, 3.7e5, 0.0])
    assert cooperativity(chain, lossless_memories=False) < cooperativity(chain)


def test_reference_efficiencies(reference_chain):
    c = cooperativity(reference_chain)
    assert c == pytest.approx(0.62, abs=0.02)
    assert eta_4wm(c) == pytest.approx(0.9473, abs=1e-3)
    assert chain_memory_efficiency(reference_chain) == pytest.approx(0.5829, abs=1e-3)


def test_eta_4wm_properties():
    assert eta_4wm(1.0) == 1.0
    assert eta_4wm(0.0) == 0.0
    assert eta_4wm(math.inf) == 0.0
    assert eta_4wm(4.0) == pytest.approx(eta_4wm(0.25))
    with pytest.raises(ConfigurationError):
        eta_4wm(-0.1)


def test_memory_efficiency_limits():
    assert memory_efficiency(1e6, 1e6, 0.0) == 1.0
    assert memory_efficiency(1e6, 1e6, 2e6) == pytest.approx(0.25)
    with pytest.raises(ConfigurationError):
        memory_efficiency(0.0, 0.0, 1e5)


# ----------------------------------------------------------------------
# Ancho de banda
# ----------------------------------------------------------------------
def test_analytic_bandwidth_matches_numeric_fwhm():
    rng = np.random.default_rng(21)
    for _ in range(10):
        kappa_b, kappa_w = rng.uniform(1e6, 8e6, 2)
        c = rng.uniform(0.1, 0.9)
        g = math.sqrt(c * kappa_b * kappa_w / 4.0)
        chain = make_chain([kappa_b, kappa_w], [-g])
        analytic = bandwidth(chain, BandwidthMethod.ANALYTIC_N1)
        numeric = bandwidth(chain, BandwidthMethod.NUMERIC_FWHM)
        assert numeric == pytest.approx(analytic, rel=1e-6)


def test_critical_cooperativity_bandwidth_is_sqrt2_kappa():
    """En C = 1 con κ_b = κ_w la respuesta es plana de cuarto orden: κ_d = √2·κ"""
    for kappa in (1e6, 3.7e6, 2.5e7):
        chain = lossless_n1(kappa=kappa)
        expected = math.sqrt(2.0) * kappa
        assert bandwidth(chain, BandwidthMethod.ANALYTIC_N1) == pytest.approx(expected, rel=1e-12)
        assert bandwidth(chain, BandwidthMethod.NUMERIC_FWHM) == pytest.approx(expected, rel=1e-6)


def test_bandwidth_saturates_at_twice_buffer_rate():
    """Con C = 1 y κ_w ≫ κ_b el ancho de banda tiende a 2κ_b"""
    chain = make_chain([1e6, 5e7], [-math.sqrt(5e7 * 1e6 / 4.0)])
    assert bandwidth(chain, 'analytic_n1') / 1e6 == pytest.approx(2.04, abs=0.01)
    chain = make_chain([1e6, 1e10], [-math.sqrt(1e10 * 1e6 / 4.0)])
    assert bandwidth(chain, 'analytic_n1') / 1e6 == pytest.approx(2.0, rel=1e-2)


def test_overcoupled_response_has_no_scalar_bandwidth():
    chain = lossless_n1(cooperativity=10.0)
    with pytest.raises(MultiPeakResponseError):
        bandwidth(chain, BandwidthMethod.ANALYTIC_N1)
    with pytest.raises(MultiPeakResponseError) as info:
        bandwidth(chain, BandwidthMethod.NUMERIC_FWHM)
    assert len(info.value.peaks) == 2


def test_approx_sum_bandwidth(reference_chain):
    """κ_d ≈ κ_m + γ_mb + γ_mw"""
    kappa_d = bandwidth(reference_chain, BandwidthMethod.APPROX_SUM)
    assert kappa_d / TWO_PI == pytest.approx(249.0e3, rel=1e-3)
    with pytest.raises(ConfigurationError):
        bandwidth(lossless_n1(), BandwidthMethod.APPROX_SUM)
    with pytest.raises(ConfigurationError):
        bandwidth(reference_chain, BandwidthMethod.ANALYTIC_N1)


# ----------------------------------------------------------------------
# Ventana de detección
# ----------------------------------------------------------------------
def test_rectangular_kernel_is_normalized():
    t_d = 10e-6
    grid = np.linspace(-400 * TWO_PI / t_d, 400 * TWO_PI / t_d, 80001)
    area = trapezoid(scattering.rectangular_kernel(grid, t_d), grid)
    assert area == pytest.approx(1.0, abs=2e-3)


def test_long_window_recovers_resonant_transmission():
    """Con t_d·κ_d ≫ 1 el filtrado reproduce |S21(0)|²"""
    chain = lossless_n1()
    t_d = 200e-6
    assert t_d * bandwidth(chain, BandwidthMethod.ANALYTIC_N1) > 100
    response = scan(chain, filter_grid(chain, t_d), with_metrics=False)
    expected = float(transmission(chain, 0.0)[0])
    assert pulse_filtered_efficiency(response, t_d) == pytest.approx(expected, abs=1e-3)


def test_filtered_efficiency_is_grid_converged():
    """La ventana corta puede superar |S21(0)|²; el valor no depende de la malla"""
    chain = lossless_n1()
    t_d = 20e-6

    def filtered(grid):
        return pulse_filtered_efficiency(scan(chain, grid, with_metrics=False), t_d)

    reference = filtered(filter_grid(chain, t_d))
    finer = filtered(filter_grid(chain, t_d, oversample=20.0))
    wider = filtered(filter_grid(chain, t_d, span_factor=2000.0))
    assert finer == pytest.approx(reference, rel=1e-4)
    assert wider == pytest.approx(reference, rel=1e-4)
    assert reference > 1.0


def test_coarse_grid_is_rejected():
    chain = lossless_n1()
    response = scan(chain, np.linspace(-1e7, 1e7, 11), with_metrics=False)
    with pytest.raises(InsufficientResolutionError):
        pulse_filtered_efficiency(response, 100e-6)


# ----------------------------------------------------------------------
# Frecuencias de bombeo
# ----------------------------------------------------------------------
def test_pump_resonance_lines(reference_chain):
    m0, m1 = pump_frequencies(reference_chain)
    first, cascaded = pump_resonance_lines(reference_chain)
    assert first.label == "first_conversion" and first.slope == 0.0
    assert first.intercept == pytest.approx(m0)
    assert cascaded.label == "cascaded_sum" and cascaded.slope == -1.0
    assert cascaded.pump0_at(m1) == pytest.approx(m0, rel=1e-12)
    with pytest.raises(ConfigurationError):
        pump_resonance_lines(lossless_n1())


def test_pump_frequency_includes_stark_shift(reference_chain):
    """La frecuencia de bombeo baja en 2|ξ|²|χ_qq|"""
    base = pump_frequencies(reference_chain)
    stronger = pump_frequencies(reference_chain.with_pump_scale(2.0))
    xi = np.abs([p.xi for p in reference_chain.pumps])
    chi_self = np.abs([q.chi_self for q in reference_chain.qubits])
    np.testing.assert_allclose(base - stronger, 2.0 * 3.0 * xi ** 2 * chi_self, rtol=1e-9)
