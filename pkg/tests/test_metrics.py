"""
Tests de las figuras de mérito: cuentas oscuras, eficiencia y sensibilidad
"""
import math

import numpy as np
import pytest
from scipy import constants

from src.config.settings import BandwidthMethod
from src.core import metrics
from src.core.errors import ConfigurationError, UndefinedSensitivityError
from src.core.metrics import (
    EfficiencyBudget, NoiseBudget, TemperatureModelParams, alpha_q, alpha_th, cycle_qubit_efficiency,
    efficiency_budget, environment_occupation, eta_q, majority_leading_order, nep, noise_budget,
    optimal_detection_ratio, optimal_detection_window, sensitivity, sensitivity_report, snr,
    temperature_model, thermal_occupation,
)
from src.core.model import CycleSpec, Environment
from src.core.scattering import bandwidth

from conftest import TWO_PI, make_qubit


# ----------------------------------------------------------------------
# Ocupación térmica
# ----------------------------------------------------------------------
def test_thermal_occupation_reference_point():
    assert thermal_occupation(0.045, 8.798e9) == pytest.approx(8.417e-5, rel=2e-3)
    assert thermal_occupation(0.0, 8.798e9) == 0.0


def test_thermal_occupation_is_vectorized_and_monotone():
    temps = np.linspace(0.0, 0.2, 41)
    values = thermal_occupation(temps, 8e9)
    assert values.shape == temps.shape
    assert values[0] == 0.0
    assert np.all(np.diff(values) > 0)
    with pytest.raises(ConfigurationError):
        thermal_occupation(-0.01, 8e9)
    with pytest.raises(ConfigurationError):
        thermal_occupation(0.05, 0.0)


def test_environment_override_wins_over_temperature():
    env = Environment(temperature=0.045, background_occupations={8.798e9: 1e-3})
    assert environment_occupation(env, 8.798e9) == 1e-3
    assert environment_occupation(env, 7.0e9) == pytest.approx(thermal_occupation(0.045, 7.0e9))


# ----------------------------------------------------------------------
# Cuentas oscuras
# ----------------------------------------------------------------------
@pytest.mark.parametrize("n_reset, expected", [(0, 18.91), (1, 17.19)])
def test_alpha_q_operational_form(n_reset, expected):
    qubit = make_qubit(t1=50e-6, p_eq=1e-3, p_eq_reset=1e-5)
    cycle = CycleSpec(t_d=10e-6, t_ro=1e-6, t_reset=100e-9, n_reset=n_reset)
    assert alpha_q(qubit, cycle) == pytest.approx(expected, abs=0.01)


def test_alpha_q_linearization_error_scales_with_window():
    """El error relativo de la forma lineal es del orden de T_d/(2·T1)"""
    qubit = make_qubit(t1=50e-6, p_eq=1e-3, p_eq_reset=1e-5)
    cycle = CycleSpec(t_d=10e-6, t_ro=1e-6, t_reset=100e-9, n_reset=0)
    linear = alpha_q(qubit, cycle)
    exact = alpha_q(qubit, cycle, exact=True)
    assert exact < linear
    assert (linear - exact) / linear == pytest.approx(0.1, rel=0.5)


def test_alpha_th_uses_quarter_bandwidth():
    k_th = 0.1 * TWO_PI * 216e3 / 4.0
    assert alpha_th(0.1, TWO_PI * 216e3, 1.0) == pytest.approx(k_th)
    assert k_th == pytest.approx(3.39e4, rel=1e-3)
    with pytest.raises(ConfigurationError):
        alpha_th(-0.1, 1e6, 1e-4)


def test_temperature_model_single_and_correlated():
    params = TemperatureModelParams(k=3.39e4, c=0.5)
    single = temperature_model(params, 0.08, [8.798e9])
    assert single == pytest.approx(3.39e4 * thermal_occupation(0.08, 8.798e9) + 0.5)
    pair = temperature_model(params, np.array([0.05, 0.1]), [6.614e9, 6.284e9])
    expected = 3.39e4 * thermal_occupation(np.array([0.05, 0.1]), 6.614e9) * thermal_occupation(
        np.array([0.05, 0.1]), 6.284e9) + 0.5
    np.testing.assert_allclose(pair, expected)
    with pytest.raises(ConfigurationError):
        TemperatureModelParams(k=-1.0, c=0.0)


def test_noise_budget_total_is_exact_sum():
    budget = NoiseBudget(alpha_q=0.14, alpha_pump=0.5, alpha_ro=0.01, alpha_th=5.69)
    assert budget.alpha_total == 0.14 + 0.5 + 0.01 + 5.69
    assert budget.alpha_err == pytest.approx(0.65)
    with pytest.raises(ConfigurationError):
        NoiseBudget(alpha_q=0.1, alpha_pump=0.0, alpha_ro=0.0, alpha_th=0.0, alpha_total=1.0)
    with pytest.raises(ConfigurationError):
        NoiseBudget(alpha_q=-0.1, alpha_pump=0.0, alpha_ro=0.0, alpha_th=0.0)


def test_reference_noise_budget(reference):
    chain, cycle = reference.chain, reference.cycle
    eta = efficiency_budget(chain, cycle).eta_total
    kappa_d = bandwidth(chain, BandwidthMethod.APPROX_SUM)
    budget = noise_budget(
        chain.qubits, cycle, eta, kappa_d, reference.environment,
        reference.alpha_pump, reference.alpha_ro,
        buffer_frequency=chain.buffer.frequency_hz,
    )
    assert budget.alpha_q == pytest.approx(0.140, abs=2e-3)
    assert budget.alpha_th == pytest.approx(5.69, rel=1e-2)
    assert budget.alpha_total == pytest.approx(6.34, rel=1e-2)


def test_correlated_intrinsic_model_replaces_product(reference):
    chain, cycle = reference.chain, reference.cycle
    model = TemperatureModelParams(k=2.0e5, c=0.02)
    budget = noise_budget(
        chain.qubits, cycle, 0.17, 1e6, reference.environment,
        buffer_frequency=chain.buffer.frequency_hz, intrinsic_model=model,
    )
    expected = temperature_model(model, reference.environment.temperature, [q.frequency_hz for q in chain.qubits])
    assert budget.alpha_q == pytest.approx(expected)


def test_single_qubit_budget_uses_operational_form(short_cycle):
    qubit = make_qubit(t1=50e-6, p_eq=1e-3, p_eq_reset=1e-5)
    budget = noise_budget([qubit], short_cycle, 0.5, 1e6, Environment(0.0), buffer_frequency=8e9)
    assert budget.alpha_q == pytest.approx(alpha_q(qubit, short_cycle))
    assert budget.alpha_th == 0.0


# ----------------------------------------------------------------------
# Eficiencia
# ----------------------------------------------------------------------
def test_efficiency_budget_is_product_of_factors():
    budget = EfficiencyBudget(0.95, 0.57, 0.78, (0.81, 0.70), (0.84, 0.88))
    assert budget.eta_total == pytest.approx(0.175, abs=0.005)
    assert budget.eta_total == pytest.approx(np.prod(budget.factors()))
    assert budget.eta_chain == pytest.approx(budget.eta_total / 0.78)
    with pytest.raises(ConfigurationError):
        EfficiencyBudget(1.2, 0.57, 0.78, (0.81,), (0.84,))
    with pytest.raises(ConfigurationError):
        EfficiencyBudget(0.95, 0.57, 0.78, (0.81,), (0.84,), eta_total=0.5)


def test_reference_efficiency_budget(reference_chain, reference_cycle):
    budget = efficiency_budget(reference_chain, reference_cycle)
    assert budget.eta_4wm == pytest.approx(0.9473, abs=1e-3)
    assert budget.eta_m == pytest.approx(0.5829, abs=1e-3)
    assert budget.eta_cycle == pytest.approx(0.78007, abs=1e-4)
    np.testing.assert_allclose(budget.eta_q, [0.8115, 0.6688], atol=1e-3)
    assert budget.f_ro == (0.84, 0.88)
    assert budget.eta_total == pytest.approx(0.175, abs=0.005)


def test_eta_q_limits():
    assert eta_q(13e-6, 30e-6) == pytest.approx(0.8115, abs=1e-4)
    assert eta_q(10e-6, math.inf) == 1.0
    assert eta_q(1e-9, 1e-3) == pytest.approx(1.0, abs=1e-6)


def test_optimal_detection_window_solves_balance():
    """x óptimo cumple e^x = x + 1 + r y maximiza η_cycle·η_q"""
    r = 0.1
    x = optimal_detection_ratio(r)
    assert math.exp(x) == pytest.approx(x + 1.0 + r, rel=1e-10)
    best = cycle_qubit_efficiency(x, r)
    neighbours = cycle_qubit_efficiency(np.array([0.9 * x, 1.1 * x]), r)
    assert np.all(neighbours < best)
    cycle = CycleSpec(t_d=10e-6, t_ro=1e-6, t_reset=100e-9, n_reset=1)
    window = optimal_detection_window(cycle, 30e-6)
    assert window == pytest.approx(optimal_detection_ratio(cycle.dead_time / 30e-6) * 30e-6)
    assert optimal_detection_ratio(0.0) == 0.0


def test_majority_leading_order():
    assert majority_leading_order(3, 1e-3) == pytest.approx(3e-6)
    assert majority_leading_order(5, 1e-2) == pytest.approx(10 * 1e-6)


# ----------------------------------------------------------------------
# Sensibilidad
# ----------------------------------------------------------------------
def test_sensitivity_definition():
    value = sensitivity(85.0, 0.43, 7.0e9)
    assert value == pytest.approx(constants.h * 7.0e9 * math.sqrt(85.0) / 0.43)
    with pytest.raises(UndefinedSensitivityError):
        sensitivity(1.0, 0.0, 7e9)


def test_nep_tends_to_sensitivity():
    alpha, eta, f = 10.0, 0.2, 8e9
    assert nep(alpha, eta, f, 1e9) == pytest.approx(sensitivity(alpha, eta, f), rel=1e-4)
    assert nep(alpha, eta, f, 1.0) > sensitivity(alpha, eta, f)
    assert metrics.nep_asymptotic(alpha, eta, f) == sensitivity(alpha, eta, f)


def test_power_at_nep_gives_unit_snr():
    alpha, eta, f, t = 6.3, 0.17, 8.798e9, 2.0
    power = nep(alpha, eta, f, t) / math.sqrt(t)
    assert snr(power, eta, alpha, t, f) == pytest.approx(1.0, rel=1e-9)
    assert snr(0.0, eta, 0.0, t, f) == 0.0


def test_sensitivity_report_fields():
    report = sensitivity_report(6.34, 0.65, 0.17, 8.798e9, t=1.0)
    assert report.s_intrinsic < report.s_operational
    assert report.nep_at_t > report.s_operational
    assert set(report.export_to_dict()) == {'s_operational', 's_intrinsic', 'nep_at_t', 't'}
