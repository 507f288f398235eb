"""
Tests del simulador estocástico, la lectura dispersiva y el benchmark de conteo
"""
import math

import numpy as np
import pytest

from src.config.settings import DecodingScheme, MonteCarloSettings
from src.core.errors import (
    ConfigurationError, DecoderParityError, DegenerateReadoutError, SaturatedBenchmarkError,
)
from src.core.metrics import NoiseBudget
from src.core.montecarlo import (
    ClickTrace, IQReadoutModel, SimulationConfig, conversion_probabilities, decode, decode_probability,
    estimate_benchmark, expected_click_probability, fit_count_rates, flag_survivals, optimize_threshold,
    readout_sample, simulate,
)
from src.core.scattering import transmission

FAST = MonteCarloSettings(block_cycles=65536, workers=1)


@pytest.fixture
def benchmark_config(short_cycle):
    """Dos qubits con η_chain = 0.242 y α_q = 5 cuentas/s"""
    budget = NoiseBudget(alpha_q=5.0, alpha_pump=0.0, alpha_ro=0.0, alpha_th=0.0)
    return SimulationConfig.from_budget(budget, short_cycle, (0.5, 0.484))


# ----------------------------------------------------------------------
# Lectura
# ----------------------------------------------------------------------
def test_from_fidelity_reproduces_assignment_fidelity():
    model = IQReadoutModel.from_fidelity(0.84)
    assert model.v_th == model.v_th_reset == pytest.approx(0.5)
    assert model.single_shot_fidelity(True) == pytest.approx(0.84, rel=1e-9)
    assert model.single_shot_fidelity(False) == pytest.approx(0.84, rel=1e-9)
    assert model.fidelity(True) == pytest.approx(0.84, rel=1e-9)
    with pytest.raises(ConfigurationError):
        IQReadoutModel.from_fidelity(0.4)


def test_readout_model_validation():
    with pytest.raises(ConfigurationError) as info:
        IQReadoutModel(0.0, 1.0, 0.3, v_th=0.3, v_th_reset=0.7)
    assert info.value.key == 'v_th_reset'
    with pytest.raises(ConfigurationError):
        IQReadoutModel(0.0, 1.0, 0.0)


def test_optimal_thresholds_are_symmetric_about_midpoint():
    v_th, v_reset = optimize_threshold(0.0, 1.0, 0.3)
    assert v_reset == pytest.approx(0.5 - abs(0.5 - v_th))
    assert v_reset <= v_th
    model = IQReadoutModel.with_optimal_thresholds(0.0, 1.0, 0.3)
    assert model.v_th == v_th
    with pytest.raises(DegenerateReadoutError):
        optimize_threshold(1.0, 1.0, 0.3)


def test_inverted_readout_orientation():
    model = IQReadoutModel(1.0, -1.0, 0.4)
    assert model.orientation == -1.0
    assert model.fidelity(True) == pytest.approx(model.fidelity(False))


def test_assignment_probabilities_sum_to_one():
    model = IQReadoutModel(0.0, 1.0, 0.3, 0.7, 0.3)
    for excited in (False, True):
        assert sum(model.assignment_probabilities(excited)) == pytest.approx(1.0)
        assert 0.0 <= model.excited_assignment_probability(excited) <= 1.0
    # las relecturas mejoran la asignación del estado excitado
    assert model.fidelity(True, max_rereads=10) > model.single_shot_fidelity(True)


def test_readout_sample_returns_outcome_and_rereads():
    rng = np.random.default_rng(0)
    model = IQReadoutModel(0.0, 1.0, 0.3, 0.7, 0.3)
    results = [readout_sample(model, 'e', rng, max_rereads=5) for _ in range(200)]
    assert all(isinstance(outcome, bool) and 0 <= rereads <= 5 for outcome, rereads in results)
    assert sum(outcome for outcome, _ in results) > 150


# ----------------------------------------------------------------------
# Configuración
# ----------------------------------------------------------------------
def test_from_budget_splits_intrinsic_rate(benchmark_config, short_cycle):
    flips = benchmark_config.flip_probabilities()
    assert np.prod(flips) / short_cycle.t_cycle == pytest.approx(5.0)
    assert benchmark_config.eta_chain == pytest.approx(0.242)


def test_signal_probability_is_poissonian(benchmark_config):
    assert benchmark_config.signal_probability(1000.0) == pytest.approx(-math.expm1(-0.01))
    assert benchmark_config.signal_probability(0.0) == 0.0


def test_thermal_counts_need_nonzero_efficiency(short_cycle):
    with pytest.raises(ConfigurationError) as info:
        SimulationConfig((0.0, 0.5), (0.0, 0.0), short_cycle, alpha_th=1.0)
    assert info.value.key == 'alpha_th'
    with pytest.raises(ConfigurationError):
        SimulationConfig((0.5, 1.2), (0.0, 0.0), short_cycle)
    with pytest.raises(ConfigurationError):
        SimulationConfig((0.5, 0.5), (0.0,), short_cycle)


def test_chain_conversion_probabilities(reference_chain, reference_cycle):
    probs = conversion_probabilities(reference_chain)
    assert len(probs) == 2
    assert all(0.0 <= p <= 1.0 for p in probs)
    assert np.prod(probs) == pytest.approx(transmission(reference_chain, 0.0)[0], rel=1e-9)
    np.testing.assert_allclose(flag_survivals(reference_chain, reference_cycle), [0.8115, 0.6688], atol=1e-3)


# ----------------------------------------------------------------------
# Simulación
# ----------------------------------------------------------------------
def test_simulation_is_deterministic_and_thread_independent(benchmark_config):
    first = simulate(benchmark_config, 1000.0, 0.5, seed=7, settings=MonteCarloSettings(block_cycles=1000, workers=1))
    again = simulate(benchmark_config, 1000.0, 0.5, seed=7, settings=MonteCarloSettings(block_cycles=1000, workers=1))
    threaded = simulate(benchmark_config, 1000.0, 0.5, seed=7, settings=MonteCarloSettings(block_cycles=1000, workers=4))
    other = simulate(benchmark_config, 1000.0, 0.5, seed=8, settings=MonteCarloSettings(block_cycles=1000, workers=1))
    assert np.array_equal(first.outcomes, again.outcomes)
    assert np.array_equal(first.outcomes, threaded.outcomes)
    assert not np.array_equal(first.outcomes, other.outcomes)


def test_trace_shape_and_timestamps(benchmark_config, short_cycle):
    trace = simulate(benchmark_config, 0.0, 0.011, seed=1, settings=FAST)
    assert trace.cycle_count == 1000
    assert trace.outcomes.shape == (1000, 2)
    assert trace.timestamps[1] == pytest.approx(short_cycle.t_cycle)
    assert trace.duration == pytest.approx(0.011)
    assert len(trace.bitstrings(trace.nonzero_cycles())) == trace.nonzero_cycles().size


@pytest.mark.parametrize("flux", [0.0, 500.0, 1500.0])
def test_counts_match_expected_probability(benchmark_config, flux):
    trace = simulate(benchmark_config, flux, 11.0, seed=3, settings=FAST)
    expected = expected_click_probability(benchmark_config, flux) * trace.cycle_count
    counts = decode(trace).counts
    assert abs(counts - expected) < 4.0 * math.sqrt(expected)


def test_intrinsic_errors_combine_multiplicatively(short_cycle):
    """Dos qubits con p = √(4e-5) dan 4e-5 falsos disparos por ciclo"""
    p = math.sqrt(4e-5)
    config = SimulationConfig((1.0, 1.0), (p / short_cycle.t_cycle,) * 2, short_cycle)
    assert expected_click_probability(config, 0.0) == pytest.approx(4e-5, rel=1e-9)
    trace = simulate(config, 0.0, 22.0, seed=11, settings=FAST)
    assert trace.cycle_count == 2_000_000
    assert abs(decode(trace).counts - 80) < 27


def test_readout_noise_matches_expected_rates(short_cycle):
    model = IQReadoutModel(0.0, 1.0, 0.3, 0.7, 0.3)
    config = SimulationConfig((0.5, 0.484), (1e-3 / short_cycle.t_cycle,) * 2, short_cycle, readout=(model, model))
    trace = simulate(config, 1000.0, 5.5, seed=5, settings=FAST)
    for k in range(2):
        expected = expected_click_probability(config, 1000.0, qubit=k) * trace.cycle_count
        observed = int(np.count_nonzero(trace.outcomes[:, k]))
        assert abs(observed - expected) < 4.0 * math.sqrt(expected)
    assert trace.rereads.max() > 0


def test_saturation_is_flagged(benchmark_config):
    trace = simulate(benchmark_config, 1e4, 0.011, seed=0, settings=FAST)
    assert trace.saturated


# ----------------------------------------------------------------------
# Decodificación
# ----------------------------------------------------------------------
def _trace(rows):
    outcomes = np.array(rows, dtype=bool)
    return ClickTrace(cycle_count=outcomes.shape[0], outcomes=outcomes, t_cycle=1e-5, seed=0)


def test_decoding_schemes():
    trace = _trace([[1, 1, 0], [1, 0, 0], [0, 0, 0], [1, 1, 1]])
    assert decode(trace, 'all_or_nothing').counts == 1
    majority = decode(trace, DecodingScheme.MAJORITY)
    assert majority.counts == 2
    assert majority.count_rate == pytest.approx(2 / 4e-5)
    with pytest.raises(DecoderParityError):
        decode(_trace([[1, 1], [0, 1]]), 'majority')


def test_decode_probability_enumeration():
    assert decode_probability([0.2, 0.3], 'all_or_nothing') == pytest.approx(0.06)
    assert decode_probability([0.5, 0.5, 0.5], 'majority') == pytest.approx(0.5)
    p = 1e-3
    assert decode_probability([p] * 3, 'majority') == pytest.approx(3 * p ** 2 - 2 * p ** 3)
    with pytest.raises(DecoderParityError):
        decode_probability([0.1, 0.1], 'majority')


# ----------------------------------------------------------------------
# Benchmark
# ----------------------------------------------------------------------
def test_benchmark_recovers_efficiency_and_dark_counts(benchmark_config, short_cycle):
    fluxes = [0.0, 500.0, 1000.0, 1500.0, 1e4]
    traces = [simulate(benchmark_config, f, 11.0 if f < 1e4 else 0.11, seed=21 + i, settings=FAST)
              for i, f in enumerate(fluxes)]
    result = estimate_benchmark(traces, schemes=('all_or_nothing',))
    assert result.fluxes == (0.0, 500.0, 1000.0, 1500.0)

    slope, slope_err = result.efficiency()
    expected_slope = 0.242 * short_cycle.eta_cycle
    assert abs(slope - expected_slope) < 3.0 * slope_err + 0.01 * expected_slope

    intercept, intercept_err = result.dark_count_rate()
    assert abs(intercept - 5.0) < 3.0 * intercept_err + 0.5
    assert len(result.per_qubit) == 2
    assert result.per_qubit[0].slope > slope


def test_benchmark_needs_zero_flux_and_three_points():
    with pytest.raises(SaturatedBenchmarkError):
        fit_count_rates([0.0, 100.0], [5, 50], [1.0, 1.0])
    with pytest.raises(SaturatedBenchmarkError):
        fit_count_rates([100.0, 200.0, 300.0], [5, 10, 15], [1.0, 1.0, 1.0])
    fit = fit_count_rates([0.0, 100.0, 200.0], [10, 30, 50], [1.0, 1.0, 1.0])
    assert fit.slope == pytest.approx(0.2)
    assert fit.intercept == pytest.approx(10.0)
