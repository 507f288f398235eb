"""
Tests de los tipos del modelo: modos, qubits, bombeos, cadena y ciclo
"""
import math

import numpy as np
import pytest

from src.core.errors import ConfigurationError
from src.core.model import (
    ChainSpec, CycleSpec, Environment, ModeRole, ModeSpec, PumpSpec, coupling_strength, eta_cycle,
)

from conftest import TWO_PI, make_chain, make_qubit


def test_coupling_strength_sign_and_magnitude():
    """g4 = −ξ·√(χ_izq·χ_der) con χ del mismo signo"""
    qubit = make_qubit(chi_left=-TWO_PI * 1e6, chi_right=-TWO_PI * 4e6)
    g = coupling_strength(qubit, PumpSpec(xi=0.05))
    assert g == pytest.approx(-0.05 * TWO_PI * 2e6)


@pytest.mark.parametrize("chi_left, chi_right, key", [
    (0.0, -1e6, 'chi_left'),
    (-1e6, 0.0, 'chi_right'),
    (-1e6, 1e6, 'chi_right'),
])
def test_coupling_strength_rejects_degenerate_shifts(chi_left, chi_right, key):
    qubit = make_qubit(chi_left=chi_left, chi_right=chi_right)
    with pytest.raises(ConfigurationError) as info:
        coupling_strength(qubit, PumpSpec(xi=0.1))
    assert info.value.key == key


def test_chain_requires_matching_lengths():
    """N qubits necesitan N+1 modos y N bombeos"""
    chain = make_chain([1e6, 1e6], [-3e5])
    with pytest.raises(ConfigurationError) as info:
        ChainSpec(chain.modes, chain.qubits + chain.qubits, chain.pumps)
    assert info.value.key == 'modes'
    with pytest.raises(ConfigurationError) as info:
        ChainSpec(chain.modes, chain.qubits, chain.pumps + chain.pumps)
    assert info.value.key == 'pumps'
    with pytest.raises(ConfigurationError) as info:
        ChainSpec(chain.modes[:1], (), ())
    assert info.value.key == 'qubits'


def test_chain_roles_and_end_losses():
    chain = make_chain([1e6, 0.0, 1e6], [-3e5, -3e5])
    swapped = (chain.modes[2], chain.modes[1], chain.modes[0])
    with pytest.raises(ConfigurationError):
        ChainSpec(swapped, chain.qubits, chain.pumps)
    buffer = chain.modes[0]
    wrong_memory = ModeSpec(ModeRole.WASTE, chain.modes[1].omega, 1e5)
    with pytest.raises(ConfigurationError) as info:
        ChainSpec((buffer, wrong_memory, chain.modes[2]), chain.qubits, chain.pumps)
    assert info.value.key == 'mode:1'
    with pytest.raises(ConfigurationError) as info:
        chain.with_mode(0, kappa_ext=0.0)
    assert info.value.key == 'mode:0'


def test_lossless_memory_is_allowed():
    chain = make_chain([1e6, 0.0, 1e6], [-3e5, -3e5])
    assert chain.modes[1].kappa_total == 0.0
    assert chain.n_stages == 2


def test_mode_detunings_accumulate_pump_detunings():
    """Δ_{k+1} = Δ_k − Δ_p,k"""
    chain = make_chain([1e6, 0.0, 0.0, 1e6], [-1e5, -1e5, -1e5], delta_ps=[1e4, -3e4, 5e3])
    np.testing.assert_allclose(chain.mode_detunings(), [0.0, -1e4, 2e4, 1.5e4])


def test_from_couplings_and_with_couplings_round_trip():
    chain = make_chain([5.8e6, 3.7e5, 3.36e6], [-8e5, -7e5])
    np.testing.assert_allclose(chain.couplings(), [-8e5, -7e5])
    changed = chain.with_couplings([-1e5, -2e5])
    np.testing.assert_allclose(changed.couplings(), [-1e5, -2e5])
    scaled = chain.with_pump_scale(0.5)
    np.testing.assert_allclose(scaled.couplings(), [-4e5, -3.5e5])


def test_conversion_rates_of_two_stage_chain():
    chain = make_chain([4e6, 0.0, 2e6], [-1e6, -5e5], kappa_ints=[0.0, 1e5, 0.0])
    assert chain.gamma_mb() == pytest.approx(4 * 1e12 / 4e6)
    assert chain.gamma_mw() == pytest.approx(4 * 2.5e11 / 2e6)
    assert chain.gamma_bm() == pytest.approx(4 * 1e12 / (1e5 + 5e5))
    single = make_chain([1e6, 1e6], [-3e5])
    with pytest.raises(ConfigurationError):
        single.gamma_bm()


def test_lambda0_is_buffer_loss_ratio():
    chain = make_chain([2e6, 2e6], [-3e5], kappa_ints=[5e5, 0.0])
    assert chain.lambda0() == pytest.approx(0.25)


def test_chain_export_round_trip():
    chain = make_chain([5.8e6, 0.0, 3.36e6], [-8e5, -7e5], kappa_ints=[0.0, 3.7e5, 0.0], delta_ps=[1e3, 0.0])
    restored = ChainSpec.from_dict(chain.export_to_dict())
    assert restored == chain


def test_cycle_dead_time_and_duty_cycle():
    """T_RO+reset = (n+1)T_RO + n·T_reset"""
    cycle = CycleSpec(t_d=13e-6, t_ro=1.5e-6, t_reset=128e-9, n_reset=1.33)
    assert cycle.dead_time == pytest.approx(2.33 * 1.5e-6 + 1.33 * 128e-9)
    assert cycle.t_cycle == pytest.approx(16.66524e-6, rel=1e-9)
    assert cycle.eta_cycle == pytest.approx(0.78007, abs=1e-5)
    assert eta_cycle(cycle) == cycle.eta_cycle


@pytest.mark.parametrize("field, value", [('t_d', 0.0), ('t_ro', -1e-6), ('t_reset', 0.0), ('n_reset', -1.0)])
def test_cycle_validation(field, value):
    values = dict(t_d=10e-6, t_ro=1e-6, t_reset=1e-7, n_reset=1.0)
    values[field] = value
    with pytest.raises(ConfigurationError) as info:
        CycleSpec(**values)
    assert info.value.key == field


def test_qubit_validation_and_pumped_default():
    qubit = make_qubit(t1=40e-6)
    assert qubit.t1_pumped == 40e-6
    with pytest.raises(ConfigurationError) as info:
        make_qubit(p_eq=1e-3, p_eq_reset=2e-3)
    assert info.value.key == 'p_eq_reset'
    with pytest.raises(ConfigurationError):
        make_qubit(f_ro=0.0)


def test_environment_override_lookup():
    env = Environment(temperature=0.045, background_occupations={8.798e9: 1e-3})
    assert env.override_for(8.798e9) == 1e-3
    assert env.override_for(7.0e9) is None
    with pytest.raises(ConfigurationError):
        Environment(temperature=-0.01)
    assert math.isclose(env.temperature, 0.045)
