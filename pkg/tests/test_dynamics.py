"""
Tests de la evolución temporal: ecuación maestra y modelo lineal
"""
import numpy as np
import pytest

from src.core.dynamics import (
    SubspaceState, evolve_linear_model, evolve_master_equation, loss_rates, regime_chain,
)
from src.core.errors import ConfigurationError, TimeStepTooCoarseError
from src.core.scattering import cooperativity, transmission

from conftest import lossless_n1


def test_subspace_state_labels():
    chain = regime_chain(1.0)
    assert SubspaceState.vacuum(chain).labels == ('0g0g0',)
    assert SubspaceState.single_photon(chain, 0).labels == ('1g0g0',)
    assert SubspaceState.single_photon(chain, 2).labels == ('0e0e1',)
    with pytest.raises(ConfigurationError) as info:
        SubspaceState.from_labels(chain, {'1x0g0': 1.0})
    assert info.value.key == 'initial'
    with pytest.raises(ConfigurationError) as info:
        SubspaceState.from_labels(chain, {'1g0g0': 1.0, '0e1g0': 0.5})
    assert info.value.key == 'initial'


@pytest.mark.parametrize("c", [0.3, 1.0, 10.0])
def test_regime_chain_has_requested_cooperativity(c):
    chain = regime_chain(c)
    assert cooperativity(chain) == pytest.approx(c, rel=1e-12)
    assert chain.buffer.kappa_ext == pytest.approx(0.1 * chain.waste.kappa_ext)
    assert abs(chain.couplings()[1]) == pytest.approx(chain.buffer.kappa_ext)


def test_loss_rates_select_channels(reference_chain):
    kappas = reference_chain.kappas()
    np.testing.assert_allclose(loss_rates(reference_chain), [0.0, 0.0, kappas[2]])
    np.testing.assert_allclose(loss_rates(reference_chain, memory_loss=True, buffer_loss=True), kappas)


def test_photon_reaches_terminal_state_at_unit_cooperativity():
    """Con C = 1 el fotón termina en el estado con ambas banderas levantadas"""
    chain = regime_chain(1.0)
    trace = evolve_master_equation(chain, SubspaceState.single_photon(chain), t_max=20e-6, dt=2.5e-9)
    assert trace.terminal_probability()[-1] >= 0.99
    assert trace.photon_probability()[-1] < 0.01
    assert trace.leakage[-1] == pytest.approx(trace.terminal_probability()[-1], abs=1e-6)
    assert trace.n_b[0] == pytest.approx(1.0)
    assert np.all(trace.qubit_occupancies <= 1.0)
    np.testing.assert_allclose(trace.qubit_occupancies[-1], [1.0, 1.0], atol=0.01)


def test_master_equation_matches_linear_model():
    """En el subespacio de una excitación n_k = |ψ_k|²"""
    chain = regime_chain(0.5)
    master = evolve_master_equation(chain, SubspaceState.single_photon(chain), t_max=5e-6, dt=2.5e-9)
    linear = evolve_linear_model(chain, [1.0, 0.0, 0.0], t_max=5e-6, dt=2.5e-9)
    np.testing.assert_allclose(master.mode_occupancies, linear.occupancies, atol=1e-8)


def test_strong_coupling_oscillates():
    """Con C = 10 la ocupación del buffer deja de ser monótona"""
    chain = regime_chain(10.0)
    trace = evolve_master_equation(chain, SubspaceState.single_photon(chain), t_max=10e-6, dt=2.5e-9)
    assert np.any(np.diff(trace.n_b) > 1e-3)


def test_memory_loss_opens_extra_channel(reference_chain):
    initial = SubspaceState.single_photon(reference_chain)
    closed = evolve_master_equation(reference_chain, initial, t_max=5e-6, dt=2e-9)
    lossy = evolve_master_equation(reference_chain, initial, t_max=5e-6, dt=2e-9, memory_loss=True)
    assert lossy.terminal_probability()[-1] < closed.terminal_probability()[-1]


def test_trace_columns():
    chain = regime_chain(1.0)
    trace = evolve_master_equation(chain, SubspaceState.single_photon(chain), t_max=1e-7, dt=2.5e-9)
    assert trace.column_names() == ['t', 'n_b', 'n_Q0', 'n_m', 'n_Q1', 'n_w']
    rows = trace.rows()
    assert rows.shape == (trace.time.size, 6)
    np.testing.assert_allclose(rows[:, 3], trace.n_m)


def test_driven_linear_model_reaches_transmission():
    """El flujo estacionario por el desecho coincide con |S21(0)|²"""
    chain = lossless_n1()
    trace = evolve_linear_model(
        chain, [0.0, 0.0], t_max=40e-6, dt=2.5e-8, drive=1.0, buffer_loss=True,
    )
    outflow = chain.waste.kappa_ext * trace.occupancies[-1, -1]
    assert outflow == pytest.approx(transmission(chain, 0.0)[0], abs=1e-6)


def test_coarse_time_step_is_rejected():
    chain = regime_chain(1.0)
    with pytest.raises(TimeStepTooCoarseError) as info:
        evolve_master_equation(chain, SubspaceState.single_photon(chain), t_max=1e-6, dt=1e-7)
    assert info.value.required_dt == pytest.approx(0.05 / chain.waste.kappa_ext)
    with pytest.raises(TimeStepTooCoarseError):
        evolve_linear_model(chain, [1.0, 0.0, 0.0], t_max=1e-6, dt=1e-7)
    with pytest.raises(ConfigurationError):
        evolve_linear_model(chain, [1.0, 0.0], t_max=1e-6, dt=1e-9)
