"""
Fixtures compartidas de los tests del toolkit cSMPD
"""
import math
from pathlib import Path

import pytest

from src.config.detector_config import load_reference_config
from src.core.model import ChainSpec, CycleSpec, ModeRole, ModeSpec, QubitSpec

TWO_PI = 2.0 * math.pi


def make_qubit(t1: float = 30e-6, **changes) -> QubitSpec:
    """Qubit genérico con χ simétricos de 2 MHz"""
    values = dict(
        omega_ge=TWO_PI * 6.6e9,
        chi_self=-TWO_PI * 120e6,
        chi_left=-TWO_PI * 2e6,
        chi_right=-TWO_PI * 2e6,
        t1=t1,
    )
    values.update(changes)
    return QubitSpec(**values)


def make_chain(kappas, couplings, kappa_ints=None, delta_ps=None) -> ChainSpec:
    """
    Cadena con κ_ext por modo y acoplamientos g4 dados [rad/s]

    Los modos intermedios son memorias; κ_ext de las memorias se ignora y
    sus pérdidas van en kappa_ints.
    """
    n = len(couplings)
    kappa_ints = list(kappa_ints) if kappa_ints is not None else [0.0] * (n + 1)
    modes = []
    for k in range(n + 1):
        if k == 0:
            role, ext = ModeRole.BUFFER, kappas[k]
        elif k == n:
            role, ext = ModeRole.WASTE, kappas[k]
        else:
            role, ext = ModeRole.MEMORY, 0.0
        modes.append(ModeSpec(role, TWO_PI * (8.8e9 - 0.6e9 * k), ext, kappa_ints[k]))
    qubits = [make_qubit() for _ in range(n)]
    return ChainSpec.from_couplings(modes, qubits, couplings, delta_ps)


def lossless_n1(kappa: float = 1e6, cooperativity: float = 1.0) -> ChainSpec:
    """Cadena N=1 con κ_b = κ_w y 4|g|² = C·κ_b·κ_w"""
    g = math.sqrt(cooperativity * kappa * kappa / 4.0)
    return make_chain([kappa, kappa], [-g])


def lossless_n2(kappa: float = 1e6, g: float = 3e5) -> ChainSpec:
    """Cadena N=2 con κ_b = κ_w, memoria ideal y g_0 = g_1 (C = 1)"""
    return make_chain([kappa, 0.0, kappa], [-g, -g])


LOSSLESS_N1_INI = """
[mode:0]
role = buffer
omega = 8 GHz
kappa_ext = 1e6

[mode:1]
role = waste
omega = 7 GHz
kappa_ext = 1e6

[qubit:0]
omega_ge = 6.6 GHz
chi_left = -2 MHz
chi_right = -2 MHz
t1 = 30 us

[pump:0]
g4 = -79577.4715459477

[cycle]
t_d = 10 us
t_ro = 1 us
t_reset = 100 ns
n_reset = 0

[environment]
temperature = 40 mK
"""


@pytest.fixture
def reference():
    """Punto de operación de referencia empaquetado"""
    return load_reference_config()


@pytest.fixture
def reference_chain(reference):
    return reference.chain


@pytest.fixture
def reference_cycle(reference):
    return reference.cycle


@pytest.fixture
def short_cycle():
    """Ciclo de 11 us con η_cycle = 10/11"""
    return CycleSpec(t_d=10e-6, t_ro=1e-6, t_reset=100e-9, n_reset=0)


@pytest.fixture
def write_ini(tmp_path):
    """Escribe un INI en el directorio temporal y devuelve su ruta"""
    def _write(text: str, name: str = "detector.ini") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return path
    return _write


@pytest.fixture
def lossless_ini(write_ini):
    return write_ini(LOSSLESS_N1_INI)
