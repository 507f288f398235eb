"""
Evolución temporal del detector en el subespacio de una excitación

Todos los modos y qubits se truncan a dos niveles. La ecuación maestra se
integra sobre el subespacio alcanzable desde el estado inicial, que es
invariante bajo el Hamiltoniano y los operadores de salto; el modelo lineal
de amplitudes medias sirve de oráculo independiente.
"""
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple
import logging
import math
import os
import sys

import numpy as np
from scipy.integrate import solve_ivp

# Manejo de imports para ejecución independiente
try:
    from .errors import ConfigurationError, IntegrationError, TimeStepTooCoarseError
    from .model import ChainSpec, ModeRole, ModeSpec, QubitSpec, TWO_PI
    from ..config.settings import DynamicsSettings, DEFAULT_DYNAMICS_SETTINGS
    from ..utils.logging_config import AnalysisProgressLogger
except ImportError:
    sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
    from core.errors import ConfigurationError, IntegrationError, TimeStepTooCoarseError
    from core.model import ChainSpec, ModeRole, ModeSpec, QubitSpec, TWO_PI
    from config.settings import DynamicsSettings, DEFAULT_DYNAMICS_SETTINGS
    from utils.logging_config import AnalysisProgressLogger


logger = logging.getLogger('csmpd.dynamics')

_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_IDENTITY = np.eye(2, dtype=complex)


# ----------------------------------------------------------------------
# Base de estados
# ----------------------------------------------------------------------
def _n_sites(n_stages: int) -> int:
    # modo_0, q_0, modo_1, q_1, ..., modo_N
    return 2 * n_stages + 1


def _site_of_mode(k: int) -> int:
    return 2 * k


def _site_of_qubit(k: int) -> int:
    return 2 * k + 1


def _label(index: int, n_stages: int) -> str:
    sites = _n_sites(n_stages)
    chars = []
    for site in range(sites):
        bit = (index >> (sites - 1 - site)) & 1
        if site % 2 == 0:
            chars.append('1' if bit else '0')
        else:
            chars.append('e' if bit else 'g')
    return ''.join(chars)


def _index(label: str, n_stages: int) -> int:
    sites = _n_sites(n_stages)
    if len(label) != sites:
        raise ConfigurationError(f"Etiqueta '{label}' no tiene {sites} caracteres", key='initial')
    index = 0
    for site, char in enumerate(label):
        allowed = '01' if site % 2 == 0 else 'ge'
        if char not in allowed:
            raise ConfigurationError(f"Carácter '{char}' inválido en la etiqueta '{label}'", key='initial')
        index = (index << 1) | allowed.index(char)
    return index


def _site_operator(site: int, sites: int) -> np.ndarray:
    op = np.array([[1.0]], dtype=complex)
    for j in range(sites):
        op = np.kron(op, _LOWER if j == site else _IDENTITY)
    return op


@dataclass(frozen=True)
class SubspaceState:
    """Estado puro sobre la base ordenada de etiquetas (modo: 0/1, qubit: g/e)"""
    labels: Tuple[str, ...]
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        """Validación post-inicialización"""
        object.__setattr__(self, 'labels', tuple(self.labels))
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, 'amplitudes', amps)
        if len(self.labels) != amps.shape[0]:
            raise ConfigurationError("Una amplitud por etiqueta", key='initial')
        if not np.all(np.isfinite(amps)):
            raise ConfigurationError("Amplitudes no finitas", key='initial')
        if np.sum(np.abs(amps) ** 2) > 1.0 + 1e-12:
            raise ConfigurationError("La probabilidad total no puede superar 1", key='initial')

    @classmethod
    def vacuum(cls, chain: ChainSpec) -> 'SubspaceState':
        return cls.from_labels(chain, {'0' + 'g0' * chain.n_stages: 1.0})

    @classmethod
    def single_photon(cls, chain: ChainSpec, mode: int = 0) -> 'SubspaceState':
        """Fotón en el modo dado con las banderas aguas arriba levantadas"""
        chars = []
        for k in range(chain.n_stages + 1):
            chars.append('1' if k == mode else '0')
            if k < chain.n_stages:
                chars.append('e' if k < mode else 'g')
        return cls.from_labels(chain, {''.join(chars): 1.0})

    @classmethod
    def from_labels(cls, chain: ChainSpec, amplitudes: Mapping[str, complex]) -> 'SubspaceState':
        for label in amplitudes:
            _index(label, chain.n_stages)
        return cls(tuple(amplitudes.keys()), np.array(list(amplitudes.values()), dtype=complex))

    def full_vector(self, n_stages: int) -> np.ndarray:
        vec = np.zeros(2 ** _n_sites(n_stages), dtype=complex)
        for label, amp in zip(self.labels, self.amplitudes):
            vec[_index(label, n_stages)] += amp
        return vec


@dataclass(frozen=True)
class EvolutionTrace:
    """Ocupaciones de modos y qubits sobre la malla temporal"""
    time: np.ndarray
    mode_occupancies: np.ndarray  # (T, N+1)
    qubit_occupancies: np.ndarray  # (T, N)
    leakage: np.ndarray  # probabilidad acumulada emitida por los canales con pérdida
    basis: Tuple[str, ...] = ()
    populations: Optional[np.ndarray] = None  # (T, dim) sobre `basis`

    @property
    def n_stages(self) -> int:
        return self.qubit_occupancies.shape[1]

    @property
    def n_b(self) -> np.ndarray:
        return self.mode_occupancies[:, 0]

    @property
    def n_w(self) -> np.ndarray:
        return self.mode_occupancies[:, -1]

    @property
    def n_m(self) -> np.ndarray:
        if self.n_stages < 2:
            raise ConfigurationError("La cadena no tiene memoria", key='modes')
        return self.mode_occupancies[:, 1]

    def population(self, label: str) -> np.ndarray:
        if self.populations is None or label not in self.basis:
            return np.zeros_like(self.time)
        return self.populations[:, self.basis.index(label)]

    def terminal_probability(self) -> np.ndarray:
        """Probabilidad del estado sin fotones con todas las banderas levantadas"""
        return self.population('0' + 'e0' * self.n_stages)

    def photon_probability(self) -> np.ndarray:
        """Probabilidad de que quede un fotón en algún modo"""
        if self.populations is None:
            return np.sum(self.mode_occupancies, axis=1)
        mask = np.array([any(c == '1' for c in label) for label in self.basis])
        return self.populations[:, mask].sum(axis=1) if mask.any() else np.zeros_like(self.time)

    def column_names(self) -> List[str]:
        names = ['t']
        n = self.n_stages
        for k in range(n + 1):
            if k == 0:
                names.append('n_b')
            elif k == n:
                names.append('n_w')
            else:
                names.append('n_m' if n == 2 else f'n_m{k}')
            if k < n:
                names.append(f'n_Q{k}')
        return names

    def rows(self) -> np.ndarray:
        """Columnas intercaladas t, n_b, n_Q0, n_m, n_Q1, n_w"""
        columns = [self.time]
        n = self.n_stages
        for k in range(n + 1):
            columns.append(self.mode_occupancies[:, k])
            if k < n:
                columns.append(self.qubit_occupancies[:, k])
        return np.column_stack(columns)


@dataclass(frozen=True)
class LinearTrace:
    """Amplitudes medias ψ_k(t) del modelo lineal"""
    time: np.ndarray
    amplitudes: np.ndarray  # (T, N+1)

    @property
    def occupancies(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


# ----------------------------------------------------------------------
# Utilidades comunes
# ----------------------------------------------------------------------
def loss_rates(chain: ChainSpec, memory_loss: bool = False, buffer_loss: bool = False) -> np.ndarray:
    """Tasas de los canales con pérdida habilitados, por modo"""
    kappas = chain.kappas()
    rates = np.zeros_like(kappas)
    rates[-1] = kappas[-1]
    if memory_loss:
        rates[1:-1] = kappas[1:-1]
    if buffer_loss:
        rates[0] = kappas[0]
    return rates


def _time_grid(t_max: float, dt: float) -> np.ndarray:
    if t_max <= 0 or dt <= 0:
        raise ConfigurationError("t_max y dt deben ser positivos", key='dt')
    steps = max(int(math.ceil(t_max / dt - 1e-9)), 1)
    return np.linspace(0.0, t_max, steps + 1)


def _check_time_step(
    chain: ChainSpec,
    dt: float,
    rates: np.ndarray,
    settings: DynamicsSettings,
    extra_rate: float = 0.0,
) -> None:
    fastest = max(
        float(np.max(rates)),
        float(np.max(np.abs(chain.couplings()))),
        float(np.max(np.abs(chain.mode_detunings()))),
        abs(extra_rate),
    )
    if fastest == 0:
        return
    required = settings.dt_factor / fastest
    if dt > required * (1.0 + 1e-9):
        raise TimeStepTooCoarseError(required, dt)


def _drift_matrix(chain: ChainSpec, rates: np.ndarray) -> np.ndarray:
    n = chain.n_stages
    g = chain.couplings()
    a = np.diag(-1j * chain.mode_detunings() - rates / 2.0).astype(complex)
    for k in range(n):
        a[k, k + 1] = -1j * np.conj(g[k])
        a[k + 1, k] = -1j * g[k]
    return a


# ----------------------------------------------------------------------
# Ecuación maestra
# ----------------------------------------------------------------------
def _operators(chain: ChainSpec, rates: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Hamiltoniano y operadores de salto en el espacio completo 2^(2N+1)"""
    n = chain.n_stages
    sites = _n_sites(n)
    modes = [_site_operator(_site_of_mode(k), sites) for k in range(n + 1)]
    qubits = [_site_operator(_site_of_qubit(k), sites) for k in range(n)]
    g = chain.couplings()
    detunings = chain.mode_detunings()

    dim = 2 ** sites
    hamiltonian = np.zeros((dim, dim), dtype=complex)
    for k, a_k in enumerate(modes):
        hamiltonian += detunings[k] * a_k.conj().T @ a_k
    for k in range(n):
        # a_k σ_k† a_{k+1}†: el fotón salta al modo k+1 y levanta la bandera k
        term = g[k] * modes[k + 1].conj().T @ qubits[k].conj().T @ modes[k]
        hamiltonian += term + term.conj().T

    jumps = [math.sqrt(rate) * modes[k] for k, rate in enumerate(rates) if rate > 0]
    return hamiltonian, jumps


def _reachable(support: Sequence[int], operators: Sequence[np.ndarray]) -> List[int]:
    seen = set(support)
    queue = deque(support)
    while queue:
        j = queue.popleft()
        for op in operators:
            for i in np.nonzero(op[:, j])[0]:
                if int(i) not in seen:
                    seen.add(int(i))
                    queue.append(int(i))
    return sorted(seen)


def evolve_master_equation(
    chain: ChainSpec,
    initial: SubspaceState,
    t_max: float,
    dt: float,
    memory_loss: bool = False,
    buffer_loss: bool = False,
    settings: DynamicsSettings = DEFAULT_DYNAMICS_SETTINGS,
) -> EvolutionTrace:
    """
    Integra la ecuación maestra de la cadena truncada a dos niveles

    Args:
        chain: Cadena de resonadores
        initial: Estado inicial puro
        t_max: Tiempo final [s]
        dt: Paso de la malla de salida [s]
        memory_loss: Habilita √κ_m sobre las memorias
        buffer_loss: Habilita √κ_b sobre el buffer
        settings: Tolerancias e integrador

    Returns:
        EvolutionTrace con ocupaciones y pérdida acumulada

    Raises:
        TimeStepTooCoarseError: Si dt no resuelve la tasa más rápida
        IntegrationError: Si el integrador falla
    """
    rates = loss_rates(chain, memory_loss, buffer_loss)
    _check_time_step(chain, dt, rates, settings)
    times = _time_grid(t_max, dt)

    n = chain.n_stages
    psi0 = initial.full_vector(n)
    hamiltonian, jumps = _operators(chain, rates)

    support = [int(i) for i in np.nonzero(psi0)[0]]
    if not support:
        support = [0]
    basis_idx = _reachable(support, [hamiltonian] + jumps)
    if len(basis_idx) > settings.max_dimension_warning:
        logger.warning(f"Subespacio de dimensión {len(basis_idx)}: la integración densa puede ser lenta")

    proj = np.ix_(basis_idx, basis_idx)
    h_sub = hamiltonian[proj]
    l_sub = [op[proj] for op in jumps]
    h_eff = h_sub - 0.5j * sum((op.conj().T @ op for op in l_sub), np.zeros_like(h_sub))
    h_eff_dag = h_eff.conj().T
    dim = len(basis_idx)

    psi_sub = psi0[basis_idx]
    rho0 = np.outer(psi_sub, psi_sub.conj())
    y0 = np.concatenate([rho0.ravel(), [0.0 + 0.0j]])

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        rho = y[:-1].reshape(dim, dim)
        drho = -1j * (h_eff @ rho - rho @ h_eff_dag)
        emitted = 0.0
        for op in l_sub:
            jumped = op @ rho @ op.conj().T
            drho += jumped
            emitted += np.trace(jumped).real
        return np.concatenate([drho.ravel(), [emitted]])

    progress = AnalysisProgressLogger('csmpd.dynamics')
    progress.start_analysis("ecuación maestra", total_steps=len(times))
    progress.log_step("subespacio alcanzable", f"dimensión {dim} de {2 ** _n_sites(n)}")

    sol = solve_ivp(
        rhs,
        (0.0, times[-1]),
        y0,
        method=settings.method,
        t_eval=times,
        rtol=settings.rtol,
        atol=settings.atol,
    )
    if not sol.success:
        progress.log_error("integración fallida")
        progress.finish_analysis(success=False)
        raise IntegrationError(f"Fallo del integrador: {sol.message}", t=float(sol.t[-1]) if sol.t.size else 0.0)

    rho_diag = np.stack([sol.y[i * dim + i, :].real for i in range(dim)], axis=1)
    leakage = sol.y[-1, :].real

    labels = tuple(_label(i, n) for i in basis_idx)
    mode_occ = np.zeros((times.size, n + 1))
    qubit_occ = np.zeros((times.size, n))
    for col, label in enumerate(labels):
        for k in range(n + 1):
            if label[_site_of_mode(k)] == '1':
                mode_occ[:, k] += rho_diag[:, col]
        for k in range(n):
            if label[_site_of_qubit(k)] == 'e':
                qubit_occ[:, k] += rho_diag[:, col]

    progress.finish_analysis(success=True, summary=f"{times.size} instantes, pérdida final {leakage[-1]:.6f}")
    return EvolutionTrace(
        time=times,
        mode_occupancies=np.clip(mode_occ, 0.0, 1.0),
        qubit_occupancies=np.clip(qubit_occ, 0.0, 1.0),
        leakage=leakage,
        basis=labels,
        populations=rho_diag,
    )


# ----------------------------------------------------------------------
# Modelo lineal de amplitudes medias
# ----------------------------------------------------------------------
def evolve_linear_model(
    chain: ChainSpec,
    initial: Sequence[complex],
    t_max: float,
    dt: float,
    drive: complex = 0.0,
    signal_detuning: float = 0.0,
    memory_loss: bool = False,
    buffer_loss: bool = False,
    settings: DynamicsSettings = DEFAULT_DYNAMICS_SETTINGS,
) -> LinearTrace:
    """
    dψ/dt = Aψ + √κ_b,ext β_in e^(−iδt) e_0

    Args:
        chain: Cadena de resonadores
        initial: Amplitudes iniciales (β, μ, ..., ν)
        t_max: Tiempo final [s]
        dt: Paso de la malla de salida [s]
        drive: Amplitud de entrada continua β_in
        signal_detuning: δ de la sonda [rad/s]
        memory_loss: Incluye κ_m en las memorias
        buffer_loss: Incluye κ_b en el buffer
        settings: Tolerancias e integrador

    Returns:
        LinearTrace con las amplitudes en la malla
    """
    psi0 = np.asarray(initial, dtype=complex)
    if psi0.shape != (chain.n_stages + 1,):
        raise ConfigurationError("Se necesita una amplitud inicial por modo", key='initial')

    rates = loss_rates(chain, memory_loss, buffer_loss)
    _check_time_step(chain, dt, rates, settings, extra_rate=signal_detuning if drive else 0.0)
    times = _time_grid(t_max, dt)
    drift = _drift_matrix(chain, rates)
    feed = math.sqrt(chain.buffer.kappa_ext) * complex(drive)

    def rhs(t: float, psi: np.ndarray) -> np.ndarray:
        dpsi = drift @ psi
        if feed:
            dpsi[0] += feed * np.exp(-1j * signal_detuning * t)
        return dpsi

    sol = solve_ivp(
        rhs,
        (0.0, times[-1]),
        psi0,
        method=settings.method,
        t_eval=times,
        rtol=settings.rtol,
        atol=settings.atol,
    )
    if not sol.success:
        raise IntegrationError(f"Fallo del integrador: {sol.message}", t=float(sol.t[-1]) if sol.t.size else 0.0)
    return LinearTrace(time=times, amplitudes=sol.y.T)


# ----------------------------------------------------------------------
# Cadenas de referencia para los regímenes de cooperatividad
# ----------------------------------------------------------------------
REGIME_KAPPA_W = 1.9e7  # [1/s]

_REGIME_MODE_FREQUENCIES_HZ = (8.798e9, 8.095056e9, 7.462e9)
_REGIME_QUBITS = (
    QubitSpec(omega_ge=TWO_PI * 6.614e9, chi_self=-TWO_PI * 120e6, chi_left=-TWO_PI * 1.784e6,
              chi_right=-TWO_PI * 2.0e6, t1=30e-6),
    QubitSpec(omega_ge=TWO_PI * 6.284e9, chi_self=-TWO_PI * 120e6, chi_left=-TWO_PI * 2.0e6,
              chi_right=-TWO_PI * 1.775e6, t1=40e-6),
)


def regime_chain(cooperativity: float, kappa_w: float = REGIME_KAPPA_W) -> ChainSpec:
    """
    Cadena de dos etapas con κ_b,ext = 0.1κ_w, |g_1| = κ_b,ext y |g_0|² = (C/10)|g_1|²

    Las memorias y el buffer no tienen pérdidas internas.
    """
    if cooperativity <= 0:
        raise ConfigurationError("La cooperatividad debe ser positiva", key='cooperativity')
    kappa_b = 0.1 * kappa_w
    g1 = kappa_b
    g0 = math.sqrt(cooperativity * kappa_b / kappa_w) * g1
    modes = (
        ModeSpec(ModeRole.BUFFER, TWO_PI * _REGIME_MODE_FREQUENCIES_HZ[0], kappa_b),
        ModeSpec(ModeRole.MEMORY, TWO_PI * _REGIME_MODE_FREQUENCIES_HZ[1], 0.0),
        ModeSpec(ModeRole.WASTE, TWO_PI * _REGIME_MODE_FREQUENCIES_HZ[2], kappa_w),
    )
    return ChainSpec.from_couplings(modes, _REGIME_QUBITS, (-g0, -g1))
