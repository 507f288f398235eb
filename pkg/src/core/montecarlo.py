"""
Simulador estocástico por ciclos del detector en cascada

Cada ciclo combina la llegada de fotones (señal o térmicos), la cadena de
eficiencias condicionales de las banderas, los errores intrínsecos por qubit,
la lectura dispersiva con política de dos umbrales y la decodificación
multi-qubit. El generador es un Philox indexado por (semilla, bloque), de modo
que el resultado no depende del número de hilos.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple, Union
import logging
import math
import os
import sys

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy import optimize
from scipy.stats import norm

# Manejo de imports para ejecución independiente
try:
    from .errors import (
        ConfigurationError,
        DecoderParityError,
        DegenerateReadoutError,
        SaturatedBenchmarkError,
    )
    from .metrics import NoiseBudget, eta_q
    from .model import ChainSpec, CycleSpec
    from .scattering import solve_single_excitation
    from ..config.settings import DecodingScheme, MonteCarloSettings, DEFAULT_MONTECARLO_SETTINGS
    from ..utils.logging_config import AnalysisProgressLogger
except ImportError:
    sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
    from core.errors import (
        ConfigurationError,
        DecoderParityError,
        DegenerateReadoutError,
        SaturatedBenchmarkError,
    )
    from core.metrics import NoiseBudget, eta_q
    from core.model import ChainSpec, CycleSpec
    from core.scattering import solve_single_excitation
    from config.settings import DecodingScheme, MonteCarloSettings, DEFAULT_MONTECARLO_SETTINGS
    from utils.logging_config import AnalysisProgressLogger


logger = logging.getLogger('csmpd.montecarlo')


# ----------------------------------------------------------------------
# Lectura dispersiva
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class IQReadoutModel:
    """
    Modelo bi-Gaussiano de la cuadratura rotada de lectura

    Sin umbrales explícitos se usa el punto medio para ambos (un solo
    umbral, sin relecturas).
    """
    mean_g: float
    mean_e: float
    sigma: float
    v_th: Optional[float] = None
    v_th_reset: Optional[float] = None

    def __post_init__(self):
        """Validación post-inicialización"""
        if self.mean_g == self.mean_e:
            raise ConfigurationError("Las medias g y e deben ser distintas", key='mean_e')
        if not self.sigma > 0:
            raise ConfigurationError("sigma debe ser positiva", key='sigma')
        if self.v_th is None:
            object.__setattr__(self, 'v_th', self.midpoint)
        if self.v_th_reset is None:
            object.__setattr__(self, 'v_th_reset', self.midpoint)
        if self._oriented(self.v_th_reset) > self._oriented(self.v_th):
            raise ConfigurationError("v_th_reset debe quedar del lado de g respecto de v_th", key='v_th_reset')

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.mean_g + self.mean_e)

    @property
    def orientation(self) -> float:
        return 1.0 if self.mean_e > self.mean_g else -1.0

    def _oriented(self, value: float) -> float:
        return self.orientation * value

    def _mean(self, excited: bool) -> float:
        return self.mean_e if excited else self.mean_g

    @classmethod
    def from_fidelity(cls, fidelity: float, mean_g: float = 0.0, mean_e: float = 1.0) -> 'IQReadoutModel':
        """Modelo simétrico de un umbral cuya fidelidad de asignación es la dada"""
        if not 0.5 < fidelity < 1.0:
            raise ConfigurationError("La fidelidad debe estar en (0.5, 1)", key='f_ro')
        sigma = abs(mean_e - mean_g) / (2.0 * norm.ppf(fidelity))
        return cls(mean_g, mean_e, sigma)

    @classmethod
    def with_optimal_thresholds(cls, mean_g: float, mean_e: float, sigma: float) -> 'IQReadoutModel':
        v_th, v_reset = optimize_threshold(mean_g, mean_e, sigma)
        return cls(mean_g, mean_e, sigma, v_th, v_reset)

    def assignment_probabilities(self, excited: bool) -> Tuple[float, float, float]:
        """Probabilidades de una lectura: (asigna e, asigna g, relee)"""
        mean = self._mean(excited)
        z_th = self._oriented(self.v_th - mean) / self.sigma
        z_reset = self._oriented(self.v_th_reset - mean) / self.sigma
        p_e = float(norm.sf(z_th))
        p_g = float(norm.cdf(z_reset))
        return p_e, p_g, max(0.0, 1.0 - p_e - p_g)

    def excited_assignment_probability(self, excited: bool, max_rereads: int = 10) -> float:
        """P(asigna e | estado) con relecturas acotadas y desempate por la media más cercana"""
        p_e, _, p_band = self.assignment_probabilities(excited)
        mean = self._mean(excited)
        z_mid = self._oriented(self.midpoint - mean) / self.sigma
        z_th = self._oriented(self.v_th - mean) / self.sigma
        upper_band = max(0.0, float(norm.cdf(z_th) - norm.cdf(max(z_mid, self._oriented(self.v_th_reset - mean) / self.sigma))))
        retries = sum(p_band ** j for j in range(max_rereads + 1))
        return p_e * retries + p_band ** max_rereads * upper_band

    def fidelity(self, excited: bool, max_rereads: int = 10) -> float:
        p = self.excited_assignment_probability(excited, max_rereads)
        return p if excited else 1.0 - p

    def single_shot_fidelity(self, excited: bool) -> float:
        """Fidelidad de una sola lectura con el umbral v_th"""
        mean = self._mean(excited)
        z = self._oriented(self.v_th - mean) / self.sigma
        return float(norm.sf(z)) if excited else float(norm.cdf(z))


def optimize_threshold(
    mean_g: float,
    mean_e: float,
    sigma: float,
    grid: Optional[Sequence[float]] = None,
    refine: bool = True,
) -> Tuple[float, float]:
    """
    Umbral sesgado hacia g: argmin de P(I_g >= V)/P(I_e >= V)²

    Args:
        mean_g: Media del estado fundamental
        mean_e: Media del estado excitado
        sigma: Desviación estándar común
        grid: Valores candidatos de V; por defecto 10001 puntos entre μ_g y 2μ_e − μ_g + 4σ
        refine: Pule el mínimo con búsqueda acotada alrededor del mejor punto

    Returns:
        Tupla (v_th, v_th_reset) con v_th_reset = Ṽ − |Ṽ − v_th|

    Raises:
        DegenerateReadoutError: Si las medias coinciden
    """
    if mean_g == mean_e:
        raise DegenerateReadoutError("Medias de lectura idénticas: umbral indefinido", mean=mean_g)
    if sigma <= 0:
        raise ConfigurationError("sigma debe ser positiva", key='sigma')

    s = 1.0 if mean_e > mean_g else -1.0
    mid = 0.5 * (mean_g + mean_e)

    def objective(v: np.ndarray) -> np.ndarray:
        u = s * np.asarray(v, dtype=float)
        return norm.logsf((u - s * mean_g) / sigma) - 2.0 * norm.logsf((u - s * mean_e) / sigma)

    if grid is None:
        grid = np.linspace(mean_g, 2.0 * mean_e - mean_g + s * 4.0 * sigma, 10001)
    grid = np.asarray(grid, dtype=float)
    values = objective(grid)
    best = np.min(values)
    ties = np.nonzero(values <= best + 1e-12 * max(1.0, abs(best)))[0]
    i_best = int(ties[np.argmin(np.abs(grid[ties] - mid))])
    v_th = float(grid[i_best])

    if refine and grid.size > 2:
        lo = grid[max(i_best - 1, 0)]
        hi = grid[min(i_best + 1, grid.size - 1)]
        result = optimize.minimize_scalar(
            lambda v: float(objective(v)),
            bounds=(min(lo, hi), max(lo, hi)),
            method='bounded',
            options={'xatol': 1e-10},
        )
        if result.fun <= values[i_best]:
            v_th = float(result.x)

    v_reset = mid - s * abs(mid - v_th)
    return v_th, v_reset


def readout_sample(
    model: IQReadoutModel,
    true_state: Union[bool, str],
    rng: Generator,
    max_rereads: int = 10,
) -> Tuple[bool, int]:
    """
    Una lectura con la política de tres ramas

    Returns:
        Tupla (asignado excitado, número de relecturas)
    """
    excited = true_state in (True, 'e', 1)
    outcomes, rereads = _readout_batch(model, np.array([excited]), rng, max_rereads)
    return bool(outcomes[0]), int(rereads[0])


def _readout_batch(
    model: IQReadoutModel,
    states: np.ndarray,
    rng: Generator,
    max_rereads: int,
) -> Tuple[np.ndarray, np.ndarray]:
    means = np.where(states, model.mean_e, model.mean_g)
    s = model.orientation
    u_th = s * model.v_th
    u_reset = s * model.v_th_reset
    u_mid = s * model.midpoint

    samples = s * rng.normal(means, model.sigma)
    outcomes = samples >= u_th
    pending = (samples > u_reset) & ~outcomes
    rereads = np.zeros(states.shape, dtype=np.int64)

    for _ in range(max_rereads):
        if not pending.any():
            break
        idx = np.nonzero(pending)[0]
        redraw = s * rng.normal(means[idx], model.sigma)
        rereads[idx] += 1
        samples[idx] = redraw
        outcomes[idx] = redraw >= u_th
        pending[idx] = (redraw > u_reset) & (redraw < u_th)

    if pending.any():
        outcomes[pending] = samples[pending] > u_mid
    return outcomes, rereads


# ----------------------------------------------------------------------
# Configuración y trazas
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SimulationConfig:
    """Parámetros por qubit del simulador por ciclos"""
    conditional_efficiencies: Tuple[float, ...]  # P(conversión k | conversión k-1)
    intrinsic_rates: Tuple[float, ...]  # α_q,k [1/s]
    cycle: CycleSpec
    alpha_th: float = 0.0
    alpha_pump: float = 0.0
    alpha_ro: float = 0.0
    readout: Optional[Tuple[IQReadoutModel, ...]] = None
    flag_survival: Optional[Tuple[float, ...]] = None  # η_q,k, 1 por defecto

    def __post_init__(self):
        """Validación post-inicialización"""
        object.__setattr__(self, 'conditional_efficiencies', tuple(float(c) for c in self.conditional_efficiencies))
        object.__setattr__(self, 'intrinsic_rates', tuple(float(a) for a in self.intrinsic_rates))
        n = len(self.conditional_efficiencies)
        if n < 1:
            raise ConfigurationError("Se necesita al menos un qubit", key='qubits')
        if self.flag_survival is None:
            object.__setattr__(self, 'flag_survival', (1.0,) * n)
        object.__setattr__(self, 'flag_survival', tuple(float(s) for s in self.flag_survival))
        if len(self.intrinsic_rates) != n:
            raise ConfigurationError("Una tasa intrínseca por qubit", key='intrinsic_rates')
        if len(self.flag_survival) != n:
            raise ConfigurationError("Una supervivencia de bandera por qubit", key='flag_survival')
        for c in self.conditional_efficiencies + self.flag_survival:
            if not 0 <= c <= 1:
                raise ConfigurationError("Eficiencias condicionales fuera de [0, 1]", key='conditional_efficiencies')
        for name in ('alpha_th', 'alpha_pump', 'alpha_ro'):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} debe ser >= 0", key=name)
        if min(self.intrinsic_rates) < 0:
            raise ConfigurationError("Las tasas intrínsecas deben ser >= 0", key='intrinsic_rates')
        if self.readout is not None:
            object.__setattr__(self, 'readout', tuple(self.readout))
            if len(self.readout) != n:
                raise ConfigurationError("Un modelo de lectura por qubit", key='readout')
        if self.alpha_th > 0 and self.thermal_probability() > 1:
            raise ConfigurationError("α_th·T_cycle/η supera 1", key='alpha_th')

    @property
    def n_qubits(self) -> int:
        return len(self.conditional_efficiencies)

    @property
    def eta_chain(self) -> float:
        """Probabilidad de levantar todas las banderas dado un fotón"""
        return float(np.prod(self.conditional_efficiencies) * np.prod(self.flag_survival))

    def signal_probability(self, photon_flux: float) -> float:
        """P(al menos un fotón en T_d) = 1 − e^(−flujo·T_d)"""
        return -math.expm1(-photon_flux * self.cycle.t_d)

    def thermal_probability(self) -> float:
        if self.alpha_th == 0:
            return 0.0
        if self.eta_chain == 0:
            raise ConfigurationError("α_th > 0 con eficiencia de cadena nula", key='alpha_th')
        return self.alpha_th * self.cycle.t_cycle / self.eta_chain

    def flip_probabilities(self) -> np.ndarray:
        """Probabilidad por ciclo de bandera espuria en cada qubit"""
        t_cycle = self.cycle.t_cycle
        n = self.n_qubits
        # α_pump y α_RO se reparten como excesos independientes (αT)^(1/N)
        excess = [(a * t_cycle) ** (1.0 / n) if a > 0 else 0.0 for a in (self.alpha_pump, self.alpha_ro)]
        probs = []
        for rate in self.intrinsic_rates:
            keep = (1.0 - min(rate * t_cycle, 1.0))
            for p in excess:
                keep *= 1.0 - min(p, 1.0)
            probs.append(1.0 - keep)
        return np.array(probs)

    def excited_assignment(self, raised: bool, max_rereads: int) -> np.ndarray:
        """P(lectura e | bandera) por qubit"""
        if self.readout is None:
            return np.full(self.n_qubits, 1.0 if raised else 0.0)
        return np.array([m.excited_assignment_probability(raised, max_rereads) for m in self.readout])

    @classmethod
    def from_budget(
        cls,
        budget: NoiseBudget,
        cycle: CycleSpec,
        conditional_efficiencies: Sequence[float],
        intrinsic_rates: Optional[Sequence[float]] = None,
        readout: Optional[Sequence[IQReadoutModel]] = None,
        flag_survival: Optional[Sequence[float]] = None,
    ) -> 'SimulationConfig':
        """
        Configuración a partir de un presupuesto de ruido

        Sin tasas por qubit, α_q se reparte como probabilidades iguales
        (α_q T_cycle)^(1/N) cuyo producto reproduce α_q.
        """
        n = len(conditional_efficiencies)
        if intrinsic_rates is None:
            per_cycle = (budget.alpha_q * cycle.t_cycle) ** (1.0 / n) if budget.alpha_q > 0 else 0.0
            intrinsic_rates = [per_cycle / cycle.t_cycle] * n
        return cls(
            conditional_efficiencies=tuple(conditional_efficiencies),
            intrinsic_rates=tuple(intrinsic_rates),
            cycle=cycle,
            alpha_th=budget.alpha_th,
            alpha_pump=budget.alpha_pump,
            alpha_ro=budget.alpha_ro,
            readout=tuple(readout) if readout is not None else None,
            flag_survival=tuple(flag_survival) if flag_survival is not None else None,
        )


def conversion_probabilities(chain: ChainSpec) -> Tuple[float, ...]:
    """
    Probabilidades condicionales de conversión de una cadena en resonancia

    La conversión k ocurre si el fotón se disipa en algún modo j > k, de modo
    que P(k) = Σ_{j>k} κ_j|ψ_j|² y la probabilidad condicional es P(k)/P(k-1).
    """
    psi, _ = solve_single_excitation(chain, 0.0)
    absorbed = chain.kappas()[1:] * np.abs(psi[1:]) ** 2
    reached = np.cumsum(absorbed[::-1])[::-1]
    probs = []
    previous = 1.0
    for value in reached:
        probs.append(min(float(value) / previous, 1.0) if previous > 0 else 0.0)
        previous = float(value)
    return tuple(probs)


def flag_survivals(chain: ChainSpec, cycle: CycleSpec, under_pump: bool = True) -> Tuple[float, ...]:
    """η_q de cada bandera hasta la lectura"""
    return tuple(eta_q(cycle.t_d, q.t1_pumped if under_pump else q.t1) for q in chain.qubits)


@dataclass(frozen=True)
class ClickTrace:
    """Resultados de lectura por ciclo (una columna por qubit)"""
    cycle_count: int
    outcomes: np.ndarray  # (ciclos, N) bool
    t_cycle: float
    seed: int
    photon_flux: float = 0.0
    saturated: bool = False
    rereads: Optional[np.ndarray] = None

    @property
    def n_qubits(self) -> int:
        return self.outcomes.shape[1]

    @property
    def duration(self) -> float:
        return self.cycle_count * self.t_cycle

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(self.cycle_count) * self.t_cycle

    def bitstrings(self, rows: Optional[np.ndarray] = None) -> List[str]:
        data = self.outcomes if rows is None else self.outcomes[rows]
        return [''.join('1' if b else '0' for b in row) for row in data]

    def nonzero_cycles(self) -> np.ndarray:
        """Índices de ciclos con al menos una bandera leída como e"""
        return np.nonzero(self.outcomes.any(axis=1))[0]


def _simulate_block(
    config: SimulationConfig,
    p_signal: float,
    p_thermal: float,
    flips: np.ndarray,
    seed: int,
    block: int,
    cycles: int,
    max_rereads: int,
) -> Tuple[np.ndarray, np.ndarray]:
    rng = Generator(Philox(SeedSequence([seed, block])))
    n = config.n_qubits

    u = rng.random(cycles)
    photon = u < p_signal + p_thermal

    flags = np.zeros((cycles, n), dtype=bool)
    alive = photon
    for k, (c, s) in enumerate(zip(config.conditional_efficiencies, config.flag_survival)):
        alive = alive & (rng.random(cycles) < c)
        # la bandera puede relajarse antes de la lectura sin cortar la cascada
        flags[:, k] = alive & (rng.random(cycles) < s)
    for k in range(n):
        flags[:, k] |= rng.random(cycles) < flips[k]

    rereads = np.zeros((cycles, n), dtype=np.int64)
    if config.readout is None:
        return flags, rereads
    outcomes = np.empty_like(flags)
    for k, model in enumerate(config.readout):
        outcomes[:, k], rereads[:, k] = _readout_batch(model, flags[:, k], rng, max_rereads)
    return outcomes, rereads


def simulate(
    config: SimulationConfig,
    photon_flux: float,
    duration: float,
    seed: int = 0,
    settings: MonteCarloSettings = DEFAULT_MONTECARLO_SETTINGS,
) -> ClickTrace:
    """
    Simula la operación del detector ciclo a ciclo

    Args:
        config: Parámetros por qubit
        photon_flux: Flujo de fotones de señal [1/s]
        duration: Duración de la traza [s]
        seed: Semilla del generador por contador
        settings: Tamaño de bloque, hilos, relecturas y guarda de saturación

    Returns:
        ClickTrace determinista para (config, seed)
    """
    if photon_flux < 0:
        raise ConfigurationError("El flujo debe ser >= 0", key='photon_flux')
    if duration <= 0:
        raise ConfigurationError("La duración debe ser positiva", key='duration')

    cycle_count = int(math.floor(duration / config.cycle.t_cycle + 1e-9))
    n = config.n_qubits
    saturated = photon_flux * config.cycle.t_d >= settings.saturation_guard
    if saturated:
        logger.warning(
            f"Régimen de saturación: flujo·T_d = {photon_flux * config.cycle.t_d:.3g} >= {settings.saturation_guard}"
        )

    p_signal = config.signal_probability(photon_flux)
    p_thermal = config.thermal_probability()
    if p_signal + p_thermal > 1:
        p_thermal = 1.0 - p_signal
    flips = config.flip_probabilities()

    progress = AnalysisProgressLogger('csmpd.montecarlo')
    progress.start_analysis(f"simulación de {cycle_count} ciclos", total_steps=cycle_count)

    blocks = [
        (b, min(settings.block_cycles, cycle_count - b * settings.block_cycles))
        for b in range(int(math.ceil(cycle_count / settings.block_cycles)))
    ]

    def run(item: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
        block, cycles = item
        return _simulate_block(config, p_signal, p_thermal, flips, seed, block, cycles, settings.max_rereads)

    if settings.workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as executor:
            results = list(executor.map(run, blocks))
    else:
        results = [run(item) for item in blocks]

    if results:
        outcomes = np.concatenate([r[0] for r in results], axis=0)
        rereads = np.concatenate([r[1] for r in results], axis=0)
    else:
        outcomes = np.zeros((0, n), dtype=bool)
        rereads = np.zeros((0, n), dtype=np.int64)

    progress.finish_analysis(success=True, summary=f"{int(outcomes.any(axis=1).sum())} ciclos con bandera")
    return ClickTrace(
        cycle_count=cycle_count,
        outcomes=outcomes,
        t_cycle=config.cycle.t_cycle,
        seed=seed,
        photon_flux=photon_flux,
        saturated=saturated,
        rereads=rereads,
    )


# ----------------------------------------------------------------------
# Decodificación
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class DecodeResult:
    fired: np.ndarray
    count_rate: float  # [1/s]

    @property
    def counts(self) -> int:
        return int(np.count_nonzero(self.fired))


def _decode_rows(outcomes: np.ndarray, scheme: DecodingScheme) -> np.ndarray:
    n = outcomes.shape[1]
    if scheme == DecodingScheme.ALL_OR_NOTHING:
        return outcomes.all(axis=1)
    if n % 2 == 0:
        raise DecoderParityError(n)
    return outcomes.sum(axis=1) >= (n + 1) // 2


def decode(trace: ClickTrace, scheme: Union[DecodingScheme, str] = DecodingScheme.ALL_OR_NOTHING) -> DecodeResult:
    """
    Decodifica las banderas de cada ciclo

    all_or_nothing exige todas las banderas; majority exige (N+1)/2 con N impar.
    """
    scheme = DecodingScheme(scheme)
    fired = _decode_rows(trace.outcomes, scheme)
    rate = float(np.count_nonzero(fired)) / trace.duration if trace.cycle_count else 0.0
    return DecodeResult(fired=fired, count_rate=rate)


def decode_probability(probabilities: Sequence[float], scheme: Union[DecodingScheme, str]) -> float:
    """Probabilidad de disparo con qubits independientes por enumeración de 2^N filas"""
    scheme = DecodingScheme(scheme)
    probs = np.asarray(probabilities, dtype=float)
    n = probs.size
    if scheme == DecodingScheme.MAJORITY and n % 2 == 0:
        raise DecoderParityError(n)
    total = 0.0
    for row in product((False, True), repeat=n):
        bits = np.array(row)
        if _decode_rows(bits[np.newaxis, :], scheme)[0]:
            total += float(np.prod(np.where(bits, probs, 1.0 - probs)))
    return total


def expected_click_probability(
    config: SimulationConfig,
    photon_flux: float,
    scheme: Union[DecodingScheme, str] = DecodingScheme.ALL_OR_NOTHING,
    qubit: Optional[int] = None,
    max_rereads: int = DEFAULT_MONTECARLO_SETTINGS.max_rereads,
) -> float:
    """
    Probabilidad exacta de disparo por ciclo (esperanza sin ruido estadístico)

    Args:
        config: Parámetros por qubit
        photon_flux: Flujo de señal [1/s]
        scheme: Esquema de decodificación
        qubit: Si se indica, probabilidad de que ese qubit se lea como e

    Returns:
        Probabilidad por ciclo
    """
    n = config.n_qubits
    p_photon = min(config.signal_probability(photon_flux) + config.thermal_probability(), 1.0)
    flips = config.flip_probabilities()
    read_if_raised = config.excited_assignment(True, max_rereads)
    read_if_low = config.excited_assignment(False, max_rereads)
    effs = config.conditional_efficiencies
    survival = config.flag_survival

    # Longitud j del prefijo de banderas levantadas por el fotón
    prefix = []
    for j in range(n + 1):
        reach = p_photon * float(np.prod(effs[:j]))
        stop = (1.0 - effs[j]) if j < n else 1.0
        prefix.append(reach * stop)
    prefix[0] += 1.0 - p_photon

    total = 0.0
    for j, weight in enumerate(prefix):
        raised_prob = np.array([
            survival[k] + (1.0 - survival[k]) * flips[k] if k < j else flips[k] for k in range(n)
        ])
        read_e = raised_prob * read_if_raised + (1.0 - raised_prob) * read_if_low
        if qubit is not None:
            total += weight * read_e[qubit]
        else:
            total += weight * decode_probability(read_e, scheme)
    return total


# ----------------------------------------------------------------------
# Estimación del benchmark de conteo
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class LineFit:
    """Recta ponderada tasa = pendiente·flujo + ordenada"""
    slope: float
    slope_err: float
    intercept: float
    intercept_err: float

    def export_to_dict(self) -> Dict[str, float]:
        return {
            'slope': self.slope,
            'slope_err': self.slope_err,
            'intercept': self.intercept,
            'intercept_err': self.intercept_err,
        }


@dataclass(frozen=True)
class BenchmarkResult:
    """Eficiencia (pendiente) y cuentas oscuras (ordenada) por esquema y por qubit"""
    schemes: Dict[str, LineFit]
    per_qubit: Tuple[LineFit, ...]
    fluxes: Tuple[float, ...] = field(default=())

    def efficiency(self, scheme: str = DecodingScheme.ALL_OR_NOTHING.value) -> Tuple[float, float]:
        fit = self.schemes[scheme]
        return fit.slope, fit.slope_err

    def dark_count_rate(self, scheme: str = DecodingScheme.ALL_OR_NOTHING.value) -> Tuple[float, float]:
        fit = self.schemes[scheme]
        return fit.intercept, fit.intercept_err

    def export_to_dict(self) -> Dict[str, object]:
        return {
            'schemes': {name: fit.export_to_dict() for name, fit in self.schemes.items()},
            'per_qubit': [fit.export_to_dict() for fit in self.per_qubit],
            'fluxes': list(self.fluxes),
        }


def fit_count_rates(fluxes: Sequence[float], counts: Sequence[float], durations: Sequence[float]) -> LineFit:
    """
    Ajuste lineal ponderado con errores de Poisson √N/T

    Args:
        fluxes: Flujos calibrados [1/s]
        counts: Cuentas en cada traza
        durations: Duración de cada traza [s]

    Returns:
        LineFit con errores estándar
    """
    x = np.asarray(fluxes, dtype=float)
    counts = np.asarray(counts, dtype=float)
    durations = np.asarray(durations, dtype=float)
    if x.size < 3:
        raise SaturatedBenchmarkError("Se necesitan al menos 3 puntos no saturados", points=int(x.size))
    if not np.any(x == 0):
        raise SaturatedBenchmarkError("Falta el punto de flujo cero", points=int(x.size))
    rates = counts / durations
    sigma = np.sqrt(np.maximum(counts, 1.0)) / durations
    coeffs, cov = np.polyfit(x, rates, 1, w=1.0 / sigma, cov='unscaled')
    return LineFit(
        slope=float(coeffs[0]),
        slope_err=float(math.sqrt(max(cov[0, 0], 0.0))),
        intercept=float(coeffs[1]),
        intercept_err=float(math.sqrt(max(cov[1, 1], 0.0))),
    )


def estimate_benchmark(
    traces: Sequence[ClickTrace],
    fluxes: Optional[Sequence[float]] = None,
    schemes: Sequence[Union[DecodingScheme, str]] = (DecodingScheme.ALL_OR_NOTHING,),
) -> BenchmarkResult:
    """
    Estima eficiencia y tasa de cuentas oscuras a partir de un barrido de flujo

    Los puntos saturados se descartan.

    Args:
        traces: Trazas a distintos flujos
        fluxes: Flujos calibrados; por defecto los de cada traza
        schemes: Esquemas de decodificación a evaluar

    Returns:
        BenchmarkResult

    Raises:
        SaturatedBenchmarkError: Menos de 3 puntos útiles o sin flujo cero
    """
    if fluxes is None:
        fluxes = [t.photon_flux for t in traces]
    if len(fluxes) != len(traces):
        raise ConfigurationError("Un flujo por traza", key='fluxes')
    usable = [(f, t) for f, t in zip(fluxes, traces) if not t.saturated]
    if len(usable) < 3:
        raise SaturatedBenchmarkError("Todos los puntos saturados o insuficientes", points=len(usable))

    x = [f for f, _ in usable]
    durations = [t.duration for _, t in usable]
    fits = {}
    for scheme in schemes:
        scheme = DecodingScheme(scheme)
        counts = [decode(t, scheme).counts for _, t in usable]
        fits[scheme.value] = fit_count_rates(x, counts, durations)

    n = usable[0][1].n_qubits
    per_qubit = tuple(
        fit_count_rates(x, [int(np.count_nonzero(t.outcomes[:, k])) for _, t in usable], durations)
        for k in range(n)
    )
    return BenchmarkResult(schemes=fits, per_qubit=per_qubit, fluxes=tuple(x))
