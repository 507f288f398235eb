"""
Figuras de mérito del detector: presupuesto de cuentas oscuras, presupuesto
de eficiencia, sensibilidad, NEP/SNR, ocupación térmica y modelo de
dependencia con la temperatura.

Convenciones: las tasas de conteo (α) en 1/s, κ_d en rad/s, frecuencias
de fotón en Hz.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union
import logging
import math
import os
import sys

import numpy as np
from scipy import constants, optimize
from scipy.special import comb

# Manejo de imports para ejecución independiente
try:
    from .errors import ConfigurationError, UndefinedSensitivityError
    from .model import ChainSpec, CycleSpec, Environment, QubitSpec
    from .scattering import ScatteringResult, chain_memory_efficiency, cooperativity, eta_4wm, transmission
except ImportError:
    sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
    from core.errors import ConfigurationError, UndefinedSensitivityError
    from core.model import ChainSpec, CycleSpec, Environment, QubitSpec
    from core.scattering import ScatteringResult, chain_memory_efficiency, cooperativity, eta_4wm, transmission


logger = logging.getLogger('csmpd.metrics')

ArrayLike = Union[float, np.ndarray]


# ----------------------------------------------------------------------
# Ocupación térmica
# ----------------------------------------------------------------------
def thermal_occupation(temperature: ArrayLike, frequency: ArrayLike) -> ArrayLike:
    """
    Ocupación de Bose-Einstein 1/(exp(hf/kT) − 1)

    Args:
        temperature: Temperatura [K], >= 0
        frequency: Frecuencia [Hz], > 0

    Returns:
        n̄ (escalar o arreglo); 0 exactamente en T=0
    """
    t = np.asarray(temperature, dtype=float)
    f = np.asarray(frequency, dtype=float)
    if np.any(t < 0):
        raise ConfigurationError("La temperatura debe ser >= 0", key='temperature')
    if np.any(f <= 0):
        raise ConfigurationError("La frecuencia debe ser > 0", key='frequency')

    with np.errstate(divide='ignore', over='ignore'):
        x = np.where(t > 0, constants.h * f / (constants.k * np.where(t > 0, t, 1.0)), np.inf)
        n_bar = np.where(np.isfinite(x), 1.0 / np.expm1(x), 0.0)
    if n_bar.ndim == 0:
        return float(n_bar)
    return n_bar


def environment_occupation(environment: Environment, frequency: float) -> float:
    """n̄ del entorno a la frecuencia dada, respetando las ocupaciones impuestas"""
    override = environment.override_for(frequency)
    if override is not None:
        return override
    return thermal_occupation(environment.temperature, frequency)


# ----------------------------------------------------------------------
# Cuentas oscuras
# ----------------------------------------------------------------------
def false_flag_probability(qubit: QubitSpec, cycle: CycleSpec, under_pump: bool = True) -> float:
    """Probabilidad por ciclo de encontrar el qubit excitado sin fotón"""
    t1 = qubit.t1_pumped if under_pump else qubit.t1
    x = cycle.t_d / t1
    return (qubit.p_eq - qubit.p_eq_reset) * -math.expm1(-x) + qubit.p_eq_reset


def alpha_q(qubit: QubitSpec, cycle: CycleSpec, exact: bool = False, under_pump: bool = True) -> float:
    """
    Tasa de cuentas intrínsecas de un qubit

    Forma operativa (T_d ≪ T1): (p_eq − p_r)/T1 · η_cycle + p_r/T_cycle.
    La forma exacta usa (1 − e^(−T_d/T1)); el error relativo de la
    linealización es del orden de T_d/(2·T1).

    Args:
        qubit: Parámetros del qubit
        cycle: Temporización del ciclo
        exact: Usa la relajación exponencial completa
        under_pump: Usa T1 bajo bombeo

    Returns:
        α_q [1/s]
    """
    t1 = qubit.t1_pumped if under_pump else qubit.t1
    if cycle.t_d > 0.5 * t1:
        logger.warning(
            f"T_d/T1 = {cycle.t_d / t1:.2f} > 0.5: la forma lineal de α_q pierde precisión"
        )
    if exact:
        return false_flag_probability(qubit, cycle, under_pump) / cycle.t_cycle
    return (qubit.p_eq - qubit.p_eq_reset) / t1 * cycle.eta_cycle + qubit.p_eq_reset / cycle.t_cycle


def alpha_th(eta: float, kappa_d: float, n_bar: float) -> float:
    """Cuentas térmicas η·(κ_d/4)·n̄, con κ_d en rad/s"""
    if min(eta, kappa_d, n_bar) < 0:
        raise ConfigurationError("alpha_th requiere entradas >= 0", key='alpha_th')
    return eta * kappa_d / 4.0 * n_bar


@dataclass(frozen=True)
class TemperatureModelParams:
    """Modelo K·∏n̄(T, f_i) + c de dependencia térmica"""
    k: float
    c: float

    def __post_init__(self):
        """Validación post-inicialización"""
        if self.k < 0:
            raise ConfigurationError("K debe ser >= 0", key='k_err')
        if self.c < 0:
            raise ConfigurationError("c debe ser >= 0", key='c_err')


def temperature_model(
    params: TemperatureModelParams,
    temperature: ArrayLike,
    frequencies: Sequence[float],
) -> ArrayLike:
    """
    Tasa K·∏_i n̄(T, f_i) + c

    Con una sola frecuencia es el modelo térmico K_th n̄(T, f_b) + c_th;
    con dos es el modelo intrínseco correlacionado K_err n̄ n̄ + c_err.
    """
    product = np.ones_like(np.asarray(temperature, dtype=float))
    for f in frequencies:
        product = product * thermal_occupation(temperature, f)
    value = params.k * product + params.c
    if np.ndim(value) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class NoiseBudget:
    """Contribuciones a la tasa de cuentas oscuras [1/s]"""
    alpha_q: float
    alpha_pump: float
    alpha_ro: float
    alpha_th: float
    alpha_total: float = field(default=math.nan)

    def __post_init__(self):
        """Validación post-inicialización"""
        for name in ('alpha_q', 'alpha_pump', 'alpha_ro', 'alpha_th'):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} debe ser >= 0", key=name)
        total = self.alpha_q + self.alpha_pump + self.alpha_ro + self.alpha_th
        if math.isnan(self.alpha_total):
            object.__setattr__(self, 'alpha_total', total)
        elif self.alpha_total != total:
            raise ConfigurationError("alpha_total debe ser la suma exacta de componentes", key='alpha_total')

    @property
    def alpha_err(self) -> float:
        """Cuentas sin contribución térmica"""
        return self.alpha_q + self.alpha_pump + self.alpha_ro

    def components(self) -> Dict[str, float]:
        return {
            'alpha_q': self.alpha_q,
            'alpha_pump': self.alpha_pump,
            'alpha_ro': self.alpha_ro,
            'alpha_th': self.alpha_th,
        }

    def export_to_dict(self) -> Dict[str, float]:
        data = self.components()
        data['alpha_total'] = self.alpha_total
        return data


def noise_budget(
    qubits: Sequence[QubitSpec],
    cycle: CycleSpec,
    eta: float,
    kappa_d: float,
    environment: Environment,
    alpha_pump: float = 0.0,
    alpha_ro: float = 0.0,
    *,
    buffer_frequency: float,
    intrinsic_model: Optional[TemperatureModelParams] = None,
    under_pump: bool = True,
) -> NoiseBudget:
    """
    Presupuesto de cuentas oscuras del detector

    Para un qubit α_q es la forma operativa. Para varios qubits se usa el
    modelo correlacionado K_err n̄(T,f_Q0) n̄(T,f_Q1) + c_err si se provee,
    y en otro caso el producto de las probabilidades de falsa bandera por
    ciclo dividido por T_cycle (decodificación todo-o-nada).

    Args:
        qubits: Qubits de la cadena
        cycle: Temporización del ciclo
        eta: Eficiencia operacional total
        kappa_d: Ancho de banda [rad/s]
        environment: Entorno térmico
        alpha_pump: Cuentas inducidas por el bombeo [1/s]
        alpha_ro: Cuentas inducidas por la lectura [1/s]
        buffer_frequency: Frecuencia del buffer [Hz]
        intrinsic_model: Parámetros (K_err, c_err) del modelo correlacionado
        under_pump: Usa T1 bajo bombeo

    Returns:
        NoiseBudget con total exacto
    """
    qubits = list(qubits)
    if not qubits:
        raise ConfigurationError("Se necesita al menos un qubit", key='qubits')

    if len(qubits) == 1:
        a_q = alpha_q(qubits[0], cycle, under_pump=under_pump)
    elif intrinsic_model is not None:
        frequencies = [q.frequency_hz for q in qubits]
        a_q = temperature_model(intrinsic_model, environment.temperature, frequencies)
    else:
        per_cycle = np.prod([false_flag_probability(q, cycle, under_pump) for q in qubits])
        a_q = float(per_cycle / cycle.t_cycle)

    n_bar = environment_occupation(environment, buffer_frequency)
    budget = NoiseBudget(
        alpha_q=float(a_q),
        alpha_pump=float(alpha_pump),
        alpha_ro=float(alpha_ro),
        alpha_th=alpha_th(eta, kappa_d, n_bar),
    )
    logger.debug(f"Presupuesto de ruido: {budget.export_to_dict()}")
    return budget


# ----------------------------------------------------------------------
# Eficiencia
# ----------------------------------------------------------------------
def eta_q(t_d: float, t1: float) -> float:
    """Eficiencia de un qubit (1 − e^(−x))/x con x = T_d/T1"""
    if math.isinf(t1):
        return 1.0
    x = t_d / t1
    return -math.expm1(-x) / x


@dataclass(frozen=True)
class EfficiencyBudget:
    """Factores de la eficiencia operacional total"""
    eta_4wm: float
    eta_m: float
    eta_cycle: float
    eta_q: Tuple[float, ...]
    f_ro: Tuple[float, ...]
    eta_total: float = field(default=math.nan)

    def __post_init__(self):
        """Validación post-inicialización"""
        object.__setattr__(self, 'eta_q', tuple(self.eta_q))
        object.__setattr__(self, 'f_ro', tuple(self.f_ro))
        factors = self.factors()
        for value in factors:
            if not 0 < value <= 1:
                raise ConfigurationError(f"Factor de eficiencia fuera de (0, 1]: {value}", key='eta')
        product = float(np.prod(factors))
        if math.isnan(self.eta_total):
            object.__setattr__(self, 'eta_total', product)
        elif abs(self.eta_total - product) > 1e-12:
            raise ConfigurationError("eta_total debe ser el producto de los factores", key='eta_total')

    def factors(self) -> Tuple[float, ...]:
        return (self.eta_4wm, self.eta_m, self.eta_cycle) + self.eta_q + self.f_ro

    @property
    def eta_chain(self) -> float:
        """Eficiencia de la cadena sin el ciclo: η_total/η_cycle"""
        return self.eta_total / self.eta_cycle

    def export_to_dict(self) -> Dict[str, object]:
        return {
            'eta_4wm': self.eta_4wm,
            'eta_m': self.eta_m,
            'eta_cycle': self.eta_cycle,
            'eta_q': list(self.eta_q),
            'f_ro': list(self.f_ro),
            'eta_total': self.eta_total,
        }


def efficiency_budget(
    chain: ChainSpec,
    cycle: CycleSpec,
    scattering: Optional[ScatteringResult] = None,
    t1s: Optional[Sequence[float]] = None,
    f_ros: Optional[Sequence[float]] = None,
    under_pump: bool = True,
) -> EfficiencyBudget:
    """
    Presupuesto de eficiencia η = η_4WM·η_m·η_cycle·∏η_Q·∏F_RO

    Args:
        chain: Cadena de resonadores
        cycle: Temporización del ciclo
        scattering: Respuesta ya calculada (toma C y |S21(0)|² de ella)
        t1s: T1 por qubit; por defecto T1 bajo bombeo (o libre)
        f_ros: Fidelidades de lectura; por defecto las de los qubits
        under_pump: Qué T1 usar cuando t1s no se provee

    Returns:
        EfficiencyBudget
    """
    if scattering is not None:
        coop = scattering.cooperativity
        peak = scattering.eta_4wm
    else:
        coop = cooperativity(chain)
        peak = float(transmission(chain, 0.0)[0])

    conversion = eta_4wm(coop)
    if chain.n_stages == 2 and scattering is None:
        memory = chain_memory_efficiency(chain)
    elif chain.n_stages >= 2:
        memory = min(peak / conversion, 1.0)
    else:
        memory = 1.0

    if t1s is None:
        t1s = [q.t1_pumped if under_pump else q.t1 for q in chain.qubits]
    if f_ros is None:
        f_ros = [q.f_ro for q in chain.qubits]
    if len(t1s) != chain.n_stages or len(f_ros) != chain.n_stages:
        raise ConfigurationError("t1s y f_ros deben tener un valor por qubit", key='t1')

    return EfficiencyBudget(
        eta_4wm=conversion,
        eta_m=memory,
        eta_cycle=cycle.eta_cycle,
        eta_q=tuple(eta_q(cycle.t_d, t1) for t1 in t1s),
        f_ro=tuple(f_ros),
    )


def optimal_detection_ratio(dead_time_over_t1: float) -> float:
    """
    x = T_d/T1 que maximiza η_cycle·η_q, raíz de e^x = x + 1 + r

    Args:
        dead_time_over_t1: r = T_RO+reset/T1

    Returns:
        x óptimo
    """
    r = dead_time_over_t1
    if r < 0:
        raise ConfigurationError("r debe ser >= 0", key='t_ro')
    if r == 0:
        return 0.0
    # e^x − 1 − x >= x²/2, por lo que √(2r) acota la raíz
    upper = math.sqrt(2.0 * r)
    return optimize.bisect(lambda x: math.expm1(x) - x - r, 0.0, upper, xtol=1e-14, rtol=1e-14)


def optimal_detection_window(cycle: CycleSpec, t1: float) -> float:
    """T_d óptimo [s] para el tiempo muerto del ciclo y el T1 dados"""
    return optimal_detection_ratio(cycle.dead_time / t1) * t1


def cycle_qubit_efficiency(x: ArrayLike, dead_time_over_t1: float) -> ArrayLike:
    """η_cycle·η_q en función de x = T_d/T1: (1 − e^(−x))/(x + r)"""
    x = np.asarray(x, dtype=float)
    return -np.expm1(-x) / (x + dead_time_over_t1)


def majority_leading_order(n_qubits: int, p: float) -> float:
    """Término dominante C(N, m)·p^m de un fallo por mayoría, m = (N+1)/2"""
    m = (n_qubits + 1) // 2
    return float(comb(n_qubits, m, exact=True)) * p ** m


# ----------------------------------------------------------------------
# Sensibilidad
# ----------------------------------------------------------------------
def _photon_energy(frequency: float) -> float:
    return constants.h * frequency


def sensitivity(alpha: float, eta: float, frequency: float) -> float:
    """Sensibilidad en potencia ħω√α/η [W/√Hz]"""
    if eta <= 0:
        raise UndefinedSensitivityError("Sensibilidad indefinida para η <= 0", eta=eta)
    if alpha < 0:
        raise ConfigurationError("alpha debe ser >= 0", key='alpha')
    return _photon_energy(frequency) * math.sqrt(alpha) / eta


def nep(alpha: float, eta: float, frequency: float, t: float) -> float:
    """
    Potencia equivalente de ruido para SNR = 1 en un tiempo t

    ħω(1 + √(1 + 4αt)) / (2η√t), que tiende a ħω√α/η para αt ≫ 1.
    """
    if t <= 0:
        raise ConfigurationError("t debe ser positivo", key='t')
    if eta <= 0:
        raise UndefinedSensitivityError("NEP indefinida para η <= 0", eta=eta)
    return _photon_energy(frequency) * (1.0 + math.sqrt(1.0 + 4.0 * alpha * t)) / (2.0 * eta * math.sqrt(t))


def nep_asymptotic(alpha: float, eta: float, frequency: float) -> float:
    """Límite αt ≫ 1 de la NEP"""
    return sensitivity(alpha, eta, frequency)


def snr(power: float, eta: float, alpha: float, t: float, frequency: float) -> float:
    """SNR = n/√(n + αt) con n = ηPt/ħω fotones detectados"""
    if t <= 0:
        raise ConfigurationError("t debe ser positivo", key='t')
    n = eta * power * t / _photon_energy(frequency)
    noise = n + alpha * t
    if noise <= 0:
        return 0.0
    return n / math.sqrt(noise)


@dataclass(frozen=True)
class SensitivityReport:
    """Sensibilidades operacional e intrínseca y NEP a un tiempo dado [W/√Hz]"""
    s_operational: float
    s_intrinsic: float
    nep_at_t: float
    t: float = 1.0

    def export_to_dict(self) -> Dict[str, float]:
        return {
            's_operational': self.s_operational,
            's_intrinsic': self.s_intrinsic,
            'nep_at_t': self.nep_at_t,
            't': self.t,
        }


def sensitivity_report(alpha: float, alpha_err: float, eta: float, frequency: float, t: float = 1.0) -> SensitivityReport:
    return SensitivityReport(
        s_operational=sensitivity(alpha, eta, frequency),
        s_intrinsic=sensitivity(alpha_err, eta, frequency),
        nep_at_t=nep(alpha, eta, frequency, t),
        t=t,
    )
