"""
Rutinas de calibración por mínimos cuadrados

Incluye el modelo de desplazamiento AC-Stark complejo para calibrar el flujo
de entrada, el ajuste de decaimientos exponenciales, el modelo de cuentas
oscuras frente a temperatura y el co-ajuste de las curvas de eficiencia
(g4_0, g4_1, κ_m). Todos los ajustes usan el motor genérico `fit`: símplex
de Nelder-Mead en coordenadas escaladas con reinicios y errores por bootstrap.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union
import logging
import math
import os
import sys

import numpy as np
from scipy import constants, optimize
from sklearn.utils import resample

# Manejo de imports para ejecución independiente
try:
    from .errors import ConfigurationError
    from .metrics import TemperatureModelParams, eta_q, temperature_model
    from .model import ChainSpec
    from .scattering import MEMORY_LOSS_PORT, OUTPUT_PORT, filter_grid, pulse_filtered_efficiency, scan
    from ..config.settings import FitFamily, FitSettings, DEFAULT_FIT_SETTINGS
    from ..utils.logging_config import AnalysisProgressLogger
except ImportError:
    sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
    from core.errors import ConfigurationError
    from core.metrics import TemperatureModelParams, eta_q, temperature_model
    from core.model import ChainSpec
    from core.scattering import MEMORY_LOSS_PORT, OUTPUT_PORT, filter_grid, pulse_filtered_efficiency, scan
    from config.settings import FitFamily, FitSettings, DEFAULT_FIT_SETTINGS
    from utils.logging_config import AnalysisProgressLogger


logger = logging.getLogger('csmpd.calibration')

ModelFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
Bounds = Sequence[Tuple[Optional[float], Optional[float]]]

UNIDENTIFIABLE_FLAG = "unidentifiable"
SINGULAR_FLAG = "singular"


# ----------------------------------------------------------------------
# Informe de ajuste
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class FitReport:
    """Resultado de un ajuste con errores estándar por bootstrap"""
    family: str
    names: Tuple[str, ...]
    units: Tuple[str, ...]
    estimates: np.ndarray
    errors: np.ndarray
    rss: float  # suma de residuos al cuadrado (sin normalizar)
    converged: bool
    iterations: int
    n_data: int
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    flags: Tuple[str, ...] = ()
    n_bootstrap: int = 0

    def __post_init__(self):
        """Validación post-inicialización"""
        if len(self.names) != len(self.estimates) or len(self.units) != len(self.estimates):
            raise ConfigurationError("names, units y estimates deben tener la misma longitud", key='names')

    def parameter(self, name: str) -> Tuple[float, float]:
        """(estimación, error estándar) de un parámetro"""
        if name not in self.names:
            raise ConfigurationError(f"Parámetro desconocido: {name}", key=name)
        i = self.names.index(name)
        return float(self.estimates[i]), float(self.errors[i])

    def as_dict(self) -> Dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.estimates)}

    @property
    def unidentifiable(self) -> bool:
        return any(f.startswith(UNIDENTIFIABLE_FLAG) for f in self.flags)

    def to_dict(self) -> Dict[str, object]:
        parameters = {
            name: {'value': float(v), 'error': _json_float(e), 'unit': unit}
            for name, unit, v, e in zip(self.names, self.units, self.estimates, self.errors)
        }
        return {
            'family': self.family,
            'parameters': parameters,
            'rss': self.rss,
            'converged': self.converged,
            'iterations': self.iterations,
            'n_data': self.n_data,
            'n_bootstrap': self.n_bootstrap,
            'flags': list(self.flags),
        }


def _json_float(value: float) -> Union[float, str]:
    value = float(value)
    if math.isfinite(value):
        return value
    return "inf" if value > 0 else "nan"


# ----------------------------------------------------------------------
# Motor genérico
# ----------------------------------------------------------------------
def _as_residual_vector(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return np.concatenate([values.real.ravel(), values.imag.ravel()])
    return values.astype(float).ravel()


def _default_scales(guess: np.ndarray, bounds: Optional[Bounds]) -> np.ndarray:
    scales = np.abs(guess).astype(float)
    for i, s in enumerate(scales):
        if s > 0:
            continue
        upper = bounds[i][1] if bounds is not None else None
        scales[i] = abs(upper) if upper not in (None, 0) and math.isfinite(upper) else 1.0
    return scales


def _scaled_bounds(bounds: Optional[Bounds], scales: np.ndarray) -> Optional[List[Tuple[Optional[float], Optional[float]]]]:
    if bounds is None:
        return None
    scaled = []
    for (lo, hi), s in zip(bounds, scales):
        scaled.append((None if lo is None else lo / s, None if hi is None else hi / s))
    return scaled


def _clip(z: np.ndarray, bounds: Optional[List[Tuple[Optional[float], Optional[float]]]]) -> np.ndarray:
    if bounds is None:
        return z
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds])
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds])
    return np.clip(z, lo, hi)


def _nelder_mead(objective: Callable[[np.ndarray], float], z0: np.ndarray, bounds, settings: FitSettings):
    return optimize.minimize(
        objective,
        z0,
        method='Nelder-Mead',
        bounds=bounds,
        options={
            'xatol': settings.xatol,
            'fatol': settings.fatol,
            'maxiter': settings.max_iterations,
            'maxfev': 2 * settings.max_iterations,
            'adaptive': z0.size > 2,
        },
    )


def fit(
    model: ModelFunction,
    x: np.ndarray,
    y: np.ndarray,
    initial_guess: Sequence[float],
    bounds: Optional[Bounds] = None,
    names: Optional[Sequence[str]] = None,
    units: Optional[Sequence[str]] = None,
    scales: Optional[Sequence[float]] = None,
    settings: FitSettings = DEFAULT_FIT_SETTINGS,
    family: str = "generic",
) -> FitReport:
    """
    Ajuste por mínimos cuadrados con símplex, reinicios y bootstrap

    Args:
        model: Función model(x, p) que devuelve valores reales o complejos con la forma de y
        x: Variables independientes, una fila por dato
        y: Datos medidos, una fila por dato
        initial_guess: Parámetros iniciales
        bounds: Cotas (inferior, superior) por parámetro; None = libre
        names: Nombres de los parámetros
        units: Unidades de los parámetros
        scales: Escala de cada parámetro; por defecto |initial_guess|
        settings: Reinicios, iteraciones, bootstrap e hilos
        family: Etiqueta de la familia de ajuste

    Returns:
        FitReport; si el símplex no converge, converged=False y la mejor estimación

    Raises:
        ConfigurationError: Menos datos que parámetros o estimación inicial fuera de cotas
    """
    x = np.asarray(x)
    y = np.asarray(y)
    guess = np.asarray(initial_guess, dtype=float)
    n_params = guess.size
    n_data = y.shape[0]
    names = tuple(names) if names is not None else tuple(f"p{i}" for i in range(n_params))
    units = tuple(units) if units is not None else ("",) * n_params

    if x.shape[0] != n_data:
        raise ConfigurationError("x e y deben tener el mismo número de filas", key='data')
    if _as_residual_vector(y).size < n_params or n_data < 2:
        raise ConfigurationError(
            f"Datos insuficientes: {n_data} puntos para {n_params} parámetros", key='data'
        )
    if not np.all(np.isfinite(guess)):
        raise ConfigurationError("La estimación inicial debe ser finita", key='initial_guess')
    if bounds is not None:
        if len(bounds) != n_params:
            raise ConfigurationError("Una cota por parámetro", key='bounds')
        for name, value, (lo, hi) in zip(names, guess, bounds):
            if (lo is not None and value < lo) or (hi is not None and value > hi):
                raise ConfigurationError(f"Estimación inicial de {name} fuera de cotas", key=name)

    scales = np.asarray(scales, dtype=float) if scales is not None else _default_scales(guess, bounds)
    z_bounds = _scaled_bounds(bounds, scales)
    y_vec = _as_residual_vector(y)
    norm = float(np.dot(y_vec, y_vec)) or 1.0

    def objective_on(rows: np.ndarray) -> Callable[[np.ndarray], float]:
        xs = x[rows]
        ys = _as_residual_vector(y[rows])
        denom = float(np.dot(ys, ys)) or norm

        def objective(z: np.ndarray) -> float:
            try:
                r = _as_residual_vector(model(xs, z * scales)) - ys
            except (ConfigurationError, FloatingPointError, ValueError, ZeroDivisionError):
                return math.inf
            value = float(np.dot(r, r)) / denom
            return value if math.isfinite(value) else math.inf
        return objective

    progress = AnalysisProgressLogger('csmpd.calibration')
    progress.start_analysis(f"ajuste {family}", total_steps=settings.restarts + 1)

    all_rows = np.arange(n_data)
    objective = objective_on(all_rows)
    rng = np.random.default_rng(settings.seed)

    best = _nelder_mead(objective, guess / scales, z_bounds, settings)
    iterations = int(best.nit)
    progress.log_step("símplex inicial", f"objetivo {best.fun:.3e}")
    for restart in range(settings.restarts):
        start = _clip(best.x * (1.0 + settings.restart_spread * rng.standard_normal(n_params)), z_bounds)
        result = _nelder_mead(objective, start, z_bounds, settings)
        iterations += int(result.nit)
        if result.fun <= best.fun:
            best = result
        progress.log_step(f"reinicio {restart + 1}", f"objetivo {result.fun:.3e}")

    estimates = best.x * scales
    converged = bool(best.success) and math.isfinite(best.fun)
    if not converged:
        logger.warning(f"Ajuste {family} sin convergencia tras {iterations} iteraciones: {best.message}")

    residuals = _as_residual_vector(model(x, estimates)) - y_vec
    rss = float(np.dot(residuals, residuals))

    errors, n_valid = _bootstrap_errors(objective_on, best.x, z_bounds, scales, n_data, n_params, settings)
    flags: List[str] = []
    if settings.n_bootstrap > 0 and not np.all(np.isfinite(errors)):
        flags.append(SINGULAR_FLAG)
    for name, value, err in zip(names, estimates, errors):
        if math.isfinite(err) and err > settings.unidentifiable_spread * abs(value):
            flags.append(f"{UNIDENTIFIABLE_FLAG}:{name}")
        elif not math.isfinite(err) and settings.n_bootstrap > 0:
            flags.append(f"{UNIDENTIFIABLE_FLAG}:{name}")

    progress.finish_analysis(
        success=converged,
        summary=", ".join(f"{n}={v:.4g}±{e:.2g}" for n, v, e in zip(names, estimates, errors)),
    )
    return FitReport(
        family=family,
        names=names,
        units=units,
        estimates=estimates,
        errors=errors,
        rss=rss,
        converged=converged,
        iterations=iterations,
        n_data=n_data,
        residuals=residuals,
        flags=tuple(flags),
        n_bootstrap=n_valid,
    )


def _bootstrap_errors(
    objective_on: Callable[[np.ndarray], Callable[[np.ndarray], float]],
    z_best: np.ndarray,
    z_bounds,
    scales: np.ndarray,
    n_data: int,
    n_params: int,
    settings: FitSettings,
) -> Tuple[np.ndarray, int]:
    """Desviación estándar de las estimaciones sobre remuestreos con reemplazo"""
    if settings.n_bootstrap == 0:
        return np.full(n_params, np.nan), 0

    indices = np.arange(n_data)
    seeds = np.random.SeedSequence(settings.seed).generate_state(settings.n_bootstrap)

    def one(seed: int) -> np.ndarray:
        rows = resample(indices, replace=True, n_samples=n_data, random_state=int(seed))
        if np.unique(rows).size < 2:
            return np.full(n_params, np.nan)
        result = _nelder_mead(objective_on(rows), z_best.copy(), z_bounds, settings)
        if not math.isfinite(result.fun):
            return np.full(n_params, np.nan)
        return result.x * scales

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as executor:
            samples = np.array(list(executor.map(one, seeds)))
    else:
        samples = np.array([one(s) for s in seeds])

    valid = np.all(np.isfinite(samples), axis=1)
    n_valid = int(valid.sum())
    if n_valid < 2:
        logger.warning("Bootstrap degenerado: errores infinitos")
        return np.full(n_params, np.inf), n_valid
    return np.std(samples[valid], axis=0, ddof=1), n_valid


# ----------------------------------------------------------------------
# Calibración de potencia de entrada (AC-Stark)
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class StarkDataPoint:
    """Desplazamiento y desfase del qubit frente a la desintonía de la sonda"""
    delta_b: float  # [rad/s]
    d_omega: float  # δω [rad/s]
    d_gamma: float  # δγ [1/s]

    def __post_init__(self):
        """Validación post-inicialización"""
        for name in ('delta_b', 'd_omega', 'd_gamma'):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} debe ser finito", key=name)

    @property
    def complex_shift(self) -> complex:
        return complex(self.d_omega, self.d_gamma)


def coherent_amplitudes(chi: float, kappa_b: float, eps_d: float, delta_b):
    """Amplitudes coherentes α_g, α_e del buffer con el qubit en g o e"""
    delta_b = np.asarray(delta_b, dtype=float)
    alpha_g = eps_d / (kappa_b / 2.0 + 1j * (delta_b - chi / 2.0))
    alpha_e = eps_d / (kappa_b / 2.0 + 1j * (delta_b + chi / 2.0))
    return alpha_g, alpha_e


def ac_stark_model(chi: float, kappa_b: float, eps_d: float, delta_b):
    """
    Desplazamiento AC-Stark complejo δω + iδγ = −4χ|ε_d|²/((κ_b + iχ)² + 4Δ_b²)

    Args:
        chi: Desplazamiento dispersivo qubit-buffer [rad/s]
        kappa_b: Tasa total del buffer [1/s]
        eps_d: Amplitud de la sonda [rad/s]
        delta_b: Desintonía qubit-sonda [rad/s], escalar o array

    Returns:
        Valor complejo (o array) δω + iδγ
    """
    if kappa_b <= 0:
        raise ConfigurationError("kappa_b debe ser positivo", key='kappa_b')
    delta_b = np.asarray(delta_b, dtype=float)
    value = -4.0 * chi * abs(eps_d) ** 2 / ((kappa_b + 1j * chi) ** 2 + 4.0 * delta_b ** 2)
    if np.ndim(value) == 0:
        return complex(value)
    return value


def ac_stark_from_amplitudes(chi: float, kappa_b: float, eps_d: float, delta_b):
    """Misma magnitud evaluada como −χ·conj(α_g)·α_e"""
    alpha_g, alpha_e = coherent_amplitudes(chi, kappa_b, eps_d, delta_b)
    value = -chi * np.conj(alpha_g) * alpha_e
    if np.ndim(value) == 0:
        return complex(value)
    return value


def photon_flux_from_drive(
    eps_d: float,
    kappa_b: float,
    kappa_b_int: float = 0.0,
    frequency: Optional[float] = None,
) -> Tuple[float, Optional[float]]:
    """
    Flujo de fotones a la entrada del buffer |ε_d|²/(κ_b − κ_b,int)

    Args:
        eps_d: Amplitud de la sonda [rad/s]
        kappa_b: Tasa total del buffer [1/s]
        kappa_b_int: Pérdidas internas del buffer [1/s]
        frequency: Frecuencia del buffer [Hz] para convertir a potencia

    Returns:
        Tupla (flujo [fotones/s], potencia [W] o None)
    """
    if kappa_b_int < 0:
        raise ConfigurationError("kappa_b_int debe ser >= 0", key='kappa_b_int')
    if kappa_b <= kappa_b_int:
        raise ConfigurationError("kappa_b debe superar kappa_b_int", key='kappa_b')
    flux = abs(eps_d) ** 2 / (kappa_b - kappa_b_int)
    power = flux * constants.h * frequency if frequency is not None else None
    return flux, power


STARK_NAMES = ('chi', 'kappa_b', 'eps_d', 'delta_0')
STARK_UNITS = ('rad/s', '1/s', 'rad/s', 'rad/s')


def fit_ac_stark(
    points: Sequence[StarkDataPoint],
    initial_guess: Sequence[float],
    delta0_window: Optional[float] = None,
    settings: FitSettings = DEFAULT_FIT_SETTINGS,
) -> FitReport:
    """
    Ajusta (χ, κ_b, ε_d, Δ_0) al desplazamiento complejo medido

    Δ_0 es un desplazamiento común del eje de desintonías, libre dentro de
    ±delta0_window alrededor de su valor inicial.

    Args:
        points: Datos (Δ_b, δω, δγ)
        initial_guess: (χ, κ_b, ε_d, Δ_0)
        delta0_window: Semiancho de la cota de Δ_0 [rad/s]; por defecto κ_b/10
        settings: Parámetros del motor de ajuste

    Returns:
        FitReport de la familia stark
    """
    if len(points) < 2:
        raise ConfigurationError("Se necesitan al menos 2 puntos AC-Stark", key='data')
    chi0, kappa0, eps0, delta00 = (float(v) for v in initial_guess)
    if kappa0 <= 0 or eps0 <= 0 or chi0 == 0:
        raise ConfigurationError("Estimación inicial AC-Stark inválida", key='initial_guess')
    window = delta0_window if delta0_window is not None else 0.1 * kappa0

    x = np.array([p.delta_b for p in points])
    y = np.array([p.complex_shift for p in points])
    chi_bounds = (None, 0.0) if chi0 < 0 else (0.0, None)
    bounds = [chi_bounds, (0.0, None), (0.0, None), (delta00 - window, delta00 + window)]
    scales = [abs(chi0), kappa0, eps0, max(abs(delta00), window)]

    def model(delta_b: np.ndarray, p: np.ndarray) -> np.ndarray:
        return ac_stark_model(p[0], p[1], p[2], delta_b + p[3])

    return fit(
        model, x, y, (chi0, kappa0, eps0, delta00), bounds=bounds,
        names=STARK_NAMES, units=STARK_UNITS, scales=scales,
        settings=settings, family=FitFamily.STARK.value,
    )


# ----------------------------------------------------------------------
# Decaimiento exponencial
# ----------------------------------------------------------------------
def exponential_decay(t, amplitude: float, t1: float, offset: float = 0.0):
    return amplitude * np.exp(-np.asarray(t, dtype=float) / t1) + offset


def fit_exponential_decay(
    times: Sequence[float],
    values: Sequence[float],
    initial_guess: Optional[Sequence[float]] = None,
    settings: FitSettings = DEFAULT_FIT_SETTINGS,
) -> FitReport:
    """
    Ajusta A·exp(−t/T1) + c

    Sin estimación inicial se toma c del último punto, A del primero y
    T1 como un tercio de la ventana temporal.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if initial_guess is None:
        offset = float(v[-1])
        initial_guess = (float(v[0]) - offset, float(np.ptp(t)) / 3.0 or 1.0, offset)
    guess = tuple(float(g) for g in initial_guess)
    if guess[1] <= 0:
        raise ConfigurationError("T1 inicial debe ser positivo", key='t1')
    scales = [abs(guess[0]) or 1.0, guess[1], abs(guess[2]) or max(abs(guess[0]), 1e-3)]

    def model(times_: np.ndarray, p: np.ndarray) -> np.ndarray:
        return exponential_decay(times_, p[0], p[1], p[2])

    return fit(
        model, t, v, guess, bounds=[(None, None), (0.0, None), (None, None)],
        names=('amplitude', 't1', 'offset'), units=('', 's', ''), scales=scales,
        settings=settings, family=FitFamily.EXPONENTIAL.value,
    )


# ----------------------------------------------------------------------
# Modelo de temperatura
# ----------------------------------------------------------------------
def fit_temperature_model(
    temperatures: Sequence[float],
    rates: Sequence[float],
    frequencies: Sequence[float],
    initial_guess: Optional[Sequence[float]] = None,
    settings: FitSettings = DEFAULT_FIT_SETTINGS,
) -> FitReport:
    """
    Ajusta K·∏n̄(T, f_i) + c a tasas de cuentas oscuras medidas

    Args:
        temperatures: Temperaturas de la placa [K]
        rates: Tasas de cuentas oscuras [1/s]
        frequencies: Frecuencias [Hz] cuyo producto de ocupaciones entra en el modelo
        initial_guess: (K, c); por defecto c = mínimo y K del punto más caliente
        settings: Parámetros del motor de ajuste

    Returns:
        FitReport de la familia temperature con parámetros (k, c)
    """
    temps = np.asarray(temperatures, dtype=float)
    values = np.asarray(rates, dtype=float)
    frequencies = tuple(float(f) for f in frequencies)
    if not frequencies:
        raise ConfigurationError("Se necesita al menos una frecuencia", key='frequencies')
    if initial_guess is None:
        c0 = float(np.min(values))
        hottest = int(np.argmax(temps))
        occupation = temperature_model(TemperatureModelParams(1.0, 0.0), temps[hottest], frequencies)
        k0 = (float(values[hottest]) - c0) / occupation if occupation > 0 else 1.0
        initial_guess = (max(k0, 1e-12), max(c0, 1e-12))
    guess = tuple(float(g) for g in initial_guess)

    def model(t: np.ndarray, p: np.ndarray) -> np.ndarray:
        return np.atleast_1d(temperature_model(TemperatureModelParams(max(p[0], 0.0), max(p[1], 0.0)), t, frequencies))

    return fit(
        model, temps, values, guess, bounds=[(0.0, None), (0.0, None)],
        names=('k', 'c'), units=('1/s', '1/s'),
        settings=settings, family=FitFamily.TEMPERATURE.value,
    )


# ----------------------------------------------------------------------
# Co-ajuste de las curvas de eficiencia
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class EfficiencyCurves:
    """Eficiencias medidas frente a la amplitud relativa de bombeo"""
    amplitudes: Tuple[float, ...]
    eta_q0: Tuple[float, ...]
    eta_q1: Tuple[float, ...]
    eta: Tuple[float, ...]

    def __post_init__(self):
        """Validación post-inicialización"""
        n = len(self.amplitudes)
        for name in ('eta_q0', 'eta_q1', 'eta'):
            if len(getattr(self, name)) != n:
                raise ConfigurationError(f"{name} debe tener un valor por amplitud", key=name)

    def stacked(self) -> np.ndarray:
        return np.column_stack([self.eta_q0, self.eta_q1, self.eta])


@dataclass(frozen=True)
class CofitFixed:
    """Magnitudes fijas del co-ajuste de eficiencia"""
    template: ChainSpec  # aporta κ_b, κ_w y las F_RO de los qubits
    t_d: float
    eta_cycle: float
    t1_q0: Tuple[float, ...]  # T1 bajo bombeo por amplitud [s]
    t1_q1: Tuple[float, ...]
    f_ro: Optional[Tuple[float, float]] = None
    span_factor: float = 20.0

    def __post_init__(self):
        """Validación post-inicialización"""
        if self.template.n_stages != 2:
            raise ConfigurationError("El co-ajuste requiere una cadena de dos etapas", key='qubits')
        if self.t_d <= 0:
            raise ConfigurationError("t_d debe ser positivo", key='t_d')
        if not 0 < self.eta_cycle <= 1:
            raise ConfigurationError("eta_cycle debe estar en (0, 1]", key='eta_cycle')
        if len(self.t1_q0) != len(self.t1_q1):
            raise ConfigurationError("t1_q0 y t1_q1 deben tener la misma longitud", key='t1_q1')
        if self.f_ro is None:
            object.__setattr__(self, 'f_ro', tuple(q.f_ro for q in self.template.qubits))

    def grid(self) -> np.ndarray:
        return filter_grid(self.template, self.t_d, span_factor=self.span_factor, oversample=1.0)


COFIT_NAMES = ('g0', 'g1', 'kappa_m')
COFIT_UNITS = ('rad/s', 'rad/s', '1/s')


def cofit_chain(template: ChainSpec, g0: float, g1: float, kappa_m: float, amplitude: float = 1.0) -> ChainSpec:
    """Cadena con acoplamientos escalados por la amplitud y pérdidas de memoria κ_m"""
    chain = template.with_mode(1, kappa_ext=0.0, kappa_int=max(kappa_m, 0.0))
    return chain.with_couplings((amplitude * g0, amplitude * g1))


def efficiency_forward(
    fixed: CofitFixed,
    params: Sequence[float],
    amplitudes: Sequence[float],
    t1_q0: Optional[Sequence[float]] = None,
    t1_q1: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """
    Eficiencias (η_Q0, η_Q1, η) predichas para cada amplitud

    η_Q0 suma la transmisión al waste y la pérdida en la memoria; η_Q1 y η
    solo cuentan la transmisión. Ambos puertos pasan por el filtro de la
    ventana de detección.
    """
    g0, g1, kappa_m = (float(p) for p in params)
    t1_q0 = fixed.t1_q0 if t1_q0 is None else t1_q0
    t1_q1 = fixed.t1_q1 if t1_q1 is None else t1_q1
    f0, f1 = fixed.f_ro
    grid = fixed.grid()
    rows = []
    for a, t10, t11 in zip(amplitudes, t1_q0, t1_q1):
        response = scan(cofit_chain(fixed.template, g0, g1, kappa_m, a), grid, with_metrics=False)
        out = pulse_filtered_efficiency(response, fixed.t_d, port=OUTPUT_PORT)
        mem = pulse_filtered_efficiency(response, fixed.t_d, port=MEMORY_LOSS_PORT)
        q0 = eta_q(fixed.t_d, t10)
        q1 = eta_q(fixed.t_d, t11)
        rows.append((
            (out + mem) * q0 * fixed.eta_cycle * f0,
            out * q1 * fixed.eta_cycle * f1,
            out * q0 * q1 * fixed.eta_cycle * f0 * f1,
        ))
    return np.array(rows)


def efficiency_cofit(
    curves: EfficiencyCurves,
    fixed: CofitFixed,
    initial_guess: Sequence[float] = (-2 * math.pi * 100e3, -2 * math.pi * 100e3, 3e5),
    settings: FitSettings = DEFAULT_FIT_SETTINGS,
) -> FitReport:
    """
    Co-ajuste de (g4_0, g4_1, κ_m) a las tres curvas de eficiencia

    Args:
        curves: η_Q0, η_Q1 y η en cascada frente a la amplitud relativa
        fixed: T_d, η_cycle, F_RO, κ_b, κ_w (vía la plantilla) y T1(amplitud)
        initial_guess: (g4_0, g4_1, κ_m)
        settings: Parámetros del motor de ajuste

    Returns:
        FitReport de la familia cofit; κ_m sin identificar queda marcado
    """
    n = len(curves.amplitudes)
    if n < 5:
        raise ConfigurationError("El co-ajuste necesita al menos 5 amplitudes", key='amplitudes')
    if len(fixed.t1_q0) != n:
        raise ConfigurationError("Un T1 por amplitud", key='t1_q0')
    guess = tuple(float(g) for g in initial_guess)
    if guess[0] == 0 or guess[1] == 0:
        raise ConfigurationError("Los acoplamientos iniciales deben ser no nulos", key='initial_guess')

    x = np.column_stack([curves.amplitudes, fixed.t1_q0, fixed.t1_q1])
    y = curves.stacked()

    def model(rows: np.ndarray, p: np.ndarray) -> np.ndarray:
        return efficiency_forward(fixed, p, rows[:, 0], rows[:, 1], rows[:, 2])

    bounds = [
        (None, 0.0) if guess[0] < 0 else (0.0, None),
        (None, 0.0) if guess[1] < 0 else (0.0, None),
        (0.0, None),
    ]
    kappa_scale = guess[2] if guess[2] > 0 else 0.1 * fixed.template.waste.kappa_total
    scales = [abs(guess[0]), abs(guess[1]), kappa_scale]
    return fit(
        model, x, y, guess, bounds=bounds, names=COFIT_NAMES, units=COFIT_UNITS,
        scales=scales, settings=settings, family=FitFamily.COFIT.value,
    )
