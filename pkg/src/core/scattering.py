"""
Modelo semiclásico de dispersión de la cadena de N+1 cavidades acopladas

Resuelve el sistema tridiagonal complejo de amplitudes de modo para una
excitación débil en el buffer, y deriva S21, la cooperatividad, las
eficiencias de conversión y de memoria, el ancho de banda y la eficiencia
filtrada por la ventana de detección finita.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union
import logging
import math
import os
import sys

import numpy as np
from scipy import integrate, optimize

# Manejo de imports para ejecución independiente
try:
    from .errors import (
        ConfigurationError,
        DegenerateCouplingError,
        IllConditionedChainError,
        InsufficientResolutionError,
        MultiPeakResponseError,
        NoBandwidthError,
    )
    from .model import ChainSpec, TWO_PI
    from ..config.settings import (
        BandwidthMethod,
        PulseEnvelope,
        ScatteringSettings,
        DEFAULT_SCATTERING_SETTINGS,
    )
except ImportError:
    sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
    from core.errors import (
        ConfigurationError,
        DegenerateCouplingError,
        IllConditionedChainError,
        InsufficientResolutionError,
        MultiPeakResponseError,
        NoBandwidthError,
    )
    from core.model import ChainSpec, TWO_PI
    from config.settings import (
        BandwidthMethod,
        PulseEnvelope,
        ScatteringSettings,
        DEFAULT_SCATTERING_SETTINGS,
    )


logger = logging.getLogger('csmpd.scattering')

OUTPUT_PORT = "output"
MEMORY_LOSS_PORT = "memory_loss"


@dataclass(frozen=True)
class ScatteringResult:
    """Respuesta de la cadena sobre una malla de desintonías de sonda"""
    delta_grid: np.ndarray  # δ [rad/s]
    s21: np.ndarray  # amplitudes complejas de transmisión
    eta_4wm: float  # |S21(δ=0)|²
    cooperativity: float
    kappa_d: float  # FWHM [rad/s], nan si no está definido
    memory_loss: Optional[np.ndarray] = None  # √κ_1 ψ_1 / ψ_in (N >= 2)
    amplitudes: Optional[np.ndarray] = None  # ψ_k por punto de la malla

    @property
    def transmission(self) -> np.ndarray:
        """|S21(δ)|²"""
        return np.abs(self.s21) ** 2

    def port(self, name: str) -> np.ndarray:
        if name == OUTPUT_PORT:
            return self.s21
        if name == MEMORY_LOSS_PORT:
            if self.memory_loss is None:
                raise ConfigurationError("La cadena no tiene modo de memoria", key='port')
            return self.memory_loss
        raise ConfigurationError(f"Puerto desconocido: {name}", key='port')


# ----------------------------------------------------------------------
# Sistema tridiagonal
# ----------------------------------------------------------------------
def _system_coefficients(chain: ChainSpec, deltas: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonal (M, N+1), sub y super-diagonal (N,) del sistema estacionario"""
    g = chain.couplings()
    kappas = chain.kappas()
    mode_detunings = chain.mode_detunings()
    diag = -1j * (mode_detunings[np.newaxis, :] - deltas[:, np.newaxis]) - kappas[np.newaxis, :] / 2.0
    sub = -1j * g
    sup = -1j * np.conj(g)
    return diag, sub, sup


def _thomas(diag: np.ndarray, sub: np.ndarray, sup: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Eliminación hacia delante y sustitución hacia atrás, vectorizada sobre la malla

    Args:
        diag: Diagonal (M, n)
        sub: Sub-diagonal (n-1,), fila k columna k-1
        sup: Super-diagonal (n-1,), fila k columna k+1
        rhs: Término independiente (M, n)

    Returns:
        Solución (M, n)

    Raises:
        IllConditionedChainError: Si un pivote se anula
    """
    n = diag.shape[1]
    c_prime = np.zeros((diag.shape[0], max(n - 1, 1)), dtype=complex)
    d_prime = np.zeros_like(rhs, dtype=complex)

    pivot = diag[:, 0]
    if np.any(pivot == 0) or not np.all(np.isfinite(pivot)):
        raise IllConditionedChainError(0)
    if n > 1:
        c_prime[:, 0] = sup[0] / pivot
    d_prime[:, 0] = rhs[:, 0] / pivot

    for k in range(1, n):
        pivot = diag[:, k] - sub[k - 1] * c_prime[:, k - 1]
        if np.any(pivot == 0) or not np.all(np.isfinite(pivot)):
            raise IllConditionedChainError(k)
        if k < n - 1:
            c_prime[:, k] = sup[k] / pivot
        d_prime[:, k] = (rhs[:, k] - sub[k - 1] * d_prime[:, k - 1]) / pivot

    solution = np.empty_like(d_prime)
    solution[:, n - 1] = d_prime[:, n - 1]
    for k in range(n - 2, -1, -1):
        solution[:, k] = d_prime[:, k] - c_prime[:, k] * solution[:, k + 1]
    return solution


def _solve_grid(chain: ChainSpec, deltas: np.ndarray) -> np.ndarray:
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    diag, sub, sup = _system_coefficients(chain, deltas)
    rhs = np.zeros_like(diag)
    rhs[:, 0] = -math.sqrt(chain.buffer.kappa_ext)
    return _thomas(diag, sub, sup, rhs)


def solve_single_excitation(chain: ChainSpec, delta: float) -> Tuple[np.ndarray, complex]:
    """
    Amplitudes estacionarias ψ_0..ψ_N para una sonda débil de amplitud unidad

    Args:
        chain: Cadena de resonadores
        delta: Desintonía de la sonda respecto del buffer [rad/s]

    Returns:
        Tupla (ψ, S21) con S21 = √κ_N ψ_N / ψ_in

    Raises:
        IllConditionedChainError: Si el sistema es singular
    """
    psi = _solve_grid(chain, np.array([delta]))[0]
    s21 = math.sqrt(chain.waste.kappa_total) * psi[-1]
    return psi, complex(s21)


def transmission(chain: ChainSpec, deltas: Union[float, np.ndarray]) -> np.ndarray:
    """|S21(δ)|² evaluado sobre una o varias desintonías"""
    psi = _solve_grid(chain, deltas)
    return chain.waste.kappa_total * np.abs(psi[:, -1]) ** 2


def scan(
    chain: ChainSpec,
    delta_grid: Sequence[float],
    settings: ScatteringSettings = DEFAULT_SCATTERING_SETTINGS,
    with_metrics: bool = True,
) -> ScatteringResult:
    """
    Evalúa la respuesta completa sobre una malla de desintonías

    El ancho de banda y la cooperatividad se adjuntan cuando están definidos;
    en caso contrario se registran como nan. Con with_metrics=False solo se
    resuelve la malla (uso dentro de ajustes).
    """
    grid = np.asarray(delta_grid, dtype=float)
    psi = _solve_grid(chain, grid)
    s21 = math.sqrt(chain.waste.kappa_total) * psi[:, -1]
    memory_loss = None
    if chain.n_stages >= 2:
        memory_loss = math.sqrt(chain.modes[1].kappa_total) * psi[:, 1]

    _, s21_zero = solve_single_excitation(chain, 0.0)
    if not with_metrics:
        return ScatteringResult(
            delta_grid=grid,
            s21=s21,
            eta_4wm=abs(s21_zero) ** 2,
            cooperativity=math.nan,
            kappa_d=math.nan,
            memory_loss=memory_loss,
            amplitudes=psi,
        )

    try:
        coop = cooperativity(chain)
    except DegenerateCouplingError as exc:
        logger.warning(f"Cooperatividad indefinida: {exc}")
        coop = math.nan

    try:
        kappa_d = bandwidth(chain, BandwidthMethod.NUMERIC_FWHM, settings)
    except (MultiPeakResponseError, NoBandwidthError) as exc:
        logger.warning(f"Ancho de banda indefinido: {exc}")
        kappa_d = math.nan

    return ScatteringResult(
        delta_grid=grid,
        s21=s21,
        eta_4wm=abs(s21_zero) ** 2,
        cooperativity=coop,
        kappa_d=kappa_d,
        memory_loss=memory_loss,
        amplitudes=psi,
    )


def memory_loss_amplitude(chain: ChainSpec, delta: float) -> complex:
    """Amplitud √κ_1 ψ_1 / ψ_in disipada en la primera memoria"""
    if chain.n_stages < 2:
        raise ConfigurationError("La cadena no tiene modo de memoria", key='modes')
    psi, _ = solve_single_excitation(chain, delta)
    return complex(math.sqrt(chain.modes[1].kappa_total) * psi[1])


# ----------------------------------------------------------------------
# Formas cerradas (oráculos independientes del solver genérico)
# ----------------------------------------------------------------------
def _denominator_terms(chain: ChainSpec, delta: float) -> np.ndarray:
    return -1j * (chain.mode_detunings() - delta) - chain.kappas() / 2.0


def transmission_closed_form_n1(chain: ChainSpec, delta: float) -> float:
    """|S21|² = κ_b,ext κ_w |g|² / |R_0 R_1 + |g|²|²"""
    if chain.n_stages != 1:
        raise ConfigurationError("Forma cerrada válida solo para N=1", key='qubits')
    r0, r1 = _denominator_terms(chain, delta)
    g2 = abs(chain.couplings()[0]) ** 2
    num = chain.buffer.kappa_ext * chain.waste.kappa_total * g2
    return float(num / abs(r0 * r1 + g2) ** 2)


def transmission_closed_form_n2(chain: ChainSpec, delta: float) -> float:
    """|S21|² = κ_b,ext κ_w |g_0 g_1|² / |R_0 R_1 R_2 + R_0|g_1|² + R_2|g_0|²|²"""
    if chain.n_stages != 2:
        raise ConfigurationError("Forma cerrada válida solo para N=2", key='qubits')
    r0, r1, r2 = _denominator_terms(chain, delta)
    g0, g1 = np.abs(chain.couplings()) ** 2
    num = chain.buffer.kappa_ext * chain.waste.kappa_total * g0 * g1
    return float(num / abs(r0 * r1 * r2 + r0 * g1 + r2 * g0) ** 2)


# ----------------------------------------------------------------------
# Cooperatividad y eficiencias
# ----------------------------------------------------------------------
def cooperativity(chain: ChainSpec, lossless_memories: bool = True) -> float:
    """
    Cooperatividad por recursión de atrás hacia delante

    Γ_{N-1} = 4|g_{N-1}|²/κ_N y Γ_k = 4|g_k|²/Γ_{k+1} con memorias sin
    pérdidas, o Γ_k = 4|g_k|²/(κ_{k+1} + Γ_{k+1}) si se incluyen.
    C = Γ_0/κ_0.

    Args:
        chain: Cadena de resonadores
        lossless_memories: Ignora las pérdidas de los modos intermedios

    Returns:
        Cooperatividad C

    Raises:
        DegenerateCouplingError: Si un acoplamiento aguas abajo es nulo
    """
    g2 = np.abs(chain.couplings()) ** 2
    kappas = chain.kappas()
    n = chain.n_stages

    rate = 4.0 * g2[n - 1] / kappas[n]
    for k in range(n - 2, -1, -1):
        downstream = rate if lossless_memories else kappas[k + 1] + rate
        if downstream == 0:
            raise DegenerateCouplingError(k + 1)
        rate = 4.0 * g2[k] / downstream
    return float(rate / kappas[0])


def cooperativity_closed_form(chain: ChainSpec) -> float:
    """C = 4^(N mod 2) κ_N^(1-2(N mod 2)) / κ_0 · |∏g_pares / ∏g_impares|²"""
    g = np.abs(chain.couplings())
    kappas = chain.kappas()
    n = chain.n_stages
    parity = n % 2
    odd = g[1::2]
    if np.any(odd == 0):
        raise DegenerateCouplingError(int(1 + 2 * np.argmin(odd)))
    ratio = np.prod(g[0::2]) / np.prod(odd)
    return float(4.0 ** parity * kappas[n] ** (1 - 2 * parity) / kappas[0] * ratio ** 2)


def eta_4wm(c: float) -> float:
    """Eficiencia de conversión 4c/(1+c)², máxima en c=1"""
    if c < 0 or math.isnan(c):
        raise ConfigurationError("La cooperatividad debe ser >= 0", key='cooperativity')
    if math.isinf(c):
        return 0.0
    return 4.0 * c / (1.0 + c) ** 2


def memory_efficiency(gamma_mb: float, gamma_mw: float, kappa_m: float) -> float:
    """((γ_mb+γ_mw)/(κ_m+γ_mb+γ_mw))²"""
    if min(gamma_mb, gamma_mw, kappa_m) < 0:
        raise ConfigurationError("Las tasas deben ser >= 0", key='kappa_m')
    gamma = gamma_mb + gamma_mw
    if gamma <= 0:
        raise ConfigurationError("γ_mb + γ_mw debe ser > 0", key='gamma_mb')
    return (gamma / (kappa_m + gamma)) ** 2


def chain_memory_efficiency(chain: ChainSpec) -> float:
    """η_m de una cadena N=2 a partir de sus tasas de conversión"""
    if chain.n_stages != 2:
        raise ConfigurationError("η_m definido para N=2", key='qubits')
    return memory_efficiency(chain.gamma_mb(), chain.gamma_mw(), chain.modes[1].kappa_total)


# ----------------------------------------------------------------------
# Ancho de banda
# ----------------------------------------------------------------------
def bandwidth(
    chain: ChainSpec,
    method: Union[BandwidthMethod, str] = BandwidthMethod.NUMERIC_FWHM,
    settings: ScatteringSettings = DEFAULT_SCATTERING_SETTINGS,
) -> float:
    """
    Ancho de banda (FWHM de |S21(δ)|²) de la cadena

    Args:
        chain: Cadena de resonadores
        method: analytic_n1, approx_sum o numeric_fwhm
        settings: Parámetros del barrido numérico

    Returns:
        κ_d [rad/s]

    Raises:
        MultiPeakResponseError: Respuesta con varios máximos
        NoBandwidthError: Respuesta plana o nula
        ConfigurationError: Método no aplicable a la cadena
    """
    method = BandwidthMethod(method)
    if method == BandwidthMethod.ANALYTIC_N1:
        return _bandwidth_analytic_n1(chain)
    if method == BandwidthMethod.APPROX_SUM:
        if chain.n_stages != 2:
            raise ConfigurationError("approx_sum solo está definido para N=2", key='method')
        return chain.modes[1].kappa_total + chain.gamma_mb() + chain.gamma_mw()
    return _bandwidth_numeric(chain, settings)


def _bandwidth_analytic_n1(chain: ChainSpec) -> float:
    if chain.n_stages != 1:
        raise ConfigurationError("analytic_n1 solo está definido para N=1", key='method')
    if chain.pumps[0].delta_p != 0:
        raise ConfigurationError("analytic_n1 requiere Δ_p = 0", key='delta_p')
    kappa_b, kappa_w = chain.kappas()
    g2 = abs(chain.couplings()[0]) ** 2
    if g2 == 0:
        raise NoBandwidthError("Acoplamiento nulo: transmisión idénticamente cero")
    p = kappa_b * kappa_w / 4.0 + g2
    s = (kappa_b + kappa_w) / 2.0
    u = s * s - 2.0 * p
    # u = 0 en C = 1 con κ_b = κ_w; el redondeo no debe producir dos picos
    if u < -1e-12 * s * s:
        split = math.sqrt(-u / 2.0)
        raise MultiPeakResponseError([-split, split])
    u = max(u, 0.0)
    return math.sqrt(2.0) * math.sqrt(math.sqrt(u * u + 4.0 * p * p) - u)


def _local_maxima(values: np.ndarray, floor: float) -> np.ndarray:
    tol = 1e-12 * np.max(values)
    inner = values[1:-1]
    mask = (inner - values[:-2] > tol) & (inner - values[2:] > tol) & (inner >= floor)
    return np.nonzero(mask)[0] + 1


def _bandwidth_numeric(chain: ChainSpec, settings: ScatteringSettings) -> float:
    kappas = chain.kappas()
    span = settings.span_factor * (kappas[0] + kappas[-1])
    center = 0.0

    for _ in range(settings.max_zoom_passes + 1):
        grid = np.linspace(center - span, center + span, settings.prescan_points)
        values = transmission(chain, grid)
        peak_value = float(np.max(values))
        if not np.isfinite(peak_value) or peak_value <= 0:
            raise NoBandwidthError("Respuesta nula: no hay ancho de banda")
        if peak_value - float(np.min(values)) <= 1e-9 * peak_value:
            raise NoBandwidthError("Respuesta plana sobre el barrido: no hay cruces de media altura")

        above = values >= 0.5 * peak_value
        if above[0] or above[-1]:
            span *= 4.0
            continue
        if np.count_nonzero(above) < 10:
            # Pico sub-resuelto: acercar alrededor del máximo
            peak_at = grid[int(np.argmax(values))]
            width = np.count_nonzero(above) * (grid[1] - grid[0])
            center, span = peak_at, 10.0 * max(width, grid[1] - grid[0])
            continue
        break
    else:
        raise NoBandwidthError("No se encontraron cruces de media altura tras ampliar el barrido")

    peaks = _local_maxima(values, settings.multipeak_fraction * peak_value)
    if len(peaks) > 1:
        raise MultiPeakResponseError([float(grid[i]) for i in peaks])

    i_peak = int(peaks[0]) if len(peaks) == 1 else int(np.argmax(values))
    lo = grid[max(i_peak - 1, 0)]
    hi = grid[min(i_peak + 1, len(grid) - 1)]
    refined = optimize.minimize_scalar(
        lambda d: -transmission(chain, d)[0],
        bounds=(lo, hi),
        method='bounded',
        options={'xatol': settings.crossing_rtol * span},
    )
    peak_value = max(peak_value, float(-refined.fun))
    half = 0.5 * peak_value

    def excess(d: float) -> float:
        return float(transmission(chain, d)[0] - half)

    below = values < half
    left_idx = np.nonzero(below[:i_peak])[0]
    right_idx = np.nonzero(below[i_peak:])[0] + i_peak
    if len(left_idx) == 0 or len(right_idx) == 0:
        raise NoBandwidthError("La respuesta no cae por debajo de la media altura")
    j_left = int(left_idx[-1])
    j_right = int(right_idx[0])

    xtol = settings.crossing_rtol * span
    left = optimize.brentq(excess, grid[j_left], grid[j_left + 1], xtol=xtol, rtol=settings.crossing_rtol)
    right = optimize.brentq(excess, grid[j_right - 1], grid[j_right], xtol=xtol, rtol=settings.crossing_rtol)
    fwhm = right - left
    logger.debug(f"FWHM numérico: {fwhm / TWO_PI:.6g} Hz (pico {peak_value:.6g})")
    return float(fwhm)


# ----------------------------------------------------------------------
# Ventana de detección finita
# ----------------------------------------------------------------------
def rectangular_kernel(deltas: np.ndarray, t_d: float) -> np.ndarray:
    """Transformada normalizada de una ventana rectangular: (T/2π)·sinc(δT/2)"""
    return t_d / TWO_PI * np.sinc(np.asarray(deltas) * t_d / TWO_PI)


def pulse_filtered_efficiency(
    scattering: ScatteringResult,
    t_d: float,
    envelope: Union[PulseEnvelope, str] = PulseEnvelope.RECTANGULAR,
    port: str = OUTPUT_PORT,
) -> float:
    """
    Eficiencia de la respuesta convolucionada con la envolvente de bombeo

    La malla debe cubrir el soporte de la respuesta; la integral se evalúa por
    trapecios.

    Args:
        scattering: Respuesta muestreada sobre una malla uniforme
        t_d: Duración de la ventana de detección [s]
        envelope: Forma de la envolvente (solo rectangular)
        port: Puerto de salida o pérdidas de memoria

    Returns:
        |(S ∗ K)(δ=0)|²

    Raises:
        InsufficientResolutionError: Si el paso de la malla no resuelve el kernel
    """
    if t_d <= 0:
        raise ConfigurationError("t_d debe ser positivo", key='t_d')
    PulseEnvelope(envelope)
    grid = np.asarray(scattering.delta_grid, dtype=float)
    if grid.size < 3:
        raise InsufficientResolutionError(TWO_PI / (10.0 * t_d), math.inf)
    spacing = float(np.max(np.diff(grid)))
    required = TWO_PI / (10.0 * t_d)
    if spacing > required * (1.0 + 1e-9):
        raise InsufficientResolutionError(required, spacing)

    amplitude = integrate.trapezoid(rectangular_kernel(grid, t_d) * scattering.port(port), grid)
    return float(abs(amplitude) ** 2)


def filter_grid(chain: ChainSpec, t_d: float, span_factor: float = 200.0, oversample: float = 2.0) -> np.ndarray:
    """Malla uniforme que resuelve la ventana t_d y cubre las colas de la respuesta"""
    kappas = chain.kappas()
    span = span_factor * max(kappas[0], kappas[-1], TWO_PI / t_d)
    step = TWO_PI / (10.0 * t_d * oversample)
    points = int(2 * math.ceil(span / step)) + 1
    return np.linspace(-span, span, points)


# ----------------------------------------------------------------------
# Frecuencias de bombeo
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ResonanceLine:
    """Recta ω_p0 = slope·ω_p1 + intercept en el plano de frecuencias de bombeo"""
    label: str
    slope: float
    intercept: float  # [rad/s]
    detuning_coefficients: Tuple[float, float]  # a·Δp0 + b·Δp1 = 0

    def pump0_at(self, omega_p1: float) -> float:
        return self.slope * omega_p1 + self.intercept


def pump_frequencies(chain: ChainSpec, include_detuning: bool = False) -> np.ndarray:
    """
    Frecuencias absolutas de bombeo que satisfacen el acuerdo de frecuencias

    ω_pk = ω_qk + (ω_{k+1} − χ_der,k) − (ω_k − χ_der,k-1) − 2|ξ_k|²|χ_qq,k|,
    donde el término χ_der,k-1 solo aparece para k > 0.
    """
    omegas = np.empty(chain.n_stages)
    for k, (qubit, pump) in enumerate(zip(chain.qubits, chain.pumps)):
        right = chain.modes[k + 1].omega - qubit.chi_right
        left = chain.modes[k].omega - (chain.qubits[k - 1].chi_right if k > 0 else 0.0)
        stark = 2.0 * abs(pump.xi) ** 2 * abs(qubit.chi_self)
        omegas[k] = qubit.omega_ge + right - left - stark
        if include_detuning:
            omegas[k] += pump.delta_p
    return omegas


def pump_resonance_lines(chain: ChainSpec) -> List[ResonanceLine]:
    """
    Rectas de resonancia en el plano (ω_p1, ω_p0) para una cadena de dos etapas

    Returns:
        [horizontal Δ_p0 = 0, diagonal Δ_p0 + Δ_p1 = 0]
    """
    if chain.n_stages != 2:
        raise ConfigurationError("Las rectas de resonancia requieren N=2", key='qubits')
    m0, m1 = pump_frequencies(chain)
    return [
        ResonanceLine("first_conversion", 0.0, float(m0), (1.0, 0.0)),
        ResonanceLine("cascaded_sum", -1.0, float(m0 + m1), (1.0, 1.0)),
    ]
