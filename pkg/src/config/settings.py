"""
Configuración profesional para el modelado de detectores cSMPD
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class BandwidthMethod(Enum):
    """Métodos de cálculo del ancho de banda"""
    ANALYTIC_N1 = "analytic_n1"
    APPROX_SUM = "approx_sum"
    NUMERIC_FWHM = "numeric_fwhm"


class PulseEnvelope(Enum):
    """Envolventes de bombeo soportadas"""
    RECTANGULAR = "rectangular"


class DecodingScheme(Enum):
    """Esquemas de decodificación multi-qubit"""
    ALL_OR_NOTHING = "all_or_nothing"
    MAJORITY = "majority"


class FitFamily(Enum):
    """Familias de ajuste de calibración"""
    STARK = "stark"
    EXPONENTIAL = "exponential"
    TEMPERATURE = "temperature"
    COFIT = "cofit"


class OutputFormat(Enum):
    """Formatos de salida de la línea de comandos"""
    CSV = "csv"
    JSON = "json"
    TEXT = "text"


@dataclass
class ScatteringSettings:
    """Parámetros numéricos del barrido de dispersión y del FWHM"""

    # Pre-barrido de la respuesta
    prescan_points: int = 2001
    span_factor: float = 5.0  # ±span_factor·(κ_0 + κ_N)

    # Detección de picos múltiples
    multipeak_fraction: float = 0.5

    # Refinamiento de cruces de media altura
    crossing_rtol: float = 1e-9
    max_zoom_passes: int = 6

    def __post_init__(self):
        """Validación post-inicialización"""
        if self.prescan_points < 101:
            raise ValueError("prescan_points debe ser >= 101")
        if self.span_factor <= 0:
            raise ValueError("span_factor debe ser positivo")
        if not 0 < self.multipeak_fraction < 1:
            raise ValueError("multipeak_fraction debe estar entre 0 y 1")
        if not 0 < self.crossing_rtol < 1e-3:
            raise ValueError("crossing_rtol fuera de rango")


@dataclass
class DynamicsSettings:
    """Parámetros del integrador de la ecuación maestra y del modelo lineal"""

    method: str = "DOP853"
    rtol: float = 1e-12
    atol: float = 1e-14
    dt_factor: float = 0.05  # dt <= dt_factor / tasa máxima
    max_dimension_warning: int = 128

    def __post_init__(self):
        """Validación post-inicialización"""
        if self.method not in ("RK45", "DOP853", "RK23"):
            raise ValueError("method debe ser un integrador explícito adaptativo (RK23, RK45, DOP853)")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("Las tolerancias deben ser positivas")
        if not 0 < self.dt_factor <= 1:
            raise ValueError("dt_factor debe estar en (0, 1]")


@dataclass
class MonteCarloSettings:
    """Parámetros del simulador estocástico por ciclos"""

    block_cycles: int = 65536  # tamaño de bloque del generador por contador
    max_rereads: int = 10
    saturation_guard: float = 0.1  # flujo·T_d
    workers: int = 1

    def __post_init__(self):
        """Validación post-inicialización"""
        if self.block_cycles < 1:
            raise ValueError("block_cycles debe ser >= 1")
        if self.max_rereads < 0:
            raise ValueError("max_rereads debe ser >= 0")
        if not 0 < self.saturation_guard <= 1:
            raise ValueError("saturation_guard debe estar en (0, 1]")
        if self.workers < 1:
            raise ValueError("workers debe ser >= 1")


@dataclass
class FitSettings:
    """Parámetros del motor de ajuste por mínimos cuadrados"""

    restarts: int = 3
    restart_spread: float = 0.05
    n_bootstrap: int = 200
    max_iterations: int = 10000
    xatol: float = 1e-12
    fatol: float = 1e-14
    unidentifiable_spread: float = 0.5
    seed: int = 0
    workers: int = 4

    def __post_init__(self):
        """Validación post-inicialización"""
        if self.restarts < 0:
            raise ValueError("restarts debe ser >= 0")
        if self.n_bootstrap < 0:
            raise ValueError("n_bootstrap debe ser >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations debe ser >= 1")
        if self.workers < 1:
            raise ValueError("workers debe ser >= 1")


@dataclass
class ToolkitSettings:
    """Configuración global del toolkit"""

    scattering: ScatteringSettings = field(default_factory=ScatteringSettings)
    dynamics: DynamicsSettings = field(default_factory=DynamicsSettings)
    montecarlo: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    fit: FitSettings = field(default_factory=FitSettings)

    # Directorios
    log_dir: Optional[str] = None


# Configuración por defecto
DEFAULT_SCATTERING_SETTINGS = ScatteringSettings()
DEFAULT_DYNAMICS_SETTINGS = DynamicsSettings()
DEFAULT_MONTECARLO_SETTINGS = MonteCarloSettings()
DEFAULT_FIT_SETTINGS = FitSettings()
DEFAULT_SETTINGS = ToolkitSettings()
