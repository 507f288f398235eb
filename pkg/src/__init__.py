"""
Paquete principal del toolkit de modelado de detectores cSMPD

Modela detectores de fotones de microondas en cascada: una cadena buffer →
memorias → waste con qubits bandera acoplados por mezcla de cuatro ondas.

Módulos principales:
- config: Ajustes numéricos y carga de descripciones de detector (INI)
- core: Modelo, dispersión, métricas, dinámica, Monte Carlo y calibración
- utils: Utilidades (logging, validación, conversión de unidades)
- main: Línea de comandos
"""

__version__ = "1.0.0"

# Imports principales para facilitar uso del paquete
from .config.settings import (
    DEFAULT_SETTINGS,
    BandwidthMethod,
    DecodingScheme,
    FitFamily,
    OutputFormat,
)

from .config.detector_config import (
    DetectorConfig,
    load_detector_config,
    load_reference_config,
)

from .core.errors import (
    ComputationError,
    ConfigurationError,
)

from .core.model import (
    ChainSpec,
    CycleSpec,
    Environment,
    ModeRole,
    ModeSpec,
    PumpSpec,
    QubitSpec,
)

from .core.scattering import (
    ScatteringResult,
    bandwidth,
    cooperativity,
    scan,
    transmission,
)

from .core.metrics import (
    EfficiencyBudget,
    NoiseBudget,
    efficiency_budget,
    noise_budget,
    sensitivity,
)

from .core.montecarlo import (
    SimulationConfig,
    decode,
    simulate,
)

from .utils.unit_converter import (
    ProfessionalUnitConverter,
    unit_converter,
)

from .utils.validators import (
    ChainValidator,
    ValidationResult,
    ValidationSeverity,
)

# Información del paquete
__all__ = [
    # Configuración
    'DEFAULT_SETTINGS',
    'BandwidthMethod',
    'DecodingScheme',
    'FitFamily',
    'OutputFormat',
    'DetectorConfig',
    'load_detector_config',
    'load_reference_config',

    # Errores
    'ComputationError',
    'ConfigurationError',

    # Modelo
    'ChainSpec',
    'CycleSpec',
    'Environment',
    'ModeRole',
    'ModeSpec',
    'PumpSpec',
    'QubitSpec',

    # Cálculo
    'ScatteringResult',
    'bandwidth',
    'cooperativity',
    'scan',
    'transmission',
    'EfficiencyBudget',
    'NoiseBudget',
    'efficiency_budget',
    'noise_budget',
    'sensitivity',
    'SimulationConfig',
    'decode',
    'simulate',

    # Utilidades
    'ProfessionalUnitConverter',
    'unit_converter',
    'ChainValidator',
    'ValidationResult',
    'ValidationSeverity',
]
