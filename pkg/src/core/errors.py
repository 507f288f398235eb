"""
Jerarquía de errores estructurados del toolkit cSMPD

Los errores de configuración (entradas inválidas) y los errores de cálculo
(sistemas mal condicionados, respuestas sin ancho de banda, etc.) se separan
para que la línea de comandos pueda traducirlos a códigos de salida.
"""
from typing import Any, Dict, List, Optional


class ConfigurationError(ValueError):
    """Error de configuración que identifica la clave problemática"""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key

    def to_dict(self) -> Dict[str, Any]:
        return {'error': type(self).__name__, 'key': self.key, 'message': str(self)}


class ComputationError(RuntimeError):
    """Error base de cálculo con detalles de diagnóstico"""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {'error': type(self).__name__, 'message': str(self)}
        payload.update({k: _jsonable(v) for k, v in self.details.items()})
        return payload


class IllConditionedChainError(ComputationError):
    """Pivote nulo en la eliminación tridiagonal"""

    def __init__(self, index: int):
        super().__init__(f"Cadena mal condicionada: pivote nulo en el modo {index}", index=index)
        self.index = index


class DegenerateCouplingError(ComputationError):
    """Acoplamiento nulo aguas abajo en la recursión de cooperatividad"""

    def __init__(self, stage: int):
        super().__init__(f"Acoplamiento g4 nulo en la etapa {stage}", stage=stage)
        self.stage = stage


class MultiPeakResponseError(ComputationError):
    """Respuesta con varios máximos: el FWHM escalar no está definido"""

    def __init__(self, peaks: List[float]):
        super().__init__(f"Respuesta con {len(peaks)} máximos, FWHM indefinido", peaks=peaks)
        self.peaks = list(peaks)


class NoBandwidthError(ComputationError):
    """Respuesta plana o sin cruces de media altura"""


class InsufficientResolutionError(ComputationError):
    """Malla de desintonías demasiado gruesa para el filtro de pulso"""

    def __init__(self, required_spacing: float, actual_spacing: float):
        super().__init__(
            f"Resolución insuficiente: paso {actual_spacing:.4g} rad/s > requerido {required_spacing:.4g} rad/s",
            required_spacing=required_spacing,
            actual_spacing=actual_spacing,
        )
        self.required_spacing = required_spacing


class TimeStepTooCoarseError(ComputationError):
    """Paso temporal que no resuelve la tasa más rápida"""

    def __init__(self, required_dt: float, dt: float):
        super().__init__(
            f"Paso temporal {dt:.4g} s demasiado grueso, se requiere dt <= {required_dt:.4g} s",
            required_dt=required_dt,
            dt=dt,
        )
        self.required_dt = required_dt


class IntegrationError(ComputationError):
    """Fallo del integrador (paso mínimo alcanzado)"""


class DecoderParityError(ComputationError):
    """Votación por mayoría con número par de qubits"""

    def __init__(self, n_qubits: int):
        super().__init__(f"Mayoría requiere N impar, recibido N={n_qubits}", n_qubits=n_qubits)
        self.n_qubits = n_qubits


class DegenerateReadoutError(ComputationError):
    """Medias de lectura idénticas: umbral indefinido"""


class SaturatedBenchmarkError(ComputationError):
    """Todos los puntos de flujo saturados o insuficientes para el ajuste lineal"""


class UndefinedSensitivityError(ComputationError):
    """Sensibilidad indefinida para eficiencia nula"""


def _jsonable(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, 'item'):
        return value.item()
    return value
