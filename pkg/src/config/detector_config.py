"""
Carga de descripciones de detector en formato INI

Cada sección describe un elemento de la cadena ([mode:k], [qubit:k],
[pump:k]) o del entorno ([cycle], [environment], [noise], [readout:k]).
Las claves coinciden con los campos de los tipos del modelo. Las magnitudes
tipo frecuencia se escriben en Hz (admiten sufijo kHz/MHz/GHz) y se
convierten a rad/s una sola vez aquí; las tasas van en 1/s y los tiempos
en s (admiten sufijo us/ns/ms).
"""
from configparser import ConfigParser, Error as ConfigParserError
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union
import logging
import os
import sys

# Manejo de imports para ejecución independiente
try:
    from ..core.errors import ConfigurationError
    from ..core.metrics import TemperatureModelParams
    from ..core.model import ChainSpec, CycleSpec, Environment, ModeRole, ModeSpec, PumpSpec, QubitSpec, coupling_strength
    from ..core.montecarlo import IQReadoutModel
    from ..utils.unit_converter import hz_to_angular, unit_converter
except ImportError:
    sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
    from core.errors import ConfigurationError
    from core.metrics import TemperatureModelParams
    from core.model import ChainSpec, CycleSpec, Environment, ModeRole, ModeSpec, PumpSpec, QubitSpec, coupling_strength
    from core.montecarlo import IQReadoutModel
    from utils.unit_converter import hz_to_angular, unit_converter


logger = logging.getLogger('csmpd.config')

REFERENCE_DEVICE_PATH = Path(__file__).with_name('reference_device.ini')

# Unidad por defecto de cada clave; las frecuencias se pasan a rad/s
FREQUENCY_KEYS = {'omega', 'omega_ge', 'chi_self', 'chi_left', 'chi_right', 'delta_p', 'g4'}
RATE_KEYS = {'kappa_ext', 'kappa_int', 'alpha_pump', 'alpha_ro', 'k_err', 'c_err'}
TIME_KEYS = {'t1', 't1_pumped', 't_d', 't_ro', 't_reset'}
TEMPERATURE_KEYS = {'temperature'}

SECTION_KEYS = {
    'mode': {'role', 'omega', 'kappa_ext', 'kappa_int'},
    'qubit': {'omega_ge', 'chi_self', 'chi_left', 'chi_right', 't1', 't1_pumped', 'p_eq', 'p_eq_reset', 'f_ro'},
    'pump': {'xi_re', 'xi_im', 'g4', 'delta_p'},
    'cycle': {'t_d', 't_ro', 't_reset', 'n_reset'},
    'environment': {'temperature'},
    'noise': {'alpha_pump', 'alpha_ro', 'k_err', 'c_err'},
    'readout': {'mean_g', 'mean_e', 'sigma', 'v_th', 'v_th_reset', 'fidelity', 'optimize'},
}


@dataclass(frozen=True)
class DetectorConfig:
    """Descripción completa de un detector leída de disco"""
    chain: ChainSpec
    cycle: CycleSpec
    environment: Environment
    alpha_pump: float = 0.0
    alpha_ro: float = 0.0
    intrinsic_model: Optional[TemperatureModelParams] = None
    readout: Optional[Tuple[IQReadoutModel, ...]] = None
    source: Optional[str] = None

    def export_to_dict(self) -> Dict[str, object]:
        return {
            'chain': self.chain.export_to_dict(),
            'cycle': self.cycle.export_to_dict(),
            'temperature': self.environment.temperature,
            'alpha_pump': self.alpha_pump,
            'alpha_ro': self.alpha_ro,
            'source': self.source,
        }


# ----------------------------------------------------------------------
# Conversión de valores
# ----------------------------------------------------------------------
def _parse_value(section: str, key: str, raw: str) -> float:
    full_key = f"{section}.{key}"
    try:
        if key in FREQUENCY_KEYS:
            return hz_to_angular(unit_converter.parse_quantity(raw, 'Hz'))
        if key in RATE_KEYS:
            return unit_converter.parse_quantity(raw, '1/s')
        if key in TIME_KEYS:
            return unit_converter.parse_quantity(raw, 's')
        if key in TEMPERATURE_KEYS:
            return unit_converter.parse_quantity(raw, 'K')
        return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"Valor inválido para {full_key}: '{raw}' ({exc})", key=full_key) from exc


def _section_values(parser: ConfigParser, section: str, kind: str) -> Dict[str, Union[float, str]]:
    allowed = SECTION_KEYS[kind]
    values: Dict[str, Union[float, str]] = {}
    for key, raw in parser.items(section):
        if key.startswith('n_bar@'):
            continue
        if key not in allowed:
            raise ConfigurationError(f"Clave desconocida en [{section}]: {key}", key=f"{section}.{key}")
        if key in ('role', 'optimize'):
            values[key] = raw.strip().lower()
        else:
            values[key] = _parse_value(section, key, raw)
    return values


def _require_keys(values: Mapping[str, object], section: str, keys: List[str]) -> None:
    for key in keys:
        if key not in values:
            raise ConfigurationError(f"Falta la clave {key} en [{section}]", key=f"{section}.{key}")


def _indexed_sections(parser: ConfigParser, kind: str) -> List[Tuple[int, str]]:
    found = []
    for section in parser.sections():
        prefix, _, index = section.partition(':')
        if prefix != kind:
            continue
        if not index.isdigit():
            raise ConfigurationError(f"Sección con índice inválido: [{section}]", key=section)
        found.append((int(index), section))
    found.sort()
    if [i for i, _ in found] != list(range(len(found))):
        raise ConfigurationError(f"Las secciones [{kind}:k] deben numerarse desde 0 sin huecos", key=kind)
    return found


# ----------------------------------------------------------------------
# Construcción de los tipos del modelo
# ----------------------------------------------------------------------
def _build_modes(parser: ConfigParser) -> List[ModeSpec]:
    modes = []
    for _, section in _indexed_sections(parser, 'mode'):
        values = _section_values(parser, section, 'mode')
        _require_keys(values, section, ['role', 'omega'])
        try:
            role = ModeRole(values['role'])
        except ValueError as exc:
            raise ConfigurationError(f"Rol desconocido: {values['role']}", key=f"{section}.role") from exc
        modes.append(ModeSpec(
            role=role,
            omega=values['omega'],
            kappa_ext=values.get('kappa_ext', 0.0),
            kappa_int=values.get('kappa_int', 0.0),
        ))
    return modes


def _build_qubits(parser: ConfigParser) -> List[QubitSpec]:
    qubits = []
    for _, section in _indexed_sections(parser, 'qubit'):
        values = _section_values(parser, section, 'qubit')
        _require_keys(values, section, ['omega_ge', 'chi_left', 'chi_right', 't1'])
        values.setdefault('chi_self', 0.0)
        qubits.append(QubitSpec(**values))
    return qubits


def _build_pumps(parser: ConfigParser, qubits: List[QubitSpec]) -> List[PumpSpec]:
    pumps = []
    for index, section in _indexed_sections(parser, 'pump'):
        values = _section_values(parser, section, 'pump')
        delta_p = values.get('delta_p', 0.0)
        if 'g4' in values:
            if 'xi_re' in values or 'xi_im' in values:
                raise ConfigurationError(f"[{section}] admite g4 o xi, no ambos", key=f"{section}.g4")
            if index >= len(qubits):
                raise ConfigurationError(f"[{section}] sin qubit asociado", key=section)
            unit = coupling_strength(qubits[index], PumpSpec(xi=1.0))
            pumps.append(PumpSpec(xi=complex(values['g4']) / unit, delta_p=delta_p))
        else:
            pumps.append(PumpSpec(xi=complex(values.get('xi_re', 0.0), values.get('xi_im', 0.0)), delta_p=delta_p))
    return pumps


def _build_environment(parser: ConfigParser) -> Environment:
    if not parser.has_section('environment'):
        return Environment(temperature=0.0)
    values = _section_values(parser, 'environment', 'environment')
    overrides = {}
    for key, raw in parser.items('environment'):
        if key.startswith('n_bar@'):
            frequency = _parse_value('environment', 'omega', key.split('@', 1)[1]) / hz_to_angular(1.0)
            overrides[frequency] = _parse_value('environment', key, raw)
    return Environment(temperature=values.get('temperature', 0.0), background_occupations=overrides)


def _build_readout(parser: ConfigParser, n_qubits: int) -> Optional[Tuple[IQReadoutModel, ...]]:
    sections = _indexed_sections(parser, 'readout')
    if not sections:
        return None
    if len(sections) != n_qubits:
        raise ConfigurationError("Se necesita una sección [readout:k] por qubit", key='readout')
    models = []
    for _, section in sections:
        values = _section_values(parser, section, 'readout')
        if 'fidelity' in values:
            models.append(IQReadoutModel.from_fidelity(values['fidelity']))
            continue
        _require_keys(values, section, ['mean_g', 'mean_e', 'sigma'])
        if values.get('optimize') in ('true', 'yes', '1'):
            models.append(IQReadoutModel.with_optimal_thresholds(values['mean_g'], values['mean_e'], values['sigma']))
        else:
            models.append(IQReadoutModel(
                values['mean_g'], values['mean_e'], values['sigma'],
                values.get('v_th'), values.get('v_th_reset'),
            ))
    return tuple(models)


def parse_detector_config(parser: ConfigParser, source: Optional[str] = None) -> DetectorConfig:
    """
    Construye la descripción del detector a partir de un ConfigParser

    Raises:
        ConfigurationError: Con la clave problemática en `key`
    """
    for section in parser.sections():
        kind = section.partition(':')[0]
        if kind not in SECTION_KEYS:
            raise ConfigurationError(f"Sección desconocida: [{section}]", key=section)

    modes = _build_modes(parser)
    qubits = _build_qubits(parser)
    pumps = _build_pumps(parser, qubits)
    chain = ChainSpec(tuple(modes), tuple(qubits), tuple(pumps))

    if not parser.has_section('cycle'):
        raise ConfigurationError("Falta la sección [cycle]", key='cycle')
    cycle_values = _section_values(parser, 'cycle', 'cycle')
    _require_keys(cycle_values, 'cycle', ['t_d', 't_ro', 't_reset'])
    cycle = CycleSpec(**cycle_values)

    noise = _section_values(parser, 'noise', 'noise') if parser.has_section('noise') else {}
    intrinsic = None
    if 'k_err' in noise or 'c_err' in noise:
        intrinsic = TemperatureModelParams(noise.get('k_err', 0.0), noise.get('c_err', 0.0))

    config = DetectorConfig(
        chain=chain,
        cycle=cycle,
        environment=_build_environment(parser),
        alpha_pump=noise.get('alpha_pump', 0.0),
        alpha_ro=noise.get('alpha_ro', 0.0),
        intrinsic_model=intrinsic,
        readout=_build_readout(parser, chain.n_stages),
        source=source,
    )
    logger.debug(f"Detector cargado ({source}): N={chain.n_stages}, T_cycle={cycle.t_cycle:.4g} s")
    return config


def load_detector_config(path: Union[str, Path]) -> DetectorConfig:
    """
    Lee un archivo INI de descripción de detector

    Args:
        path: Ruta del archivo

    Returns:
        DetectorConfig con unidades internas (rad/s, 1/s, s, K)

    Raises:
        ConfigurationError: Archivo inexistente, mal formado o con valores inválidos
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"No existe el archivo de configuración: {path}", key='config')
    parser = ConfigParser(inline_comment_prefixes=(';', '#'))
    parser.optionxform = str  # conserva unidades en claves n_bar@<frecuencia>
    try:
        with path.open(encoding='utf-8') as handle:
            parser.read_file(handle)
    except ConfigParserError as exc:
        raise ConfigurationError(f"INI mal formado: {exc}", key='config') from exc
    return parse_detector_config(parser, source=str(path))


def load_reference_config() -> DetectorConfig:
    """Punto de operación de referencia empaquetado con el toolkit"""
    return load_detector_config(REFERENCE_DEVICE_PATH)
