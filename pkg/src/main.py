"""
Aplicación principal - Línea de comandos del toolkit de modelado cSMPD

Cada subcomando lee una descripción de detector (INI o el punto de
referencia empaquetado), ejecuta un cálculo de la librería y escribe datos
listos para graficar en CSV o JSON. Los mensajes van a stderr; stdout (o
--out) solo lleva datos.

Códigos de salida:
    0   éxito
    1   error de cálculo (se imprime el error estructurado en JSON)
    2   error de configuración (se nombra la clave problemática)
    64  subcomando desconocido o ausente
"""
import argparse
import csv
import io
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

# Manejo de imports para ejecución independiente
try:
    from .config.detector_config import DetectorConfig, load_detector_config, load_reference_config
    from .config.settings import (
        DEFAULT_SETTINGS, BandwidthMethod, DecodingScheme, FitFamily, FitSettings, MonteCarloSettings, OutputFormat,
    )
    from .core import calibration, dynamics, metrics, montecarlo, scattering
    from .core.errors import ComputationError, ConfigurationError
    from .core.model import ChainSpec, Environment
    from .utils.logging_config import setup_professional_logging
    from .utils.unit_converter import angular_to_hz, hz_to_angular, unit_converter
    from .utils.validators import ChainValidator
except ImportError:
    sys.path.append(os.path.dirname(os.path.abspath(__file__)))
    from config.detector_config import DetectorConfig, load_detector_config, load_reference_config
    from config.settings import (
        DEFAULT_SETTINGS, BandwidthMethod, DecodingScheme, FitFamily, FitSettings, MonteCarloSettings, OutputFormat,
    )
    from core import calibration, dynamics, metrics, montecarlo, scattering
    from core.errors import ComputationError, ConfigurationError
    from core.model import ChainSpec, Environment
    from utils.logging_config import setup_professional_logging
    from utils.unit_converter import angular_to_hz, hz_to_angular, unit_converter
    from utils.validators import ChainValidator


logger = logging.getLogger('csmpd.cli')

EXIT_OK = 0
EXIT_COMPUTATION = 1
EXIT_CONFIGURATION = 2
EXIT_USAGE = 64

PROG = "csmpd"

# Formato por defecto de cada subcomando
DEFAULT_FORMATS = {
    's21': OutputFormat.CSV,
    'bandwidth': OutputFormat.JSON,
    'budget': OutputFormat.JSON,
    'dynamics': OutputFormat.CSV,
    'simulate': OutputFormat.CSV,
    'fit': OutputFormat.JSON,
    'sweep-temperature': OutputFormat.CSV,
    'sweep-pump': OutputFormat.CSV,
    'resonance-lines': OutputFormat.JSON,
}
COMMANDS = tuple(DEFAULT_FORMATS)

_COMMON_DESTS = {'command', 'config', 'reference_fixtures', 'seed', 'out', 'format', 'log_dir', 'verbose'}


class UsageError(Exception):
    """Error de argumentos detectado por argparse"""

    def __init__(self, message: str, usage: str):
        super().__init__(message)
        self.usage = usage

    @property
    def key(self) -> str:
        match = re.search(r"argument (\S+?):", str(self))
        if match:
            return match.group(1).split('/')[-1]
        match = re.search(r"arguments are required: (\S+)", str(self))
        if match:
            return match.group(1).rstrip(',')
        return 'argv'


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser que lanza excepción en lugar de terminar el proceso"""

    def error(self, message):
        raise UsageError(message, self.format_usage())


# ----------------------------------------------------------------------
# Configuración de la ejecución
# ----------------------------------------------------------------------
@dataclass
class RunConfig:
    """Opciones de una ejecución de la línea de comandos"""
    command: str
    config_path: Optional[Path] = None
    reference_fixtures: bool = False
    seed: int = 0
    out: Optional[Path] = None
    output_format: Optional[OutputFormat] = None
    log_dir: Optional[str] = None
    verbose: bool = False
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        """Validación post-inicialización"""
        if self.command not in DEFAULT_FORMATS:
            raise ConfigurationError(f"Subcomando desconocido: {self.command}", key='command')
        if self.output_format is None:
            self.output_format = DEFAULT_FORMATS[self.command]
        self.output_format = OutputFormat(self.output_format)
        if self.config_path is not None:
            self.config_path = Path(self.config_path)
            if self.reference_fixtures:
                raise ConfigurationError("--config y --reference-fixtures son excluyentes", key='config')
            if not self.config_path.is_file():
                raise ConfigurationError(f"No existe el archivo de configuración: {self.config_path}", key='config')
        if self.seed < 0:
            raise ConfigurationError("La semilla debe ser >= 0", key='seed')
        if self.out is not None:
            self.out = Path(self.out)
            if not self.out.parent.exists():
                raise ConfigurationError(f"No existe el directorio de salida: {self.out.parent}", key='out')

    @classmethod
    def from_namespace(cls, namespace: argparse.Namespace) -> 'RunConfig':
        values = vars(namespace)
        return cls(
            command=values['command'],
            config_path=values.get('config'),
            reference_fixtures=values.get('reference_fixtures', False),
            seed=values.get('seed', 0),
            out=values.get('out'),
            output_format=values.get('format'),
            log_dir=values.get('log_dir'),
            verbose=values.get('verbose', False),
            options={k: v for k, v in values.items() if k not in _COMMON_DESTS},
        )

    @property
    def has_detector(self) -> bool:
        return self.reference_fixtures or self.config_path is not None

    def load_detector(self) -> DetectorConfig:
        """Descripción del detector indicada por --config o --reference-fixtures"""
        if self.reference_fixtures:
            return load_reference_config()
        if self.config_path is None:
            raise ConfigurationError(
                f"El subcomando {self.command} necesita --config o --reference-fixtures", key='config'
            )
        return load_detector_config(self.config_path)

    def option(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        return default if value is None else value


@dataclass
class Table:
    """Resultado tabular con metadatos opcionales"""
    columns: List[str]
    rows: List[Sequence[Any]]
    meta: Dict[str, Any] = field(default_factory=dict)


Result = Union[Table, Dict[str, Any]]


def _require(condition: bool, message: str, key: str) -> None:
    if not condition:
        raise ConfigurationError(message, key=key)


# ----------------------------------------------------------------------
# Cálculos compartidos
# ----------------------------------------------------------------------
def _budget_bandwidth_method(chain: ChainSpec) -> BandwidthMethod:
    """Método de ancho de banda usado por los presupuestos"""
    if chain.n_stages == 2:
        return BandwidthMethod.APPROX_SUM
    if chain.n_stages == 1 and all(p.delta_p == 0 for p in chain.pumps):
        return BandwidthMethod.ANALYTIC_N1
    return BandwidthMethod.NUMERIC_FWHM


def _operating_point(
    detector: DetectorConfig,
    chain: Optional[ChainSpec] = None,
    environment: Optional[Environment] = None,
) -> Tuple[metrics.EfficiencyBudget, metrics.NoiseBudget, float, BandwidthMethod]:
    """Presupuestos de eficiencia y ruido y κ_d de un punto de operación"""
    chain = chain or detector.chain
    environment = environment or detector.environment
    method = _budget_bandwidth_method(chain)
    kappa_d = scattering.bandwidth(chain, method, DEFAULT_SETTINGS.scattering)
    efficiency = metrics.efficiency_budget(chain, detector.cycle)
    noise = metrics.noise_budget(
        chain.qubits,
        detector.cycle,
        efficiency.eta_total,
        kappa_d,
        environment,
        detector.alpha_pump,
        detector.alpha_ro,
        buffer_frequency=chain.buffer.frequency_hz,
        intrinsic_model=detector.intrinsic_model,
    )
    return efficiency, noise, kappa_d, method


def _simulation_config(detector: DetectorConfig) -> montecarlo.SimulationConfig:
    chain = detector.chain
    cycle = detector.cycle
    _, noise, _, _ = _operating_point(detector)
    intrinsic_rates = None
    if detector.intrinsic_model is None:
        intrinsic_rates = [metrics.false_flag_probability(q, cycle) / cycle.t_cycle for q in chain.qubits]
    return montecarlo.SimulationConfig.from_budget(
        noise,
        cycle,
        montecarlo.conversion_probabilities(chain),
        intrinsic_rates=intrinsic_rates,
        readout=detector.readout,
        flag_survival=montecarlo.flag_survivals(chain, cycle),
    )


# ----------------------------------------------------------------------
# Subcomandos
# ----------------------------------------------------------------------
def command_s21(config: RunConfig) -> Result:
    """Respuesta de transmisión sobre una malla de desintonías de sonda"""
    chain = config.load_detector().chain
    points = config.option('points', DEFAULT_SETTINGS.scattering.prescan_points)
    _require(points >= 3, "--points debe ser >= 3", 'points')
    half_span = angular_to_hz(DEFAULT_SETTINGS.scattering.span_factor * (chain.kappas()[0] + chain.kappas()[-1]))
    lo = config.option('delta_min', -half_span)
    hi = config.option('delta_max', half_span)
    _require(lo < hi, "--delta-min debe ser menor que --delta-max", 'delta-min')

    deltas_hz = np.linspace(lo, hi, points)
    response = scattering.scan(chain, hz_to_angular(deltas_hz), with_metrics=False)
    columns = ['delta_hz', 's21_re', 's21_im', 'transmission']
    if response.memory_loss is not None:
        columns.append('memory_loss')
    rows = []
    for i, delta in enumerate(deltas_hz):
        s21 = response.s21[i]
        row = [delta, s21.real, s21.imag, abs(s21) ** 2]
        if response.memory_loss is not None:
            row.append(abs(response.memory_loss[i]) ** 2)
        rows.append(row)
    logger.info(f"S21 evaluado en {points} puntos; |S21(0)|² = {response.eta_4wm:.6f}")
    return Table(columns, rows)


def command_bandwidth(config: RunConfig) -> Result:
    chain = config.load_detector().chain
    method = BandwidthMethod(config.option('method', BandwidthMethod.NUMERIC_FWHM.value))
    kappa_d = scattering.bandwidth(chain, method, DEFAULT_SETTINGS.scattering)
    coop = scattering.cooperativity(chain)
    conversion = scattering.eta_4wm(coop)
    peak = float(scattering.transmission(chain, 0.0)[0])
    # Misma convención que el presupuesto: N=1 no tiene memorias
    if chain.n_stages == 2:
        memory = scattering.chain_memory_efficiency(chain)
    elif chain.n_stages > 2 and conversion > 0:
        memory = min(peak / conversion, 1.0)
    else:
        memory = 1.0
    return {
        'method': method.value,
        'n_stages': chain.n_stages,
        'c': coop,
        'eta_4wm': conversion,
        'eta_m': memory,
        'kappa_d': kappa_d,
        'kappa_d_hz': angular_to_hz(kappa_d),
        'cooperativity': coop,
        'eta_peak': peak,
    }


def command_budget(config: RunConfig) -> Result:
    """Presupuestos de eficiencia y cuentas oscuras y sensibilidad"""
    detector = config.load_detector()
    chain = detector.chain
    t = config.option('t', 1.0)
    _require(t > 0, "--t debe ser positivo", 't')

    efficiency, noise, kappa_d, method = _operating_point(detector)
    frequency = chain.buffer.frequency_hz
    report = metrics.sensitivity_report(noise.alpha_total, noise.alpha_err, efficiency.eta_total, frequency, t)

    validator = ChainValidator()
    validator.validate_all(chain, detector.cycle)

    result: Dict[str, Any] = {
        'bandwidth_method': method.value,
        'buffer_frequency_hz': frequency,
        'cooperativity': scattering.cooperativity(chain),
        'kappa_d': kappa_d,
        'kappa_d_hz': angular_to_hz(kappa_d),
        'n_bar': metrics.environment_occupation(detector.environment, frequency),
        't_cycle': detector.cycle.t_cycle,
        'alpha_err': noise.alpha_err,
        'validation': validator.get_validation_summary(),
    }
    result.update(efficiency.export_to_dict())
    result.update(noise.export_to_dict())
    result.update(report.export_to_dict())
    logger.info(f"η = {efficiency.eta_total:.4f}, α = {noise.alpha_total:.3f} 1/s")
    return result


def command_dynamics(config: RunConfig) -> Result:
    """Evolución temporal de una excitación a lo largo de la cadena"""
    cooperativity = config.option('cooperativity')
    if cooperativity is not None:
        chain = dynamics.regime_chain(cooperativity)
    else:
        chain = config.load_detector().chain
    t_max = config.option('t_max', 4e-6)
    points = config.option('points', 2000)
    _require(t_max > 0, "--t-max debe ser positivo", 't-max')
    _require(points >= 1, "--points debe ser >= 1", 'points')
    dt = config.option('dt', t_max / points)
    mode = config.option('initial_mode', 0)
    _require(0 <= mode <= chain.n_stages, f"--initial-mode debe estar en [0, {chain.n_stages}]", 'initial-mode')
    memory_loss = config.option('memory_loss', False)
    buffer_loss = config.option('buffer_loss', False)

    if config.option('model', 'master') == 'linear':
        initial = np.zeros(chain.n_stages + 1, dtype=complex)
        initial[mode] = 1.0
        trace = dynamics.evolve_linear_model(
            chain, initial, t_max, dt, memory_loss=memory_loss, buffer_loss=buffer_loss,
            settings=DEFAULT_SETTINGS.dynamics,
        )
        names = ['n_b'] + [('n_m' if chain.n_stages == 2 else f'n_m{k}') for k in range(1, chain.n_stages)] + ['n_w']
        rows = np.column_stack([trace.time, trace.occupancies])
        return Table(['t'] + names, rows.tolist())

    trace = dynamics.evolve_master_equation(
        chain,
        dynamics.SubspaceState.single_photon(chain, mode),
        t_max,
        dt,
        memory_loss=memory_loss,
        buffer_loss=buffer_loss,
        settings=DEFAULT_SETTINGS.dynamics,
    )
    columns = trace.column_names() + ['p_terminal', 'p_photon']
    rows = np.column_stack([trace.rows(), trace.terminal_probability(), trace.photon_probability()])
    return Table(columns, rows.tolist())


def _trace_seed(seed: int, index: int) -> int:
    """Semilla de la traza index-ésima de un barrido; la primera conserva --seed"""
    if index == 0:
        return seed
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint32)[0])


def command_simulate(config: RunConfig) -> Result:
    """
    Trazas de clics por ciclo sobre una lista de flujos

    El CSV lista (cycle, bitstring) de los ciclos con alguna bandera; con tres
    o más flujos, uno de ellos nulo, se estima además el benchmark de
    linealidad, que va en los metadatos JSON o en --benchmark-out.
    """
    detector = config.load_detector()
    fluxes = config.option('flux', [0.0])
    _require(len(fluxes) >= 1, "--flux necesita al menos un valor", 'flux')
    _require(all(f >= 0 for f in fluxes), "--flux no admite valores negativos", 'flux')
    duration = config.option('duration', 1.0)
    scheme = DecodingScheme(config.option('scheme', DecodingScheme.ALL_OR_NOTHING.value))
    benchmark_out = config.option('benchmark_out')
    _require(benchmark_out is None or len(fluxes) > 1, "--benchmark-out necesita un barrido de flujo", 'benchmark-out')
    workers = config.option('workers', 1)
    _require(workers >= 1, "--workers debe ser >= 1", 'workers')
    settings = MonteCarloSettings(workers=workers)

    sim_config = _simulation_config(detector)
    traces = [
        montecarlo.simulate(sim_config, flux, duration, seed=_trace_seed(config.seed, i), settings=settings)
        for i, flux in enumerate(fluxes)
    ]

    columns = ['cycle', 'bitstring', 'photon_flux']
    rows: List[List[Any]] = []
    summaries = []
    for trace in traces:
        decoded = montecarlo.decode(trace, scheme)
        cycles = trace.nonzero_cycles()
        rows.extend(
            [int(c), bits, trace.photon_flux] for c, bits in zip(cycles, trace.bitstrings(cycles))
        )
        summaries.append({
            'photon_flux': trace.photon_flux,
            'seed': trace.seed,
            'cycle_count': trace.cycle_count,
            'saturated': trace.saturated,
            'counts': decoded.counts,
            'count_rate': decoded.count_rate,
            'flagged_cycles': len(cycles),
        })
        logger.info(f"Flujo {trace.photon_flux:g} 1/s: {trace.cycle_count} ciclos, {len(cycles)} con bandera")

    benchmark = None
    if len(traces) > 1:
        benchmark = montecarlo.estimate_benchmark(traces, schemes=(scheme,)).export_to_dict()
        if benchmark_out is not None:
            write_output(render(benchmark, OutputFormat.JSON), Path(benchmark_out))

    meta = {
        'seed': config.seed,
        'scheme': scheme.value,
        'duration': duration,
        't_cycle': traces[0].t_cycle,
        'traces': summaries,
        'benchmark': benchmark,
    }
    return Table(columns, rows, meta)


# Columnas de entrada de cada familia de ajuste
FIT_COLUMNS = {
    FitFamily.STARK: ('delta_b_hz', 'd_omega_hz', 'd_gamma'),
    FitFamily.EXPONENTIAL: ('t', 'value'),
    FitFamily.TEMPERATURE: ('temperature', 'rate'),
    FitFamily.COFIT: ('amplitude', 'eta_q0', 'eta_q1', 'eta', 't1_q0', 't1_q1'),
}


def _read_data(path: Optional[str], columns: Sequence[str]) -> Dict[str, np.ndarray]:
    """Lee un CSV con cabecera y devuelve las columnas pedidas como arrays"""
    if path is None or not Path(path).is_file():
        raise ConfigurationError(f"No existe el archivo de datos: {path}", key='data')
    with open(path, newline='', encoding='utf-8') as handle:
        reader = csv.DictReader(handle)
        records = list(reader)
        header = reader.fieldnames or []
    data = {}
    for name in columns:
        if name not in header:
            raise ConfigurationError(f"Falta la columna {name} en {path}", key=f'data.{name}')
        try:
            data[name] = np.array([float(r[name]) for r in records])
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"Valor no numérico en la columna {name}", key=f'data.{name}') from exc
    return data


def _parse_guess(text: Optional[str], size: int) -> Optional[Tuple[float, ...]]:
    if text is None:
        return None
    try:
        values = tuple(float(v) for v in text.split(','))
    except ValueError as exc:
        raise ConfigurationError(f"--guess no numérico: {text}", key='guess') from exc
    _require(len(values) == size, f"--guess necesita {size} valores", 'guess')
    return values


def command_fit(config: RunConfig) -> Result:
    """Ajuste de una familia de calibración a un CSV de datos"""
    family = FitFamily(config.option('family'))
    data = _read_data(config.option('data'), FIT_COLUMNS[family])
    settings = FitSettings(
        restarts=config.option('restarts', DEFAULT_SETTINGS.fit.restarts),
        n_bootstrap=config.option('bootstrap', DEFAULT_SETTINGS.fit.n_bootstrap),
        seed=config.seed,
    )
    detector = config.load_detector() if config.has_detector else None

    if family == FitFamily.STARK:
        points = [
            calibration.StarkDataPoint(hz_to_angular(d), hz_to_angular(w), g)
            for d, w, g in zip(data['delta_b_hz'], data['d_omega_hz'], data['d_gamma'])
        ]
        guess = _parse_guess(config.option('guess'), 4)
        if guess is None:
            _require(detector is not None, "El ajuste stark necesita --guess o un detector", 'guess')
            chi = detector.chain.qubits[0].chi_left
            kappa_b = detector.chain.buffer.kappa_total
            peak = max(abs(p.complex_shift) for p in points)
            eps = math.sqrt(peak * abs((kappa_b + 1j * chi) ** 2) / (4.0 * abs(chi)))
            guess = (chi, kappa_b, eps, 0.0)
        report = calibration.fit_ac_stark(points, guess, settings=settings)

    elif family == FitFamily.EXPONENTIAL:
        report = calibration.fit_exponential_decay(
            data['t'], data['value'], _parse_guess(config.option('guess'), 3), settings=settings,
        )

    elif family == FitFamily.TEMPERATURE:
        frequencies = config.option('frequency')
        if not frequencies:
            _require(detector is not None, "El ajuste temperature necesita --frequency o un detector", 'frequency')
            frequencies = [q.frequency_hz for q in detector.chain.qubits]
        report = calibration.fit_temperature_model(
            data['temperature'], data['rate'], frequencies,
            _parse_guess(config.option('guess'), 2), settings=settings,
        )

    else:
        _require(detector is not None, "El co-ajuste necesita --config o --reference-fixtures", 'config')
        template = detector.chain
        curves = calibration.EfficiencyCurves(
            tuple(data['amplitude']), tuple(data['eta_q0']), tuple(data['eta_q1']), tuple(data['eta']),
        )
        fixed = calibration.CofitFixed(
            template=template,
            t_d=detector.cycle.t_d,
            eta_cycle=detector.cycle.eta_cycle,
            t1_q0=tuple(data['t1_q0']),
            t1_q1=tuple(data['t1_q1']),
        )
        guess = _parse_guess(config.option('guess'), 3)
        if guess is None:
            g = template.couplings()
            guess = (float(g[0].real), float(g[1].real), template.modes[1].kappa_total)
        report = calibration.efficiency_cofit(curves, fixed, guess, settings=settings)

    if config.output_format == OutputFormat.JSON:
        return report.to_dict()
    rows = [
        [name, unit, float(value), float(error)]
        for name, unit, value, error in zip(report.names, report.units, report.estimates, report.errors)
    ]
    return Table(['parameter', 'unit', 'estimate', 'error'], rows)


def command_sweep_temperature(config: RunConfig) -> Result:
    """Presupuesto de cuentas oscuras frente a la temperatura"""
    detector = config.load_detector()
    t_min = config.option('t_min', 0.02)
    t_max = config.option('t_max', 0.1)
    points = config.option('points', 21)
    _require(t_min >= 0, "--t-min debe ser >= 0", 't-min')
    _require(t_max > t_min, "--t-max debe superar --t-min", 't-max')
    _require(points >= 2, "--points debe ser >= 2", 'points')

    efficiency, _, kappa_d, _ = _operating_point(detector)
    frequency = detector.chain.buffer.frequency_hz
    rows = []
    for temperature in np.linspace(t_min, t_max, points):
        environment = Environment(temperature=float(temperature))
        noise = metrics.noise_budget(
            detector.chain.qubits,
            detector.cycle,
            efficiency.eta_total,
            kappa_d,
            environment,
            detector.alpha_pump,
            detector.alpha_ro,
            buffer_frequency=frequency,
            intrinsic_model=detector.intrinsic_model,
        )
        rows.append([
            float(temperature), metrics.thermal_occupation(float(temperature), frequency),
            noise.alpha_q, noise.alpha_pump, noise.alpha_ro, noise.alpha_th, noise.alpha_total,
        ])
    columns = ['temperature', 'n_bar', 'alpha_q', 'alpha_pump', 'alpha_ro', 'alpha_th', 'alpha_total']
    return Table(columns, rows)


def command_sweep_pump(config: RunConfig) -> Result:
    """Cooperatividad, ancho de banda y eficiencia frente a la amplitud de bombeo"""
    detector = config.load_detector()
    s_min = config.option('scale_min', 0.1)
    s_max = config.option('scale_max', 1.5)
    points = config.option('points', 15)
    _require(s_min > 0, "--scale-min debe ser positivo", 'scale-min')
    _require(s_max > s_min, "--scale-max debe superar --scale-min", 'scale-max')
    _require(points >= 2, "--points debe ser >= 2", 'points')

    n = detector.chain.n_stages
    rows = []
    for scale in np.linspace(s_min, s_max, points):
        chain = detector.chain.with_pump_scale(float(scale))
        efficiency, noise, kappa_d, _ = _operating_point(detector, chain=chain)
        couplings = [angular_to_hz(abs(g)) for g in chain.couplings()]
        rows.append(
            [float(scale)] + couplings + [
                scattering.cooperativity(chain), efficiency.eta_4wm, efficiency.eta_m,
                angular_to_hz(kappa_d), efficiency.eta_total, noise.alpha_total,
            ]
        )
    columns = (
        ['scale'] + [f'g{k}_hz' for k in range(n)]
        + ['cooperativity', 'eta_4wm', 'eta_m', 'kappa_d_hz', 'eta_total', 'alpha_total']
    )
    return Table(columns, rows)


def command_resonance_lines(config: RunConfig) -> Result:
    """Frecuencias de bombeo y rectas de resonancia de una cadena de dos etapas"""
    chain = config.load_detector().chain
    lines = scattering.pump_resonance_lines(chain)
    frequencies = [angular_to_hz(w) for w in scattering.pump_frequencies(chain)]
    rows = [
        [line.label, line.slope, angular_to_hz(line.intercept)] + list(line.detuning_coefficients)
        for line in lines
    ]
    columns = ['label', 'slope', 'intercept_hz', 'coef_p0', 'coef_p1']
    if config.output_format == OutputFormat.JSON:
        return {
            'pump_frequencies_hz': frequencies,
            'lines': [dict(zip(columns, row)) for row in rows],
        }
    return Table(columns, rows)


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig], Result]] = {
    's21': command_s21,
    'bandwidth': command_bandwidth,
    'budget': command_budget,
    'dynamics': command_dynamics,
    'simulate': command_simulate,
    'fit': command_fit,
    'sweep-temperature': command_sweep_temperature,
    'sweep-pump': command_sweep_pump,
    'resonance-lines': command_resonance_lines,
}


# ----------------------------------------------------------------------
# Serialización
# ----------------------------------------------------------------------
def _to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def _cell(value: Any) -> str:
    value = _to_jsonable(value)
    if isinstance(value, bool):
        return '1' if value else '0'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _flatten(data: Dict[str, Any], prefix: str = '') -> List[Tuple[str, Any]]:
    items = []
    for key in sorted(data):
        name = f"{prefix}{key}"
        value = data[key]
        if isinstance(value, dict):
            items.extend(_flatten(value, f"{name}."))
        elif isinstance(value, (list, tuple)):
            items.extend((f"{name}.{i}", v) for i, v in enumerate(value))
        else:
            items.append((name, value))
    return items


def render(result: Result, output_format: OutputFormat) -> str:
    """
    Serializa un resultado

    CSV sigue RFC 4180 (cabecera, CRLF, comillas mínimas); JSON ordena las
    claves; el texto alinea pares clave-valor.
    """
    if output_format == OutputFormat.JSON:
        if isinstance(result, Table):
            payload = {'columns': result.columns, 'rows': result.rows}
            if result.meta:
                payload['meta'] = result.meta
        else:
            payload = result
        return json.dumps(_to_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"

    if isinstance(result, Table):
        if output_format == OutputFormat.TEXT:
            raise ConfigurationError("El formato text solo admite resultados clave-valor", key='format')
        header, rows = result.columns, result.rows
    else:
        header, rows = ['field', 'value'], _flatten(result)

    if output_format == OutputFormat.TEXT:
        width = max(len(name) for name, _ in rows) if rows else 0
        return "".join(f"{name:<{width}}  {_cell(value)}\n" for name, value in rows)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\r\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def write_output(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, 'w', newline='', encoding='utf-8') as handle:
        handle.write(text)
    logger.info(f"Resultados escritos en {out}")


# ----------------------------------------------------------------------
# Argumentos
# ----------------------------------------------------------------------
def _quantity(default_unit: str) -> Callable[[str], float]:
    """Tipo argparse que admite un número con unidad opcional ('13 us', '2 MHz')"""
    def parse(text: str) -> float:
        return unit_converter.parse_quantity(text, default_unit)
    parse.__name__ = f"cantidad en {default_unit}"
    return parse


def _csv_floats(text: str) -> List[float]:
    return [float(v) for v in text.split(',') if v.strip()]


def _quantities(default_unit: str) -> Callable[[str], List[float]]:
    """Tipo argparse para una lista de cantidades separadas por comas ('0,500,1000')"""
    single = _quantity(default_unit)

    def parse(text: str) -> List[float]:
        return [single(v) for v in text.split(',') if v.strip()]
    parse.__name__ = f"lista de cantidades en {default_unit}"
    return parse


def build_parser() -> argparse.ArgumentParser:
    """Parser con un subparser por subcomando y opciones comunes compartidas"""
    common = _ArgumentParser(add_help=False)
    source = common.add_argument_group('detector')
    source.add_argument('--config', type=str, help="Archivo INI de descripción del detector")
    source.add_argument('--reference-fixtures', '--paper-fixtures', dest='reference_fixtures', action='store_true',
                        help="Usa el punto de operación de referencia empaquetado")
    output = common.add_argument_group('salida')
    output.add_argument('--seed', type=int, default=0, help="Semilla de los generadores (por defecto 0)")
    output.add_argument('--out', type=str, help="Archivo de salida (por defecto stdout)")
    output.add_argument('--format', choices=[f.value for f in OutputFormat], help="Formato de salida")
    output.add_argument('--log-dir', type=str, help="Directorio para archivos de log")
    output.add_argument('-v', '--verbose', action='store_true', help="Mensajes informativos en stderr")

    parser = _ArgumentParser(prog=PROG, description="Toolkit de modelado de detectores de fotones de microondas en cascada")
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')

    p = sub.add_parser('s21', parents=[common], help="Transmisión |S21(δ)|² de la cadena")
    p.add_argument('--delta-min', type=_quantity('Hz'), help="Desintonía mínima [Hz]")
    p.add_argument('--delta-max', type=_quantity('Hz'), help="Desintonía máxima [Hz]")
    p.add_argument('--points', type=int, help="Puntos de la malla (por defecto 2001)")

    p = sub.add_parser('bandwidth', parents=[common], help="Ancho de banda κ_d")
    p.add_argument('--method', choices=[m.value for m in BandwidthMethod], default=BandwidthMethod.NUMERIC_FWHM.value)

    p = sub.add_parser('budget', parents=[common], help="Presupuestos de eficiencia, ruido y sensibilidad")
    p.add_argument('--t', type=_quantity('s'), help="Tiempo de integración del NEP [s] (por defecto 1 s)")

    p = sub.add_parser('dynamics', parents=[common], help="Evolución temporal de una excitación")
    p.add_argument('--model', choices=['master', 'linear'], default='master')
    p.add_argument('--t-max', type=_quantity('s'), help="Tiempo final [s] (por defecto 4 us)")
    p.add_argument('--dt', type=_quantity('s'), help="Paso de salida [s] (por defecto t_max/points)")
    p.add_argument('--points', type=int, help="Pasos de la malla cuando no se da --dt (por defecto 2000)")
    p.add_argument('--initial-mode', type=int, help="Modo con el fotón inicial (por defecto el buffer)")
    p.add_argument('--cooperativity', type=float, help="Usa la cadena de regímenes con esta cooperatividad")
    p.add_argument('--memory-loss', action='store_true', help="Habilita las pérdidas de las memorias")
    p.add_argument('--buffer-loss', action='store_true', help="Habilita las pérdidas del buffer")

    p = sub.add_parser('simulate', parents=[common], help="Simulación Monte Carlo por ciclos")
    p.add_argument('--flux', type=_quantities('1/s'),
                   help="Flujo o lista de flujos separados por comas [1/s] (por defecto 0)")
    p.add_argument('--scheme', choices=[s.value for s in DecodingScheme], help="Decodificador (por defecto all_or_nothing)")
    p.add_argument('--benchmark-out', type=str, help="Archivo JSON para el benchmark de un barrido de flujo")
    p.add_argument('--duration', type=_quantity('s'), help="Duración de la traza [s] (por defecto 1 s)")
    p.add_argument('--workers', type=int, help="Hilos de simulación (por defecto 1)")

    p = sub.add_parser('fit', parents=[common], help="Ajuste de calibración a un CSV de datos")
    p.add_argument('--family', choices=[f.value for f in FitFamily], required=True)
    p.add_argument('--data', type=str, required=True, help="CSV con cabecera")
    p.add_argument('--guess', type=str, help="Estimación inicial separada por comas (unidades internas)")
    p.add_argument('--frequency', type=_csv_floats, help="Frecuencias [Hz] del modelo de temperatura")
    p.add_argument('--bootstrap', type=int, help="Remuestreos bootstrap (por defecto 200)")
    p.add_argument('--restarts', type=int, help="Reinicios de Nelder-Mead (por defecto 3)")

    p = sub.add_parser('sweep-temperature', parents=[common], help="Cuentas oscuras frente a la temperatura")
    p.add_argument('--t-min', type=_quantity('K'), help="Temperatura mínima [K] (por defecto 20 mK)")
    p.add_argument('--t-max', type=_quantity('K'), help="Temperatura máxima [K] (por defecto 100 mK)")
    p.add_argument('--points', type=int, help="Número de temperaturas (por defecto 21)")

    p = sub.add_parser('sweep-pump', parents=[common], help="Barrido de la amplitud relativa de bombeo")
    p.add_argument('--scale-min', type=float, help="Escala mínima (por defecto 0.1)")
    p.add_argument('--scale-max', type=float, help="Escala máxima (por defecto 1.5)")
    p.add_argument('--points', type=int, help="Número de escalas (por defecto 15)")

    sub.add_parser('resonance-lines', parents=[common], help="Rectas de resonancia de los bombeos (N=2)")
    return parser


# ----------------------------------------------------------------------
# Punto de entrada
# ----------------------------------------------------------------------
def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Ejecuta la línea de comandos

    Args:
        argv: Argumentos sin el nombre del programa

    Returns:
        Código de salida (0, 1, 2 o 64)
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    if argv and argv[0] in ('-h', '--help'):
        sys.stdout.write(parser.format_help())
        return EXIT_OK
    if not argv or argv[0] not in COMMANDS:
        given = argv[0] if argv else ''
        sys.stderr.write(parser.format_usage())
        sys.stderr.write(f"{PROG}: subcomando desconocido '{given}'; opciones: {', '.join(COMMANDS)}\n")
        return EXIT_USAGE

    try:
        namespace = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(exc.usage)
        sys.stderr.write(f"Error de configuración [{exc.key}]: {exc}\n")
        return EXIT_CONFIGURATION
    except SystemExit as exc:  # -h dentro de un subcomando
        return int(exc.code or 0)

    setup_professional_logging(
        log_dir=namespace.log_dir,
        app_name=PROG,
        console_level=logging.INFO if namespace.verbose else logging.WARNING,
    )

    try:
        config = RunConfig.from_namespace(namespace)
        logger.info(f"Ejecutando {config.command}")
        result = COMMAND_HANDLERS[config.command](config)
        write_output(render(result, config.output_format), config.out)
    except ConfigurationError as exc:
        logger.debug("Detalle del error de configuración", exc_info=True)
        sys.stderr.write(f"Error de configuración [{exc.key}]: {exc}\n")
        return EXIT_CONFIGURATION
    except ComputationError as exc:
        logger.debug("Detalle del error de cálculo", exc_info=True)
        sys.stderr.write(json.dumps(_to_jsonable(exc.to_dict()), sort_keys=True) + "\n")
        return EXIT_COMPUTATION
    except ValueError as exc:
        sys.stderr.write(f"Error de configuración [None]: {exc}\n")
        return EXIT_CONFIGURATION

    return EXIT_OK


def main():
    """Función principal de la aplicación"""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
