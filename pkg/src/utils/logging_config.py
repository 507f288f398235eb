"""
Sistema de logging profesional para el toolkit cSMPD

La consola usa stderr: stdout y --out transportan solo datos.
"""
import logging
import logging.handlers
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, TextIO


class ColoredFormatter(logging.Formatter):
    """Formatter con colores ANSI; sin color cuando la salida no es una terminal"""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
    }
    RESET = '\033[0m'

    def __init__(self, fmt: str, use_color: bool = True):
        super().__init__(fmt)
        self.use_color = use_color

    def format(self, record):
        color = self.COLORS.get(record.levelname) if self.use_color else None
        if color is None:
            return super().format(record)
        original = record.levelname
        record.levelname = f"{color}{original}{self.RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


# Nivel de cada logger del toolkit; el cálculo numérico registra en DEBUG
MODULE_LOGGERS = {
    'csmpd.scattering': logging.DEBUG,
    'csmpd.metrics': logging.DEBUG,
    'csmpd.dynamics': logging.DEBUG,
    'csmpd.montecarlo': logging.DEBUG,
    'csmpd.calibration': logging.DEBUG,
    'csmpd.cli': logging.INFO,
    'csmpd.validation': logging.WARNING,
    'csmpd.config': logging.INFO,
    'csmpd.units': logging.INFO,
}

FILE_FORMAT = '%(asctime)s | %(name)-18s | %(levelname)-8s | %(funcName)s:%(lineno)d | %(message)s'
ERROR_LOG_BYTES = 5 * 1024 * 1024
ERROR_LOG_BACKUPS = 5


def _file_handlers(log_dir: Path, app_name: str) -> List[logging.Handler]:
    """Log de sesión con marca temporal y log rotativo de errores"""
    log_dir.mkdir(parents=True, exist_ok=True)
    formatter = logging.Formatter(FILE_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')

    session = logging.FileHandler(
        log_dir / f"{app_name}_{datetime.now():%Y%m%d_%H%M%S}.log", encoding='utf-8'
    )
    session.setLevel(logging.DEBUG)

    errors = logging.handlers.RotatingFileHandler(
        log_dir / f"{app_name}_errors.log",
        maxBytes=ERROR_LOG_BYTES,
        backupCount=ERROR_LOG_BACKUPS,
        encoding='utf-8',
    )
    errors.setLevel(logging.ERROR)

    for handler in (session, errors):
        handler.setFormatter(formatter)
    return [session, errors]


def setup_professional_logging(
    log_dir: Optional[str] = "logs",
    app_name: str = "csmpd",
    console_level: int = logging.INFO,
    stream: Optional[TextIO] = None,
) -> Dict[str, object]:
    """
    Configura el logger raíz del toolkit

    Args:
        log_dir: Directorio para archivos de log; None desactiva los archivos
        app_name: Prefijo de los archivos
        console_level: Nivel del handler de consola
        stream: Flujo de consola (por defecto sys.stderr)

    Returns:
        Diccionario con rutas de archivos y loggers configurados
    """
    stream = stream if stream is not None else sys.stderr
    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()

    console = logging.StreamHandler(stream)
    console.setLevel(console_level)
    use_color = getattr(stream, 'isatty', lambda: False)()
    console.setFormatter(ColoredFormatter('%(levelname)s: %(message)s', use_color=use_color))
    root_logger.addHandler(console)

    files: List[logging.Handler] = []
    if log_dir is not None:
        files = _file_handlers(Path(log_dir), app_name)
        for handler in files:
            root_logger.addHandler(handler)

    loggers = {}
    for name, level in MODULE_LOGGERS.items():
        loggers[name] = logging.getLogger(name)
        loggers[name].setLevel(level)

    main_log_file = files[0].baseFilename if files else None
    error_log_file = files[1].baseFilename if files else None
    root_logger.debug(f"Logging de {app_name} inicializado; archivo de sesión: {main_log_file}")

    return {
        'main_log_file': main_log_file,
        'error_log_file': error_log_file,
        'loggers': loggers,
    }


class AnalysisProgressLogger:
    """Registro de avance de integraciones, simulaciones y ajustes largos"""

    def __init__(self, name: str = "csmpd.analysis"):
        self.logger = logging.getLogger(name)
        self.label = ""
        self.total_steps: Optional[int] = None
        self.step_count = 0
        self._started: Optional[float] = None

    @property
    def elapsed(self) -> float:
        return 0.0 if self._started is None else time.perf_counter() - self._started

    def start_analysis(self, analysis_type: str, total_steps: Optional[int] = None):
        self.label = analysis_type
        self.total_steps = total_steps
        self.step_count = 0
        self._started = time.perf_counter()
        self.logger.info(f"INICIANDO {analysis_type.upper()}")
        if total_steps:
            self.logger.debug(f"{analysis_type}: {total_steps} pasos previstos")

    def log_step(self, step_description: str, detail: Optional[str] = None):
        self.step_count += 1
        suffix = f" ({detail})" if detail else ""
        self.logger.debug(f"[{self.elapsed:.2f}s] paso {self.step_count}: {step_description}{suffix}")

    def log_error(self, error_description: str, exception: Optional[Exception] = None):
        self.logger.error(f"{self.label}: {error_description}")
        if exception is not None:
            self.logger.debug(f"{self.label}: {exception}", exc_info=exception)

    def finish_analysis(self, success: bool = True, summary: Optional[str] = None):
        status = "completado" if success else "terminado con errores"
        message = f"{self.label}: {status} en {self.elapsed:.2f}s tras {self.step_count} pasos"
        if summary:
            message += f"; {summary}"
        if success:
            self.logger.info(message)
        else:
            self.logger.error(message)
