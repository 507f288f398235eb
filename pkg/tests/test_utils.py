"""
Tests de utilidades: unidades, validación de la cadena y logging
"""
import io
import logging
import math
from pathlib import Path

import pytest

from src.core.errors import ConfigurationError
from src.utils.logging_config import AnalysisProgressLogger, ColoredFormatter, setup_professional_logging
from src.utils.unit_converter import (
    UnitCategory, angular_to_hz, hz_to_angular, split_quantity, unit_converter,
)
from src.utils.validators import ChainValidator, OperatingLimits, ValidationSeverity

from conftest import make_chain


# ----------------------------------------------------------------------
# Unidades
# ----------------------------------------------------------------------
@pytest.mark.parametrize("text, unit, expected", [
    ("8.798 GHz", "Hz", 8.798e9),
    ("-130 kHz", "Hz", -1.3e5),
    ("13 us", "s", 13e-6),
    ("128 ns", "s", 128e-9),
    ("45 mK", "K", 0.045),
    ("5.8e6", "1/s", 5.8e6),
    ("2 1/us", "1/s", 2e6),
])
def test_parse_quantity(text, unit, expected):
    assert unit_converter.parse_quantity(text, unit) == pytest.approx(expected)


def test_parse_quantity_rejects_bad_input():
    with pytest.raises(ValueError):
        unit_converter.parse_quantity("13 GHz", "s")
    with pytest.raises(ValueError):
        unit_converter.parse_quantity("13 parsecs", "s")
    with pytest.raises(ValueError):
        split_quantity("trece")


def test_convert_and_format():
    assert unit_converter.convert(1.5, 'us', 'ns') == pytest.approx(1500.0)
    assert unit_converter.convert(3.4e-19, 'W', 'aW') == pytest.approx(0.34)
    with pytest.raises(ValueError):
        unit_converter.convert(1.0, 'GHz', 's')
    assert unit_converter.format_value_with_units(0.84, 'Hz', precision=2) == "0.84 Hz"
    assert unit_converter.format_value_with_units(13e-6, 'us') == "1.300e-05 µs"
    assert unit_converter.base_unit(UnitCategory.TEMPERATURE) == 'K'
    assert set(unit_converter.list_units_by_category(UnitCategory.POWER)) == {'W', 'aW', 'zW'}


def test_angular_conversion_round_trip():
    assert hz_to_angular(1.0) == pytest.approx(2 * math.pi)
    assert angular_to_hz(hz_to_angular(8.798e9)) == pytest.approx(8.798e9, rel=1e-15)


# ----------------------------------------------------------------------
# Validación
# ----------------------------------------------------------------------
def test_reference_operating_point_validates_with_warning(reference_chain, reference_cycle):
    validator = ChainValidator()
    assert not validator.validate_all(reference_chain, reference_cycle)
    summary = validator.get_validation_summary()
    assert summary['errors'] == 0
    assert summary['warnings'] >= 1
    assert summary['is_valid']
    flagged = [r for r in validator.results if r.severity == ValidationSeverity.WARNING]
    assert any(r.parameter == 'qubit:1.t1' for r in flagged)
    validator.raise_for_errors()


def test_zero_downstream_coupling_is_an_error():
    chain = make_chain([1e6, 0.0, 1e6], [-3e5, 0.0])
    validator = ChainValidator()
    validator.validate_all(chain)
    assert validator.get_validation_summary()['errors'] == 1
    with pytest.raises(ConfigurationError) as info:
        validator.raise_for_errors()
    assert info.value.key == 'cooperativity'


def test_strong_pump_warns():
    chain = make_chain([1e6, 1e6], [-1.2e6])
    validator = ChainValidator(OperatingLimits(max_dispersive_ratio=0.05))
    assert not validator.validate_couplings(chain)
    assert any(r.parameter == 'pump:0' for r in validator.results)


# ----------------------------------------------------------------------
# Logging
# ----------------------------------------------------------------------
def test_logging_without_files_writes_to_stderr(capsys):
    info = setup_professional_logging(log_dir=None)
    assert info['main_log_file'] is None
    assert 'csmpd.scattering' in info['loggers']
    logging.getLogger('csmpd.cli').warning("aviso de prueba")
    captured = capsys.readouterr()
    assert captured.out == ""


def test_logging_creates_files(tmp_path):
    info = setup_professional_logging(log_dir=str(tmp_path / "logs"), console_level=logging.ERROR)
    progress = AnalysisProgressLogger('csmpd.dynamics')
    progress.start_analysis("prueba", total_steps=1)
    progress.log_step("paso", "detalle")
    progress.finish_analysis(success=True, summary="ok")
    for handler in logging.getLogger().handlers:
        handler.flush()
    main_log = Path(info['main_log_file'])
    assert main_log.exists()
    assert "PRUEBA" in main_log.read_text(encoding='utf-8')
    assert Path(info['error_log_file']).parent == tmp_path / "logs"
    for handler in list(logging.getLogger().handlers):
        handler.close()
    logging.getLogger().handlers.clear()


def test_console_has_no_color_outside_a_terminal():
    stream = io.StringIO()
    setup_professional_logging(log_dir=None, stream=stream)
    logging.getLogger('csmpd.cli').warning("aviso de prueba")
    assert stream.getvalue() == "WARNING: aviso de prueba\n"

    record = logging.LogRecord('csmpd.cli', logging.ERROR, __file__, 1, "fallo", None, None)
    colored = ColoredFormatter('%(levelname)s: %(message)s').format(record)
    assert colored == f"{ColoredFormatter.COLORS['ERROR']}ERROR{ColoredFormatter.RESET}: fallo"
    assert record.levelname == 'ERROR'
    logging.getLogger().handlers.clear()
