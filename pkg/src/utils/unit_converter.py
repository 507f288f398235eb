"""
Sistema profesional de conversión de unidades para el modelado de detectores

Las frecuencias de usuario son Hz y las tasas internas rad/s; la conversión
2π se hace en un único lugar (ingesta de configuración).
"""
from dataclasses import dataclass
from typing import Dict, Tuple
from enum import Enum
import logging
import math
import re


class UnitCategory(Enum):
    """Categorías de unidades"""
    FREQUENCY = "frequency"
    RATE = "rate"
    TIME = "time"
    POWER = "power"
    TEMPERATURE = "temperature"


@dataclass
class UnitDefinition:
    """Definición de unidad con factor de conversión"""
    name: str
    symbol: str
    category: UnitCategory
    to_si_factor: float  # Factor para convertir a unidad SI base
    description: str


_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*((?:1/)?[A-Za-zµ]+)?\s*$")


class ProfessionalUnitConverter:
    """Convertidor de unidades para frecuencias, tasas, tiempos y potencias"""

    def __init__(self):
        self.logger = logging.getLogger('csmpd.units')
        self._setup_unit_definitions()

    def _setup_unit_definitions(self):
        """Configura definiciones de unidades"""
        self.units = {
            # FRECUENCIA (base: Hz)
            'Hz': UnitDefinition('hercio', 'Hz', UnitCategory.FREQUENCY, 1.0, 'Hercio (SI base)'),
            'kHz': UnitDefinition('kilohercio', 'kHz', UnitCategory.FREQUENCY, 1e3, 'Kilohercio'),
            'MHz': UnitDefinition('megahercio', 'MHz', UnitCategory.FREQUENCY, 1e6, 'Megahercio'),
            'GHz': UnitDefinition('gigahercio', 'GHz', UnitCategory.FREQUENCY, 1e9, 'Gigahercio'),

            # TASA (base: 1/s)
            '1/s': UnitDefinition('por segundo', '1/s', UnitCategory.RATE, 1.0, 'Tasa (SI base)'),
            '1/ms': UnitDefinition('por milisegundo', '1/ms', UnitCategory.RATE, 1e3, 'Tasa'),
            '1/us': UnitDefinition('por microsegundo', '1/µs', UnitCategory.RATE, 1e6, 'Tasa'),

            # TIEMPO (base: s)
            's': UnitDefinition('segundo', 's', UnitCategory.TIME, 1.0, 'Segundo (SI base)'),
            'ms': UnitDefinition('milisegundo', 'ms', UnitCategory.TIME, 1e-3, 'Milisegundo'),
            'us': UnitDefinition('microsegundo', 'µs', UnitCategory.TIME, 1e-6, 'Microsegundo'),
            'ns': UnitDefinition('nanosegundo', 'ns', UnitCategory.TIME, 1e-9, 'Nanosegundo'),

            # POTENCIA (base: W)
            'W': UnitDefinition('vatio', 'W', UnitCategory.POWER, 1.0, 'Vatio (SI base)'),
            'aW': UnitDefinition('attovatio', 'aW', UnitCategory.POWER, 1e-18, 'Attovatio'),
            'zW': UnitDefinition('zeptovatio', 'zW', UnitCategory.POWER, 1e-21, 'Zeptovatio'),

            # TEMPERATURA (base: K)
            'K': UnitDefinition('kelvin', 'K', UnitCategory.TEMPERATURE, 1.0, 'Kelvin (SI base)'),
            'mK': UnitDefinition('milikelvin', 'mK', UnitCategory.TEMPERATURE, 1e-3, 'Milikelvin'),
        }
        self.aliases = {'µs': 'us', '1/µs': '1/us'}

    def _resolve(self, unit: str) -> str:
        unit = self.aliases.get(unit, unit)
        if unit not in self.units:
            raise ValueError(f"Unidad '{unit}' no reconocida")
        return unit

    def convert(self, value: float, from_unit: str, to_unit: str) -> float:
        """
        Convierte valor entre unidades

        Args:
            value: Valor a convertir
            from_unit: Unidad origen
            to_unit: Unidad destino

        Returns:
            Valor convertido

        Raises:
            ValueError: Si las unidades no son compatibles
        """
        from_unit = self._resolve(from_unit)
        to_unit = self._resolve(to_unit)
        if from_unit == to_unit:
            return value

        from_def = self.units[from_unit]
        to_def = self.units[to_unit]
        if from_def.category != to_def.category:
            raise ValueError(
                f"Unidades incompatibles: {from_def.category.value} -> {to_def.category.value}"
            )

        # Convertir a SI base, luego a unidad destino
        result = value * from_def.to_si_factor / to_def.to_si_factor
        self.logger.debug(f"Conversión: {value} {from_unit} = {result:.6g} {to_unit}")
        return result

    def parse_quantity(self, text: str, default_unit: str) -> float:
        """
        Interpreta '8.798 GHz' o '8.798e9' y devuelve el valor en la unidad SI de default_unit

        Raises:
            ValueError: Si el texto no es un número con unidad opcional compatible
        """
        value, unit = split_quantity(text)
        unit = self._resolve(unit or default_unit)
        expected = self.units[self._resolve(default_unit)].category
        if self.units[unit].category != expected:
            raise ValueError(f"Unidad '{unit}' incompatible con {expected.value}")
        return value * self.units[unit].to_si_factor

    def base_unit(self, category: UnitCategory) -> str:
        for key, unit in self.units.items():
            if unit.category == category and unit.to_si_factor == 1.0:
                return key
        raise ValueError(f"Categoría sin unidad base: {category.value}")

    def list_units_by_category(self, category: UnitCategory) -> Dict[str, UnitDefinition]:
        """Lista todas las unidades de una categoría"""
        return {
            unit_key: unit_def
            for unit_key, unit_def in self.units.items()
            if unit_def.category == category
        }

    def format_value_with_units(self, value: float, unit: str, precision: int = 3) -> str:
        """Formatea valor con unidades para presentación"""
        unit_def = self.units[self._resolve(unit)]
        if abs(value) >= 10**6 or (abs(value) < 10**(-2) and abs(value) > 0):
            formatted_value = f"{value:.{precision}e}"
        else:
            formatted_value = f"{value:.{precision}f}"
        return f"{formatted_value} {unit_def.symbol}"


def hz_to_angular(frequency_hz: float) -> float:
    """f [Hz] → ω [rad/s]"""
    return 2.0 * math.pi * frequency_hz


def angular_to_hz(omega: float) -> float:
    """ω [rad/s] → f [Hz]"""
    return omega / (2.0 * math.pi)


def split_quantity(text: str) -> Tuple[float, str]:
    """Separa número y unidad de un texto como '13 us'"""
    match = _QUANTITY.match(str(text))
    if match is None:
        raise ValueError(f"Cantidad no válida: '{text}'")
    return float(match.group(1)), match.group(2) or ""


# Instancia global del convertidor
unit_converter = ProfessionalUnitConverter()
