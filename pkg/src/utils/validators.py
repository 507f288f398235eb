"""
Sistema de validación profesional para cadenas de detección en cascada

Las comprobaciones no modifican la configuración: registran avisos sobre
puntos de operación fuera del régimen en que los modelos son fiables y
reúnen un resumen que la línea de comandos adjunta a sus salidas.
"""
from typing import Union, Optional, List
from dataclasses import dataclass
from enum import Enum
import logging
import math
import os
import sys

# Manejo de imports para ejecución independiente
try:
    from ..core.errors import ConfigurationError, DegenerateCouplingError
    from ..core.model import ChainSpec, CycleSpec
    from ..core.scattering import cooperativity
except ImportError:
    # Si los imports relativos fallan, intentar imports absolutos
    sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
    from core.errors import ConfigurationError, DegenerateCouplingError
    from core.model import ChainSpec, CycleSpec
    from core.scattering import cooperativity


class ValidationSeverity(Enum):
    """Severidad de validaciones"""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


@dataclass
class ValidationResult:
    """Resultado de validación individual"""
    is_valid: bool
    severity: ValidationSeverity
    message: str
    parameter: str
    value: Union[float, str]
    recommendation: Optional[str] = None


@dataclass
class OperatingLimits:
    """Umbrales del régimen de validez de los modelos"""
    max_td_over_t1: float = 0.5  # linealización de α_q
    max_dispersive_ratio: float = 0.1  # |g4| frente a |χ| de los modos vecinos
    cooperativity_window: float = 0.5  # |C − 1| aceptable antes de avisar
    max_pump_photons: float = 0.25  # |ξ|² respecto a la validez del desarrollo


class ChainValidator:
    """Validador profesional para puntos de operación de la cadena"""

    def __init__(self, limits: Optional[OperatingLimits] = None):
        self.limits = limits or OperatingLimits()
        self.logger = logging.getLogger('csmpd.validation')
        self.results: List[ValidationResult] = []

    def reset_results(self):
        """Reinicia resultados de validación"""
        self.results.clear()

    def add_result(self, result: ValidationResult):
        """Agrega resultado de validación"""
        self.results.append(result)

        # Log según severidad
        if result.severity == ValidationSeverity.CRITICAL:
            self.logger.critical(f"{result.parameter}: {result.message}")
        elif result.severity == ValidationSeverity.ERROR:
            self.logger.error(f"{result.parameter}: {result.message}")
        elif result.severity == ValidationSeverity.WARNING:
            self.logger.warning(f"{result.parameter}: {result.message}")
        else:
            self.logger.info(f"{result.parameter}: {result.message}")

    def validate_timing(self, chain: ChainSpec, cycle: CycleSpec, under_pump: bool = True) -> bool:
        """
        Comprueba T_d frente a T1 de cada qubit

        Args:
            chain: Cadena con los qubits
            cycle: Temporización del ciclo
            under_pump: Usa T1 bajo bombeo

        Returns:
            True si todos los cocientes están en el régimen lineal
        """
        valid = True
        for k, qubit in enumerate(chain.qubits):
            t1 = qubit.t1_pumped if under_pump else qubit.t1
            ratio = cycle.t_d / t1
            if ratio > self.limits.max_td_over_t1:
                valid = False
                self.add_result(ValidationResult(
                    is_valid=False,
                    severity=ValidationSeverity.WARNING,
                    message=f"T_d/T1 = {ratio:.2f} supera {self.limits.max_td_over_t1}: α_q lineal degradado",
                    parameter=f"qubit:{k}.t1",
                    value=t1,
                    recommendation="Usar la forma exacta de α_q o reducir T_d",
                ))
            else:
                self.add_result(ValidationResult(
                    is_valid=True,
                    severity=ValidationSeverity.INFO,
                    message=f"T_d/T1 = {ratio:.2f}",
                    parameter=f"qubit:{k}.t1",
                    value=t1,
                ))
        return valid

    def validate_couplings(self, chain: ChainSpec) -> bool:
        """Comprueba que |g4| sea pequeño frente a los desplazamientos dispersivos"""
        valid = True
        for k, (qubit, pump, g) in enumerate(zip(chain.qubits, chain.pumps, chain.couplings())):
            chi_min = min(abs(qubit.chi_left), abs(qubit.chi_right))
            if abs(g) > self.limits.max_dispersive_ratio * chi_min:
                valid = False
                self.add_result(ValidationResult(
                    is_valid=False,
                    severity=ValidationSeverity.WARNING,
                    message=f"|g4|/2π = {abs(g) / (2 * math.pi):.3g} Hz no es pequeño frente a χ",
                    parameter=f"pump:{k}",
                    value=abs(g),
                    recommendation="Reducir la amplitud de bombeo",
                ))
            if abs(pump.xi) ** 2 > self.limits.max_pump_photons:
                valid = False
                self.add_result(ValidationResult(
                    is_valid=False,
                    severity=ValidationSeverity.WARNING,
                    message=f"|ξ|² = {abs(pump.xi) ** 2:.3g} fuera del régimen perturbativo",
                    parameter=f"pump:{k}.xi",
                    value=abs(pump.xi),
                ))
        return valid

    def validate_cooperativity(self, chain: ChainSpec) -> bool:
        """Avisa si la cooperatividad se aleja del acuerdo de impedancias C = 1"""
        try:
            c = cooperativity(chain)
        except DegenerateCouplingError as exc:
            self.add_result(ValidationResult(
                is_valid=False,
                severity=ValidationSeverity.ERROR,
                message=str(exc),
                parameter="cooperativity",
                value="undefined",
            ))
            return False
        ok = abs(c - 1.0) <= self.limits.cooperativity_window
        self.add_result(ValidationResult(
            is_valid=ok,
            severity=ValidationSeverity.INFO if ok else ValidationSeverity.WARNING,
            message=f"C = {c:.3f}",
            parameter="cooperativity",
            value=c,
            recommendation=None if ok else "Ajustar el cociente de amplitudes de bombeo",
        ))
        return ok

    def validate_memory(self, chain: ChainSpec) -> bool:
        """γ_mw debe superar κ_m para que la memoria no domine las pérdidas"""
        if chain.n_stages < 2:
            return True
        kappa_m = chain.modes[1].kappa_total
        gamma_mw = 4.0 * abs(chain.couplings()[1]) ** 2 / chain.modes[2].kappa_total
        ok = gamma_mw > kappa_m
        self.add_result(ValidationResult(
            is_valid=ok,
            severity=ValidationSeverity.INFO if ok else ValidationSeverity.WARNING,
            message=f"γ_mw = {gamma_mw:.3g} 1/s frente a κ_m = {kappa_m:.3g} 1/s",
            parameter="mode:1.kappa_int",
            value=kappa_m,
        ))
        return ok

    def validate_all(self, chain: ChainSpec, cycle: Optional[CycleSpec] = None) -> bool:
        """Ejecuta todas las comprobaciones y devuelve si no hubo avisos"""
        self.reset_results()
        self.logger.info("Validando punto de operación de la cadena...")
        checks = [
            self.validate_couplings(chain),
            self.validate_cooperativity(chain),
            self.validate_memory(chain),
        ]
        if cycle is not None:
            checks.append(self.validate_timing(chain, cycle))
        return all(checks)

    def get_validation_summary(self) -> dict:
        """
        Genera resumen de validación

        Returns:
            Diccionario con resumen de validación
        """
        return {
            'total_checks': len(self.results),
            'critical': len([r for r in self.results if r.severity == ValidationSeverity.CRITICAL]),
            'errors': len([r for r in self.results if r.severity == ValidationSeverity.ERROR]),
            'warnings': len([r for r in self.results if r.severity == ValidationSeverity.WARNING]),
            'info': len([r for r in self.results if r.severity == ValidationSeverity.INFO]),
            'is_valid': all(
                r.severity not in [ValidationSeverity.CRITICAL, ValidationSeverity.ERROR] for r in self.results
            ),
        }

    def raise_for_errors(self):
        """Convierte el primer error registrado en ConfigurationError"""
        for result in self.results:
            if result.severity in (ValidationSeverity.CRITICAL, ValidationSeverity.ERROR):
                raise ConfigurationError(result.message, key=result.parameter)
