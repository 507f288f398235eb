"""
Tipos de dominio del detector cSMPD y magnitudes derivadas

Todas las tasas se almacenan en unidades angulares (rad/s o 1/s como tasas de
decaimiento de energía). La conversión desde Hz ocurre en la frontera de
entrada (ver src/config/detector_config.py).
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple
import logging
import math
import os
import sys

import numpy as np

# Manejo de imports para ejecución independiente
try:
    from .errors import ConfigurationError
except ImportError:
    sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
    from core.errors import ConfigurationError


logger = logging.getLogger('csmpd.model')

TWO_PI = 2.0 * math.pi


class ModeRole(Enum):
    """Rol de un resonador en la cadena"""
    BUFFER = "buffer"
    MEMORY = "memory"
    WASTE = "waste"
    READOUT = "readout"


def _require(condition: bool, message: str, key: str) -> None:
    if not condition:
        raise ConfigurationError(message, key=key)


@dataclass(frozen=True)
class ModeSpec:
    """Resonador lineal de la cadena"""
    role: ModeRole
    omega: float  # frecuencia angular [rad/s]
    kappa_ext: float  # acoplamiento externo [1/s]
    kappa_int: float = 0.0  # pérdidas internas [1/s]

    def __post_init__(self):
        """Validación post-inicialización"""
        if not isinstance(self.role, ModeRole):
            object.__setattr__(self, 'role', ModeRole(self.role))
        _require(math.isfinite(self.omega) and self.omega > 0, "omega debe ser positiva", "omega")
        _require(self.kappa_ext >= 0, "kappa_ext debe ser >= 0", "kappa_ext")
        _require(self.kappa_int >= 0, "kappa_int debe ser >= 0", "kappa_int")

    @property
    def kappa_total(self) -> float:
        return self.kappa_ext + self.kappa_int

    @property
    def frequency_hz(self) -> float:
        return self.omega / TWO_PI

    def export_to_dict(self) -> Dict[str, Any]:
        return {
            'role': self.role.value,
            'omega': self.omega,
            'kappa_ext': self.kappa_ext,
            'kappa_int': self.kappa_int,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'ModeSpec':
        return cls(
            role=ModeRole(data['role']),
            omega=float(data['omega']),
            kappa_ext=float(data['kappa_ext']),
            kappa_int=float(data.get('kappa_int', 0.0)),
        )


@dataclass(frozen=True)
class QubitSpec:
    """Transmon que actúa como bandera de la conversión 4WM"""
    omega_ge: float  # [rad/s]
    chi_self: float  # auto-Kerr χ_qq [rad/s]
    chi_left: float  # desplazamiento dispersivo al modo izquierdo [rad/s]
    chi_right: float  # desplazamiento dispersivo al modo derecho [rad/s]
    t1: float  # [s]
    t1_pumped: Optional[float] = None  # [s], por defecto t1
    p_eq: float = 0.0
    p_eq_reset: float = 0.0
    f_ro: float = 1.0

    def __post_init__(self):
        """Validación post-inicialización"""
        _require(self.omega_ge > 0, "omega_ge debe ser positiva", "omega_ge")
        _require(self.t1 > 0, "t1 debe ser positivo", "t1")
        if self.t1_pumped is None:
            object.__setattr__(self, 't1_pumped', self.t1)
        _require(self.t1_pumped > 0, "t1_pumped debe ser positivo", "t1_pumped")
        _require(0 <= self.p_eq < 1, "p_eq debe estar en [0, 1)", "p_eq")
        _require(0 <= self.p_eq_reset <= self.p_eq, "p_eq_reset debe estar en [0, p_eq]", "p_eq_reset")
        _require(0 < self.f_ro <= 1, "f_ro debe estar en (0, 1]", "f_ro")
        if self.t1_pumped > self.t1:
            logger.warning(
                f"t1_pumped ({self.t1_pumped:.3g} s) mayor que t1 ({self.t1:.3g} s): se acepta"
            )

    @property
    def frequency_hz(self) -> float:
        return self.omega_ge / TWO_PI

    def export_to_dict(self) -> Dict[str, Any]:
        return {
            'omega_ge': self.omega_ge,
            'chi_self': self.chi_self,
            'chi_left': self.chi_left,
            'chi_right': self.chi_right,
            't1': self.t1,
            't1_pumped': self.t1_pumped,
            'p_eq': self.p_eq,
            'p_eq_reset': self.p_eq_reset,
            'f_ro': self.f_ro,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'QubitSpec':
        return cls(**{k: (float(v) if v is not None else None) for k, v in data.items()})


@dataclass(frozen=True)
class PumpSpec:
    """Tono de bombeo de un proceso 4WM"""
    xi: complex = 0j  # amplitud adimensional (fase a través de la unión)
    delta_p: float = 0.0  # desintonía respecto de la condición de acuerdo [rad/s]

    def __post_init__(self):
        """Validación post-inicialización"""
        object.__setattr__(self, 'xi', complex(self.xi))
        _require(np.isfinite(self.xi), "xi debe ser finito", "xi")
        _require(math.isfinite(self.delta_p), "delta_p debe ser finito", "delta_p")

    def export_to_dict(self) -> Dict[str, Any]:
        return {'xi_re': self.xi.real, 'xi_im': self.xi.imag, 'delta_p': self.delta_p}


def coupling_strength(qubit: QubitSpec, pump: PumpSpec) -> complex:
    """
    Acoplamiento 4WM g4 = −ξ·√(χ_izq·χ_der)

    Args:
        qubit: Qubit que media la conversión
        pump: Bombeo aplicado a ese qubit

    Returns:
        g4 [rad/s] complejo

    Raises:
        ConfigurationError: Si algún desplazamiento dispersivo es nulo o los signos difieren
    """
    if qubit.chi_left == 0 or qubit.chi_right == 0:
        raise ConfigurationError(
            "Acoplamiento degenerado: desplazamiento dispersivo nulo",
            key='chi_left' if qubit.chi_left == 0 else 'chi_right',
        )
    product = qubit.chi_left * qubit.chi_right
    if product < 0:
        raise ConfigurationError(
            "Desplazamientos dispersivos de signo mixto: g4 sería complejo",
            key='chi_right',
        )
    return -pump.xi * math.sqrt(product)


@dataclass(frozen=True)
class ChainSpec:
    """Cadena de N+1 resonadores y N qubits (buffer → memorias → waste)"""
    modes: Tuple[ModeSpec, ...]
    qubits: Tuple[QubitSpec, ...]
    pumps: Tuple[PumpSpec, ...]

    def __post_init__(self):
        """Validación post-inicialización"""
        object.__setattr__(self, 'modes', tuple(self.modes))
        object.__setattr__(self, 'qubits', tuple(self.qubits))
        object.__setattr__(self, 'pumps', tuple(self.pumps))

        _require(len(self.qubits) >= 1, "La cadena necesita al menos un qubit", "qubits")
        _require(
            len(self.modes) == len(self.qubits) + 1,
            "modes debe tener N+1 elementos para N qubits",
            "modes",
        )
        _require(len(self.pumps) == len(self.qubits), "pumps debe tener N elementos", "pumps")
        _require(self.modes[0].role == ModeRole.BUFFER, "El modo 0 debe ser el buffer", "modes")
        _require(self.modes[-1].role == ModeRole.WASTE, "El último modo debe ser el waste", "modes")
        for k, mode in enumerate(self.modes[1:-1], start=1):
            _require(
                mode.role == ModeRole.MEMORY,
                f"El modo intermedio {k} debe ser una memoria",
                f"mode:{k}",
            )
        # Las memorias pueden ser ideales (κ = 0); los extremos no
        for k in (0, len(self.modes) - 1):
            _require(self.modes[k].kappa_total > 0, f"kappa total del modo {k} debe ser > 0", f"mode:{k}")
        # Los acoplamientos deben ser evaluables
        self.couplings()

    # ------------------------------------------------------------------
    # Accesores derivados
    # ------------------------------------------------------------------
    @property
    def n_stages(self) -> int:
        return len(self.qubits)

    @property
    def buffer(self) -> ModeSpec:
        return self.modes[0]

    @property
    def waste(self) -> ModeSpec:
        return self.modes[-1]

    def couplings(self) -> np.ndarray:
        """g4_k para cada etapa [rad/s]"""
        return np.array(
            [coupling_strength(q, p) for q, p in zip(self.qubits, self.pumps)], dtype=complex
        )

    def kappas(self) -> np.ndarray:
        """Tasas totales κ_k de cada modo [1/s]"""
        return np.array([m.kappa_total for m in self.modes], dtype=float)

    def mode_detunings(self) -> np.ndarray:
        """Δ_0 = 0, Δ_{k+1} = Δ_k − Δ_{p,k}"""
        deltas = np.zeros(len(self.modes))
        for k, pump in enumerate(self.pumps):
            deltas[k + 1] = deltas[k] - pump.delta_p
        return deltas

    def gamma_mb(self) -> float:
        """Tasa de conversión memoria → buffer 4|g_0|²/κ_b"""
        g = self.couplings()
        return 4.0 * abs(g[0]) ** 2 / self.modes[0].kappa_total

    def gamma_mw(self) -> float:
        """Tasa de conversión memoria → waste 4|g_{N-1}|²/κ_w"""
        g = self.couplings()
        return 4.0 * abs(g[-1]) ** 2 / self.modes[-1].kappa_total

    def gamma_bm(self) -> float:
        """Tasa efectiva buffer → memoria 4|g_0|²/(κ_m + γ_mw) (N=2)"""
        if self.n_stages != 2:
            raise ConfigurationError("gamma_bm solo está definido para N=2", key='qubits')
        g = self.couplings()
        return 4.0 * abs(g[0]) ** 2 / (self.modes[1].kappa_total + self.gamma_mw())

    def lambda0(self) -> float:
        """Cociente de pérdidas del buffer Λ0 = κ_b,int/κ_b,ext"""
        buffer = self.modes[0]
        if buffer.kappa_ext == 0:
            return math.inf
        return buffer.kappa_int / buffer.kappa_ext

    # ------------------------------------------------------------------
    # Constructores
    # ------------------------------------------------------------------
    def with_pump_scale(self, scale: float) -> 'ChainSpec':
        """Escala todas las amplitudes ξ por un factor común"""
        pumps = tuple(replace(p, xi=p.xi * scale) for p in self.pumps)
        return replace(self, pumps=pumps)

    def with_couplings(self, couplings: Sequence[complex]) -> 'ChainSpec':
        """Ajusta ξ para obtener los g4 pedidos conservando las desintonías"""
        pumps = tuple(
            replace(p, xi=_xi_for_coupling(q, g)) for q, p, g in zip(self.qubits, self.pumps, couplings)
        )
        return replace(self, pumps=pumps)

    def with_mode(self, index: int, **changes: Any) -> 'ChainSpec':
        modes = list(self.modes)
        modes[index] = replace(modes[index], **changes)
        return replace(self, modes=tuple(modes))

    @classmethod
    def from_couplings(
        cls,
        modes: Sequence[ModeSpec],
        qubits: Sequence[QubitSpec],
        couplings: Sequence[complex],
        delta_ps: Optional[Sequence[float]] = None,
    ) -> 'ChainSpec':
        """
        Construye una cadena a partir de acoplamientos g4 objetivo

        Args:
            modes: N+1 modos
            qubits: N qubits
            couplings: g4 deseados [rad/s]
            delta_ps: Desintonías de bombeo [rad/s], cero por defecto

        Returns:
            ChainSpec con ξ_k = −g_k/√(χ_izq χ_der)
        """
        delta_ps = list(delta_ps) if delta_ps is not None else [0.0] * len(qubits)
        pumps = [
            PumpSpec(xi=_xi_for_coupling(q, g), delta_p=d)
            for q, g, d in zip(qubits, couplings, delta_ps)
        ]
        return cls(tuple(modes), tuple(qubits), tuple(pumps))

    def export_to_dict(self) -> Dict[str, Any]:
        return {
            'modes': [m.export_to_dict() for m in self.modes],
            'qubits': [q.export_to_dict() for q in self.qubits],
            'pumps': [p.export_to_dict() for p in self.pumps],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'ChainSpec':
        pumps = [
            PumpSpec(xi=complex(p.get('xi_re', 0.0), p.get('xi_im', 0.0)), delta_p=p.get('delta_p', 0.0))
            for p in data['pumps']
        ]
        return cls(
            tuple(ModeSpec.from_dict(m) for m in data['modes']),
            tuple(QubitSpec.from_dict(q) for q in data['qubits']),
            tuple(pumps),
        )


def _xi_for_coupling(qubit: QubitSpec, g: complex) -> complex:
    unit = coupling_strength(qubit, PumpSpec(xi=1.0))
    return complex(g) / unit


@dataclass(frozen=True)
class CycleSpec:
    """Temporización del ciclo detección / lectura / reinicio"""
    t_d: float  # ventana de detección [s]
    t_ro: float  # lectura [s]
    t_reset: float  # pulso de reinicio [s]
    n_reset: float = 1.0  # número medio de reinicios

    def __post_init__(self):
        """Validación post-inicialización"""
        _require(self.t_d > 0, "t_d debe ser positivo", "t_d")
        _require(self.t_ro > 0, "t_ro debe ser positivo", "t_ro")
        _require(self.t_reset > 0, "t_reset debe ser positivo", "t_reset")
        _require(self.n_reset >= 0, "n_reset debe ser >= 0", "n_reset")

    @property
    def dead_time(self) -> float:
        """T_RO+reset = (n+1)·T_RO + n·T_reset"""
        return (self.n_reset + 1.0) * self.t_ro + self.n_reset * self.t_reset

    @property
    def t_cycle(self) -> float:
        return self.t_d + self.dead_time

    @property
    def cycle_rate(self) -> float:
        return 1.0 / self.t_cycle

    @property
    def eta_cycle(self) -> float:
        return eta_cycle(self)

    def export_to_dict(self) -> Dict[str, Any]:
        return {'t_d': self.t_d, 't_ro': self.t_ro, 't_reset': self.t_reset, 'n_reset': self.n_reset}


def eta_cycle(cycle: CycleSpec) -> float:
    """
    Ciclo útil del detector T_d/(T_d + (n+1)T_RO + n T_reset)

    Args:
        cycle: Temporización del ciclo

    Returns:
        Fracción del tiempo en que el detector está activo, en (0, 1)
    """
    return cycle.t_d / cycle.t_cycle


@dataclass(frozen=True)
class Environment:
    """Entorno térmico del detector"""
    temperature: float  # [K]
    background_occupations: Mapping[float, float] = field(default_factory=dict)  # Hz -> n̄

    def __post_init__(self):
        """Validación post-inicialización"""
        _require(self.temperature >= 0, "temperature debe ser >= 0", "temperature")
        for freq, occupation in self.background_occupations.items():
            _require(occupation >= 0, f"ocupación negativa a {freq} Hz", "background_occupations")

    def override_for(self, frequency_hz: float, rtol: float = 1e-9) -> Optional[float]:
        """Ocupación impuesta para la frecuencia dada, si existe"""
        for freq, occupation in self.background_occupations.items():
            if math.isclose(freq, frequency_hz, rel_tol=rtol):
                return occupation
        return None
