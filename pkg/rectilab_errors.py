"""
Rectilab Errors - Jerarquía de excepciones del laboratorio
Cada operación lanza el tipo que nombra su contrato
"""

from typing import Any, Dict, Optional, Tuple


class RectilabError(Exception):
    """Error base del laboratorio"""

    def __init__(self, message: str, inputs: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.inputs = dict(inputs or {})

    def to_dict(self) -> Dict[str, Any]:
        """Registro reproducible del fallo"""
        return {"error": type(self).__name__, "message": str(self), "inputs": self.inputs}


class DomainError(RectilabError):
    """Punto fuera del borde o fuera del dominio"""


class ArgumentError(RectilabError, ValueError):
    """Argumentos inválidos o vacíos"""


class ConfigurationError(RectilabError):
    """Constantes o escenario inválidos"""

    def __init__(self, message: str, path: Optional[str] = None,
                 inputs: Optional[Dict[str, Any]] = None):
        super().__init__(message if path is None else f"{path}: {message}", inputs)
        self.path = path


class GridConstructionError(RectilabError):
    """Fallo al construir la rejilla diádica en una escala"""

    def __init__(self, message: str, scale: float, inputs: Optional[Dict[str, Any]] = None):
        super().__init__(f"{message} (escala {scale:g})", inputs)
        self.scale = scale


class ConnectivityError(RectilabError):
    """No se pudo construir una cadena de Harnack"""


class CorkscrewError(ConnectivityError):
    """Ningún candidato alcanza la constante de sacacorchos mínima"""

    def __init__(self, message: str, best_c: float = 0.0,
                 inputs: Optional[Dict[str, Any]] = None):
        super().__init__(message, inputs)
        self.best_c = best_c


class ProximityError(RectilabError):
    """Punto demasiado cerca del borde para la cuadratura"""

    def __init__(self, message: str, margin: float, inputs: Optional[Dict[str, Any]] = None):
        super().__init__(f"{message} (margen {margin:g})", inputs)
        self.margin = margin


class PreconditionError(RectilabError):
    """Hipótesis geométrica de un lema no satisfecha"""

    def __init__(self, message: str, containment: str,
                 inputs: Optional[Dict[str, Any]] = None):
        super().__init__(f"{message}: falla {containment}", inputs)
        self.containment = containment


def check_range(name: str, value: float, bounds: Tuple[float, float],
                closed: Tuple[bool, bool] = (False, False)) -> float:
    """Valida value en el intervalo (abierto o cerrado por extremo)"""
    lo, hi = bounds
    ok_lo = value >= lo if closed[0] else value > lo
    ok_hi = value <= hi if closed[1] else value < hi
    if not (ok_lo and ok_hi):
        left = "[" if closed[0] else "("
        right = "]" if closed[1] else ")"
        raise ArgumentError(f"{name}={value!r} fuera de {left}{lo}, {hi}{right}",
                            {name: value})
    return value
