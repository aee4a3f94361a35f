"""Lectura de magnitudes con sufijo de unidad ("1.7ns", "28.82 MHz", "85um")."""
import re

from .exceptions import DomainError

UNITS = {
    's': 1.0,
    'ms': 1e-3,
    'us': 1e-6,
    'µs': 1e-6,
    'ns': 1e-9,
    'ps': 1e-12,
    'Hz': 1.0,
    'kHz': 1e3,
    'MHz': 1e6,
    'GHz': 1e9,
    'm': 1.0,
    'cm': 1e-2,
    'mm': 1e-3,
    'um': 1e-6,
    'µm': 1e-6,
    'nm': 1e-9,
    'K': 1.0,
}

_QUANTITY = re.compile(r'^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-zµ]*)\s*$')


class QuantityError(DomainError):
    """Literal numérico o unidad no reconocidos."""

    def __init__(self, token, reason):
        self.token = token
        super().__init__(f"{reason}: '{token}'")


def parse_quantity(text):
    """Convierte un número con sufijo opcional a unidades SI; sin sufijo se toma tal cual."""
    if isinstance(text, (int, float)):
        return float(text)
    match = _QUANTITY.match(str(text))
    if match is None:
        raise QuantityError(str(text), "magnitud inválida")
    number, unit = match.groups()
    if not unit:
        return float(number)
    if unit not in UNITS:
        raise QuantityError(unit, "unidad desconocida")
    return float(number) * UNITS[unit]


def parse_quantity_list(text):
    """Lista separada por comas: "1.22MHz,0.34MHz"."""
    items = [item for item in str(text).split(',') if item.strip()]
    if not items:
        raise QuantityError(str(text), "lista vacía")
    return [parse_quantity(item) for item in items]
