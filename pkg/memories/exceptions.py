"""Jerarquía de errores del toolkit de memorias."""


class ToolkitError(Exception):
    """Error base de todos los módulos de memorias."""


class DomainError(ToolkitError, ValueError):
    """Parámetros fuera del dominio de una operación (precondición o invariante)."""


class SolverError(ToolkitError, ArithmeticError):
    """Fallo numérico: el buscador de raíces no pudo acotar la solución."""


class FitError(ToolkitError):
    """Datos insuficientes o degenerados para el ajuste."""


class DatasetError(ToolkitError):
    """Error de esquema en el dataset, con ubicación fila/columna cuando se conoce."""

    def __init__(self, message, row=None, column=None, path=None):
        self.row = row
        self.column = column
        self.path = path
        location = []
        if path is not None:
            location.append(str(path))
        if row is not None:
            location.append(f"fila {row}")
        if column is not None:
            location.append(f"columna '{column}'")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)


class ConfigMismatchError(ToolkitError):
    """Se intentó combinar resultados de simulaciones con configuraciones distintas."""
