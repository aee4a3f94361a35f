"""
Entrada de línea de comandos: ``python -m memories <subcomando> [opciones]``.

Cada subcomando es un comando de gestión de Django; ``dispatch`` limita la
entrada a los seis del toolkit y devuelve el código de salida en lugar de
terminar el proceso.
"""
import os
import sys
from dataclasses import dataclass, field

from . import __version__

SUBCOMMANDS = ('model', 'fit', 'rate', 'simulate', 'bench', 'budget')

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


@dataclass(frozen=True)
class RunManifest:
    """Todo lo necesario para repetir una ejecución: parámetros SI, semilla y defaults."""
    subcommand: str
    parameters: dict
    seed: int | None = None
    version: str = __version__
    defaults: dict = field(default_factory=dict)


def usage():
    return (
        "uso: python -m memories <subcomando> [opciones]\n\n"
        f"subcomandos: {', '.join(SUBCOMMANDS)}\n"
        "Use 'python -m memories <subcomando> --help' para ver las opciones.\n"
    )


def dispatch(argv=None):
    """Ejecuta un subcomando y devuelve el código de salida (0, 2, 3 o 4)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ('-h', '--help', 'help'):
        sys.stdout.write(usage())
        return EXIT_OK if argv else EXIT_USAGE
    if argv[0] not in SUBCOMMANDS:
        sys.stderr.write(f"subcomando desconocido: '{argv[0]}'\n\n{usage()}")
        return EXIT_USAGE

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'core.settings')
    from django.core.management import ManagementUtility

    try:
        ManagementUtility(['memories', *argv]).execute()
    except SystemExit as exc:
        if exc.code is None:
            return EXIT_OK
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return EXIT_OK
