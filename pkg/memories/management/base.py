import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from memories import __version__
from memories.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_USAGE, RunManifest
from memories.conf import resolved_defaults
from memories.exceptions import (
    ConfigMismatchError, DatasetError, DomainError, FitError, SolverError,
)

logger = logging.getLogger(__name__)

DATA_ERRORS = (DatasetError, DomainError, FitError, ConfigMismatchError, OSError)


def write_manifest(manifest, path):
    from memories.serializers import RunManifestSerializer

    Path(path).write_text(
        json.dumps(RunManifestSerializer(manifest).data, indent=2, sort_keys=True),
        encoding='utf-8',
    )


def read_manifest(path):
    """Lee y valida un manifiesto; los errores de esquema son errores de datos."""
    from memories.serializers import RunManifestSerializer

    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"JSON inválido: {exc.msg}", row=exc.lineno, path=path) from None
    serializer = RunManifestSerializer(data=data)
    if not serializer.is_valid():
        raise DatasetError(f"manifiesto inválido: {dict(serializer.errors)}", path=path)
    return serializer.save()


def validated(serializer_class, data, **kwargs):
    """Valida `data` con el serializer y devuelve el objeto creado; los errores son DomainError."""
    serializer = serializer_class(data=data, **kwargs)
    if not serializer.is_valid():
        raise DomainError(_flatten_errors(serializer.errors))
    return serializer.save()


def _flatten_errors(errors):
    parts = []
    for key, messages in errors.items():
        if isinstance(messages, dict):
            parts.append(f"{key}: {_flatten_errors(messages)}")
        else:
            parts.append(f"{key}: {' '.join(str(message) for message in messages)}")
    return '; '.join(parts)


class ToolkitCommand(BaseCommand):
    """
    Comando base de los subcomandos del toolkit.

    Cada subclase resuelve sus opciones a un dict de parámetros en SI
    (resolve_parameters) y ejecuta a partir de ese dict (run). El dict se
    guarda en el RunManifest, así que --replay repite la ejecución exacta.
    """
    subcommand = None
    formats = ('table', 'json')

    def add_arguments(self, parser):
        self.add_toolkit_arguments(parser)
        parser.add_argument('--replay', metavar='MANIFEST', help='Repite la ejecución descrita por un manifiesto')
        parser.add_argument('--manifest', metavar='PATH', help='Escribe el manifiesto de ejecución en PATH')
        parser.add_argument('--format', choices=self.formats, default='table', help='Formato de salida')
        parser.add_argument('--out', metavar='PATH', help='Escribe el resultado en PATH en lugar de stdout')

    def add_toolkit_arguments(self, parser):
        pass

    def require(self, options, *names):
        """Opciones obligatorias fuera de --replay; su falta es un error de uso."""
        missing = [name for name in names if options.get(name) is None]
        if missing:
            flags = ', '.join('--' + name.replace('_', '-') for name in missing)
            raise CommandError(f"faltan las opciones: {flags}", returncode=EXIT_USAGE)

    def resolve_parameters(self, options):
        raise NotImplementedError

    def run(self, parameters):
        """Devuelve (payload, texto) a partir de los parámetros resueltos."""
        raise NotImplementedError

    def render(self, payload, text, output_format):
        if output_format == 'json':
            return json.dumps(payload, indent=2, sort_keys=True)
        return text

    def exit_status(self, payload):
        """Código distinto de 0 para fallos numéricos detectados después de escribir la salida."""
        return 0

    def handle(self, *args, **options):
        try:
            if options['replay']:
                manifest = read_manifest(options['replay'])
                if manifest.subcommand != self.subcommand:
                    raise DatasetError(
                        f"el manifiesto es de '{manifest.subcommand}', no de '{self.subcommand}'",
                        path=options['replay'],
                    )
                parameters = manifest.parameters
            else:
                parameters = self.resolve_parameters(options)
            payload, text = self.run(parameters)
        except SolverError as exc:
            raise CommandError(f"Fallo numérico: {exc}", returncode=EXIT_NUMERICAL)
        except DATA_ERRORS as exc:
            raise CommandError(f"Error de datos: {exc}", returncode=EXIT_DATA)

        output = self.render(payload, text, options['format'])
        if options['out']:
            Path(options['out']).write_text(output if output.endswith('\n') else output + '\n', encoding='utf-8')
            self.stdout.write(self.style.SUCCESS(f"✓ Resultado escrito en {options['out']}"))
        else:
            self.stdout.write(output)

        manifest = RunManifest(
            subcommand=self.subcommand,
            parameters=parameters,
            seed=parameters.get('seed'),
            version=__version__,
            defaults=resolved_defaults(),
        )
        if options['manifest']:
            write_manifest(manifest, options['manifest'])
            self.stdout.write(self.style.SUCCESS(f"✓ Manifiesto escrito en {options['manifest']}"))
        logger.debug("Ejecución de '%s' terminada", self.subcommand)

        status = self.exit_status(payload)
        if status:
            raise CommandError("La ejecución terminó con un fallo numérico", returncode=status)
