from django.core.management.base import BaseCommand, CommandError
from django.db import transaction

from memories.benchkit import load_dataset
from memories.conf import get_setting
from memories.exceptions import DatasetError
from memories.models import PublishedMemory


class Command(BaseCommand):
    """Comando para cargar el dataset de memorias publicadas en la base de datos."""
    help = "Carga (o actualiza por etiqueta) las memorias publicadas desde el CSV del dataset"

    def add_arguments(self, parser):
        parser.add_argument('--dataset', help='CSV de memorias (por defecto el configurado)')

    def handle(self, *args, **options):
        """Crea o actualiza una fila por etiqueta; es idempotente."""
        path = options['dataset'] or get_setting('DATASET_PATH')
        self.stdout.write(self.style.MIGRATE_HEADING(f"Cargando memorias desde {path}..."))

        try:
            records = load_dataset(path)
        except DatasetError as exc:
            raise CommandError(str(exc), returncode=3)

        created = updated = 0
        with transaction.atomic():
            for record in records:
                _, was_created = PublishedMemory.objects.update_or_create(
                    label=record.label,
                    defaults=PublishedMemory.values_from_record(record),
                )
                if was_created:
                    created += 1
                else:
                    updated += 1

        self.stdout.write(self.style.SUCCESS(f"✓ {created} memorias creadas, {updated} actualizadas."))
        self.stdout.write(self.style.SUCCESS(f"  Total en la base: {PublishedMemory.objects.count()}"))
