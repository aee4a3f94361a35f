import csv
import io

from memories.benchkit import derive_all, emit_plot_data, format_table, load_dataset, rank
from memories.conf import get_setting, sync_template
from memories.management.base import ToolkitCommand
from memories.serializers import DerivedMetricsSerializer
from memories.syncrate import RPolicy, SyncTemplate

CSV_FIELDS = ('label', 'tau_c', 'eta0', 'f_prime', 'f_prime_e', 'mu1', 'r6_per_min', 'ng_transmission', 'noise_free')


class Command(ToolkitCommand):
    """Figuras de mérito y ranking de las memorias publicadas."""
    help = "Calcula f', f'_e, mu1 y r6 para cada memoria del dataset y las ordena"
    subcommand = 'bench'
    formats = ('table', 'json', 'csv')

    def add_toolkit_arguments(self, parser):
        parser.add_argument('--dataset', help='CSV de memorias (por defecto MEMORIES_DATASET o el incluido)')
        parser.add_argument('--sort', choices=['r6', 'mu1', 'fe'], help='Orden: r6 y fe descendente, mu1 ascendente')
        parser.add_argument('--plot', metavar='PATH', help='Escribe la tabla del gráfico y su JSON de ejes')

    def resolve_parameters(self, options):
        template = sync_template()
        return {
            'dataset': options['dataset'] or str(get_setting('DATASET_PATH')),
            'sort': options['sort'],
            'plot': options['plot'],
            'clock_floor': get_setting('CLOCK_FLOOR'),
            'noise_free_mu1': get_setting('NOISE_FREE_MU1'),
            'n_sources': template.n_sources,
            'q': template.q,
            'r_policy': str(template.r_policy),
        }

    def run(self, parameters):
        records = load_dataset(parameters['dataset'])
        template = SyncTemplate(parameters['n_sources'], parameters['q'], RPolicy.parse(parameters['r_policy']))
        derived = derive_all(records, template, parameters['clock_floor'], parameters['noise_free_mu1'])
        if parameters['sort']:
            pairs = rank(records, derived, parameters['sort'])
            records = [record for record, _ in pairs]
            derived = [metrics for _, metrics in pairs]
        if parameters['plot']:
            emit_plot_data(records, derived, parameters['plot'])
        payload = {'memories': DerivedMetricsSerializer(derived, many=True).data}
        return payload, format_table(derived)

    def render(self, payload, text, output_format):
        if output_format != 'csv':
            return super().render(payload, text, output_format)
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator='\n')
        writer.writeheader()
        for row in payload['memories']:
            writer.writerow({key: row[key] for key in CSV_FIELDS})
        return buffer.getvalue()
