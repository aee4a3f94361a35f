from memories.conf import get_setting, sync_template
from memories.management.base import ToolkitCommand, validated
from memories.serializers import RateResultSerializer, SyncParamsSerializer
from memories.syncrate import n_photon_rate
from memories.units import parse_quantity


class Command(ToolkitCommand):
    """Tasa analítica de sincronización de N fotones."""
    help = "Calcula la tasa de eventos de N fotones con memorias (s^-1 y min^-1)"
    subcommand = 'rate'

    def add_toolkit_arguments(self, parser):
        parser.add_argument('--n', type=int, help='Número de fuentes N (por defecto MEMORIES.SYNC_N)')
        parser.add_argument('--q', type=float, help='Probabilidad de emisión por ciclo (por defecto MEMORIES.SYNC_Q)')
        parser.add_argument('--tau-c', type=parse_quantity, help="Ciclo de reloj ('1.7ns')")
        parser.add_argument('--eta0', type=float, help='Eficiencia externa a tiempo corto')
        parser.add_argument('--f', type=float, help='Retardo fraccional en ciclos de reloj')
        parser.add_argument('--r-policy', help="root_as_stated, root_table_consistent o literal(v)")

    def resolve_parameters(self, options):
        self.require(options, 'tau_c', 'eta0', 'f')
        n = options['n'] if options['n'] is not None else get_setting('SYNC_N')
        q = options['q'] if options['q'] is not None else get_setting('SYNC_Q')
        data = {'n_sources': n, 'q': q, 'tau_c': options['tau_c'], 'eta0': options['eta0'], 'f': options['f']}
        if options['r_policy']:
            data['r_policy'] = options['r_policy']
        else:
            template = sync_template()
            if (n, q) == (template.n_sources, template.q):
                data['r_policy'] = str(template.r_policy)
        params = validated(SyncParamsSerializer, data)
        return dict(SyncParamsSerializer(params).data)

    def run(self, parameters):
        params = validated(SyncParamsSerializer, parameters)
        result = n_photon_rate(params)
        payload = {'params': SyncParamsSerializer(params).data, 'result': RateResultSerializer(result).data}
        text = '\n'.join([
            f"N = {params.n_sources}   q = {params.q:g}   tau_c = {params.tau_c:.4g} s   "
            f"eta0 = {params.eta0:g}   f = {params.f:g}",
            f"política de R: {result.policy}   R = {result.R:.4g}   Y = {result.Y:.6g}   b = {result.b:.5g}",
            f"factor de mejora por unidad: {result.enhancement:.6g}",
            f"r_{params.n_sources} = {result.rate:.4g} s^-1 = {result.rate_per_minute:.4g} min^-1",
        ])
        return payload, text
