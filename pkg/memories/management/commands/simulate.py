import numpy as np

from memories.conf import get_setting
from memories.management.base import ToolkitCommand, validated
from memories.mcsim import agreement_grid, analytic_rate_per_cycle, simulate
from memories.serializers import AgreementPointSerializer, SimConfigSerializer, SimResultSerializer
from memories.syncrate import RPolicy


def count(text):
    """Entero que admite notación científica ('1e7')."""
    value = float(text)
    if value != int(value):
        raise ValueError(text)
    return int(value)


class Command(ToolkitCommand):
    """Simulación Monte-Carlo del protocolo de repetición hasta el éxito."""
    help = "Simula N unidades fuente-memoria y compara con la tasa analítica"
    subcommand = 'simulate'

    def add_toolkit_arguments(self, parser):
        parser.add_argument('--n', type=int, default=2, help='Número de unidades N')
        parser.add_argument('--q', type=float, default=0.05, help='Probabilidad de emisión por ciclo')
        loss = parser.add_mutually_exclusive_group()
        loss.add_argument('--b', type=float, help='Probabilidad de pérdida por ciclo')
        loss.add_argument('--f', type=float, help='Retardo fraccional; se usa b = 1 - exp(-1/f)')
        parser.add_argument('--eta0', type=float, default=0.5, help='Eficiencia de lectura')
        parser.add_argument('--cycles', type=count, default=10**6, help='Ciclos totales')
        parser.add_argument('--seed', type=int, help='Semilla (si falta se genera y se registra)')
        parser.add_argument('--replicas', type=int, default=1)
        parser.add_argument('--workers', type=int, default=1, help='Procesos para las réplicas')
        parser.add_argument('--lanes', type=int, help='Cadenas por réplica (por defecto MEMORIES.SIM_LANES)')
        parser.add_argument('--keep-unretrieved', action='store_true',
                            help='Tras una lectura conserva los fotones no recuperados')
        parser.add_argument('--compare', action='store_true', help='Compara con la tasa analítica')
        parser.add_argument('--grid', action='store_true',
                            help='Recorre la grilla N in {2,3}, q in {0.01,0.05}, f in {20,100}, eta0 in {0.25,0.5}')
        parser.add_argument('--r-policy', help='Política de R para la comparación analítica')

    def resolve_parameters(self, options):
        seed = options['seed'] if options['seed'] is not None else int(np.random.SeedSequence().entropy % 2**32)
        data = {
            'n_sources': options['n'],
            'q': options['q'],
            'eta0': options['eta0'],
            'n_cycles': options['cycles'],
            'seed': seed,
            'replicas': options['replicas'],
            'lanes': options['lanes'] or get_setting('SIM_LANES'),
            'keep_unretrieved': options['keep_unretrieved'],
        }
        if options['b'] is not None:
            data['b'] = options['b']
        else:
            data['f'] = options['f'] if options['f'] is not None else 20.0
        config = validated(SimConfigSerializer, data)
        parameters = dict(SimConfigSerializer(config).data)
        parameters.update({
            'workers': options['workers'],
            'block': get_setting('SIM_BLOCK'),
            'compare': options['compare'],
            'grid': options['grid'],
            'r_policy': str(RPolicy.parse(options['r_policy'])) if options['r_policy'] else None,
        })
        return parameters

    def run(self, parameters):
        policy = RPolicy.parse(parameters['r_policy']) if parameters.get('r_policy') else None
        if parameters.get('grid'):
            points = agreement_grid(
                parameters['n_cycles'], seed=parameters['seed'], replicas=parameters['replicas'],
                r_policy=policy, workers=parameters['workers'], lanes=parameters['lanes'],
                keep_unretrieved=parameters['keep_unretrieved'],
            )
            payload = {'seed': parameters['seed'], 'grid': AgreementPointSerializer(points, many=True).data}
            lines = [f"{'N':>2} {'q':>6} {'f':>6} {'eta0':>5}  {'simulado':>11} {'analítico':>11} {'cociente':>9} {'±95%':>7}"]
            for p in points:
                lines.append(
                    f"{p.n_sources:>2} {p.q:>6g} {p.f:>6.4g} {p.eta0:>5g}  {p.simulated:>11.4g} "
                    f"{p.analytic:>11.4g} {p.ratio:>9.4f} {p.ratio_ci95:>7.4f}"
                )
            return payload, '\n'.join(lines)

        keys = ('n_sources', 'q', 'b', 'eta0', 'n_cycles', 'seed', 'replicas', 'lanes', 'keep_unretrieved')
        config = validated(SimConfigSerializer, {key: parameters[key] for key in keys})
        result = simulate(config, workers=parameters['workers'], block=parameters['block'])
        payload = {'result': SimResultSerializer(result).data}
        lines = [
            f"N = {config.n_sources}   q = {config.q:g}   b = {config.b:.5g}   eta0 = {config.eta0:g}   "
            f"semilla = {config.seed}   réplicas = {config.replicas}",
            f"ciclos = {result.cycles_elapsed}   intentos = {result.n_readout_attempts}   éxitos = {result.n_successes}",
            f"tasa por ciclo = {result.rate_per_cycle:.5g} ± {result.ci95:.2g}   ocupación media = {result.unit_availability:.4f}",
        ]
        if parameters.get('compare'):
            analytic = analytic_rate_per_cycle(config, policy)
            payload['analytic_rate_per_cycle'] = analytic
            payload['ratio'] = result.rate_per_cycle / analytic
            lines.append(f"analítica = {analytic:.5g}   cociente simulado/analítico = {payload['ratio']:.4f}")
        return payload, '\n'.join(lines)
