import json
from pathlib import Path

import numpy as np
from django.core.management.base import CommandError

from memories.cli import EXIT_USAGE
from memories.conf import get_setting
from memories.decay import derived_times, efficiency_at, envelope_efficiency
from memories.management.base import ToolkitCommand, validated
from memories.serializers import DecayModelParamsSerializer
from memories.units import parse_quantity, parse_quantity_list


class Command(ToolkitCommand):
    """Evalúa el modelo de eficiencia en los tiempos pedidos."""
    help = "Evalúa la eficiencia eta(t) y la envolvente para unos parámetros del modelo"
    subcommand = 'model'

    def add_toolkit_arguments(self, parser):
        parser.add_argument('--params', help='Parámetros en JSON (texto o ruta a archivo)')
        parser.add_argument('--eta0', type=float)
        parser.add_argument('--tau-s', type=parse_quantity)
        parser.add_argument('--tau-bar', type=parse_quantity)
        parser.add_argument('--t0', type=parse_quantity)
        parser.add_argument('--A', type=float)
        parser.add_argument('--B', type=float)
        parser.add_argument('--beat43', type=parse_quantity, help='Batido F=4-F=3 [Hz]')
        parser.add_argument('--beat42', type=parse_quantity, help='Batido F=4-F=2 [Hz]')
        parser.add_argument('--t', type=parse_quantity_list,
                            help="Tiempos de almacenamiento separados por coma ('0,50ns,100ns')")

    def resolve_parameters(self, options):
        self.require(options, 't')
        data = {}
        if options['params']:
            source = options['params']
            path = Path(source)
            text = path.read_text(encoding='utf-8') if not source.lstrip().startswith('{') and path.is_file() else source
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise CommandError(f"--params no es JSON válido: {exc.msg}", returncode=EXIT_USAGE) from None
        for key, option in (('eta0', 'eta0'), ('tau_s', 'tau_s'), ('tau_bar', 'tau_bar'), ('t0', 't0'),
                            ('A', 'A'), ('B', 'B'), ('beat43_hz', 'beat43'), ('beat42_hz', 'beat42')):
            if options[option] is not None:
                data[key] = options[option]
        data.setdefault('beat43_hz', get_setting('BEAT43_HZ'))
        data.setdefault('beat42_hz', get_setting('BEAT42_HZ'))
        params = validated(DecayModelParamsSerializer, data)
        return {
            'params': {key: value for key, value in DecayModelParamsSerializer(params).data.items() if key != 'envelope'},
            't': list(options['t']),
        }

    def run(self, parameters):
        params = validated(DecayModelParamsSerializer, parameters['params'])
        t = np.asarray(parameters['t'], dtype=float)
        eta = np.atleast_1d(efficiency_at(params, t))
        payload = {'params': DecayModelParamsSerializer(params).data, 't': t.tolist(), 'eta': eta.tolist()}

        lines = []
        if params.has_homogeneous_time:
            times = derived_times(params.tau_s, params.tau_bar)
            envelope = np.atleast_1d(envelope_efficiency(params, t))
            payload['envelope'] = envelope.tolist()
            lines.append(f"tau_gamma = {times.tau_gamma * 1e9:.4g} ns   tau_sigma = {times.tau_sigma * 1e9:.4g} ns")
        else:
            lines.append("tau_bar <= tau_s: tau_gamma no está definido")
        lines.append(f"{'t [ns]':>12}  {'eta':>12}")
        for value_t, value_eta in zip(t, eta):
            lines.append(f"{value_t * 1e9:>12.4f}  {value_eta:>12.6g}")
        return payload, '\n'.join(lines)
