import json

import numpy as np
from django.core.management.base import CommandError

from memories.cli import EXIT_NUMERICAL, EXIT_USAGE
from memories.conf import get_setting
from memories.fitting import (
    PARAMETER_NAMES, REFERENCE_FITS, DecaySample, fit_decay, generate_synthetic, load_samples,
)
from memories.management.base import ToolkitCommand, validated
from memories.serializers import DecayModelParamsSerializer, FitResultSerializer
from memories.units import parse_quantity


class Command(ToolkitCommand):
    """Ajusta el modelo de eficiencia a una curva medida o sintética."""
    help = "Ajusta eta0, tau_s, tau_bar, t0, A, B a un CSV t_s,eta[,sigma] o a una curva sintética"
    subcommand = 'fit'

    def add_toolkit_arguments(self, parser):
        source = parser.add_mutually_exclusive_group()
        source.add_argument('--input', metavar='CSV', help='Curva medida con cabecera t_s,eta[,sigma]')
        source.add_argument('--synthetic', choices=sorted(REFERENCE_FITS),
                            help='Genera una curva a partir de un ajuste de referencia')
        parser.add_argument('--weighted', action='store_true',
                            help='Pondera con la columna sigma (por defecto el ajuste no se pondera)')
        parser.add_argument('--noise', type=float, default=0.0, help='Ruido gaussiano de la curva sintética')
        parser.add_argument('--seed', type=int, help='Semilla de la curva sintética')
        parser.add_argument('--points', type=int, default=200, help='Muestras de la curva sintética')
        parser.add_argument('--span', type=parse_quantity, default=300e-9, help="Duración de la curva ('300ns')")
        parser.add_argument('--init', help='Estimación inicial en JSON (por defecto, automática)')
        parser.add_argument('--max-iterations', type=int)

    def resolve_parameters(self, options):
        if not (options['input'] or options['synthetic']):
            raise CommandError("indique --input o --synthetic", returncode=EXIT_USAGE)
        parameters = {
            'input': options['input'],
            'synthetic': options['synthetic'],
            'weighted': options['weighted'],
            'init': None,
            'beat43_hz': get_setting('BEAT43_HZ'),
            'beat42_hz': get_setting('BEAT42_HZ'),
            'max_iterations': options['max_iterations'] or get_setting('FIT_MAX_ITERATIONS'),
            'xtol': get_setting('FIT_XTOL'),
            'ftol': get_setting('FIT_FTOL'),
            'diff_step': get_setting('FIT_DIFF_STEP'),
        }
        if options['synthetic']:
            if options['points'] < len(PARAMETER_NAMES) + 1:
                raise CommandError("--points es demasiado pequeño para el ajuste", returncode=EXIT_USAGE)
            parameters.update({
                'noise': options['noise'],
                'seed': options['seed'] if options['seed'] is not None else int(np.random.SeedSequence().entropy % 2**32),
                'points': options['points'],
                'span': options['span'],
            })
        if options['init']:
            try:
                init = json.loads(options['init'])
            except json.JSONDecodeError as exc:
                raise CommandError(f"--init no es JSON válido: {exc.msg}", returncode=EXIT_USAGE) from None
            params = validated(DecayModelParamsSerializer, init)
            parameters['init'] = {k: v for k, v in DecayModelParamsSerializer(params).data.items() if k != 'envelope'}
        return parameters

    def samples(self, parameters):
        if parameters.get('synthetic'):
            times = np.linspace(0.0, parameters['span'], parameters['points'])
            return generate_synthetic(
                REFERENCE_FITS[parameters['synthetic']], times, parameters['noise'], parameters['seed'],
                attach_sigma=parameters['weighted'],
            )
        samples = load_samples(parameters['input'])
        if not parameters['weighted']:
            samples = [DecaySample(s.t, s.eta) for s in samples]
        return samples

    def run(self, parameters):
        init = validated(DecayModelParamsSerializer, parameters['init']) if parameters.get('init') else None
        result = fit_decay(
            self.samples(parameters),
            init=init,
            beat43_hz=parameters['beat43_hz'],
            beat42_hz=parameters['beat42_hz'],
            max_iterations=parameters['max_iterations'],
            xtol=parameters['xtol'],
            ftol=parameters['ftol'],
            diff_step=parameters['diff_step'],
        )
        payload = dict(FitResultSerializer(result).data)
        scales = {'tau_s': 1e9, 'tau_bar': 1e9, 't0': 1e9}
        lines = [f"{'parámetro':<10}  {'valor':>12}  {'error':>12}"]
        for name in PARAMETER_NAMES:
            scale = scales.get(name, 1.0)
            unit = ' ns' if name in scales else ''
            value = getattr(result.params, name) * scale
            lines.append(f"{name + unit:<10}  {value:>12.5g}  {result.stderr[name] * scale:>12.3g}")
        lines.append(
            f"residuo = {result.residual_norm:.4g}   iteraciones = {result.iterations}   "
            f"convergió = {'sí' if result.converged else 'no'}"
        )
        for note in result.warnings:
            lines.append(f"aviso: {note}")
        return payload, '\n'.join(lines)

    def exit_status(self, payload):
        return 0 if payload['converged'] else EXIT_NUMERICAL
