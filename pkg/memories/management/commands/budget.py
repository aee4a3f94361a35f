from django.core.management.base import CommandError

from memories.cli import EXIT_USAGE
from memories.decay import RateBudget, coherence_rate, lifetime_budget, motional_budget
from memories.management.base import ToolkitCommand
from memories.units import parse_quantity, parse_quantity_list


class Command(ToolkitCommand):
    """Presupuesto de decoherencia y vida media resultante."""
    help = "Suma tasas de decoherencia (Hz cíclicos) y devuelve la vida media 1/(2π Σf)"
    subcommand = 'budget'

    def add_toolkit_arguments(self, parser):
        parser.add_argument('--rates', type=parse_quantity_list, help="Tasas separadas por coma ('1.22MHz,0.34MHz')")
        parser.add_argument('--labels', help='Etiquetas separadas por coma para --rates')
        parser.add_argument('--temperature', type=parse_quantity, help='Temperatura del vapor [K] (presupuesto térmico)')
        parser.add_argument('--coherence-wavelength', type=parse_quantity, help="Longitud de onda de la coherencia ('150um')")
        parser.add_argument('--waist', type=parse_quantity, help="Cintura del haz ('85um')")
        parser.add_argument('--radiative-lifetime', type=parse_quantity,
                            help="Vida media radiativa del nivel excitado ('240ns'); agrega la tasa homogénea")

    def resolve_parameters(self, options):
        motional = (options['temperature'], options['coherence_wavelength'], options['waist'])
        if options['rates'] is None and not all(value is not None for value in motional):
            raise CommandError(
                "indique --rates o bien --temperature, --coherence-wavelength y --waist", returncode=EXIT_USAGE,
            )
        labels = options['labels'].split(',') if options['labels'] else None
        if labels is not None and options['rates'] is not None and len(labels) != len(options['rates']):
            raise CommandError("--labels y --rates deben tener el mismo largo", returncode=EXIT_USAGE)
        return {
            'rates': options['rates'],
            'labels': labels,
            'temperature': options['temperature'],
            'coherence_wavelength': options['coherence_wavelength'],
            'waist': options['waist'],
            'radiative_lifetime': options['radiative_lifetime'],
        }

    def budget(self, parameters):
        homogeneous = coherence_rate(parameters['radiative_lifetime']) if parameters.get('radiative_lifetime') else 0.0
        if parameters.get('rates') is not None:
            components = list(RateBudget.from_rates(parameters['rates'], parameters.get('labels')).components)
            if homogeneous:
                components.append(('homogeneous', homogeneous))
            return RateBudget(tuple(components))
        return motional_budget(
            parameters['temperature'], parameters['coherence_wavelength'], parameters['waist'],
            homogeneous_hz=homogeneous,
        )

    def run(self, parameters):
        budget = self.budget(parameters)
        lifetime = lifetime_budget(budget)
        payload = {
            'components': [{'label': label, 'rate_hz': rate} for label, rate in budget.components],
            'total_hz': budget.total_hz,
            'lifetime_s': lifetime,
        }
        lines = [f"{label:<18} {rate / 1e6:>8.4g} MHz" for label, rate in budget.components]
        lines.append(f"{'total':<18} {budget.total_hz / 1e6:>8.4g} MHz")
        lines.append(f"vida media = 1/(2π·{budget.total_hz / 1e6:.4g} MHz) = {lifetime * 1e9:.4g} ns")
        return payload, '\n'.join(lines)
