import re

from rest_framework import serializers

from .benchkit import COLUMNS, PROVENANCE_COLUMNS, MemoryRecord
from .cli import RunManifest
from .decay import BEAT42_HZ, BEAT43_HZ, DecayModelParams, derived_times
from .exceptions import DomainError
from .mcsim import LANES, SimConfig
from .models import PublishedMemory
from .syncrate import TABLE_N, TABLE_Q, RPolicy, SyncParams
from .units import QuantityError, parse_quantity

PROVENANCE_PATTERN = re.compile(r'^(MT|MS|SM|C|NG|EF\d+(?:,\d+)*)[a-z]*$')


class QuantityField(serializers.FloatField):
    """Número o texto con sufijo de unidad ('1.7ns', '28.82 MHz'), convertido a SI."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            try:
                data = parse_quantity(data)
            except QuantityError as exc:
                raise serializers.ValidationError(str(exc))
        return super().to_internal_value(data)


class DomainSerializerMixin:
    """Convierte DomainError de los constructores en errores de validación."""

    def build(self, factory, **kwargs):
        try:
            return factory(**kwargs)
        except DomainError as exc:
            raise serializers.ValidationError({'non_field_errors': [str(exc)]})


class DecayModelParamsSerializer(DomainSerializerMixin, serializers.Serializer):
    """Parámetros del modelo de eficiencia, con los tiempos de envolvente derivados."""
    eta0 = serializers.FloatField(min_value=0.0, max_value=1.0)
    tau_s = QuantityField()
    tau_bar = QuantityField()
    t0 = QuantityField(default=0.0)
    A = serializers.FloatField(min_value=0.0, default=0.0)
    B = serializers.FloatField(min_value=0.0, default=0.0)
    beat43_hz = QuantityField(default=BEAT43_HZ)
    beat42_hz = QuantityField(default=BEAT42_HZ)
    envelope = serializers.SerializerMethodField()

    def get_envelope(self, obj):
        """tau_gamma y tau_sigma cuando tau_bar > tau_s; None en otro caso."""
        if not obj.has_homogeneous_time:
            return None
        times = derived_times(obj.tau_s, obj.tau_bar)
        return {'tau_gamma': times.tau_gamma, 'tau_sigma': times.tau_sigma}

    def validate(self, attrs):
        self.build(DecayModelParams, **attrs)
        return attrs

    def create(self, validated_data):
        return DecayModelParams(**validated_data)


class FitResultSerializer(serializers.Serializer):
    params = DecayModelParamsSerializer(read_only=True)
    stderr = serializers.DictField(child=serializers.FloatField(), read_only=True)
    residual_norm = serializers.FloatField(read_only=True)
    converged = serializers.BooleanField(read_only=True)
    iterations = serializers.IntegerField(read_only=True)
    evaluations = serializers.IntegerField(read_only=True)
    singular = serializers.BooleanField(read_only=True)
    weighted = serializers.BooleanField(read_only=True)
    n_samples = serializers.IntegerField(read_only=True)
    message = serializers.CharField(read_only=True)
    warnings = serializers.ListField(child=serializers.CharField(), read_only=True)


class RPolicyField(serializers.Field):
    """'root_as_stated', 'root_table_consistent', 'literal(v)' o un número."""

    def to_internal_value(self, data):
        try:
            return RPolicy.parse(data)
        except (DomainError, ValueError) as exc:
            raise serializers.ValidationError(str(exc))

    def to_representation(self, value):
        return str(value)


class SyncParamsSerializer(DomainSerializerMixin, serializers.Serializer):
    n_sources = serializers.IntegerField(min_value=1, default=TABLE_N)
    q = serializers.FloatField(default=TABLE_Q)
    tau_c = QuantityField()
    eta0 = serializers.FloatField(min_value=0.0, max_value=1.0)
    f = serializers.FloatField()
    r_policy = RPolicyField(source='policy', required=False, allow_null=True)

    def validate(self, attrs):
        attrs['r_policy'] = attrs.pop('policy', None)
        self.build(SyncParams, **attrs)
        return attrs

    def create(self, validated_data):
        return SyncParams(**validated_data)


class RateResultSerializer(serializers.Serializer):
    rate = serializers.FloatField(read_only=True)
    rate_per_minute = serializers.FloatField(read_only=True)
    enhancement = serializers.FloatField(read_only=True)
    b = serializers.FloatField(read_only=True)
    R = serializers.FloatField(read_only=True)
    Y = serializers.FloatField(read_only=True)
    policy = serializers.CharField(read_only=True)


class SimConfigSerializer(DomainSerializerMixin, serializers.Serializer):
    """Configuración de simulación; acepta b directamente o f para aplicar b = 1 - e^{-1/f}."""
    n_sources = serializers.IntegerField(min_value=1)
    q = serializers.FloatField(min_value=0.0, max_value=1.0)
    b = serializers.FloatField(min_value=0.0, max_value=1.0, required=False)
    f = serializers.FloatField(write_only=True, required=False)
    eta0 = serializers.FloatField(min_value=0.0, max_value=1.0)
    n_cycles = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0, default=0)
    replicas = serializers.IntegerField(min_value=1, default=1)
    lanes = serializers.IntegerField(min_value=1, default=LANES)
    keep_unretrieved = serializers.BooleanField(default=False)

    def validate(self, attrs):
        f = attrs.pop('f', None)
        if ('b' in attrs) == (f is not None):
            raise serializers.ValidationError("indique exactamente uno de b o f")
        if f is not None:
            return {'config': self.build(SimConfig.from_fractional_delay, f=f, **attrs)}
        return {'config': self.build(SimConfig, **attrs)}

    def create(self, validated_data):
        return validated_data['config']


class SimResultSerializer(serializers.Serializer):
    config = SimConfigSerializer(read_only=True)
    n_successes = serializers.IntegerField(read_only=True)
    n_readout_attempts = serializers.IntegerField(read_only=True)
    cycles_elapsed = serializers.IntegerField(read_only=True)
    rate_per_cycle = serializers.FloatField(read_only=True)
    ci95 = serializers.FloatField(read_only=True)
    unit_availability = serializers.FloatField(read_only=True)
    streams = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()), read_only=True)


class AgreementPointSerializer(serializers.Serializer):
    n_sources = serializers.IntegerField(read_only=True)
    q = serializers.FloatField(read_only=True)
    f = serializers.FloatField(read_only=True)
    eta0 = serializers.FloatField(read_only=True)
    simulated = serializers.FloatField(read_only=True)
    simulated_ci95 = serializers.FloatField(read_only=True)
    analytic = serializers.FloatField(read_only=True)
    ratio = serializers.FloatField(read_only=True)
    ratio_ci95 = serializers.FloatField(read_only=True)


class DerivedMetricsSerializer(serializers.Serializer):
    label = serializers.CharField(read_only=True)
    tau_c = serializers.FloatField(read_only=True)
    eta0 = serializers.FloatField(read_only=True)
    f_prime = serializers.FloatField(read_only=True)
    f_prime_e = serializers.FloatField(read_only=True)
    mu1 = serializers.FloatField(read_only=True, allow_null=True)
    r6_per_min = serializers.FloatField(read_only=True)
    ng_transmission = serializers.BooleanField(read_only=True)
    noise_free = serializers.BooleanField(read_only=True)


class ProvenanceField(serializers.CharField):
    def __init__(self, **kwargs):
        kwargs.setdefault('allow_blank', True)
        kwargs.setdefault('required', False)
        kwargs.setdefault('default', '')
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if value and not PROVENANCE_PATTERN.match(value):
            raise serializers.ValidationError(f"código de procedencia inválido: '{value}'")
        return value


class TransmissionField(serializers.FloatField):
    """Transmisión del montaje; 'NG' (no publicada) se lee como el límite superior 1.0."""

    def to_internal_value(self, data):
        if isinstance(data, str) and data.strip().upper() == 'NG':
            return 1.0
        return super().to_internal_value(data)


class MemoryRecordSerializer(DomainSerializerMixin, serializers.Serializer):
    """
    Una fila del dataset de memorias publicadas.

    Los nombres de campo son las columnas del CSV, de modo que los errores
    de validación nombran la columna afectada.
    """
    label = serializers.CharField(max_length=100)
    tau_p_s = QuantityField(source='tau_p')
    tau_s_s = QuantityField(source='tau_s')
    eta_int = serializers.FloatField(min_value=0.0, max_value=1.0)
    t_setup = TransmissionField(min_value=0.0, max_value=1.0)
    nu = serializers.FloatField(min_value=0.0)
    prov_tau_p = ProvenanceField(source='provenance.tau_p')
    prov_tau_s = ProvenanceField(source='provenance.tau_s')
    prov_eta = ProvenanceField(source='provenance.eta_int')
    prov_t = ProvenanceField(source='provenance.t_setup')
    prov_nu = ProvenanceField(source='provenance.nu')
    footnote = serializers.CharField(allow_blank=True, required=False, default='')
    protocol = serializers.CharField(allow_blank=True, required=False, default='', max_length=20)
    tau_c_s = QuantityField(source='tau_c', required=False, allow_null=True, default=None)
    prov_tau_c = ProvenanceField(source='provenance.tau_c')
    eta0 = serializers.FloatField(min_value=0.0, max_value=1.0, required=False, allow_null=True, default=None)
    prov_eta0 = ProvenanceField(source='provenance.eta0')
    room_temperature = serializers.BooleanField(required=False, allow_null=True, default=None)

    OPTIONAL_BLANKS = ('tau_c_s', 'eta0', 'room_temperature')

    def to_internal_value(self, data):
        data = {key: value.strip() if isinstance(value, str) else value for key, value in data.items()}
        for name in self.OPTIONAL_BLANKS:
            if data.get(name) == '':
                data[name] = None
        return super().to_internal_value(data)

    def validate_tau_p_s(self, value):
        if not value > 0:
            raise serializers.ValidationError("debe ser positivo")
        return value

    def validate_tau_s_s(self, value):
        if not value > 0:
            raise serializers.ValidationError("debe ser positivo")
        return value

    def validate_tau_c_s(self, value):
        if value is not None and not value > 0:
            raise serializers.ValidationError("debe ser positivo")
        return value

    def validate(self, attrs):
        provenance = attrs.setdefault('provenance', {})
        for name in PROVENANCE_COLUMNS.values():
            provenance.setdefault(name, '')
        raw_t = self.initial_data.get('t_setup') if isinstance(self.initial_data, dict) else None
        if isinstance(raw_t, str) and raw_t.strip().upper() == 'NG':
            provenance['t_setup'] = 'NG'
        return attrs

    def create(self, validated_data):
        return self.build(MemoryRecord, **validated_data)

    @staticmethod
    def to_row(record):
        """Fila CSV con todas las columnas; vacío para los opcionales ausentes."""
        def number(value):
            return '' if value is None else repr(float(value))

        row = {
            'label': record.label,
            'tau_p_s': number(record.tau_p),
            'tau_s_s': number(record.tau_s),
            'eta_int': number(record.eta_int),
            't_setup': number(record.t_setup),
            'nu': number(record.nu),
            'footnote': record.footnote,
            'protocol': record.protocol,
            'tau_c_s': number(record.tau_c),
            'eta0': number(record.eta0),
            'room_temperature': '' if record.room_temperature is None else str(record.room_temperature).lower(),
        }
        for column, name in PROVENANCE_COLUMNS.items():
            row[column] = record.provenance.get(name, '')
        return {column: row[column] for column in COLUMNS}


class PublishedMemorySerializer(serializers.ModelSerializer):
    """Serializer para el modelo PublishedMemory."""
    ng_transmission = serializers.BooleanField(read_only=True)

    class Meta:
        model = PublishedMemory
        fields = [
            'id', 'label', 'protocol', 'room_temperature',
            'tau_p', 'tau_s', 'eta_int', 't_setup', 'nu', 'tau_c', 'eta0',
            'prov_tau_p', 'prov_tau_s', 'prov_eta', 'prov_t', 'prov_nu', 'prov_tau_c', 'prov_eta0',
            'footnote', 'ng_transmission', 'created_at', 'updated_at',
        ]
        read_only_fields = ['created_at', 'updated_at']

    def validate(self, attrs):
        values = {**self._instance_values(), **attrs}
        try:
            PublishedMemory(**values).to_record()
        except DomainError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def _instance_values(self):
        if self.instance is None:
            return {}
        return {field.name: getattr(self.instance, field.name) for field in PublishedMemory._meta.concrete_fields
                if field.name != 'id'}


class PublishedMemoryDetailSerializer(PublishedMemorySerializer):
    """Serializer detallado de PublishedMemory con las figuras de mérito derivadas."""
    derived = serializers.SerializerMethodField()

    class Meta(PublishedMemorySerializer.Meta):
        fields = PublishedMemorySerializer.Meta.fields + ['derived']

    def get_derived(self, obj):
        """Figuras de mérito calculadas con la plantilla de sincronización por defecto."""
        return DerivedMetricsSerializer(obj.derived_metrics()).data


class RunManifestSerializer(serializers.Serializer):
    """Manifiesto de ejecución: subcomando, parámetros SI, semilla, versión y defaults."""
    subcommand = serializers.CharField()
    parameters = serializers.DictField()
    seed = serializers.IntegerField(allow_null=True, required=False, default=None)
    version = serializers.CharField()
    defaults = serializers.DictField(required=False, default=dict)

    def create(self, validated_data):
        return RunManifest(**validated_data)


class BudgetRequestSerializer(serializers.Serializer):
    rates = serializers.ListField(child=QuantityField(min_value=0.0), min_length=1)
    labels = serializers.ListField(child=serializers.CharField(), required=False)

    def validate(self, attrs):
        labels = attrs.get('labels')
        if labels is not None and len(labels) != len(attrs['rates']):
            raise serializers.ValidationError("labels y rates deben tener el mismo largo")
        return attrs


class EfficiencyRequestSerializer(serializers.Serializer):
    params = DecayModelParamsSerializer()
    t = serializers.ListField(child=QuantityField(), min_length=1)


class CouplingRequestSerializer(serializers.Serializer):
    omega_over_delta = serializers.FloatField(min_value=0.0)
    tau_p = QuantityField()
    gamma_od_product = QuantityField()
    power_gain = serializers.FloatField(min_value=0.0, default=1.0)
    detuning_gain = serializers.FloatField(min_value=0.0, default=1.0)
    od_gain = serializers.FloatField(min_value=0.0, default=1.0)

    def validate_detuning_gain(self, value):
        if value <= 0:
            raise serializers.ValidationError("debe ser positivo")
        return value
