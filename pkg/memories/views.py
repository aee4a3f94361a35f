from rest_framework import status, viewsets
from rest_framework.decorators import action
from rest_framework.exceptions import ValidationError
from rest_framework.filters import OrderingFilter, SearchFilter
from rest_framework.permissions import IsAuthenticated
from rest_framework.response import Response
from drf_spectacular.utils import OpenApiParameter, extend_schema, extend_schema_view
from django_filters.rest_framework import DjangoFilterBackend

from .benchkit import RANK_KEYS, plot_payload, rank
from .decay import (
    DecayModelParams, RateBudget, coupling_projection, derived_times, efficiency_at, lifetime_budget,
)
from .exceptions import DomainError
from .models import PublishedMemory
from .serializers import (
    BudgetRequestSerializer, CouplingRequestSerializer, DerivedMetricsSerializer,
    EfficiencyRequestSerializer, PublishedMemoryDetailSerializer, PublishedMemorySerializer,
    RateResultSerializer, SyncParamsSerializer,
)
from .syncrate import n_photon_rate


def _metrics(queryset):
    """Registros y métricas derivadas en el orden del queryset."""
    memories = list(queryset)
    try:
        return memories, [memory.derived_metrics() for memory in memories]
    except DomainError as exc:
        raise ValidationError({'detail': str(exc)})


@extend_schema_view(
    list=extend_schema(
        summary='Listar memorias publicadas',
        description='Retorna una lista paginada de memorias publicadas con sus parámetros crudos y la procedencia de cada valor. Permite filtrar por protocolo y temperatura ambiente y buscar por etiqueta o nota.',
        tags=['Memorias'],
        responses={200: {'description': 'Lista de memorias'}},
    ),
    create=extend_schema(
        summary='Crear memoria',
        description='Crea una memoria publicada nueva. Los parámetros se validan con las mismas reglas que el dataset (tiempos positivos, eficiencias en [0, 1]).',
        tags=['Memorias'],
        responses={201: {'description': 'Memoria creada exitosamente'}},
    ),
    retrieve=extend_schema(
        summary='Obtener memoria',
        description='Retorna los parámetros de una memoria junto con sus figuras de mérito derivadas (tau_c, eta0, f\', f\'_e, mu1, r6).',
        tags=['Memorias'],
        responses={200: {'description': 'Detalles de la memoria con métricas derivadas'}},
    ),
    update=extend_schema(summary='Actualizar memoria', tags=['Memorias']),
    partial_update=extend_schema(summary='Actualizar memoria parcialmente', tags=['Memorias']),
    destroy=extend_schema(
        summary='Eliminar memoria',
        tags=['Memorias'],
        responses={204: {'description': 'Memoria eliminada exitosamente'}},
    ),
)
class PublishedMemoryViewSet(viewsets.ModelViewSet):
    """
    ViewSet para gestionar memorias publicadas con CRUD completo.

    Incluye endpoints para métricas derivadas, ranking y datos del gráfico.
    """
    queryset = PublishedMemory.objects.all()
    serializer_class = PublishedMemorySerializer
    permission_classes = [IsAuthenticated]
    filter_backends = [DjangoFilterBackend, SearchFilter, OrderingFilter]
    filterset_fields = ['protocol', 'room_temperature']
    search_fields = ['label', 'footnote']
    ordering_fields = ['id', 'label', 'tau_p', 'tau_s', 'created_at']
    ordering = ['id']

    def get_serializer_class(self):
        """Retorna el serializer apropiado según la acción."""
        if self.action == 'retrieve':
            return PublishedMemoryDetailSerializer
        return PublishedMemorySerializer

    @extend_schema(
        summary='Métricas derivadas',
        description='Calcula tau_c, eta0, f\', f\'_e, mu1 y r6 (min^-1) de la memoria con N=6, q=1e-3 y la política de R por defecto.',
        tags=['Memorias', 'Métricas'],
        responses={200: DerivedMetricsSerializer},
    )
    @action(detail=True, methods=['get'])
    def derived(self, request, pk=None):
        memory = self.get_object()
        _, metrics = _metrics([memory])
        return Response(DerivedMetricsSerializer(metrics[0]).data)

    @extend_schema(
        summary='Ranking de memorias',
        description='Ordena las memorias (filtradas) por r6 o f\'_e descendente, o por mu1 ascendente.',
        tags=['Memorias', 'Métricas'],
        parameters=[OpenApiParameter('key', str, enum=list(RANK_KEYS), description='Clave de orden (r6 por defecto)')],
        responses={200: DerivedMetricsSerializer(many=True)},
    )
    @action(detail=False, methods=['get'])
    def ranking(self, request):
        key = request.query_params.get('key', 'r6')
        if key not in RANK_KEYS:
            raise ValidationError({'key': f"debe ser una de {', '.join(RANK_KEYS)}"})
        memories, metrics = _metrics(self.filter_queryset(self.get_queryset()))
        records = [memory.to_record() for memory in memories]
        ranked = rank(records, metrics, key)
        return Response({
            'key': key,
            'results': DerivedMetricsSerializer([met for _, met in ranked], many=True).data,
        })

    @extend_schema(
        summary='Datos del gráfico ruido/tasa',
        description='Retorna los puntos (mu1, r6) de cada memoria con metadatos de ejes logarítmicos y la línea de referencia en q = 1e-3.',
        tags=['Memorias', 'Métricas'],
        responses={200: {'description': 'Datos del gráfico'}},
    )
    @action(detail=False, methods=['get'], url_path='plot-data')
    def plot_data(self, request):
        memories, metrics = _metrics(self.filter_queryset(self.get_queryset()))
        return Response(plot_payload([memory.to_record() for memory in memories], metrics))


class ToolkitViewSet(viewsets.ViewSet):
    """
    Cálculos sin estado del toolkit: tasa de sincronización, presupuesto de
    vida media, eficiencia del modelo y parámetro de acoplamiento.
    """
    permission_classes = [IsAuthenticated]

    def _validated(self, serializer_class, data):
        serializer = serializer_class(data=data)
        serializer.is_valid(raise_exception=True)
        return serializer

    @extend_schema(
        summary='Tasa de N fotones',
        description='Calcula la tasa de sincronización de N fotones (s^-1 y min^-1), el factor de mejora por unidad, b, R e Y.',
        tags=['Toolkit'],
        request=SyncParamsSerializer,
        responses={200: RateResultSerializer},
    )
    @action(detail=False, methods=['post'])
    def rate(self, request):
        params = self._validated(SyncParamsSerializer, request.data).save()
        try:
            result = n_photon_rate(params)
        except DomainError as exc:
            raise ValidationError({'detail': str(exc)})
        return Response(RateResultSerializer(result).data)

    @extend_schema(
        summary='Presupuesto de vida media',
        description='Suma tasas de decoherencia en Hz cíclicos (admite sufijos como "1.22MHz") y retorna la vida media 1/(2π Σf).',
        tags=['Toolkit'],
        request=BudgetRequestSerializer,
        responses={200: {'description': 'Componentes, total y vida media'}},
    )
    @action(detail=False, methods=['post'])
    def budget(self, request):
        data = self._validated(BudgetRequestSerializer, request.data).validated_data
        try:
            budget = RateBudget.from_rates(data['rates'], data.get('labels'))
            lifetime = lifetime_budget(budget)
        except DomainError as exc:
            raise ValidationError({'detail': str(exc)})
        return Response({
            'components': [{'label': label, 'rate_hz': rate} for label, rate in budget.components],
            'total_hz': budget.total_hz,
            'lifetime_s': lifetime,
        })

    @extend_schema(
        summary='Eficiencia del modelo',
        description='Evalúa eta(t) del modelo para los parámetros y tiempos dados; incluye tau_gamma y tau_sigma cuando están definidos.',
        tags=['Toolkit'],
        request=EfficiencyRequestSerializer,
        responses={200: {'description': 'Eficiencias por tiempo'}},
    )
    @action(detail=False, methods=['post'])
    def efficiency(self, request):
        data = self._validated(EfficiencyRequestSerializer, request.data).validated_data
        params = DecayModelParams(**data['params'])
        values = [efficiency_at(params, t) for t in data['t']]
        response = {'t': data['t'], 'eta': values}
        if params.has_homogeneous_time:
            times = derived_times(params.tau_s, params.tau_bar)
            response.update({'tau_gamma': times.tau_gamma, 'tau_sigma': times.tau_sigma})
        return Response(response)

    @extend_schema(
        summary='Parámetro de acoplamiento',
        description='Calcula C = (Ω/Δ) sqrt(tau_p γ OD) / 4; las ganancias opcionales escalan potencia de control, desintonía y densidad óptica.',
        tags=['Toolkit'],
        request=CouplingRequestSerializer,
        responses={200: {'description': 'Parámetro de acoplamiento'}},
    )
    @action(detail=False, methods=['post'])
    def coupling(self, request):
        data = self._validated(CouplingRequestSerializer, request.data).validated_data
        try:
            value = coupling_projection(
                omega_over_delta=data['omega_over_delta'],
                gamma_od_product=data['gamma_od_product'],
                tau_p=data['tau_p'],
                power_gain=data['power_gain'],
                detuning_gain=data['detuning_gain'],
                od_gain=data['od_gain'],
            )
        except DomainError as exc:
            raise ValidationError({'detail': str(exc)})
        return Response({'coupling': value}, status=status.HTTP_200_OK)
