"""
Comparación de memorias publicadas.

Carga el dataset de memorias (un registro por publicación, con la procedencia
de cada valor), calcula las figuras de mérito derivadas, ordena y genera los
datos del gráfico ruido/señal contra tasa de 6 fotones.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .decay import external_efficiency, fractional_delays, noise_to_signal
from .exceptions import DatasetError, DomainError
from .syncrate import SyncTemplate, TABLE_Q, n_photon_rate

logger = logging.getLogger(__name__)

CLOCK_FLOOR = 20e-12
NOISE_FREE_MU1 = TABLE_Q
NOT_GIVEN = 'NG'

REQUIRED_COLUMNS = (
    'label', 'tau_p_s', 'tau_s_s', 'eta_int', 't_setup', 'nu',
    'prov_tau_p', 'prov_tau_s', 'prov_eta', 'prov_t', 'prov_nu', 'footnote',
)
OPTIONAL_COLUMNS = ('protocol', 'tau_c_s', 'prov_tau_c', 'eta0', 'prov_eta0', 'room_temperature')
COLUMNS = REQUIRED_COLUMNS + OPTIONAL_COLUMNS

# columna de procedencia -> campo del registro
PROVENANCE_COLUMNS = {
    'prov_tau_p': 'tau_p',
    'prov_tau_s': 'tau_s',
    'prov_eta': 'eta_int',
    'prov_t': 't_setup',
    'prov_nu': 'nu',
    'prov_tau_c': 'tau_c',
    'prov_eta0': 'eta0',
}

RANK_KEYS = {
    'r6': ('r6_per_min', True),
    'fe': ('f_prime_e', True),
    'mu1': ('mu1', False),
}


@dataclass(frozen=True)
class MemoryRecord:
    label: str
    tau_p: float
    tau_s: float
    eta_int: float
    t_setup: float
    nu: float
    provenance: dict[str, str] = field(default_factory=dict)
    footnote: str = ''
    protocol: str = ''
    tau_c: float | None = None
    eta0: float | None = None
    room_temperature: bool | None = None

    def __post_init__(self):
        if not self.label:
            raise DomainError("el registro necesita una etiqueta")
        if not (self.tau_p > 0 and self.tau_s > 0):
            raise DomainError(f"{self.label}: tau_p y tau_s deben ser positivos")
        for name in ('eta_int', 't_setup'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{self.label}: {name} debe estar en [0, 1]")
        if self.nu < 0:
            raise DomainError(f"{self.label}: nu no puede ser negativo")

    @property
    def ng_transmission(self):
        """La transmisión no fue publicada y se usa el límite superior 1.0."""
        return self.provenance.get('t_setup') == NOT_GIVEN


@dataclass(frozen=True)
class DerivedMetrics:
    label: str
    tau_c: float
    eta0: float
    f_prime: float
    f_prime_e: float
    mu1: float | None
    r6_per_min: float
    ng_transmission: bool = False
    noise_free: bool = False


def clock_cycle(tau_p: float, floor: float = CLOCK_FLOOR) -> float:
    """Ciclo de reloj: el mayor entre la duración del pulso y el piso electrónico."""
    if not tau_p > 0:
        raise DomainError(f"tau_p debe ser positivo, se recibió {tau_p}")
    return max(tau_p, floor)


def derive(rec: MemoryRecord, sync: SyncTemplate | None = None, floor: float = CLOCK_FLOOR,
           noise_free_mu1: float = NOISE_FREE_MU1) -> DerivedMetrics:
    """
    Figuras de mérito de un registro.

    tau_c publicado (p. ej. la vuelta de un lazo de almacenamiento) y eta0
    publicado tienen prioridad sobre los calculados. Con eta0 = 0, mu1 queda
    indefinido (None).
    """
    sync = sync or SyncTemplate()
    tau_c = clock_cycle(rec.tau_p, floor)
    if rec.tau_c is not None:
        tau_c = max(rec.tau_c, tau_c)
    eta0 = rec.eta0 if rec.eta0 is not None else external_efficiency(rec.eta_int, rec.t_setup)
    f_prime, f_prime_e = fractional_delays(eta0, rec.tau_s, tau_c)
    mu1 = noise_to_signal(rec.nu, eta0) if eta0 > 0 else None
    rate = n_photon_rate(sync.bind(tau_c, eta0, f_prime))
    return DerivedMetrics(
        label=rec.label,
        tau_c=tau_c,
        eta0=eta0,
        f_prime=f_prime,
        f_prime_e=f_prime_e,
        mu1=mu1,
        r6_per_min=rate.rate_per_minute,
        ng_transmission=rec.ng_transmission,
        noise_free=mu1 is not None and mu1 < noise_free_mu1,
    )


def derive_all(records, sync=None, floor=CLOCK_FLOOR, noise_free_mu1=NOISE_FREE_MU1):
    return [derive(rec, sync, floor, noise_free_mu1) for rec in records]


def load_dataset(path) -> list[MemoryRecord]:
    """
    Lee el CSV del dataset.

    Cada fila pasa por MemoryRecordSerializer; los errores indican fila de
    datos (desde 1) y columna. Las etiquetas repetidas se rechazan.
    """
    from .serializers import MemoryRecordSerializer

    path = Path(path)
    if not path.is_file():
        raise DatasetError("el archivo no existe", path=path)
    with path.open(newline='', encoding='utf-8') as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            logger.warning("Dataset vacío: %s", path)
            return []
        missing = [column for column in REQUIRED_COLUMNS if column not in reader.fieldnames]
        if missing:
            raise DatasetError("falta la columna", column=missing[0], path=path)
        unknown = [column for column in reader.fieldnames if column not in COLUMNS]
        if unknown:
            raise DatasetError("columna desconocida", column=unknown[0], path=path)

        records = []
        seen = {}
        for row_number, row in enumerate(reader, start=1):
            if None in row:
                raise DatasetError("la fila tiene más campos que la cabecera", row=row_number, path=path)
            serializer = MemoryRecordSerializer(data=row)
            if not serializer.is_valid():
                column, messages = next(iter(serializer.errors.items()))
                raise DatasetError(str(messages[0]), row=row_number, column=column, path=path)
            record = serializer.save()
            if record.label in seen:
                raise DatasetError(
                    f"etiqueta repetida '{record.label}' (ya en la fila {seen[record.label]})",
                    row=row_number, column='label', path=path,
                )
            seen[record.label] = row_number
            records.append(record)
    if not records:
        logger.warning("Dataset sin filas: %s", path)
    logger.debug("Cargados %d registros de %s", len(records), path)
    return records


def dump_dataset(records, path):
    """Escribe los registros con la cabecera completa; los números con repr para no perder precisión."""
    from .serializers import MemoryRecordSerializer

    path = Path(path)
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.DictWriter(handle, fieldnames=COLUMNS)
        writer.writeheader()
        for record in records:
            writer.writerow(MemoryRecordSerializer.to_row(record))
    return path


def rank(records, derived, key='r6'):
    """
    Pares (registro, métricas) ordenados: r6 y fe descendente, mu1 ascendente;
    orden estable. Las métricas indefinidas van al final.
    """
    if key not in RANK_KEYS:
        raise DomainError(f"clave de orden desconocida: '{key}' (opciones: {', '.join(RANK_KEYS)})")
    attribute, descending = RANK_KEYS[key]
    pairs = list(zip(records, derived))
    defined = [pair for pair in pairs if getattr(pair[1], attribute) is not None]
    undefined = [pair for pair in pairs if getattr(pair[1], attribute) is None]
    return sorted(defined, key=lambda pair: getattr(pair[1], attribute), reverse=descending) + undefined


def best_noise_free(records, derived, room_temperature=True):
    """Memoria sin ruido (mu1 < q) con mayor f'_e, opcionalmente sólo a temperatura ambiente."""
    candidates = [
        (rec, met) for rec, met in zip(records, derived)
        if met.noise_free and (not room_temperature or rec.room_temperature)
    ]
    if not candidates:
        return None
    return max(candidates, key=lambda pair: pair[1].f_prime_e)


def plot_payload(records, derived, reference_q=TABLE_Q):
    """Datos del gráfico: eje x mu1 (log), eje y r6 en min^-1 (log) y la línea de referencia en q."""
    return {
        'x': {'quantity': 'mu1', 'label': 'noise-to-signal mu1', 'unit': '', 'scale': 'log'},
        'y': {'quantity': 'r6_per_min', 'label': '6-photon rate', 'unit': 'min^-1', 'scale': 'log'},
        'reference_lines': [
            {'axis': 'x', 'value': reference_q, 'label': f'q = {reference_q:g}'},
        ],
        'points': [
            {
                'label': rec.label,
                'protocol': rec.protocol,
                'room_temperature': rec.room_temperature,
                'mu1': met.mu1,
                'r6_per_min': met.r6_per_min,
                'f_prime_e': met.f_prime_e,
                'noise_free': met.noise_free,
                'ng_transmission': met.ng_transmission,
            }
            for rec, met in zip(records, derived)
        ],
    }


def format_table(derived):
    """Tabla de texto label, mu1, r6, f'_e; las filas con transmisión NG llevan '*'."""
    width = max([len('label')] + [len(met.label) + 1 for met in derived])
    lines = [f"{'label':<{width}}  {'mu1':>10}  {'r6[1/min]':>10}  {'fe':>10}"]
    for met in derived:
        label = met.label + ('*' if met.ng_transmission else '')
        mu1 = f"{met.mu1:>10.3g}" if met.mu1 is not None else f"{'-':>10}"
        lines.append(f"{label:<{width}}  {mu1}  {met.r6_per_min:>10.3g}  {met.f_prime_e:>10.3g}")
    return '\n'.join(lines) + '\n'


def emit_plot_data(records, derived, path):
    """
    Escribe la tabla de texto en `path` y el JSON con metadatos de ejes junto a
    ella (misma ruta con extensión .json). Devuelve ambas rutas.
    """
    path = Path(path)
    json_path = path.with_suffix('.json')
    if json_path == path:
        json_path = path.with_name(path.name + '.plot.json')
    path.write_text(format_table(derived), encoding='utf-8')
    json_path.write_text(json.dumps(plot_payload(records, derived), indent=2), encoding='utf-8')
    logger.info("Datos del gráfico escritos en %s y %s", path, json_path)
    return path, json_path
