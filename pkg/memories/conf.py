"""Valores por defecto del toolkit, sobreescribibles con el dict MEMORIES de settings."""
import os
from pathlib import Path

from django.conf import settings

BUNDLED_DATASET = Path(__file__).resolve().parent / 'data' / 'memories.csv'

DEFAULTS = {
    'CLOCK_FLOOR': 20e-12,
    'DATASET_PATH': str(BUNDLED_DATASET),
    'BEAT43_HZ': 28.82e6,
    'BEAT42_HZ': 51.77e6,
    'SYNC_N': 6,
    'SYNC_Q': 1e-3,
    'R_LITERAL': 0.0024,
    'NOISE_FREE_MU1': 1e-3,
    'FIT_MAX_ITERATIONS': 500,
    'FIT_XTOL': 1e-10,
    'FIT_FTOL': 1e-12,
    'FIT_DIFF_STEP': 1e-6,
    'SIM_LANES': 256,
    'SIM_BLOCK': 512,
}


def get_setting(name):
    """Lee MEMORIES[name] de settings; la variable MEMORIES_DATASET tiene prioridad para el dataset."""
    if name not in DEFAULTS:
        raise KeyError(f"Configuración desconocida: {name}")
    if name == 'DATASET_PATH' and os.getenv('MEMORIES_DATASET'):
        return os.getenv('MEMORIES_DATASET')
    return getattr(settings, 'MEMORIES', {}).get(name, DEFAULTS[name])


def resolved_defaults():
    """Todas las claves resueltas, para volcarlas en el manifiesto de ejecución."""
    return {name: get_setting(name) for name in DEFAULTS}


def sync_template():
    """Plantilla (N, q, política de R) de la comparación, con R literal en el punto de las tablas."""
    from .syncrate import RPolicy, SyncTemplate, default_policy

    n, q = get_setting('SYNC_N'), get_setting('SYNC_Q')
    policy = default_policy(n, q)
    if policy.value is not None:
        policy = RPolicy.literal(get_setting('R_LITERAL'))
    return SyncTemplate(n_sources=n, q=q, r_policy=policy)
