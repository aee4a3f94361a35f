from django.db import models

from .benchkit import MemoryRecord, derive
from .conf import get_setting, sync_template


class PublishedMemory(models.Model):
    """Memoria publicada: parámetros crudos con su procedencia, uno por trabajo."""
    class Protocol(models.TextChoices):
        RAMAN = 'Raman', 'Raman'
        EIT = 'EIT', 'EIT'
        GEM = 'GEM', 'Gradient echo'
        AFC = 'AFC', 'Atomic frequency comb'
        SL = 'SL', 'Storage loop'
        ORCA = 'ORCA', 'ORCA'
        FLAME = 'FLAME', 'FLAME'

    label = models.CharField(max_length=100, unique=True)
    protocol = models.CharField(max_length=20, choices=Protocol.choices, blank=True)
    room_temperature = models.BooleanField(null=True, blank=True)
    tau_p = models.FloatField(help_text='Duración del pulso [s]')
    tau_s = models.FloatField(help_text='Vida media 1/e [s]')
    eta_int = models.FloatField(help_text='Eficiencia interna')
    t_setup = models.FloatField(help_text='Transmisión del montaje')
    nu = models.FloatField(help_text='Fotones de ruido por intento de lectura')
    tau_c = models.FloatField(null=True, blank=True, help_text='Ciclo de reloj publicado [s]')
    eta0 = models.FloatField(null=True, blank=True, help_text='Eficiencia externa publicada')
    prov_tau_p = models.CharField(max_length=20, blank=True)
    prov_tau_s = models.CharField(max_length=20, blank=True)
    prov_eta = models.CharField(max_length=20, blank=True)
    prov_t = models.CharField(max_length=20, blank=True)
    prov_nu = models.CharField(max_length=20, blank=True)
    prov_tau_c = models.CharField(max_length=20, blank=True)
    prov_eta0 = models.CharField(max_length=20, blank=True)
    footnote = models.TextField(blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    # campo del modelo -> clave de procedencia del registro
    PROVENANCE_FIELDS = {
        'prov_tau_p': 'tau_p',
        'prov_tau_s': 'tau_s',
        'prov_eta': 'eta_int',
        'prov_t': 't_setup',
        'prov_nu': 'nu',
        'prov_tau_c': 'tau_c',
        'prov_eta0': 'eta0',
    }

    class Meta:
        ordering = ['id']
        verbose_name = 'Published memory'
        verbose_name_plural = 'Published memories'
        indexes = [
            models.Index(fields=['protocol'], name='memories_protocol_idx'),
            models.Index(fields=['room_temperature'], name='memories_room_temp_idx'),
        ]

    def __str__(self):
        return self.label

    @property
    def ng_transmission(self):
        return self.prov_t == 'NG'

    def to_record(self):
        """Convierte la fila en un MemoryRecord validado."""
        return MemoryRecord(
            label=self.label,
            tau_p=self.tau_p,
            tau_s=self.tau_s,
            eta_int=self.eta_int,
            t_setup=self.t_setup,
            nu=self.nu,
            provenance={key: getattr(self, field) for field, key in self.PROVENANCE_FIELDS.items()},
            footnote=self.footnote,
            protocol=self.protocol,
            tau_c=self.tau_c,
            eta0=self.eta0,
            room_temperature=self.room_temperature,
        )

    @classmethod
    def values_from_record(cls, record):
        """Valores de campo (sin label) para update_or_create."""
        values = {
            'protocol': record.protocol,
            'room_temperature': record.room_temperature,
            'tau_p': record.tau_p,
            'tau_s': record.tau_s,
            'eta_int': record.eta_int,
            't_setup': record.t_setup,
            'nu': record.nu,
            'tau_c': record.tau_c,
            'eta0': record.eta0,
            'footnote': record.footnote,
        }
        for field, key in cls.PROVENANCE_FIELDS.items():
            values[field] = record.provenance.get(key, '')
        return values

    @classmethod
    def from_record(cls, record):
        """Instancia sin guardar a partir de un MemoryRecord."""
        return cls(label=record.label, **cls.values_from_record(record))

    def derived_metrics(self):
        return derive(
            self.to_record(),
            sync_template(),
            floor=get_setting('CLOCK_FLOOR'),
            noise_free_mu1=get_setting('NOISE_FREE_MU1'),
        )
