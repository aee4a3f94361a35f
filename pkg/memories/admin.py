from django.contrib import admin
from .models import PublishedMemory


@admin.register(PublishedMemory)
class PublishedMemoryAdmin(admin.ModelAdmin):
    list_display = ['label', 'protocol', 'room_temperature', 'tau_p', 'tau_s', 'eta_int', 't_setup', 'nu', 'get_r6']
    list_filter = ['protocol', 'room_temperature', 'prov_t']
    search_fields = ['label', 'footnote']
    ordering = ['id']
    readonly_fields = ['created_at', 'updated_at']
    fieldsets = [
        (None, {'fields': ['label', 'protocol', 'room_temperature', 'footnote']}),
        ('Parámetros', {'fields': ['tau_p', 'tau_s', 'eta_int', 't_setup', 'nu', 'tau_c', 'eta0']}),
        ('Procedencia', {'fields': ['prov_tau_p', 'prov_tau_s', 'prov_eta', 'prov_t', 'prov_nu', 'prov_tau_c', 'prov_eta0']}),
        ('Fechas', {'fields': ['created_at', 'updated_at']}),
    ]

    def get_r6(self, obj):
        return f"{obj.derived_metrics().r6_per_min:.3g}"
    get_r6.short_description = 'r6 [1/min]'
