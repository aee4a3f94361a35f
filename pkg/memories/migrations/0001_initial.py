# Generated by Django 5.2 on 2026-10-17 10:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='PublishedMemory',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('label', models.CharField(max_length=100, unique=True)),
                ('protocol', models.CharField(blank=True, choices=[('Raman', 'Raman'), ('EIT', 'EIT'), ('GEM', 'Gradient echo'), ('AFC', 'Atomic frequency comb'), ('SL', 'Storage loop'), ('ORCA', 'ORCA'), ('FLAME', 'FLAME')], max_length=20)),
                ('room_temperature', models.BooleanField(blank=True, null=True)),
                ('tau_p', models.FloatField(help_text='Duración del pulso [s]')),
                ('tau_s', models.FloatField(help_text='Vida media 1/e [s]')),
                ('eta_int', models.FloatField(help_text='Eficiencia interna')),
                ('t_setup', models.FloatField(help_text='Transmisión del montaje')),
                ('nu', models.FloatField(help_text='Fotones de ruido por intento de lectura')),
                ('tau_c', models.FloatField(blank=True, help_text='Ciclo de reloj publicado [s]', null=True)),
                ('eta0', models.FloatField(blank=True, help_text='Eficiencia externa publicada', null=True)),
                ('prov_tau_p', models.CharField(blank=True, max_length=20)),
                ('prov_tau_s', models.CharField(blank=True, max_length=20)),
                ('prov_eta', models.CharField(blank=True, max_length=20)),
                ('prov_t', models.CharField(blank=True, max_length=20)),
                ('prov_nu', models.CharField(blank=True, max_length=20)),
                ('prov_tau_c', models.CharField(blank=True, max_length=20)),
                ('prov_eta0', models.CharField(blank=True, max_length=20)),
                ('footnote', models.TextField(blank=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
            ],
            options={
                'verbose_name': 'Published memory',
                'verbose_name_plural': 'Published memories',
                'ordering': ['id'],
                'indexes': [models.Index(fields=['protocol'], name='memories_protocol_idx'), models.Index(fields=['room_temperature'], name='memories_room_temp_idx')],
            },
        ),
    ]
