import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='AugmentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.SlugField(max_length=100, unique=True, verbose_name='nombre')),
                ('seed', models.BigIntegerField(default=0, verbose_name='semilla')),
                ('config', models.JSONField(default=dict, verbose_name='configuración')),
                ('status', models.CharField(choices=[('running', 'En curso'), ('completed', 'Completada'), ('failed', 'Fallida')], default='running', max_length=20, verbose_name='estado')),
                ('report', models.JSONField(blank=True, null=True, verbose_name='reporte')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='fecha de creación')),
                ('updated_at', models.DateTimeField(auto_now=True, verbose_name='última actualización')),
            ],
            options={
                'verbose_name': 'corrida de aumento',
                'verbose_name_plural': 'corridas de aumento',
                'db_table': 'augment_runs',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='SceneRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scene_id', models.CharField(max_length=64, verbose_name='escena')),
                ('status', models.CharField(choices=[('completed', 'Aumentada'), ('skipped', 'Omitida'), ('failed', 'Fallida')], max_length=20, verbose_name='estado')),
                ('tail_class', models.CharField(blank=True, max_length=20, verbose_name='clase cola')),
                ('variant_ids', models.JSONField(default=list, verbose_name='variantes')),
                ('removed_counts', models.JSONField(default=dict, verbose_name='eliminados por clase')),
                ('inserted_counts', models.JSONField(default=dict, verbose_name='insertados por clase')),
                ('class_counts', models.JSONField(default=dict, verbose_name='conteo de las variantes')),
                ('judge_tallies', models.JSONField(default=dict, verbose_name='conteo de jueces')),
                ('plan_failures', models.PositiveIntegerField(default=0, verbose_name='objetos sin plan')),
                ('stage_failures', models.PositiveIntegerField(default=0, verbose_name='etapas fallidas')),
                ('detail', models.TextField(blank=True, verbose_name='detalle')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='fecha de creación')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='scenes', to='pipeline.augmentrun', verbose_name='corrida')),
            ],
            options={
                'verbose_name': 'registro de escena',
                'verbose_name_plural': 'registros de escena',
                'db_table': 'scene_records',
                'ordering': ['scene_id'],
                'indexes': [models.Index(fields=['run', 'status'], name='scene_run_status_idx')],
                'constraints': [models.UniqueConstraint(fields=('run', 'scene_id'), name='unique_scene_per_run')],
            },
        ),
    ]
