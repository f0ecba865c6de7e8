from django.db import models
from django.utils.translation import gettext_lazy as _


class AugmentRun(models.Model):
    """
    Una corrida de aumento identificada por nombre.

    Guarda la configuración con la que empezó; una corrida con el mismo
    nombre retoma las escenas pendientes.
    """

    class Status(models.TextChoices):
        RUNNING = 'running', _('En curso')
        COMPLETED = 'completed', _('Completada')
        FAILED = 'failed', _('Fallida')

    name = models.SlugField(_('nombre'), max_length=100, unique=True)
    seed = models.BigIntegerField(_('semilla'), default=0)
    config = models.JSONField(_('configuración'), default=dict)
    status = models.CharField(_('estado'), max_length=20, choices=Status.choices, default=Status.RUNNING)
    report = models.JSONField(_('reporte'), null=True, blank=True)

    created_at = models.DateTimeField(_('fecha de creación'), auto_now_add=True)
    updated_at = models.DateTimeField(_('última actualización'), auto_now=True)

    class Meta:
        db_table = 'augment_runs'
        verbose_name = _('corrida de aumento')
        verbose_name_plural = _('corridas de aumento')
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.name} ({self.status})"


class SceneRecord(models.Model):
    """
    Resultado de una escena dentro de una corrida (el manifiesto).

    Solo el hilo principal escribe estos registros.
    """

    class Status(models.TextChoices):
        COMPLETED = 'completed', _('Aumentada')
        SKIPPED = 'skipped', _('Omitida')
        FAILED = 'failed', _('Fallida')

    run = models.ForeignKey(
        AugmentRun,
        on_delete=models.CASCADE,
        related_name='scenes',
        verbose_name=_('corrida'),
    )
    scene_id = models.CharField(_('escena'), max_length=64)
    status = models.CharField(_('estado'), max_length=20, choices=Status.choices)
    tail_class = models.CharField(_('clase cola'), max_length=20, blank=True)

    # IDs <escena>_aug<n> escritos
    variant_ids = models.JSONField(_('variantes'), default=list)
    removed_counts = models.JSONField(_('eliminados por clase'), default=dict)
    inserted_counts = models.JSONField(_('insertados por clase'), default=dict)
    # Conteo por clase de las etiquetas de todas las variantes escritas
    class_counts = models.JSONField(_('conteo de las variantes'), default=dict)
    judge_tallies = models.JSONField(_('conteo de jueces'), default=dict)
    plan_failures = models.PositiveIntegerField(_('objetos sin plan'), default=0)
    stage_failures = models.PositiveIntegerField(_('etapas fallidas'), default=0)
    detail = models.TextField(_('detalle'), blank=True)

    created_at = models.DateTimeField(_('fecha de creación'), auto_now_add=True)

    class Meta:
        db_table = 'scene_records'
        verbose_name = _('registro de escena')
        verbose_name_plural = _('registros de escena')
        ordering = ['scene_id']
        constraints = [
            models.UniqueConstraint(fields=['run', 'scene_id'], name='unique_scene_per_run'),
        ]
        indexes = [
            models.Index(fields=['run', 'status'], name='scene_run_status_idx'),
        ]

    def __str__(self):
        return f"{self.scene_id}: {self.status}"
