from collections.abc import Mapping

from django.conf import settings
from rest_framework import serializers

from geom3d.crops import DEFAULT_CROP_SCALE, DEFAULT_FEATHER_PX
from kitti_io.labels import ObjectClass
from kitti_io.serializers import DatasetStatsSerializer, ObjectLabelSerializer
from llm_filter.judges import DEFAULT_IOU_THRESHOLD, DEFAULT_SCORE_FLOOR, DEFAULT_VIEWPOINT_TOLERANCE

from .planning import DEFAULT_OVERLAP_IOU_MAX, DEFAULT_PLAN_RETRIES
from .selection import (
    DEFAULT_MAX_REPLACEMENTS, DEFAULT_MIN_BBOX_AREA_PX2, DEFAULT_MIN_BBOX_HEIGHT_PX,
    MAX_REPLACEMENTS_LIMIT,
)

DEFAULT_CLASSES = ['Car', 'Pedestrian', 'Cyclist']
# Proporción 612:147 de imágenes con ciclistas y peatones insertados
DEFAULT_CLASS_MIX = {'Cyclist': 612.0, 'Pedestrian': 147.0}
DEFAULT_REMOVAL_M, DEFAULT_REMOVAL_K = 10, 1
DEFAULT_INSERTION_M, DEFAULT_INSERTION_K = 30, 1


class StrictSerializer(serializers.Serializer):
    """Serializer que rechaza claves desconocidas (también en los anidados)."""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Clave desconocida."] for key in unknown})
        return super().to_internal_value(data)


class CriteriaSerializer(StrictSerializer):
    min_bbox_height_px = serializers.FloatField(min_value=0, default=DEFAULT_MIN_BBOX_HEIGHT_PX)
    min_bbox_area_px2 = serializers.FloatField(min_value=0, default=DEFAULT_MIN_BBOX_AREA_PX2)
    require_no_overlap = serializers.BooleanField(default=True)
    max_replacements_per_image = serializers.IntegerField(
        min_value=1, max_value=MAX_REPLACEMENTS_LIMIT, default=DEFAULT_MAX_REPLACEMENTS,
    )


class StageSerializer(StrictSerializer):
    """Candidatos generados (m) y conservados (k) en una etapa."""

    m = serializers.IntegerField(min_value=1)
    k = serializers.IntegerField(min_value=1, default=1)

    def validate(self, attrs):
        if attrs['k'] > attrs['m']:
            raise serializers.ValidationError("Se requiere k <= m")
        return attrs


class FiltersSerializer(StrictSerializer):
    """Jueces activos; apagarlos reproduce los escenarios de ablación."""

    removal_quality = serializers.BooleanField(default=True)
    geometric_plausibility = serializers.BooleanField(default=True)
    viewpoint_consistency = serializers.BooleanField(default=True)


class RunConfigSerializer(StrictSerializer):
    """
    Serializer para el archivo de configuración de una corrida de aumento.

    Valida todo antes de tocar el disco o la red. Los valores por defecto de
    ``workers`` y ``exemplar_dir`` vienen del entorno (settings).
    """

    run_name = serializers.SlugField(default='ltda')
    dataset_dir = serializers.CharField()
    output_dir = serializers.CharField()
    split = serializers.CharField(allow_null=True, default=None)
    seed = serializers.IntegerField(min_value=0, default=0)

    classes = serializers.ListField(
        child=serializers.ChoiceField(choices=ObjectClass.choices), min_length=1,
        default=lambda: list(DEFAULT_CLASSES),
    )
    head_class = serializers.ChoiceField(choices=ObjectClass.choices, default='Car')
    class_mix = serializers.DictField(
        child=serializers.FloatField(min_value=0), default=lambda: dict(DEFAULT_CLASS_MIX),
    )
    targets = serializers.DictField(child=serializers.IntegerField(min_value=0), default=dict)
    criteria = CriteriaSerializer(required=False)

    crop_scale = serializers.FloatField(default=DEFAULT_CROP_SCALE)
    feather_px = serializers.IntegerField(min_value=0, default=DEFAULT_FEATHER_PX)
    removal = StageSerializer(required=False)
    insertion = StageSerializer(required=False)
    steps = serializers.IntegerField(min_value=1, default=30)
    guidance_scale = serializers.FloatField(min_value=0, default=8.0)
    negative_prompt = serializers.CharField(allow_blank=True, default='')

    filters = FiltersSerializer(required=False)
    score_floor = serializers.IntegerField(min_value=0, max_value=10, default=DEFAULT_SCORE_FLOOR)
    iou_threshold = serializers.FloatField(min_value=0, max_value=1, default=DEFAULT_IOU_THRESHOLD)
    viewpoint_tolerance = serializers.IntegerField(min_value=0, max_value=1, default=DEFAULT_VIEWPOINT_TOLERANCE)
    plan_retries = serializers.IntegerField(min_value=1, default=DEFAULT_PLAN_RETRIES)
    overlap_iou_max = serializers.FloatField(min_value=0, max_value=1, default=DEFAULT_OVERLAP_IOU_MAX)

    inpaint_backend = serializers.ChoiceField(choices=['synthetic', 'wire'], default='synthetic')
    judge_backend = serializers.ChoiceField(choices=['mock', 'remote'], default='mock')
    jitter_px = serializers.IntegerField(min_value=0, default=2)
    noise_std = serializers.FloatField(min_value=0, default=0.0)
    max_in_flight = serializers.IntegerField(min_value=1, default=4)
    max_candidates_per_request = serializers.IntegerField(min_value=1, allow_null=True, default=None)
    llm_rpm = serializers.IntegerField(min_value=0, default=60)

    copy_originals = serializers.BooleanField(default=True)
    stats_cache = serializers.CharField(allow_null=True, default=None)
    exemplar_dir = serializers.CharField(default=lambda: str(settings.LTDA_EXEMPLAR_DIR))
    workers = serializers.IntegerField(min_value=1, default=lambda: settings.LTDA_WORKERS)
    max_skip_fraction = serializers.FloatField(min_value=0, max_value=1, default=1.0)

    def validate_crop_scale(self, value):
        if value <= 1:
            raise serializers.ValidationError("El factor de recorte debe ser > 1.")
        return value

    def validate_class_mix(self, value):
        unknown = [name for name in value if name not in ObjectClass.values]
        if unknown:
            raise serializers.ValidationError(f"Clases desconocidas: {', '.join(unknown)}")
        if not value or sum(value.values()) <= 0:
            raise serializers.ValidationError("La mezcla de clases necesita al menos un peso positivo.")
        return value

    def validate(self, attrs):
        """
        Validación a nivel de objeto: clases coherentes, combinaciones de
        backends y variables de entorno requeridas.
        """
        head = attrs['head_class']
        if head in attrs['class_mix']:
            raise serializers.ValidationError({'class_mix': "La clase cabeza no puede ser clase cola."})
        unknown_targets = [name for name in attrs['targets'] if name not in attrs['class_mix']]
        if unknown_targets:
            raise serializers.ValidationError({
                'targets': f"Clases sin peso en class_mix: {', '.join(unknown_targets)}",
            })

        if attrs['judge_backend'] == 'mock' and attrs['inpaint_backend'] == 'wire':
            raise serializers.ValidationError({
                'judge_backend': "El juez mock necesita los metadatos del backend sintético.",
            })
        if attrs['inpaint_backend'] == 'wire' and not settings.LTDA_INPAINT_URL:
            raise serializers.ValidationError({'inpaint_backend': "Falta la variable de entorno LTDA_INPAINT_URL"})
        if attrs['judge_backend'] == 'remote' and not settings.LTDA_LLM_URL:
            raise serializers.ValidationError({'judge_backend': "Falta la variable de entorno LTDA_LLM_URL"})
        return attrs


class CropWindowSerializer(serializers.Serializer):
    center = serializers.ListField(child=serializers.FloatField())
    side = serializers.IntegerField()
    rect = serializers.ListField(child=serializers.IntegerField())


class BinaryMaskSerializer(serializers.Serializer):
    size = serializers.IntegerField()
    region = serializers.ListField(child=serializers.IntegerField())


class InsertionPlanSerializer(serializers.Serializer):
    tail_class = serializers.CharField()
    dims = serializers.ListField(child=serializers.FloatField())
    location = serializers.ListField(child=serializers.FloatField())
    rotation_y = serializers.FloatField()
    alpha = serializers.FloatField()
    bbox2d = serializers.ListField(child=serializers.FloatField())
    orientation = serializers.CharField()
    prompt = serializers.CharField()
    crop = CropWindowSerializer()
    mask = BinaryMaskSerializer()
    attempts = serializers.IntegerField()


class EditPlanSerializer(serializers.Serializer):
    """Salida JSON de ``augment --dry-run``."""

    scene_id = serializers.CharField()
    object_index = serializers.IntegerField()
    removed_label = ObjectLabelSerializer()
    crop = CropWindowSerializer()
    mask = BinaryMaskSerializer()
    removal_prompt = serializers.CharField()
    insertion = InsertionPlanSerializer()


class AugmentReportSerializer(serializers.Serializer):
    run_name = serializers.CharField()
    before = DatasetStatsSerializer()
    after = DatasetStatsSerializer()
    removed = serializers.DictField(child=serializers.IntegerField())
    inserted = serializers.DictField(child=serializers.IntegerField())
    copied = serializers.DictField(child=serializers.IntegerField())
    scenes = serializers.DictField(child=serializers.IntegerField())
    plan_failures = serializers.IntegerField()
    stage_failures = serializers.IntegerField()
    judges = serializers.DictField()
    variants = serializers.ListField(child=serializers.CharField())
    skip_fraction = serializers.FloatField()
