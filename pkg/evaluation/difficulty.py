"""
Niveles de dificultad KITTI y clases vecinas que se ignoran.

Constantes del devkit oficial: fácil 40 px / oclusión 0 / truncamiento
0.15, moderado 25 / 1 / 0.30, difícil 25 / 2 / 0.50.
"""

from dataclasses import dataclass

from django.db import models
from django.utils.translation import gettext_lazy as _

from kitti_io.labels import ObjectClass


class Difficulty(models.TextChoices):
    EASY = 'easy', _('Fácil')
    MODERATE = 'moderate', _('Moderado')
    HARD = 'hard', _('Difícil')


@dataclass(frozen=True)
class DifficultySpec:
    min_bbox_height_px: float
    max_occlusion: int
    max_truncation: float

    def admits(self, label):
        # El devkit descarta también las cajas de altura igual al mínimo
        return (
            label.occlusion <= self.max_occlusion
            and label.truncation <= self.max_truncation
            and label.bbox_height > self.min_bbox_height_px
        )


DIFFICULTY_SPECS = {
    Difficulty.EASY: DifficultySpec(min_bbox_height_px=40, max_occlusion=0, max_truncation=0.15),
    Difficulty.MODERATE: DifficultySpec(min_bbox_height_px=25, max_occlusion=1, max_truncation=0.30),
    Difficulty.HARD: DifficultySpec(min_bbox_height_px=25, max_occlusion=2, max_truncation=0.50),
}

# GT de estas clases no cuenta como acierto ni como omisión
NEIGHBOR_CLASSES = {
    ObjectClass.CAR: ObjectClass.VAN,
    ObjectClass.PEDESTRIAN: ObjectClass.PERSON_SITTING,
}


def difficulty_filter(labels, spec, class_name=None):
    """
    Separa el GT evaluable del ignorado.

    Sin ``class_name`` se consideran todas las clases. Con ``class_name``
    la clase vecina (Van para Car, Person_sitting para Pedestrian) pasa a
    ignorados y el resto de las clases se descarta. DontCare siempre se ignora.

    Returns:
        tuple[list, list]: (evaluables, ignorados)
    """
    evaluable, ignored = [], []
    neighbor = NEIGHBOR_CLASSES.get(class_name)
    for label in labels:
        if label.is_dontcare:
            ignored.append(label)
        elif class_name is None or label.class_name == class_name:
            (evaluable if spec.admits(label) else ignored).append(label)
        elif neighbor is not None and label.class_name == neighbor:
            ignored.append(label)
    return evaluable, ignored
