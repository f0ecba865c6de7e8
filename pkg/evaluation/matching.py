"""
Emparejamiento GT–detección y curvas precisión/recall por celda
(clase, dificultad, métrica).

Las detecciones se recorren por confianza descendente (desempate por orden
de aparición). Cada una toma el GT libre de mayor IoU entre los que
superan el umbral, prefiriendo GT evaluable sobre GT ignorado:

    GT evaluable  -> verdadero positivo
    GT ignorado   -> se descarta (no es TP ni FP)
    ninguno       -> falso positivo, salvo que caiga en una región DontCare
                     (solo en las métricas 2D)

Como la decisión de cada detección depende solo de las anteriores, el
emparejamiento de las detecciones con confianza >= t es un prefijo del
recorrido completo; una sola pasada da todos los puntos de operación.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from django.db import models
from django.utils.translation import gettext_lazy as _

from geom3d.iou import intersection_over_area, iou_2d, iou_3d, iou_bev
from kitti_io.labels import ObjectClass

from .difficulty import difficulty_filter


class Metric(models.TextChoices):
    BBOX_2D = '2d', _('AP 2D')
    BEV = 'bev', _('AP BEV')
    BOX_3D = '3d', _('AP 3D')
    AOS = 'aos', _('AOS')


class Outcome(models.TextChoices):
    TRUE_POSITIVE = 'tp', _('Verdadero positivo')
    FALSE_POSITIVE = 'fp', _('Falso positivo')
    IGNORED = 'ignored', _('Ignorada')


# Umbrales de IoU por clase para 2D / BEV / 3D; AOS usa el de 2D
IOU_THRESHOLDS = {
    ObjectClass.CAR: {Metric.BBOX_2D: 0.7, Metric.BEV: 0.5, Metric.BOX_3D: 0.5},
    ObjectClass.PEDESTRIAN: {Metric.BBOX_2D: 0.5, Metric.BEV: 0.25, Metric.BOX_3D: 0.25},
    ObjectClass.CYCLIST: {Metric.BBOX_2D: 0.5, Metric.BEV: 0.25, Metric.BOX_3D: 0.25},
}


def iou_threshold(class_name, metric):
    metric = Metric.BBOX_2D if metric == Metric.AOS else Metric(metric)
    return IOU_THRESHOLDS[class_name][metric]


def overlap_fn(metric):
    """IoU entre una etiqueta GT y una detección para la métrica dada."""
    if metric in (Metric.BBOX_2D, Metric.AOS):
        return lambda gt, det: iou_2d(gt.bbox2d, det.bbox2d)
    if metric == Metric.BEV:
        return lambda gt, det: iou_bev(gt.box3d, det.label.box3d)
    return lambda gt, det: iou_3d(gt.box3d, det.label.box3d)


@dataclass(frozen=True)
class MatchResult:
    """Resultado de una detección ya emparejada."""

    score: float
    outcome: str
    # (1 + cos Δalpha) / 2 para los TP, 0 en otro caso
    similarity: float = 0.0


@dataclass
class PRCurve:
    """
    Puntos de operación, uno por confianza distinta, de mayor a menor.

    ``orientation`` es la similitud de orientación acumulada / (TP + FP).
    """

    num_gt: int
    scores: list = field(default_factory=list)
    recall: list = field(default_factory=list)
    precision: list = field(default_factory=list)
    orientation: list = field(default_factory=list)


def match_image(gt_labels, detections, class_name, spec, metric, threshold, iou_fn=None):
    """
    Empareja las detecciones de una imagen para una clase y una dificultad.

    Las detecciones de otra clase no participan; las más bajas que la altura
    mínima de la dificultad se descartan antes de emparejar.

    Returns:
        tuple[list[MatchResult], int]: resultados y cantidad de GT evaluable
    """
    iou_fn = iou_fn or overlap_fn(metric)
    evaluable, ignored = difficulty_filter(gt_labels, spec, class_name)
    dontcare = [label.bbox2d for label in ignored if label.is_dontcare]
    candidates = [(label, True) for label in evaluable]
    candidates += [(label, False) for label in ignored if not label.is_dontcare]
    uses_dontcare = metric in (Metric.BBOX_2D, Metric.AOS)

    considered = [
        (index, det) for index, det in enumerate(detections)
        if det.class_name == class_name and det.label.bbox_height >= spec.min_bbox_height_px
    ]
    considered.sort(key=lambda item: (-item[1].score, item[0]))

    taken = [False] * len(candidates)
    results = []
    for _, det in considered:
        best, best_key = None, None
        for position, (label, is_evaluable) in enumerate(candidates):
            if taken[position]:
                continue
            overlap = iou_fn(label, det)
            if overlap < threshold:
                continue
            key = (is_evaluable, overlap)
            if best_key is None or key > best_key:
                best, best_key = position, key

        if best is not None:
            taken[best] = True
            label, is_evaluable = candidates[best]
            if is_evaluable:
                similarity = (1.0 + math.cos(label.alpha - det.alpha)) / 2.0
                results.append(MatchResult(det.score, Outcome.TRUE_POSITIVE, similarity))
            else:
                results.append(MatchResult(det.score, Outcome.IGNORED))
        elif uses_dontcare and any(intersection_over_area(det.bbox2d, region) >= threshold for region in dontcare):
            results.append(MatchResult(det.score, Outcome.IGNORED))
        else:
            results.append(MatchResult(det.score, Outcome.FALSE_POSITIVE))

    return results, len(evaluable)


def build_curve(results, num_gt):
    """Acumula TP/FP por confianza descendente y cierra un punto por cada confianza distinta."""
    curve = PRCurve(num_gt=num_gt)
    ordered = sorted(
        (result for result in results if result.outcome != Outcome.IGNORED),
        key=lambda result: -result.score,
    )
    tp = fp = 0
    similarity = 0.0
    for position, result in enumerate(ordered):
        if result.outcome == Outcome.TRUE_POSITIVE:
            tp += 1
            similarity += result.similarity
        else:
            fp += 1
        last_of_group = position + 1 == len(ordered) or ordered[position + 1].score != result.score
        if last_of_group:
            curve.scores.append(result.score)
            curve.recall.append(tp / num_gt if num_gt else 0.0)
            curve.precision.append(tp / (tp + fp))
            curve.orientation.append(similarity / (tp + fp))
    return curve


def match_and_pr(cases, class_name, spec, metric, threshold=None, iou_fn=None):
    """
    Curva PR de una celda sobre varias imágenes.

    Args:
        cases (iterable): pares (etiquetas GT, detecciones) por imagen
        threshold (float): por defecto, el umbral de la clase para la métrica

    Returns:
        PRCurve
    """
    if threshold is None:
        threshold = iou_threshold(class_name, metric)
    results, num_gt = [], 0
    for gt_labels, detections in cases:
        image_results, image_gt = match_image(gt_labels, detections, class_name, spec, metric, threshold, iou_fn)
        results.extend(image_results)
        num_gt += image_gt
    return build_curve(results, num_gt)


R40_POSITIONS = np.arange(1, 41) / 40
R11_POSITIONS = np.linspace(0.0, 1.0, 11)
_RECALL_EPS = 1e-12


def interpolated_average(recall, values, positions):
    """
    Promedio sobre las posiciones de recall del máximo de ``values`` entre
    los puntos con recall >= posición (0 si no hay ninguno), en [0, 100].
    """
    if not recall:
        return 0.0
    recall = np.asarray(recall, dtype=float)
    values = np.asarray(values, dtype=float)
    total = 0.0
    for position in positions:
        reached = recall >= position - _RECALL_EPS
        if reached.any():
            total += values[reached].max()
    return 100.0 * total / len(positions)


def average_precision(curve, positions=R40_POSITIONS):
    """AP de la curva; None si la celda no tiene GT evaluable."""
    if curve.num_gt == 0:
        return None
    return interpolated_average(curve.recall, curve.precision, positions)


def average_orientation_similarity(curve, positions=R40_POSITIONS):
    """AOS: como AP, pero cada TP aporta (1 + cos Δalpha) / 2 en lugar de 1."""
    if curve.num_gt == 0:
        return None
    return interpolated_average(curve.recall, curve.orientation, positions)
