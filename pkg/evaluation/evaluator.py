"""
Evaluación completa: {Car, Pedestrian, Cyclist} × {fácil, moderado, difícil}
× {2D, BEV, 3D, AOS}.

Cada celda se calcula de forma independiente (en paralelo con ``workers``)
y los resultados se juntan por clave.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from kitti_io.dataset import LABEL_DIR, list_scene_ids, read_split
from kitti_io.labels import ObjectClass, parse_label_file

from .detections import parse_detection_file
from .difficulty import DIFFICULTY_SPECS, Difficulty
from .exceptions import EvaluationError
from .matching import (
    R11_POSITIONS, R40_POSITIONS, Metric, average_orientation_similarity, average_precision,
    match_and_pr,
)

logger = logging.getLogger(__name__)

DEFAULT_CLASSES = (ObjectClass.CAR, ObjectClass.PEDESTRIAN, ObjectClass.CYCLIST)
INTERPOLATIONS = {'R40': R40_POSITIONS, 'R11': R11_POSITIONS}


@dataclass(frozen=True)
class EvalConfig:
    classes: tuple = DEFAULT_CLASSES
    difficulties: tuple = tuple(Difficulty)
    metrics: tuple = tuple(Metric)
    interpolation: str = 'R40'
    split: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.interpolation not in INTERPOLATIONS:
            raise EvaluationError(f"Interpolación desconocida {self.interpolation!r}; use R40 o R11")


@dataclass
class EvalResult:
    """
    ``values[(clase, dificultad, métrica)]`` es un porcentaje en [0, 100], o
    None (n/a) si la celda no tiene GT evaluable.
    """

    interpolation: str
    classes: tuple
    difficulties: tuple
    metrics: tuple
    values: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    num_images: int = 0

    def value(self, class_name, difficulty, metric):
        return self.values[(str(class_name), str(difficulty), str(metric))]


def _gt_label_dir(gt_dir):
    gt_dir = Path(gt_dir)
    return gt_dir / LABEL_DIR if (gt_dir / LABEL_DIR).is_dir() else gt_dir


def load_cases(gt_dir, det_dir, split=None):
    """
    Pares (GT, detecciones) por imagen.

    ``gt_dir`` puede ser la raíz del dataset o directamente su label_2.

    Raises:
        EvaluationError: si falta un directorio o el archivo de detecciones de alguna imagen
    """
    label_dir = _gt_label_dir(gt_dir)
    det_dir = Path(det_dir)
    for path in (label_dir, det_dir):
        if not path.is_dir():
            raise EvaluationError(f"No existe el directorio {path}")

    ids = read_split(split) if split else sorted(path.stem for path in label_dir.glob('*.txt'))
    if not ids:
        raise EvaluationError(f"No hay etiquetas en {label_dir}")

    missing = [image_id for image_id in ids if not (det_dir / f'{image_id}.txt').is_file()]
    if missing:
        raise EvaluationError(
            f"Faltan {len(missing)} archivos de detecciones en {det_dir} (p. ej. {missing[0]}.txt)"
        )

    cases = []
    for image_id in ids:
        gt_path = label_dir / f'{image_id}.txt'
        if not gt_path.is_file():
            raise EvaluationError(f"Falta {gt_path}")
        cases.append((parse_label_file(gt_path), parse_detection_file(det_dir / f'{image_id}.txt')))
    return cases


def evaluate_cases(cases, config=None):
    """Evalúa pares (GT, detecciones) ya cargados."""
    config = config or EvalConfig()
    positions = INTERPOLATIONS[config.interpolation]
    result = EvalResult(
        interpolation=config.interpolation,
        classes=tuple(str(name) for name in config.classes),
        difficulties=tuple(str(level) for level in config.difficulties),
        metrics=tuple(str(metric) for metric in config.metrics),
        num_images=len(cases),
    )

    def cell(key):
        class_name, difficulty, metric = key
        curve = match_and_pr(cases, class_name, DIFFICULTY_SPECS[difficulty], metric)
        if metric == Metric.AOS:
            return key, curve, average_orientation_similarity(curve, positions)
        return key, curve, average_precision(curve, positions)

    keys = [
        (class_name, difficulty, metric)
        for class_name in result.classes
        for difficulty in result.difficulties
        for metric in result.metrics
    ]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for key, curve, value in pool.map(cell, keys):
            result.values[key] = value
            result.curves[key] = curve

    logger.info(
        "Evaluación %s sobre %d imágenes", config.interpolation, len(cases),
        extra={'images': len(cases), 'interpolation': config.interpolation},
    )
    return result


def evaluate(gt_dir, det_dir, config=None):
    """
    Evalúa un directorio de detecciones contra el GT.

    Returns:
        EvalResult
    """
    config = config or EvalConfig()
    return evaluate_cases(load_cases(gt_dir, det_dir, config.split), config)


def _format_value(value):
    return '   n/a' if value is None else f'{value:6.2f}'


def format_table(result):
    """
    Tabla de texto alineada: una fila por clase y, por métrica, las columnas
    fácil / moderado / difícil.
    """
    name_width = max(len(name) for name in result.classes + ('Class',))
    group_width = len(result.difficulties) * 7 - 1
    labels = {Metric.BBOX_2D: 'AP_2D', Metric.BEV: 'AP_BEV', Metric.BOX_3D: 'AP_3D', Metric.AOS: 'AOS'}
    short = {Difficulty.EASY: 'Easy', Difficulty.MODERATE: 'Mod.', Difficulty.HARD: 'Hard'}

    header = ' ' * name_width + ' | ' + ' | '.join(
        f'{labels[Metric(metric)]} ({result.interpolation})'.center(group_width) for metric in result.metrics
    )
    subheader = 'Class'.ljust(name_width) + ' | ' + ' | '.join(
        ' '.join(short[Difficulty(level)].rjust(6) for level in result.difficulties) for _ in result.metrics
    )
    lines = [header, subheader, '-' * len(subheader)]
    for class_name in result.classes:
        cells = [
            ' '.join(_format_value(result.values[(class_name, level, metric)]) for level in result.difficulties)
            for metric in result.metrics
        ]
        lines.append(class_name.ljust(name_width) + ' | ' + ' | '.join(cells))
    return '\n'.join(lines)
