"""
Detecciones en formato de resultados KITTI: una línea de etiqueta con un
campo 16 de confianza, un archivo por imagen.
"""

import math
from dataclasses import dataclass
from pathlib import Path

from kitti_io.exceptions import LabelParseError
from kitti_io.labels import LABEL_FIELDS, format_label_line, parse_label_line

from .exceptions import DetectionParseError


@dataclass(frozen=True)
class Detection:
    label: object  # ObjectLabel
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise DetectionParseError(f"Confianza no finita: {self.score}")

    @property
    def class_name(self):
        return self.label.class_name

    @property
    def bbox2d(self):
        return self.label.bbox2d

    @property
    def alpha(self):
        return self.label.alpha


def parse_detection_line(line, line_no=None):
    """
    Raises:
        DetectionParseError: si la línea no tiene 16 campos o la confianza no es numérica
    """
    fields = line.split()
    if len(fields) <= LABEL_FIELDS:
        raise DetectionParseError(
            f"Línea {line_no}: se esperaban {LABEL_FIELDS + 1} campos (con confianza), "
            f"se encontraron {len(fields)}"
        )
    try:
        label = parse_label_line(line, line_no=line_no)
        score = float(fields[LABEL_FIELDS])
    except (LabelParseError, ValueError) as exc:
        raise DetectionParseError(f"Línea {line_no}: {exc}") from exc
    return Detection(label=label, score=score)


def parse_detection_file(path):
    path = Path(path)
    detections = []
    with path.open('r') as handle:
        for line_no, line in enumerate(handle, start=1):
            if line.strip():
                try:
                    detections.append(parse_detection_line(line, line_no=line_no))
                except DetectionParseError as exc:
                    raise DetectionParseError(f"{path}: {exc}") from exc
    return detections


def write_detection_file(detections, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(''.join(format_label_line(d.label, score=d.score) + '\n' for d in detections))


def detections_from_labels(labels, score=1.0):
    """Usa las etiquetas como detecciones (autoevaluación)."""
    return [Detection(label=label, score=score) for label in labels if not label.is_dontcare]
