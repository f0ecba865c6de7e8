"""
Etiquetas KITTI: una línea de 15 campos por objeto.

    type truncated occluded alpha left top right bottom h w l x y z rotation_y [score]

Al escribir se usan 2 decimales (convención del devkit).
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

from django.db import models
from django.utils.translation import gettext_lazy as _

from geom3d.boxes import Box3D

from .exceptions import LabelParseError, LabelValidationError

logger = logging.getLogger(__name__)

LABEL_FIELDS = 15


class ObjectClass(models.TextChoices):
    """Clases de objeto del benchmark KITTI."""

    CAR = 'Car', _('Auto')
    PEDESTRIAN = 'Pedestrian', _('Peatón')
    CYCLIST = 'Cyclist', _('Ciclista')
    VAN = 'Van', _('Furgoneta')
    TRUCK = 'Truck', _('Camión')
    PERSON_SITTING = 'Person_sitting', _('Persona sentada')
    TRAM = 'Tram', _('Tranvía')
    MISC = 'Misc', _('Otros')
    DONTCARE = 'DontCare', _('Ignorar')


@dataclass(frozen=True)
class ObjectLabel:
    """
    Un objeto anotado en una escena.

    bbox2d es (left, top, right, bottom) en píxeles, dims es (h, w, l) en
    metros y location es el centro de la cara inferior en el marco de cámara.
    """

    class_name: str
    truncation: float
    occlusion: int
    alpha: float
    bbox2d: tuple
    dims: tuple
    location: tuple
    rotation_y: float
    # Nombre original cuando la clase no es conocida (se guarda como Misc)
    unknown_class: str | None = None

    @property
    def is_dontcare(self):
        return self.class_name == ObjectClass.DONTCARE

    @property
    def bbox_width(self):
        return self.bbox2d[2] - self.bbox2d[0]

    @property
    def bbox_height(self):
        return self.bbox2d[3] - self.bbox2d[1]

    @property
    def bbox_area(self):
        return max(self.bbox_width, 0.0) * max(self.bbox_height, 0.0)

    @property
    def box3d(self):
        return Box3D(dims=self.dims, location=self.location, rotation_y=self.rotation_y)

    def with_changes(self, **changes):
        return replace(self, **changes)


def _to_float(value, field, line_no=None):
    try:
        number = float(value)
    except ValueError:
        raise LabelParseError(f"Campo '{field}' no numérico: {value!r}", line_no=line_no)
    if not math.isfinite(number):
        raise LabelParseError(f"Campo '{field}' no finito: {value!r}", line_no=line_no)
    return number


def parse_label_line(line, line_no=None):
    """
    Convierte una línea KITTI en ObjectLabel.

    Los campos extra (por ejemplo el score de detecciones) se ignoran.

    Args:
        line (str): línea con al menos 15 campos separados por espacios
        line_no (int): número de línea para los mensajes de error

    Returns:
        ObjectLabel: etiqueta parseada (sin validar invariantes)

    Raises:
        LabelParseError: si faltan campos o alguno no es numérico
    """
    fields = line.split()
    if len(fields) < LABEL_FIELDS:
        raise LabelParseError(
            f"Se esperaban {LABEL_FIELDS} campos, se encontraron {len(fields)}",
            line_no=line_no,
        )

    name = fields[0]
    unknown_class = None
    if name not in ObjectClass.values:
        # Derivados de KITTI traen clases extra: se conservan como Misc
        logger.warning("Clase desconocida %r, se guarda como Misc", name, extra={'line_no': line_no})
        unknown_class = name
        name = ObjectClass.MISC.value

    names = ['truncated', 'occluded', 'alpha', 'left', 'top', 'right', 'bottom',
             'h', 'w', 'l', 'x', 'y', 'z', 'rotation_y']
    values = [_to_float(v, n, line_no) for v, n in zip(fields[1:LABEL_FIELDS], names)]

    occlusion = values[1]
    if occlusion != int(occlusion):
        raise LabelParseError(f"Campo 'occluded' debe ser entero: {fields[2]!r}", line_no=line_no)

    return ObjectLabel(
        class_name=name,
        truncation=values[0],
        occlusion=int(occlusion),
        alpha=values[2],
        bbox2d=tuple(values[3:7]),
        dims=tuple(values[7:10]),
        location=tuple(values[10:13]),
        rotation_y=values[13],
        unknown_class=unknown_class,
    )


def validate_label(label):
    """
    Verifica los invariantes de ObjectLabel (DontCare queda exento).

    Raises:
        LabelValidationError: si algún invariante no se cumple
    """
    if label.is_dontcare:
        return label

    left, top, right, bottom = label.bbox2d
    if not (left < right and top < bottom):
        raise LabelValidationError(f"bbox2d inválido {label.bbox2d} para {label.class_name}")
    if min(label.dims) <= 0:
        raise LabelValidationError(f"Dimensiones no positivas {label.dims} para {label.class_name}")
    # 1e-3 de holgura por el redondeo a 2 decimales de π
    for field in ('alpha', 'rotation_y'):
        angle = getattr(label, field)
        if not -math.pi - 1e-3 <= angle <= math.pi + 1e-3:
            raise LabelValidationError(f"{field}={angle} fuera de [-π, π]")
    if not 0.0 <= label.truncation <= 1.0:
        raise LabelValidationError(f"truncation={label.truncation} fuera de [0, 1]")
    if label.occlusion not in (0, 1, 2, 3):
        raise LabelValidationError(f"occlusion={label.occlusion} fuera de {{0,1,2,3}}")
    return label


def format_label_line(label, score=None):
    """
    Serializa una etiqueta en una línea KITTI de 15 campos.

    Con ``score`` se agrega el campo 16 (formato de resultados de detección).
    """
    values = [
        label.truncation, label.alpha, *label.bbox2d, *label.dims,
        *label.location, label.rotation_y,
    ]
    trunc, alpha, left, top, right, bottom, h, w, l, x, y, z, ry = values
    line = (
        f"{label.class_name} {trunc:.2f} {label.occlusion:d} {alpha:.2f} "
        f"{left:.2f} {top:.2f} {right:.2f} {bottom:.2f} "
        f"{h:.2f} {w:.2f} {l:.2f} {x:.2f} {y:.2f} {z:.2f} {ry:.2f}"
    )
    if score is not None:
        line += f" {score:.4f}"
    return line


def parse_label_file(path):
    """
    Lee un archivo label_2/<id>.txt.

    Returns:
        list[ObjectLabel]: etiquetas en orden de aparición (vacía si el archivo está vacío)

    Raises:
        LabelParseError: indicando el número de la línea mal formada
    """
    path = Path(path)
    labels = []
    with path.open('r') as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                labels.append(parse_label_line(line))
            except LabelParseError as exc:
                raise LabelParseError(exc.reason, line_no=line_no, path=path) from exc
    return labels


def write_label_file(labels, path):
    """
    Escribe las etiquetas validando cada una antes de tocar el disco.

    Raises:
        LabelValidationError: si alguna etiqueta viola los invariantes
    """
    lines = [format_label_line(validate_label(label)) for label in labels]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(''.join(line + '\n' for line in lines))
