"""
Jueces de candidatos.

``MockJudge`` es el oráculo determinista de las corridas de escritorio: mide
lo mismo que se le pregunta al LLM usando los metadatos del backend sintético,
redacta la respuesta en el formato del protocolo y la pasa por el mismo parser
que una respuesta remota.
"""

import abc
import logging

import numpy as np

from gen_backend.prompts import class_object
from gen_backend.synthetic import background_fill
from geom3d.iou import iou_2d
from geom3d.orientation import Sector, sector_distance

from .exceptions import JudgeError
from .parsers import parse_explained_verdict, parse_scored_verdict
from .types import Protocol

logger = logging.getLogger(__name__)

DEFAULT_SCORE_FLOOR = 7
DEFAULT_IOU_THRESHOLD = 0.7
DEFAULT_VIEWPOINT_TOLERANCE = 0


class Judge(abc.ABC):
    """Interfaz común; ``judge`` puede llamarse desde varios hilos."""

    name = 'abstract'

    @abc.abstractmethod
    def judge(self, query, metadata=None):
        """Devuelve el Verdict de una JudgeQuery."""

    def judge_many(self, items):
        """Veredictos de [(query, metadata), ...] en el mismo orden."""
        return [self.judge(query, metadata) for query, metadata in items]


def _require(metadata, *keys):
    missing = [key for key in keys if key not in (metadata or {})]
    if missing:
        raise JudgeError(f"Faltan metadatos para el juez: {', '.join(missing)}")
    return [metadata[key] for key in keys]


class MockJudge(Judge):
    """
    Oráculo determinista.

    Metadatos por protocolo:
        removal_quality:        mask (BinaryMask)
        geometric_plausibility: glyph_rect, projected_rect, object_name
        viewpoint_consistency:  head_sector, orientation, head_class, object_name

    Args:
        score_floor (int): puntaje mínimo para responder "yes"
        iou_threshold (float): IoU mínima glifo / caja proyectada
        viewpoint_tolerance (int): diferencia de sectores admitida (0 o 1)
    """

    name = 'mock'

    def __init__(self, score_floor=DEFAULT_SCORE_FLOOR, iou_threshold=DEFAULT_IOU_THRESHOLD,
                 viewpoint_tolerance=DEFAULT_VIEWPOINT_TOLERANCE):
        self.score_floor = int(score_floor)
        self.iou_threshold = float(iou_threshold)
        self.viewpoint_tolerance = int(viewpoint_tolerance)

    def judge(self, query, metadata=None):
        if query.protocol == Protocol.REMOVAL_QUALITY:
            return self._removal(query, metadata)
        if query.protocol == Protocol.GEOMETRIC_PLAUSIBILITY:
            return self._geometric(metadata)
        return self._viewpoint(metadata)

    def removal_score(self, original, candidate, mask, lower=0, upper=10):
        """upper - round((upper - lower) · |candidato - fondo| medio / 255) dentro de la máscara."""
        if mask.is_empty:
            return upper
        expected = background_fill(original, mask)
        left, top, right, bottom = mask.region
        residual = np.abs(
            candidate[top:bottom, left:right].astype(float) - expected[top:bottom, left:right].astype(float)
        ).mean()
        return upper - round((upper - lower) * residual / 255)

    def _removal(self, query, metadata):
        (mask,) = _require(metadata, 'mask')
        lower, upper = query.score_range
        original, candidate = query.images
        score = self.removal_score(original, candidate, mask, lower, upper)
        answer = 'Yes' if score >= self.score_floor else 'No'
        return parse_scored_verdict(f"{answer}, {score}.", lower, upper)

    def _geometric(self, metadata):
        glyph_rect, projected_rect, object_name = _require(
            metadata, 'glyph_rect', 'projected_rect', 'object_name',
        )
        name = class_object(object_name)
        overlap = iou_2d(glyph_rect, projected_rect) if glyph_rect is not None else 0.0
        if overlap >= self.iou_threshold:
            raw = (
                f"Yes, the {name} fits well within the 3D bounding box. The box is tightly aligned "
                f"with the {name} (IoU {overlap:.2f})."
            )
        else:
            raw = f"No, the {name} does not fit the 3D bounding box; the box is loose or misaligned (IoU {overlap:.2f})."
        return parse_explained_verdict(raw)

    def _viewpoint(self, metadata):
        head_sector, tail_sector, head_class, object_name = _require(
            metadata, 'head_sector', 'orientation', 'head_class', 'object_name',
        )
        head_sector, tail_sector = Sector(head_sector), Sector(tail_sector)
        same_side = sector_distance(head_sector, tail_sector) <= self.viewpoint_tolerance
        description = (
            f"the {head_sector.value} of the {class_object(head_class)} is visible, "
            f"the {tail_sector.value} of the {class_object(object_name)} is visible."
        )
        if same_side:
            raw = f"Yes, both subjects are showing roughly the same side. {description}"
        else:
            raw = f"No, the subjects are showing different sides. {description}"
        return parse_explained_verdict(raw)
