"""
Armado de las consultas de cada juez.

    calidad de eliminación: (recorte original, candidato)
    plausibilidad:          (panel positivo, panel negativo, candidato con la caja 3D dibujada)
    punto de vista:         (recorte del objeto eliminado, candidato)
"""

import numpy as np
from PIL import Image, ImageDraw

from .prompts import render_geometric_prompt, render_removal_prompt, render_viewpoint_prompt
from .types import JudgeQuery, Protocol

WIREFRAME_COLOR = (255, 230, 0)
WIREFRAME_WIDTH = 2

# Aristas del cuboide; las esquinas 0-3 son la cara inferior y 4-7 la superior
BOX_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 0),
    (4, 5), (5, 6), (6, 7), (7, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
)


def draw_wireframe(image, corners, color=WIREFRAME_COLOR, width=WIREFRAME_WIDTH):
    """Copia de ``image`` con las 12 aristas de la caja proyectada (8×2, píxeles)."""
    canvas = Image.fromarray(np.array(image, dtype=np.uint8))
    draw = ImageDraw.Draw(canvas)
    points = [tuple(float(v) for v in corner) for corner in np.asarray(corners)]
    for start, end in BOX_EDGES:
        draw.line([points[start], points[end]], fill=color, width=width)
    return np.asarray(canvas).copy()


def build_removal_query(original_crop, candidate, head_class, lower=0, upper=10):
    return JudgeQuery(
        protocol=Protocol.REMOVAL_QUALITY,
        images=(original_crop, candidate.image),
        prompt_text=render_removal_prompt(head_class, lower, upper),
        candidate_index=candidate.index,
        score_range=(lower, upper),
    )


def build_geometric_query(exemplars, candidate, corners, tail_class):
    """``exemplars`` es el par (positivo, negativo) de load_exemplars."""
    positive, negative = exemplars
    return JudgeQuery(
        protocol=Protocol.GEOMETRIC_PLAUSIBILITY,
        images=(positive, negative, draw_wireframe(candidate.image, corners)),
        prompt_text=render_geometric_prompt(tail_class),
        candidate_index=candidate.index,
    )


def build_viewpoint_query(reference_crop, candidate, head_class, tail_class):
    return JudgeQuery(
        protocol=Protocol.VIEWPOINT_CONSISTENCY,
        images=(reference_crop, candidate.image),
        prompt_text=render_viewpoint_prompt(head_class, tail_class),
        candidate_index=candidate.index,
    )
