"""
Paneles de ejemplo (few-shot) del juez geométrico.

Cada clase tiene dos imágenes compuestas de 2×2 viñetas:
``{asset_dir}/{clase}/positive.png`` con cajas ajustadas y
``{asset_dir}/{clase}/negative.png`` con cajas holgadas o corridas.
Se dibujan de forma procedural y determinista con ``build_exemplars``.
"""

import logging
from pathlib import Path

import numpy as np
from PIL import Image

from gen_backend.prompts import class_object
from gen_backend.synthetic import draw_glyph
from geom3d.orientation import Sector

from .exceptions import ExemplarMissingError
from .queries import draw_wireframe

logger = logging.getLogger(__name__)

EXEMPLAR_KINDS = ('positive', 'negative')
TILE_SIZE = 128
TILE_ORIENTATIONS = (Sector.FRONT_LEFT, Sector.RIGHT, Sector.BACK, Sector.LEFT)

_SKY = (170, 190, 215)
_ROAD = (95, 95, 100)


def exemplar_path(asset_dir, class_name, kind):
    return Path(asset_dir) / str(class_name).lower() / f'{kind}.png'


def _box_corners(rect, depth):
    """Esquinas 2D de una caja en perspectiva: cara frontal ``rect`` y trasera corrida."""
    left, top, right, bottom = rect
    front = [(left, bottom), (right, bottom), (right, top), (left, top)]
    back = [(u + depth, v - depth) for u, v in front]
    # Orden de box3d_corners: 0-3 inferior, 4-7 superior
    bottom_face = [front[0], front[1], back[1], back[0]]
    top_face = [front[3], front[2], back[2], back[3]]
    return np.array(bottom_face + top_face, dtype=float)


def _tile(object_name, orientation, kind, variant):
    tile = np.empty((TILE_SIZE, TILE_SIZE, 3), dtype=np.uint8)
    tile[: TILE_SIZE // 2] = _SKY
    tile[TILE_SIZE // 2:] = _ROAD

    width = 34 + 6 * variant
    height = 64 - 4 * variant
    left = (TILE_SIZE - width) // 2
    top = TILE_SIZE - height - 14
    rgb, alpha = draw_glyph(object_name, orientation, width, height)
    region = tile[top:top + height, left:left + width]
    region[alpha] = rgb[alpha]

    depth = max(4, width // 6)
    rect = (left, top, left + width, top + height)
    if kind == 'negative':
        grow_w, grow_h = width * 0.35, height * 0.3
        shift = width * (0.25 if variant % 2 else -0.25)
        rect = (
            left - grow_w + shift, top - grow_h,
            left + width + grow_w + shift, top + height + grow_h * 0.5,
        )
        depth *= 2
    return draw_wireframe(tile, _box_corners(rect, depth))


def render_exemplar_panel(class_name, kind):
    """Panel 2×2 (256×256×3) de ejemplos positivos o negativos."""
    if kind not in EXEMPLAR_KINDS:
        raise ValueError(f"Tipo de ejemplo desconocido: {kind!r}")
    object_name = class_object(class_name)
    tiles = [_tile(object_name, orientation, kind, i) for i, orientation in enumerate(TILE_ORIENTATIONS)]
    return np.vstack([np.hstack(tiles[:2]), np.hstack(tiles[2:])])


def build_exemplars(asset_dir, classes):
    """
    Escribe los paneles de cada clase.

    Returns:
        list[Path]: archivos escritos
    """
    written = []
    for class_name in classes:
        for kind in EXEMPLAR_KINDS:
            path = exemplar_path(asset_dir, class_name, kind)
            path.parent.mkdir(parents=True, exist_ok=True)
            Image.fromarray(render_exemplar_panel(class_name, kind)).save(path)
            written.append(path)
    logger.info("Paneles de ejemplo escritos en %s", asset_dir, extra={'count': len(written)})
    return written


def load_exemplars(asset_dir, class_name):
    """
    Returns:
        tuple[np.ndarray, np.ndarray]: (positivo, negativo) en RGB

    Raises:
        ExemplarMissingError: si falta alguno de los dos paneles
    """
    paths = [exemplar_path(asset_dir, class_name, kind) for kind in EXEMPLAR_KINDS]
    missing = [str(path) for path in paths if not path.is_file()]
    if missing:
        raise ExemplarMissingError(
            f"Faltan paneles de ejemplo para {class_name}: {', '.join(missing)}. "
            f"Generarlos con: python manage.py build_exemplars --dest {asset_dir}"
        )

    panels = []
    for path in paths:
        with Image.open(path) as image:
            panels.append(np.asarray(image.convert('RGB')))
    return tuple(panels)
