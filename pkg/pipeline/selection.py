"""
Selección de los objetos de clase cabeza que se pueden reemplazar.
"""

from dataclasses import dataclass

from geom3d.iou import iou_2d

from .exceptions import ConfigError

DEFAULT_MIN_BBOX_HEIGHT_PX = 40.0
DEFAULT_MIN_BBOX_AREA_PX2 = 0.0
DEFAULT_MAX_REPLACEMENTS = 4
MAX_REPLACEMENTS_LIMIT = 4


@dataclass(frozen=True)
class SelectionCriteria:
    head_class: str = 'Car'
    min_bbox_height_px: float = DEFAULT_MIN_BBOX_HEIGHT_PX
    min_bbox_area_px2: float = DEFAULT_MIN_BBOX_AREA_PX2
    require_no_overlap: bool = True
    max_replacements_per_image: int = DEFAULT_MAX_REPLACEMENTS

    def __post_init__(self):
        if not 1 <= self.max_replacements_per_image <= MAX_REPLACEMENTS_LIMIT:
            raise ConfigError(
                f"max_replacements_per_image debe estar en [1, {MAX_REPLACEMENTS_LIMIT}], "
                f"se recibió {self.max_replacements_per_image}"
            )


def _inside(bbox2d, image_size):
    width, height = image_size
    left, top, right, bottom = bbox2d
    return left >= 0 and top >= 0 and right <= width and bottom <= height


def select_removable(scene, criteria):
    """
    Objetos de la clase cabeza aptos para reemplazo.

    Un objeto califica si su caja 2D no se solapa con ninguna otra caja
    (sin contar DontCare), cumple la altura y el área mínimas y está
    completamente dentro de la imagen.

    Returns:
        list[ObjectLabel]: a lo sumo ``max_replacements_per_image``, de mayor a menor área
    """
    objects = scene.objects
    selected = []
    for position, label in enumerate(objects):
        if label.class_name != criteria.head_class:
            continue
        if label.bbox_height < criteria.min_bbox_height_px or label.bbox_area < criteria.min_bbox_area_px2:
            continue
        if not _inside(label.bbox2d, scene.image_size):
            continue
        if criteria.require_no_overlap and any(
            iou_2d(label.bbox2d, other.bbox2d) > 0
            for other_position, other in enumerate(objects) if other_position != position
        ):
            continue
        selected.append((position, label))

    selected.sort(key=lambda item: (-item[1].bbox_area, item[0]))
    return [label for _, label in selected[:criteria.max_replacements_per_image]]
