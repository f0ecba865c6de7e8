"""
Planes de edición: qué objeto se elimina, con qué ventana y máscara, y qué
objeto cola se inserta en su lugar.

El objeto insertado hereda x, z, la altura de contacto con el suelo (y) y el
yaw del objeto eliminado; solo sus dimensiones se muestrean. Si la caja
proyectada sale de la imagen o se solapa con otra etiqueta se vuelven a
muestrear las dimensiones, hasta ``retries`` veces.
"""

import logging
import zlib
from dataclasses import dataclass

from dim_sampler.stats import sample_dims
from gen_backend.prompts import insertion_prompt, removal_prompt
from geom3d.boxes import Box3D, box3d_corners, project_box_to_bbox2d, project_points
from geom3d.crops import DEFAULT_CROP_SCALE, build_mask, square_crop
from geom3d.exceptions import ProjectionError
from geom3d.iou import iou_2d
from geom3d.orientation import alpha_from_pose, orientation_sector
from kitti_io.labels import ObjectLabel

from .exceptions import PlanningError

logger = logging.getLogger(__name__)

DEFAULT_PLAN_RETRIES = 5
DEFAULT_OVERLAP_IOU_MAX = 0.05


@dataclass(frozen=True)
class InsertionPlan:
    tail_class: str
    dims: tuple  # (h, w, l)
    location: tuple
    rotation_y: float
    alpha: float
    bbox2d: tuple  # caja proyectada, coordenadas de imagen
    corners2d: tuple  # 8 esquinas proyectadas (u, v)
    orientation: str
    prompt: str
    crop: object  # CropWindow
    mask: object  # BinaryMask
    attempts: int

    def to_label(self):
        """Etiqueta del objeto insertado: entero y sin oclusión."""
        return ObjectLabel(
            class_name=self.tail_class,
            truncation=0.0,
            occlusion=0,
            alpha=self.alpha,
            bbox2d=self.bbox2d,
            dims=self.dims,
            location=self.location,
            rotation_y=self.rotation_y,
        )

    def corners_local(self):
        """Esquinas en coordenadas del recorte de inserción."""
        left, top = self.crop.origin
        return [(u - left, v - top) for u, v in self.corners2d]


@dataclass(frozen=True)
class EditPlan:
    scene_id: str
    object_index: int  # posición del objeto eliminado en scene.labels
    removed_label: object
    crop: object
    mask: object
    removal_prompt: str
    insertion: InsertionPlan

    @property
    def head_class(self):
        return self.removed_label.class_name


def plan_insertion(removed, tail_class, stats, calib, image_size, rng, others=(),
                   retries=DEFAULT_PLAN_RETRIES, crop_scale=DEFAULT_CROP_SCALE,
                   overlap_iou_max=DEFAULT_OVERLAP_IOU_MAX):
    """
    Planea el objeto cola que ocupa el lugar de ``removed``.

    Args:
        removed (ObjectLabel): objeto de clase cabeza a reemplazar
        tail_class (str): clase a insertar
        stats (ClassDimStats): estadísticas de dimensiones de la clase cola
        calib (CameraCalibration): calibración de la escena
        image_size (tuple): (width, height)
        rng (np.random.Generator): generador de la escena
        others (iterable): etiquetas con las que la caja nueva no puede solaparse
        retries (int): intentos de muestreo

    Raises:
        PlanningError: si ningún intento produce una caja dentro de la imagen y sin solape
    """
    location = tuple(removed.location)
    rotation_y = removed.rotation_y
    blocked = [tuple(label.bbox2d) for label in others]

    for attempt in range(1, retries + 1):
        dims = sample_dims(stats, rng)
        box = Box3D(dims=dims, location=location, rotation_y=rotation_y)
        try:
            projected = project_box_to_bbox2d(box, calib, image_size)
        except ProjectionError:
            continue
        if not projected.fully_inside:
            continue
        if any(iou_2d(projected.rect, rect) > overlap_iou_max for rect in blocked):
            continue

        alpha = alpha_from_pose(location, rotation_y)
        orientation = orientation_sector(alpha)
        crop = square_crop(projected.rect, crop_scale, image_size)
        corners = project_points(box3d_corners(box), calib)
        return InsertionPlan(
            tail_class=str(tail_class),
            dims=box.dims,
            location=box.location,
            rotation_y=box.rotation_y,
            alpha=alpha,
            bbox2d=projected.rect,
            corners2d=tuple((float(u), float(v)) for u, v in corners),
            orientation=orientation.value,
            prompt=insertion_prompt(tail_class, orientation),
            crop=crop,
            mask=build_mask(crop, projected.rect),
            attempts=attempt,
        )

    raise PlanningError(
        f"Ninguna de {retries} cajas de {tail_class} en {location} cabe en la imagen sin solaparse"
    )


def plan_scene(scene, removable, tail_class, stats, rng, crop_scale=DEFAULT_CROP_SCALE,
               retries=DEFAULT_PLAN_RETRIES, overlap_iou_max=DEFAULT_OVERLAP_IOU_MAX):
    """
    Un EditPlan por objeto reemplazable, en el orden recibido.

    Las cajas nuevas no pueden solaparse con las etiquetas de la escena (salvo
    el propio objeto que reemplazan) ni con las inserciones ya planeadas.

    Returns:
        tuple[list[EditPlan], int]: planes y cantidad de objetos sin plan
    """
    plans = []
    failures = 0
    for removed in removable:
        object_index = next(i for i, label in enumerate(scene.labels) if label is removed)
        others = [label for label in scene.objects if label is not removed]
        others += [plan.insertion.to_label() for plan in plans]

        crop = square_crop(removed.bbox2d, crop_scale, scene.image_size)
        try:
            insertion = plan_insertion(
                removed, tail_class, stats, scene.calib, scene.image_size, rng,
                others=others, retries=retries, crop_scale=crop_scale, overlap_iou_max=overlap_iou_max,
            )
        except PlanningError as exc:
            failures += 1
            logger.info(
                "%s: objeto %d sin plan: %s", scene.image_id, object_index, exc,
                extra={'scene_id': scene.image_id, 'stage': 'planning'},
            )
            continue

        plans.append(EditPlan(
            scene_id=scene.image_id,
            object_index=object_index,
            removed_label=removed,
            crop=crop,
            mask=build_mask(crop, removed.bbox2d),
            removal_prompt=removal_prompt(),
            insertion=insertion,
        ))
    return plans, failures


def generation_seed(seed, scene_id, object_index, stage):
    """Semilla del backend para una etapa; no depende del orden de ejecución."""
    return zlib.crc32(f'{seed}:{scene_id}:{object_index}:{stage}'.encode('utf-8'))
