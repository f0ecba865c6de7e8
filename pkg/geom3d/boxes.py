"""
Cajas 3D en el marco de cámara KITTI y su proyección a la imagen.

Convención: x a la derecha, y hacia abajo, z hacia adelante. ``location`` es
el centro de la cara inferior de la caja; ``rotation_y`` gira alrededor de y.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import GeometryError, ProjectionError


@dataclass(frozen=True)
class Box3D:
    """Cuboide con dimensiones (h, w, l), centro inferior y yaw."""

    dims: tuple
    location: tuple
    rotation_y: float

    def __post_init__(self):
        dims = tuple(float(v) for v in self.dims)
        location = tuple(float(v) for v in self.location)
        if len(dims) != 3 or len(location) != 3:
            raise GeometryError("Box3D necesita 3 dimensiones y 3 coordenadas")
        if min(dims) <= 0:
            raise GeometryError(f"Dimensiones no positivas: {dims}")
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'location', location)
        object.__setattr__(self, 'rotation_y', float(self.rotation_y))

    @property
    def height(self):
        return self.dims[0]

    @property
    def volume(self):
        h, w, l = self.dims
        return h * w * l

    @property
    def y_range(self):
        """Intervalo vertical [y - h, y] (la caja se apoya en y)."""
        y = self.location[1]
        return y - self.height, y


@dataclass(frozen=True)
class ProjectedBox:
    """Envolvente 2D de las 8 esquinas proyectadas."""

    rect: tuple  # (left, top, right, bottom)
    fully_inside: bool


def box3d_corners(box):
    """
    Las 8 esquinas del cuboide rotado.

    Las 4 primeras forman la cara inferior (y = location.y), las 4 últimas
    la superior (y = location.y - h).

    Returns:
        np.ndarray: arreglo (8, 3) de puntos (x, y, z)
    """
    h, w, l = box.dims
    x = np.array([l / 2, l / 2, -l / 2, -l / 2] * 2)
    y = np.array([0.0] * 4 + [-h] * 4)
    z = np.array([w / 2, -w / 2, -w / 2, w / 2] * 2)

    c, s = math.cos(box.rotation_y), math.sin(box.rotation_y)
    rotated_x = c * x + s * z
    rotated_z = -s * x + c * z

    cx, cy, cz = box.location
    return np.stack([rotated_x + cx, y + cy, rotated_z + cz], axis=1)


def project_points(points, calib):
    """
    Proyecta puntos del marco de cámara a píxeles con P2.

    Args:
        points: arreglo (N, 3)
        calib (CameraCalibration): calibración de la escena

    Returns:
        np.ndarray: arreglo (N, 2) de (u, v)

    Raises:
        ProjectionError: si algún punto tiene z <= 0
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(points[:, 2] <= 0):
        raise ProjectionError("No se puede proyectar un punto sobre o detrás del plano de la cámara")

    homogeneous = np.hstack([points, np.ones((len(points), 1))])
    projected = homogeneous @ calib.p2.T
    depth = projected[:, 2:3]
    if np.any(depth <= 0):
        raise ProjectionError("Coordenada homogénea no positiva tras la proyección")
    return projected[:, :2] / depth


def project_box_to_bbox2d(box, calib, image_size):
    """
    Caja 2D alineada a los ejes que envuelve la proyección del cuboide.

    Args:
        box (Box3D): caja frente a la cámara
        calib (CameraCalibration): calibración
        image_size (tuple): (width, height)

    Returns:
        ProjectedBox: rect sin recortar y si queda completamente dentro de la imagen
    """
    uv = project_points(box3d_corners(box), calib)
    left, top = uv.min(axis=0)
    right, bottom = uv.max(axis=0)
    width, height = image_size
    inside = bool(left >= 0 and top >= 0 and right <= width and bottom <= height)
    return ProjectedBox(
        rect=(float(left), float(top), float(right), float(bottom)),
        fully_inside=inside,
    )


def clamp_rect(rect, image_size):
    """Recorta un rect a los límites [0, width] × [0, height]."""
    width, height = image_size
    left, top, right, bottom = rect
    return (
        min(max(left, 0.0), width),
        min(max(top, 0.0), height),
        min(max(right, 0.0), width),
        min(max(bottom, 0.0), height),
    )
