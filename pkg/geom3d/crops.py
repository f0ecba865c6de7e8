"""
Ventanas de recorte cuadradas, máscaras binarias y mezcla del parche.

Todas las coordenadas de ventanas y máscaras son píxeles enteros; los rect
son semiabiertos: (left, top, right, bottom) cubre [left, right) × [top, bottom).
"""

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .exceptions import EmptyRegionError, GeometryError, SizeMismatchError

DEFAULT_CROP_SCALE = 1.5
DEFAULT_FEATHER_PX = 3

# Holgura para que s·max(w, h) entero no suba al siguiente píxel por redondeo
_CEIL_EPS = 1e-9


@dataclass(frozen=True)
class CropWindow:
    """Ventana cuadrada de lado ``side`` ya trasladada dentro de la imagen."""

    center: tuple  # centro pedido (u, v), antes de trasladar
    side: int
    rect: tuple  # (left, top, right, bottom)

    @property
    def origin(self):
        return self.rect[0], self.rect[1]

    def to_local(self, rect):
        """Convierte un rect de imagen a coordenadas locales del recorte."""
        left, top = self.origin
        return rect[0] - left, rect[1] - top, rect[2] - left, rect[3] - top

    def to_image(self, rect):
        left, top = self.origin
        return rect[0] + left, rect[1] + top, rect[2] + left, rect[3] + top


@dataclass(frozen=True)
class BinaryMask:
    """
    Máscara L×L con unos en un único rectángulo ``region`` (coordenadas locales).

    Una región con área cero representa la máscara vacía.
    """

    size: int
    region: tuple

    def __post_init__(self):
        left, top, right, bottom = (int(v) for v in self.region)
        if not (0 <= left <= right <= self.size and 0 <= top <= bottom <= self.size):
            raise GeometryError(f"Región {self.region} fuera de la máscara {self.size}x{self.size}")
        object.__setattr__(self, 'region', (left, top, right, bottom))

    @classmethod
    def empty(cls, size):
        return cls(size=size, region=(0, 0, 0, 0))

    @property
    def area(self):
        left, top, right, bottom = self.region
        return (right - left) * (bottom - top)

    @property
    def is_empty(self):
        return self.area == 0

    def to_array(self):
        """Arreglo uint8 (L, L) con valores en {0, 1}."""
        array = np.zeros((self.size, self.size), dtype=np.uint8)
        left, top, right, bottom = self.region
        array[top:bottom, left:right] = 1
        return array


def square_crop(bbox2d, scale, image_size):
    """
    Ventana cuadrada centrada en la caja, de lado ceil(s·max(w, h)).

    Si la ventana sale de la imagen se traslada (no se encoge); si el lado
    supera min(W, H) se recorta a ese valor.

    Raises:
        GeometryError: si ``scale`` <= 1
        EmptyRegionError: si la caja no tiene área
    """
    if scale <= 1:
        raise GeometryError(f"El factor de escala debe ser > 1, se recibió {scale}")

    left, top, right, bottom = bbox2d
    box_w, box_h = right - left, bottom - top
    if box_w <= 0 or box_h <= 0:
        raise EmptyRegionError(f"Caja degenerada {bbox2d}")

    width, height = image_size
    side = math.ceil(scale * max(box_w, box_h) - _CEIL_EPS)
    side = min(side, width, height)

    cu, cv = (left + right) / 2, (top + bottom) / 2
    crop_left = math.floor(cu - side / 2 + 0.5)
    crop_top = math.floor(cv - side / 2 + 0.5)
    crop_left = min(max(crop_left, 0), width - side)
    crop_top = min(max(crop_top, 0), height - side)

    return CropWindow(
        center=(cu, cv),
        side=side,
        rect=(crop_left, crop_top, crop_left + side, crop_top + side),
    )


def build_mask(crop, target_bbox2d):
    """
    Máscara con unos en la caja objetivo ∩ ventana, en coordenadas locales.

    Los bordes fraccionarios se expanden al píxel entero que los contiene.

    Raises:
        EmptyRegionError: si la caja no toca la ventana
    """
    c_left, c_top, c_right, c_bottom = crop.rect
    left = max(target_bbox2d[0], c_left)
    top = max(target_bbox2d[1], c_top)
    right = min(target_bbox2d[2], c_right)
    bottom = min(target_bbox2d[3], c_bottom)
    if left >= right or top >= bottom:
        raise EmptyRegionError(f"La caja {target_bbox2d} no intersecta la ventana {crop.rect}")

    region = (
        max(math.floor(left - c_left), 0),
        max(math.floor(top - c_top), 0),
        min(math.ceil(right - c_left), crop.side),
        min(math.ceil(bottom - c_top), crop.side),
    )
    return BinaryMask(size=crop.side, region=region)


def extract_crop(image, crop):
    """Copia del parche L×L de la imagen."""
    left, top, right, bottom = crop.rect
    height, width = image.shape[:2]
    if left < 0 or top < 0 or right > width or bottom > height:
        raise SizeMismatchError(f"La ventana {crop.rect} no cabe en la imagen {width}x{height}")
    return image[top:bottom, left:right].copy()


def feather_weights(mask, feather_px=DEFAULT_FEATHER_PX):
    """
    Pesos de mezcla (L, L): rampa lineal hacia dentro desde el borde de la máscara.

    Con d la distancia en píxeles al borde de la región, el peso es
    min(1, (d + 1) / (feather_px + 1)); fuera de la región es 0.
    """
    weights = np.zeros((mask.size, mask.size), dtype=float)
    if mask.is_empty:
        return weights

    left, top, right, bottom = mask.region
    cols = np.arange(left, right)
    rows = np.arange(top, bottom)
    dist_x = np.minimum(cols - left, right - 1 - cols)
    dist_y = np.minimum(rows - top, bottom - 1 - rows)
    distance = np.minimum(dist_y[:, None], dist_x[None, :])
    weights[top:bottom, left:right] = np.minimum(1.0, (distance + 1) / (feather_px + 1))
    return weights


def blend_crop(image, crop, patch, mask, feather_px=DEFAULT_FEATHER_PX):
    """
    Pega el parche bajo la máscara con borde suavizado.

    Los píxeles fuera de la máscara quedan idénticos bit a bit.

    Returns:
        np.ndarray: nueva imagen (la entrada no se modifica)

    Raises:
        SizeMismatchError: si parche o máscara no miden L×L
    """
    side = crop.side
    if patch.shape[:2] != (side, side) or mask.size != side:
        raise SizeMismatchError(
            f"Parche {patch.shape[:2]} / máscara {mask.size} no coinciden con la ventana {side}"
        )
    if patch.shape[2:] != image.shape[2:]:
        raise SizeMismatchError("El parche y la imagen tienen distinta cantidad de canales")

    result = image.copy()
    if mask.is_empty:
        return result

    left, top, right, bottom = crop.rect
    original = image[top:bottom, left:right]
    weights = feather_weights(mask, feather_px)[..., None]
    mixed = np.rint(weights * patch.astype(float) + (1.0 - weights) * original.astype(float))
    mixed = np.clip(mixed, 0, 255).astype(image.dtype)
    result[top:bottom, left:right] = np.where(weights > 0, mixed, original)
    return result


def mask_to_png(mask):
    """PNG de un canal: 255 en la región a repintar, 0 en el resto."""
    buffer = io.BytesIO()
    Image.fromarray(mask.to_array() * 255).save(buffer, format='PNG')
    return buffer.getvalue()


def png_to_mask(data):
    """
    Decodifica una máscara PNG (umbral 128) a BinaryMask.

    Raises:
        GeometryError: si la máscara no es cuadrada o sus unos no forman un rectángulo
    """
    with Image.open(io.BytesIO(data)) as image:
        array = np.asarray(image.convert('L')) >= 128
    height, width = array.shape
    if height != width:
        raise GeometryError(f"Máscara no cuadrada: {width}x{height}")
    if not array.any():
        return BinaryMask.empty(width)

    rows = np.flatnonzero(array.any(axis=1))
    cols = np.flatnonzero(array.any(axis=0))
    region = (int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)
    mask = BinaryMask(size=width, region=region)
    if not np.array_equal(mask.to_array().astype(bool), array):
        raise GeometryError("La máscara no es un único rectángulo")
    return mask
