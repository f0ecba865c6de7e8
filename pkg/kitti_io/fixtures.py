"""
Mini-dataset de 5 escenas para pruebas y corridas de escritorio.

Las etiquetas y calibraciones viven como texto en ``testdata/mini``; las
imágenes se pintan de forma determinista (cielo, calzada y un rectángulo
por objeto) para no versionar binarios.
"""

import shutil
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset import CALIB_DIR, IMAGE_DIR, IMAGE_EXT, LABEL_DIR, list_scene_ids
from .labels import ObjectClass, parse_label_file

MINI_DATASET_DIR = Path(__file__).resolve().parent / 'testdata' / 'mini'
MINI_IMAGE_SIZE = (1242, 375)
HORIZON_V = 180

# Color de relleno por clase (RGB)
CLASS_COLORS = {
    ObjectClass.CAR: (150, 40, 40),
    ObjectClass.VAN: (60, 60, 150),
    ObjectClass.TRUCK: (90, 90, 40),
    ObjectClass.PEDESTRIAN: (200, 160, 60),
    ObjectClass.CYCLIST: (40, 150, 90),
}
DEFAULT_COLOR = (120, 120, 120)


def paint_scene_image(labels, image_size=MINI_IMAGE_SIZE):
    """
    Pinta una imagen sintética con un rectángulo por etiqueta.

    Returns:
        np.ndarray: imagen uint8 (H, W, 3)
    """
    width, height = image_size
    image = np.zeros((height, width, 3), dtype=np.uint8)

    # Cielo con degradado vertical y calzada gris con textura por columnas
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    sky = rows < HORIZON_V
    image[..., 0] = np.where(sky, 120 + rows * 40 // HORIZON_V, 90 + (cols % 7))
    image[..., 1] = np.where(sky, 160 + rows * 40 // HORIZON_V, 90 + (cols % 5))
    image[..., 2] = np.where(sky, 220, 95 + (cols % 3))

    for label in labels:
        if label.is_dontcare:
            continue
        left, top, right, bottom = (int(round(v)) for v in label.bbox2d)
        left, right = max(left, 0), min(right, width)
        top, bottom = max(top, 0), min(bottom, height)
        image[top:bottom, left:right] = CLASS_COLORS.get(label.class_name, DEFAULT_COLOR)
        # Borde oscuro para que la eliminación sea visible
        image[top:bottom, left:left + 2] = 20
        image[top:bottom, right - 2:right] = 20

    return image


def build_mini_dataset(dest):
    """
    Copia el mini-dataset a ``dest`` y genera sus imágenes PNG.

    Args:
        dest: directorio destino (se crea si no existe)

    Returns:
        Path: raíz del dataset generado
    """
    dest = Path(dest)
    for sub in (LABEL_DIR, CALIB_DIR):
        shutil.copytree(MINI_DATASET_DIR / sub, dest / sub, dirs_exist_ok=True)
    shutil.copyfile(MINI_DATASET_DIR / 'split.txt', dest / 'split.txt')

    image_dir = dest / IMAGE_DIR
    image_dir.mkdir(parents=True, exist_ok=True)
    for image_id in list_scene_ids(dest):
        labels = parse_label_file(dest / LABEL_DIR / f'{image_id}.txt')
        Image.fromarray(paint_scene_image(labels)).save(image_dir / f'{image_id}{IMAGE_EXT}')

    return dest
