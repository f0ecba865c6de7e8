"""
Escenas y estadísticas a nivel de dataset.

Estructura de directorios esperada (devkit KITTI)::

    <root>/label_2/<id>.txt
    <root>/calib/<id>.txt
    <root>/image_2/<id>.png
"""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from .calibration import parse_calib
from .exceptions import DatasetError, LabelValidationError
from .labels import parse_label_file

logger = logging.getLogger(__name__)

LABEL_DIR = 'label_2'
CALIB_DIR = 'calib'
IMAGE_DIR = 'image_2'
IMAGE_EXT = '.png'

# Tolerancia (px) para cajas 2D que rozan el borde de la imagen
BBOX_TOLERANCE_PX = 1.0


@dataclass
class Scene:
    """Una imagen con sus etiquetas y su calibración."""

    image_id: str
    image_size: tuple  # (width, height)
    labels: list
    calib: object

    @property
    def objects(self):
        """Etiquetas sin DontCare."""
        return [label for label in self.labels if not label.is_dontcare]


@dataclass
class DatasetStats:
    """
    Conteo de instancias por clase y su participación porcentual.

    Las clases conservan el orden en que se pidieron.
    """

    counts: dict = field(default_factory=dict)

    @property
    def total(self):
        return sum(self.counts.values())

    @property
    def shares(self):
        total = self.total
        if total == 0:
            return {name: 0.0 for name in self.counts}
        return {name: 100.0 * count / total for name, count in self.counts.items()}

    def merge(self, other):
        """Suma dos conteos (asociativa y conmutativa)."""
        merged = dict(self.counts)
        for name, count in other.counts.items():
            merged[name] = merged.get(name, 0) + count
        return DatasetStats(counts=merged)

    @classmethod
    def from_labels(cls, labels, classes):
        counter = Counter(label.class_name for label in labels if label.class_name in classes)
        return cls(counts={name: counter.get(name, 0) for name in classes})


def list_scene_ids(root):
    """IDs de escena ordenados según los archivos de label_2."""
    label_dir = Path(root) / LABEL_DIR
    return sorted(path.stem for path in label_dir.glob('*.txt'))


def read_split(path):
    """
    Lee un archivo de split (un ID por línea), p. ej. el split train de 3.712 imágenes.
    """
    ids = [line.strip() for line in Path(path).read_text().splitlines()]
    return [image_id for image_id in ids if image_id]


def read_image_size(path):
    """Tamaño (width, height) leído del encabezado del PNG, sin decodificar píxeles."""
    with Image.open(path) as image:
        return image.size


def load_scene(root, image_id, image_size=None):
    """
    Arma una Scene desde label_2, calib e image_2.

    Args:
        root: raíz del dataset
        image_id (str): ID de la escena
        image_size (tuple): tamaño conocido; si es None se lee del PNG

    Raises:
        DatasetError: si falta algún archivo de la escena
    """
    root = Path(root)
    label_path = root / LABEL_DIR / f'{image_id}.txt'
    calib_path = root / CALIB_DIR / f'{image_id}.txt'
    image_path = root / IMAGE_DIR / f'{image_id}{IMAGE_EXT}'

    for path in (label_path, calib_path):
        if not path.exists():
            raise DatasetError(f"Falta {path} para la escena {image_id}")

    if image_size is None:
        if not image_path.exists():
            raise DatasetError(f"Falta {image_path} para la escena {image_id}")
        image_size = read_image_size(image_path)

    return Scene(
        image_id=image_id,
        image_size=tuple(image_size),
        labels=parse_label_file(label_path),
        calib=parse_calib(calib_path),
    )


def check_scene(scene, tolerance=BBOX_TOLERANCE_PX):
    """
    Verifica que toda caja 2D (sin DontCare) esté dentro de la imagen.

    Raises:
        LabelValidationError: si una caja sale de la imagen más allá de la tolerancia
    """
    width, height = scene.image_size
    for label in scene.objects:
        left, top, right, bottom = label.bbox2d
        if (left < -tolerance or top < -tolerance
                or right > width + tolerance or bottom > height + tolerance):
            raise LabelValidationError(
                f"{scene.image_id}: caja {label.bbox2d} de {label.class_name} fuera de "
                f"la imagen {width}x{height}"
            )
    return scene


def _label_paths(label_dir, ids=None):
    label_dir = Path(label_dir)
    if ids is None:
        paths = sorted(label_dir.glob('*.txt'))
    else:
        paths = [label_dir / f'{image_id}.txt' for image_id in ids]
        missing = [path for path in paths if not path.exists()]
        if missing:
            raise DatasetError(f"Faltan {len(missing)} archivos del split, p. ej. {missing[0]}")

    if not paths:
        raise DatasetError(f"No hay archivos de etiquetas en {label_dir}")
    return paths


def load_all_labels(label_dir, ids=None, workers=None):
    """
    Lee todas las etiquetas de un directorio (o de un split) en una sola lista.

    El orden es el de los IDs ordenados, sin importar el orden de lectura.
    """
    paths = _label_paths(label_dir, ids)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        per_file = list(pool.map(parse_label_file, paths))
    return [label for labels in per_file for label in labels]


def _count_file(path, classes):
    counter = Counter(
        label.class_name for label in parse_label_file(path) if label.class_name in classes
    )
    return DatasetStats(counts={name: counter.get(name, 0) for name in classes})


def dataset_stats(label_dir, classes, ids=None, workers=None):
    """
    Cuenta instancias por clase en un directorio de etiquetas.

    Los archivos se leen en paralelo; la agregación es una suma, así que el
    resultado no depende del orden de lectura.

    Args:
        label_dir: directorio con archivos <id>.txt
        classes (iterable): clases a contar (las demás se ignoran)
        ids (list): restringe la lectura a estos IDs (split)
        workers (int): hilos de lectura

    Returns:
        DatasetStats: conteos restringidos a ``classes``

    Raises:
        DatasetError: si el directorio no tiene archivos de etiquetas
    """
    classes = list(dict.fromkeys(classes))
    paths = _label_paths(label_dir, ids)

    stats = DatasetStats(counts={name: 0 for name in classes})
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for partial in pool.map(lambda path: _count_file(path, classes), paths):
            stats = stats.merge(partial)

    logger.info(
        "Estadísticas de %d archivos: %s", len(paths), stats.counts,
        extra={'files': len(paths), 'total': stats.total},
    )
    return stats
