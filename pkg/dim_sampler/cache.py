"""
Caché JSON de estadísticas de dimensiones.

Evita releer todas las etiquetas en cada corrida de aumento. El archivo
guarda el origen (directorio de etiquetas y huella del split) y una entrada
por clase; si el origen no coincide, las estadísticas se recalculan.
"""

import hashlib
import json
import logging
from pathlib import Path

from kitti_io.dataset import load_all_labels

from .exceptions import DimStatsError
from .serializers import ClassDimStatsSerializer
from .stats import estimate_class_stats

logger = logging.getLogger(__name__)


def stats_source(label_dir, ids=None):
    """Origen de unas estadísticas: directorio absoluto y sha256 de los IDs ordenados (None = todos)."""
    split = None
    if ids is not None:
        split = hashlib.sha256('\n'.join(sorted(str(i) for i in ids)).encode('utf-8')).hexdigest()
    return {'label_dir': str(Path(label_dir).resolve()), 'split': split}


def build_stats(label_dir, classes, ids=None):
    """Estima las estadísticas de cada clase a partir de las etiquetas."""
    labels = load_all_labels(label_dir, ids=ids)
    return {str(name): estimate_class_stats(labels, name) for name in classes}


def write_stats(stats, path, source=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        'source': source,
        'classes': ClassDimStatsSerializer(list(stats.values()), many=True).data,
    }
    path.write_text(json.dumps(payload, indent=2))


def read_cache(path):
    """
    Lee y valida el archivo de caché.

    Returns:
        tuple[dict | None, dict[str, ClassDimStats]]: origen y estadísticas

    Raises:
        DimStatsError: si el archivo no cumple el formato esperado
    """
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DimStatsError(f"Caché de dimensiones ilegible: {path}") from exc

    serializer = ClassDimStatsSerializer(data=payload.get('classes', []), many=True)
    if not serializer.is_valid():
        raise DimStatsError(f"Caché de dimensiones inválida {path}: {serializer.errors}")
    return payload.get('source'), {stats.class_name: stats for stats in serializer.save()}


def read_stats(path):
    return read_cache(path)[1]


def load_or_build_stats(label_dir, classes, cache_path=None, ids=None):
    """
    Devuelve las estadísticas por clase, usando la caché si viene del mismo
    origen y cubre todas las clases.

    Args:
        label_dir: directorio label_2 de entrenamiento
        classes (iterable): clases cola a muestrear
        cache_path: archivo JSON de caché (None desactiva la caché)
        ids (list): split de entrenamiento

    Returns:
        dict[str, ClassDimStats]
    """
    classes = [str(name) for name in classes]
    source = stats_source(label_dir, ids)
    if cache_path is not None and Path(cache_path).exists():
        cached_source, cached = read_cache(cache_path)
        if cached_source != source:
            logger.info("La caché %s viene de otro origen (%s), se recalcula", cache_path, cached_source)
        elif all(name in cached for name in classes):
            logger.info("Estadísticas de dimensiones leídas de %s", cache_path)
            return {name: cached[name] for name in classes}
        else:
            logger.info("La caché %s no cubre %s, se recalcula", cache_path, classes)

    stats = build_stats(label_dir, classes, ids=ids)
    if cache_path is not None:
        write_stats(stats, cache_path, source=source)
        logger.info("Estadísticas de dimensiones guardadas en %s", cache_path)
    return stats
