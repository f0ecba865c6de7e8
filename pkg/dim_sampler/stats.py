"""
Estadísticas de dimensiones por clase y muestreo de normal truncada.

Cada dimensión (h, w, l) se modela por separado como N(μ, σ²) condicionada
a [a, b], con a y b el mínimo y el máximo observados en el entrenamiento.
"""

import math
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .exceptions import DimStatsError

DIMENSIONS = ('h', 'w', 'l')

# Por debajo de esta probabilidad de aceptación se usa la CDF inversa
REJECTION_MIN_ACCEPTANCE = 0.05


@dataclass(frozen=True)
class DimStats:
    """μ, σ (poblacional), mínimo a y máximo b de una dimensión, en metros."""

    mu: float
    sigma: float
    a: float
    b: float

    def __post_init__(self):
        if self.sigma < 0:
            raise DimStatsError(f"sigma negativo: {self.sigma}")
        if not self.a <= self.mu <= self.b:
            raise DimStatsError(f"Se requiere a <= mu <= b, se recibió a={self.a} mu={self.mu} b={self.b}")


@dataclass(frozen=True)
class ClassDimStats:
    class_name: str
    h: DimStats
    w: DimStats
    l: DimStats
    sample_count: int

    def dim(self, name):
        return getattr(self, name)


def _column_stats(values):
    # Ordenar hace el resultado independiente del orden de las etiquetas
    values = np.sort(np.asarray(values, dtype=float))
    a, b = float(values[0]), float(values[-1])
    mu = float(np.mean(values))
    return DimStats(
        mu=min(max(mu, a), b),
        sigma=float(np.std(values)),
        a=a,
        b=b,
    )


def estimate_class_stats(labels, class_name):
    """
    Media, desviación poblacional, mínimo y máximo por dimensión.

    Args:
        labels (iterable[ObjectLabel]): etiquetas de entrenamiento
        class_name (str): clase a estimar

    Raises:
        DimStatsError: si no hay etiquetas de la clase
    """
    dims = np.array([label.dims for label in labels if label.class_name == class_name], dtype=float)
    if len(dims) == 0:
        raise DimStatsError(f"No hay etiquetas de la clase {class_name}")

    h, w, l = (_column_stats(dims[:, i]) for i in range(3))
    return ClassDimStats(class_name=str(class_name), h=h, w=w, l=l, sample_count=len(dims))


def _rejection(mu, sigma, a, b, acceptance, count, rng):
    accepted = []
    remaining = count
    while remaining > 0:
        batch = rng.normal(mu, sigma, size=int(remaining / acceptance * 1.2) + 8)
        batch = batch[(batch >= a) & (batch <= b)][:remaining]
        accepted.append(batch)
        remaining -= len(batch)
    return np.concatenate(accepted)


def _inverse_cdf(mu, sigma, a, b, count, rng):
    alpha, beta = (a - mu) / sigma, (b - mu) / sigma
    u = rng.random(count)
    mirrored = alpha > 0
    if mirrored:
        # Cola superior: se muestrea el intervalo espejado en la cola inferior
        low, high = ndtr(-beta), ndtr(-alpha)
    else:
        low, high = ndtr(alpha), ndtr(beta)

    if not high > low:
        # Masa por debajo de la precisión doble: todo cae en el borde más cercano a μ
        return np.full(count, min(max(mu, a), b), dtype=float)

    standard = ndtri(low + u * (high - low))
    if mirrored:
        standard = -standard
    return np.clip(mu + sigma * standard, a, b)


def sample_truncated_normal(mu, sigma, a, b, rng, size=None):
    """
    Muestra de N(μ, σ²) condicionada a [a, b].

    Se usa rechazo mientras la probabilidad de aceptación sea >= 0.05 y la
    CDF inversa cuando la banda es más estrecha. ``a`` o ``b`` pueden ser
    infinitos.

    Args:
        rng (np.random.Generator): generador del llamador
        size (int): cantidad de muestras; None devuelve un float

    Raises:
        DimStatsError: si a > b o sigma < 0
    """
    if a > b:
        raise DimStatsError(f"Intervalo vacío: a={a} > b={b}")
    if sigma < 0:
        raise DimStatsError(f"sigma negativo: {sigma}")

    count = 1 if size is None else int(size)
    if sigma == 0 or a == b:
        values = np.full(count, min(max(mu, a), b), dtype=float)
    else:
        acceptance = float(ndtr((b - mu) / sigma) - ndtr((a - mu) / sigma))
        if acceptance >= REJECTION_MIN_ACCEPTANCE:
            values = _rejection(mu, sigma, a, b, acceptance, count, rng)
        else:
            values = _inverse_cdf(mu, sigma, a, b, count, rng)

    return float(values[0]) if size is None else values


def sample_dims(stats, rng):
    """Tres muestras independientes (h, w, l)."""
    return tuple(
        sample_truncated_normal(d.mu, d.sigma, d.a, d.b, rng)
        for d in (stats.h, stats.w, stats.l)
    )


def truncated_normal_mean(mu, sigma, a, b):
    """Media analítica de la normal truncada (para verificaciones)."""
    if sigma == 0:
        return min(max(mu, a), b)
    alpha, beta = (a - mu) / sigma, (b - mu) / sigma
    pdf = lambda x: 0.0 if math.isinf(x) else math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    mass = float(ndtr(beta) - ndtr(alpha))
    return mu + sigma * (pdf(alpha) - pdf(beta)) / mass


def scene_rng(seed, scene_id):
    """
    Generador propio de una escena, derivado de la semilla de la corrida.

    Depende solo de (seed, scene_id), nunca del orden en que los hilos
    procesan las escenas.
    """
    entropy = [int(seed), zlib.crc32(str(scene_id).encode('utf-8'))]
    return np.random.default_rng(np.random.SeedSequence(entropy))
