"""
Ángulo de observación (alpha) y sectores de orientación.

Tabla de sectores (ancho π/4, centros en k·π/4)::

    alpha =  0     -> back          alpha = ±π    -> front
    alpha =  π/4   -> back-left     alpha = -3π/4 -> front-right
    alpha =  π/2   -> left          alpha = -π/2  -> right
    alpha =  3π/4  -> front-left    alpha = -π/4  -> back-right

En un borde exacto gana el sector que aparece primero en ``Sector``.
El mismo sector se usa en el prompt de inserción y en el juez de punto de vista.
"""

import math

from django.db import models
from django.utils.translation import gettext_lazy as _

SECTOR_WIDTH = math.pi / 4
_TIE_TOLERANCE = 1e-9


class Sector(models.TextChoices):
    FRONT = 'front', _('Frente')
    FRONT_LEFT = 'front-left', _('Frente-izquierda')
    LEFT = 'left', _('Izquierda')
    BACK_LEFT = 'back-left', _('Atrás-izquierda')
    BACK = 'back', _('Atrás')
    BACK_RIGHT = 'back-right', _('Atrás-derecha')
    RIGHT = 'right', _('Derecha')
    FRONT_RIGHT = 'front-right', _('Frente-derecha')


# k mod 8 -> sector centrado en k·π/4
_SECTOR_BY_INDEX = [
    Sector.BACK,
    Sector.BACK_LEFT,
    Sector.LEFT,
    Sector.FRONT_LEFT,
    Sector.FRONT,
    Sector.FRONT_RIGHT,
    Sector.RIGHT,
    Sector.BACK_RIGHT,
]
_INDEX_BY_SECTOR = {sector: k for k, sector in enumerate(_SECTOR_BY_INDEX)}
_ENUM_ORDER = {sector: i for i, sector in enumerate(Sector)}

RIGHT_FAMILY = {Sector.RIGHT, Sector.FRONT_RIGHT, Sector.BACK_RIGHT}


def wrap_angle(angle):
    """Lleva un ángulo a [-π, π)."""
    return (angle + math.pi) % (2 * math.pi) - math.pi


def alpha_from_pose(location, rotation_y):
    """alpha = rotation_y - atan2(x, z), envuelto a [-π, π)."""
    x, _, z = location
    return wrap_angle(rotation_y - math.atan2(x, z))


def orientation_sector(alpha):
    """Sector de orientación de un ángulo de observación."""
    position = wrap_angle(alpha) / SECTOR_WIDTH
    lower = math.floor(position)
    fraction = position - lower

    if abs(fraction - 0.5) <= _TIE_TOLERANCE:
        candidates = [_SECTOR_BY_INDEX[lower % 8], _SECTOR_BY_INDEX[(lower + 1) % 8]]
        return min(candidates, key=_ENUM_ORDER.__getitem__)

    k = lower + 1 if fraction > 0.5 else lower
    return _SECTOR_BY_INDEX[k % 8]


def sector_distance(a, b):
    """Distancia circular entre dos sectores (0 a 4)."""
    diff = abs(_INDEX_BY_SECTOR[Sector(a)] - _INDEX_BY_SECTOR[Sector(b)]) % 8
    return min(diff, 8 - diff)
