from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidRequestError
from .guidance import DEFAULT_GUIDANCE_SCALE, DEFAULT_STEPS


@dataclass
class InpaintRequest:
    """
    Solicitud de repintado de un recorte L×L.

    ``mask`` es una geom3d.crops.BinaryMask; 1 marca la región a regenerar.
    """

    crop_image: np.ndarray
    mask: object
    prompt: str
    negative_prompt: str = ''
    steps: int = DEFAULT_STEPS
    guidance_scale: float = DEFAULT_GUIDANCE_SCALE
    num_candidates: int = 1
    seed: int = 0

    @property
    def side(self):
        return self.crop_image.shape[0]

    def validate(self):
        """
        Raises:
            InvalidRequestError: si algún invariante de la solicitud no se cumple
        """
        shape = self.crop_image.shape
        if self.crop_image.ndim != 3 or shape[0] != shape[1] or shape[2] != 3:
            raise InvalidRequestError(f"El recorte debe ser L×L×3, se recibió {shape}")
        if self.mask.size != shape[0]:
            raise InvalidRequestError(f"Máscara {self.mask.size} distinta del recorte {shape[0]}")
        if self.steps < 1:
            raise InvalidRequestError("steps debe ser >= 1")
        if self.num_candidates < 1:
            raise InvalidRequestError("num_candidates debe ser >= 1")
        if self.guidance_scale < 0:
            raise InvalidRequestError("guidance_scale no puede ser negativo")
        if not self.prompt.strip():
            raise InvalidRequestError("El prompt está vacío")
        return self


@dataclass
class Candidate:
    """Un parche generado; ``metadata`` guarda seed, latency_ms y datos del backend."""

    index: int
    image: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def seed(self):
        return self.metadata.get('seed')


@dataclass
class InpaintResponse:
    candidates: list
