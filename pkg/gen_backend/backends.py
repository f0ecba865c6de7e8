"""
Contrato de los backends de inpainting.

Todo backend recibe un InpaintRequest y devuelve exactamente
``num_candidates`` parches L×L. ``generate`` valida la respuesta y vuelve a
imponer la máscara: fuera de ella cada candidato es idéntico al recorte.
"""

import abc
import logging
import time

import numpy as np

from .exceptions import BackendProtocolError

logger = logging.getLogger(__name__)


class InpaintBackend(abc.ABC):
    """Interfaz común; las implementaciones deben poder llamarse desde varios hilos."""

    name = 'abstract'

    @abc.abstractmethod
    def render(self, request):
        """Devuelve un InpaintResponse para una solicitud ya validada."""


def impose_mask(crop_image, patch, mask):
    """Copia ``patch`` solo dentro de la máscara; el resto queda igual a ``crop_image``."""
    inside = mask.to_array().astype(bool)[..., None]
    return np.where(inside, patch, crop_image).astype(crop_image.dtype)


def generate(request, backend):
    """
    Valida la solicitud, llama al backend y hace cumplir su contrato.

    Returns:
        InpaintResponse: candidatos ordenados por índice

    Raises:
        InvalidRequestError: solicitud inválida
        BackendProtocolError: cantidad, índices o tamaños incorrectos
        BackendUnavailableError / BackendTimeoutError: propagados del backend
    """
    request.validate()
    started = time.perf_counter()
    response = backend.render(request)
    elapsed_ms = (time.perf_counter() - started) * 1000

    candidates = sorted(response.candidates, key=lambda candidate: candidate.index)
    if len(candidates) != request.num_candidates:
        raise BackendProtocolError(
            f"{backend.name}: se esperaban {request.num_candidates} candidatos, "
            f"llegaron {len(candidates)}"
        )
    if [candidate.index for candidate in candidates] != list(range(request.num_candidates)):
        raise BackendProtocolError(f"{backend.name}: índices de candidatos inválidos")

    for candidate in candidates:
        if candidate.image.shape != request.crop_image.shape:
            raise BackendProtocolError(
                f"{backend.name}: candidato {candidate.index} mide {candidate.image.shape}, "
                f"se esperaba {request.crop_image.shape}"
            )
        candidate.image = impose_mask(request.crop_image, candidate.image, request.mask)

    logger.debug(
        "%s generó %d candidatos en %.1f ms", backend.name, len(candidates), elapsed_ms,
        extra={'backend': backend.name, 'candidates': len(candidates)},
    )
    response.candidates = candidates
    return response
