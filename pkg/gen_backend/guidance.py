"""
Guía sin clasificador (classifier-free guidance).

El denoising real ocurre en el servicio remoto; aquí solo vive la regla de
combinación, que el protocolo HTTP transmite como ``guidance_scale``.
"""

import numpy as np

from .exceptions import GuidanceShapeError

DEFAULT_STEPS = 30
DEFAULT_GUIDANCE_SCALE = 8.0


def cfg_combine(eps_cond, eps_uncond, w):
    """
    ε̃ = (1 + w)·ε_cond − w·ε_uncond, elemento a elemento.

    Args:
        eps_cond: estimación de ruido condicionada al prompt
        eps_uncond: estimación sin condicionar
        w (float): escala de guía (w = 0 devuelve ε_cond)

    Raises:
        GuidanceShapeError: si las formas no coinciden
    """
    eps_cond = np.asarray(eps_cond, dtype=float)
    eps_uncond = np.asarray(eps_uncond, dtype=float)
    if eps_cond.shape != eps_uncond.shape:
        raise GuidanceShapeError(f"Formas distintas: {eps_cond.shape} vs {eps_uncond.shape}")
    return (1.0 + w) * eps_cond - w * eps_uncond
