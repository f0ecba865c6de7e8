"""
Backend sintético determinista para corridas de escritorio.

Eliminación: cada columna de la máscara se rellena interpolando linealmente
entre el píxel justo encima y el justo debajo de la región; si uno de los dos
cae fuera del recorte se copia el otro. Si la máscara ocupa toda la altura se
usan las columnas vecinas, y si ocupa todo el recorte, el color medio.

Inserción: se dibuja un glifo de la clase escalado al rect de la máscara,
desplazado ``índice · jitter_px`` píxeles a la derecha y recortado a la
máscara. Las orientaciones izquierdas y derechas producen glifos espejados;
frente y atrás son simétricos.
"""

import numpy as np
from PIL import Image, ImageDraw

from geom3d.orientation import RIGHT_FAMILY, Sector

from .backends import InpaintBackend
from .prompts import parse_prompt
from .types import Candidate, InpaintResponse

DEFAULT_JITTER_PX = 2

GLYPH_COLORS = {
    'cyclist': (30, 160, 70),
    'pedestrian': (220, 170, 50),
}
DEFAULT_GLYPH_COLOR = (160, 60, 60)
OUTLINE_COLOR = (15, 15, 15)


def background_fill(crop, mask):
    """
    Relleno procedural de la región de la máscara (el modelo de fondo).

    Returns:
        np.ndarray: copia de ``crop`` con la región rellenada
    """
    result = crop.copy()
    if mask.is_empty:
        return result

    left, top, right, bottom = mask.region
    side = mask.size
    height = bottom - top

    above = crop[top - 1, left:right].astype(float) if top > 0 else None
    below = crop[bottom, left:right].astype(float) if bottom < side else None

    if above is not None and below is not None:
        fraction = (np.arange(1, height + 1) / (height + 1))[:, None, None]
        filled = above[None] * (1 - fraction) + below[None] * fraction
    elif above is not None or below is not None:
        edge = above if above is not None else below
        filled = np.broadcast_to(edge[None], (height, right - left, crop.shape[2]))
    else:
        # La máscara ocupa toda la altura: se extienden las columnas vecinas
        left_col = crop[:, left - 1].astype(float) if left > 0 else None
        right_col = crop[:, right].astype(float) if right < side else None
        width = right - left
        if left_col is not None and right_col is not None:
            fraction = (np.arange(1, width + 1) / (width + 1))[None, :, None]
            filled = left_col[:, None] * (1 - fraction) + right_col[:, None] * fraction
        elif left_col is not None or right_col is not None:
            edge = left_col if left_col is not None else right_col
            filled = np.broadcast_to(edge[:, None], (side, width, crop.shape[2]))
        else:
            filled = np.broadcast_to(crop.reshape(-1, crop.shape[2]).mean(axis=0), crop.shape)
        filled = filled[top:bottom]

    result[top:bottom, left:right] = np.clip(np.rint(filled), 0, 255).astype(crop.dtype)
    return result


def draw_glyph(object_name, orientation, width, height):
    """Glifo RGB + alfa de tamaño (height, width), mirando a la izquierda."""
    image = Image.new('RGB', (width, height), (0, 0, 0))
    alpha = Image.new('L', (width, height), 0)
    color = GLYPH_COLORS.get(object_name, DEFAULT_GLYPH_COLOR)
    w, h = width - 1, height - 1
    side_view = orientation not in (Sector.FRONT, Sector.BACK)

    for canvas, fill, outline in ((image, color, OUTLINE_COLOR), (alpha, 255, 255)):
        draw = ImageDraw.Draw(canvas)
        if object_name == 'cyclist':
            if side_view:
                radius = min(w * 0.22, h * 0.22)
                for cx in (radius, w - radius):
                    draw.ellipse([cx - radius, h - 2 * radius, cx + radius, h], outline=outline, width=2)
                draw.line([radius, h - radius, w * 0.5, h * 0.55, w - radius, h - radius], fill=outline, width=2)
                draw.ellipse([w * 0.2, h * 0.05, w * 0.4, h * 0.25], fill=fill)
                draw.rectangle([w * 0.3, h * 0.25, w * 0.55, h * 0.6], fill=fill)
            else:
                draw.ellipse([w * 0.4, h * 0.55, w * 0.6, h], outline=outline, width=2)
                draw.ellipse([w * 0.35, h * 0.02, w * 0.65, h * 0.22], fill=fill)
                draw.rectangle([w * 0.25, h * 0.22, w * 0.75, h * 0.6], fill=fill)
        elif object_name == 'pedestrian':
            draw.ellipse([w * 0.3, 0, w * 0.7, h * 0.2], fill=fill)
            body_left = 0.1 if side_view else 0.15
            draw.ellipse([w * body_left, h * 0.18, w * (1 - body_left), h], fill=fill)
            if side_view:
                # Nariz hacia la izquierda para romper la simetría
                draw.polygon([(w * 0.3, h * 0.08), (w * 0.15, h * 0.12), (w * 0.3, h * 0.15)], fill=fill)
        else:
            draw.rectangle([0, h * 0.35, w, h * 0.85], fill=fill)
            draw.rectangle([w * 0.15, h * 0.1, w * 0.7, h * 0.4], fill=fill)
            for cx in (w * 0.2, w * 0.8):
                draw.ellipse([cx - h * 0.15, h * 0.7, cx + h * 0.15, h], fill=outline)

    rgb = np.asarray(image)
    mask = np.asarray(alpha) > 0
    if orientation in RIGHT_FAMILY:
        rgb, mask = rgb[:, ::-1], mask[:, ::-1]
    return rgb, mask


class SyntheticBackend(InpaintBackend):
    """
    Backend procedural; función pura de (solicitud, semilla).

    Args:
        jitter_px (int): desplazamiento horizontal por índice de candidato
        noise_std (float): ruido gaussiano opcional sobre el relleno de
            eliminación (0 = relleno exacto)
    """

    name = 'synthetic'

    def __init__(self, jitter_px=DEFAULT_JITTER_PX, noise_std=0.0):
        self.jitter_px = int(jitter_px)
        self.noise_std = float(noise_std)

    def render(self, request):
        parsed = parse_prompt(request.prompt)
        candidates = []
        for index in range(request.num_candidates):
            seed = int(request.seed) + index
            if parsed.kind == 'removal':
                image, extra = self._removal(request, seed), {}
            else:
                image, extra = self._insertion(request, parsed, index)
            candidates.append(Candidate(
                index=index,
                image=image,
                metadata={'seed': seed, 'latency_ms': 0.0, **extra},
            ))
        return InpaintResponse(candidates=candidates)

    def _removal(self, request, seed):
        image = background_fill(request.crop_image, request.mask)
        if self.noise_std > 0 and not request.mask.is_empty:
            rng = np.random.default_rng(seed)
            left, top, right, bottom = request.mask.region
            region = image[top:bottom, left:right].astype(float)
            region += rng.normal(0.0, self.noise_std, size=region.shape)
            image[top:bottom, left:right] = np.clip(np.rint(region), 0, 255).astype(image.dtype)
        return image

    def _insertion(self, request, parsed, index):
        image = request.crop_image.copy()
        mask = request.mask
        orientation = Sector(parsed.orientation)
        if mask.is_empty:
            return image, {'glyph_rect': None, 'orientation': orientation.value}

        left, top, right, bottom = mask.region
        shift = index * self.jitter_px
        rgb, alpha = draw_glyph(parsed.object_name, orientation, right - left, bottom - top)

        # Glifo desplazado y recortado a la máscara
        visible = right - left - shift
        glyph_rect = None
        if visible > 0:
            target = image[top:bottom, left + shift:right]
            keep = alpha[:, :visible]
            target[keep] = rgb[:, :visible][keep]
            glyph_rect = (left + shift, top, right, bottom)

        return image, {'glyph_rect': glyph_rect, 'orientation': orientation.value}
