"""
Cliente HTTP del servicio de inpainting (difusión remota).

Protocolo (JSON)::

    POST <LTDA_INPAINT_URL>
    {image_png_b64, mask_png_b64, prompt, negative_prompt, steps,
     guidance_scale, num_candidates, seed}
    -> {candidates: [{image_png_b64, seed}, ...]}

Los candidatos se piden en lotes; un semáforo compartido por todos los hilos
limita las solicitudes en vuelo.
"""

import asyncio
import logging
import threading
import time

import aiohttp
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from geom3d.crops import mask_to_png

from .backends import InpaintBackend
from .codecs import decode_png_b64, encode_png_b64, png_b64_from_bytes
from .exceptions import (
    BackendProtocolError, BackendTimeoutError, BackendUnavailableError,
)
from .types import Candidate, InpaintResponse

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 120.0
DEFAULT_MAX_IN_FLIGHT = 4
DEFAULT_ATTEMPTS = 3
DEFAULT_BACKOFF_S = 1.0


class _RetryableError(Exception):
    pass


class WireInpaintBackend(InpaintBackend):
    """
    Backend remoto.

    Args:
        url (str): endpoint completo
        api_key (str): token Bearer (opcional)
        timeout_s (float): tiempo máximo por solicitud
        max_in_flight (int): solicitudes simultáneas entre todos los hilos
        max_candidates_per_request (int): tamaño de lote; None = todos en una
        attempts (int): intentos por lote
        backoff_s (float): espera base, se duplica en cada reintento
    """

    name = 'wire'

    def __init__(self, url, api_key='', timeout_s=DEFAULT_TIMEOUT_S,
                 max_in_flight=DEFAULT_MAX_IN_FLIGHT, max_candidates_per_request=None,
                 attempts=DEFAULT_ATTEMPTS, backoff_s=DEFAULT_BACKOFF_S):
        self.url = url
        self.api_key = api_key
        self.timeout_s = float(timeout_s)
        self.max_candidates_per_request = max_candidates_per_request
        self.attempts = int(attempts)
        self.backoff_s = float(backoff_s)
        self._slots = threading.BoundedSemaphore(max_in_flight)

    @classmethod
    def from_settings(cls, **kwargs):
        """
        Raises:
            ImproperlyConfigured: si falta LTDA_INPAINT_URL
        """
        if not settings.LTDA_INPAINT_URL:
            raise ImproperlyConfigured("Falta la variable de entorno LTDA_INPAINT_URL")
        return cls(url=settings.LTDA_INPAINT_URL, api_key=settings.LTDA_INPAINT_KEY, **kwargs)

    def render(self, request):
        return asyncio.run(self._render(request))

    def _batches(self, request):
        size = self.max_candidates_per_request or request.num_candidates
        return [
            (start, min(size, request.num_candidates - start))
            for start in range(0, request.num_candidates, size)
        ]

    async def _render(self, request):
        image_b64 = encode_png_b64(request.crop_image)
        mask_b64 = png_b64_from_bytes(mask_to_png(request.mask))
        headers = {'Content-Type': 'application/json'}
        if self.api_key:
            headers['Authorization'] = f'Bearer {self.api_key}'

        timeout = aiohttp.ClientTimeout(total=self.timeout_s)
        async with aiohttp.ClientSession(headers=headers, timeout=timeout) as session:
            results = await asyncio.gather(*[
                self._fetch_batch(session, request, image_b64, mask_b64, start, count)
                for start, count in self._batches(request)
            ])

        candidates = [candidate for batch in results for candidate in batch]
        return InpaintResponse(candidates=sorted(candidates, key=lambda c: c.index))

    async def _fetch_batch(self, session, request, image_b64, mask_b64, start, count):
        payload = {
            'image_png_b64': image_b64,
            'mask_png_b64': mask_b64,
            'prompt': request.prompt,
            'negative_prompt': request.negative_prompt,
            'steps': request.steps,
            'guidance_scale': request.guidance_scale,
            'num_candidates': count,
            'seed': int(request.seed) + start,
        }

        last_error = None
        for attempt in range(1, self.attempts + 1):
            await asyncio.to_thread(self._slots.acquire)
            started = time.perf_counter()
            try:
                body = await self._post_json(session, payload)
            except asyncio.TimeoutError as exc:
                last_error = BackendTimeoutError(f"Tiempo agotado tras {self.timeout_s} s")
                last_error.__cause__ = exc
            except (aiohttp.ClientError, _RetryableError) as exc:
                last_error = BackendUnavailableError(f"Servicio de inpainting no disponible: {exc}")
                last_error.__cause__ = exc
            else:
                latency_ms = (time.perf_counter() - started) * 1000
                return self._parse_batch(body, request, start, count, latency_ms)
            finally:
                self._slots.release()

            if attempt < self.attempts:
                delay = self.backoff_s * 2 ** (attempt - 1)
                logger.warning(
                    "Reintento %d/%d del lote %d en %.1f s: %s", attempt, self.attempts, start, delay,
                    last_error, extra={'backend': self.name, 'attempt': attempt},
                )
                await asyncio.sleep(delay)

        raise last_error

    async def _post_json(self, session, payload):
        async with session.post(self.url, json=payload) as response:
            if response.status >= 500:
                raise _RetryableError(f"HTTP {response.status}")
            if response.status != 200:
                text = await response.text()
                raise BackendProtocolError(f"Inpaint API error ({response.status}): {text}")
            try:
                return await response.json()
            except (aiohttp.ContentTypeError, ValueError) as exc:
                raise BackendProtocolError("La respuesta no es JSON") from exc

    def _parse_batch(self, body, request, start, count, latency_ms):
        items = body.get('candidates') if isinstance(body, dict) else None
        if not isinstance(items, list) or len(items) != count:
            received = len(items) if isinstance(items, list) else 'ningún'
            raise BackendProtocolError(f"Se esperaban {count} candidatos, llegaron {received}")

        candidates = []
        for offset, item in enumerate(items):
            try:
                image = decode_png_b64(item['image_png_b64'])
            except (KeyError, TypeError, ValueError) as exc:
                raise BackendProtocolError(f"Candidato {start + offset} inválido: {exc}") from exc
            if image.shape != request.crop_image.shape:
                raise BackendProtocolError(
                    f"Candidato {start + offset} mide {image.shape}, se esperaba {request.crop_image.shape}"
                )
            candidates.append(Candidate(
                index=start + offset,
                image=image,
                metadata={'seed': item.get('seed', int(request.seed) + start + offset), 'latency_ms': latency_ms},
            ))
        return candidates
