"""
Juez LLM remoto (HTTP, JSON)::

    POST <LTDA_LLM_URL>
    {model, temperature: 0, messages: [{role, text, images: [png_b64, ...]}]}
    -> {text}

Una sola consulta por candidato a temperatura 0. Si la respuesta no cumple el
formato se repite una vez agregando una instrucción de formato; si vuelve a
fallar el candidato se rechaza sin evaluar.
"""

import asyncio
import logging
import threading
import time

import aiohttp
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from gen_backend.codecs import encode_png_b64

from .exceptions import JudgeError, VerdictParseError
from .judges import Judge
from .parsers import parse_explained_verdict, parse_scored_verdict
from .types import SCORED_PROTOCOLS, Verdict

logger = logging.getLogger(__name__)

STRICT_FORMAT_SUFFIX = 'Answer strictly in the required format.'

DEFAULT_RPM = 60
DEFAULT_TIMEOUT_S = 60.0
DEFAULT_ATTEMPTS = 3
DEFAULT_BACKOFF_S = 1.0


class RateLimiter:
    """
    Presupuesto global de solicitudes por minuto, compartido entre hilos.

    Reparte las solicitudes a intervalos de 60/rpm segundos.
    """

    def __init__(self, rpm, clock=time.monotonic, sleep=time.sleep):
        self.interval = 60.0 / rpm if rpm else 0.0
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_slot = None

    def acquire(self):
        """Bloquea hasta el próximo turno libre; devuelve los segundos esperados."""
        with self._lock:
            now = self._clock()
            slot = now if self._next_slot is None else max(now, self._next_slot)
            self._next_slot = slot + self.interval
        wait = slot - now
        if wait > 0:
            self._sleep(wait)
        return wait


class _RetryableError(Exception):
    pass


class RemoteJudge(Judge):
    """
    Args:
        url (str): endpoint completo
        api_key (str): token Bearer (opcional)
        model (str): nombre del modelo
        rpm (int): solicitudes por minuto entre todos los hilos (0 = sin límite)
        timeout_s (float): tiempo máximo por solicitud
        attempts (int): intentos ante fallas de red o 5xx
        backoff_s (float): espera base, se duplica en cada reintento
    """

    name = 'remote'

    def __init__(self, url, api_key='', model='', rpm=DEFAULT_RPM, timeout_s=DEFAULT_TIMEOUT_S,
                 attempts=DEFAULT_ATTEMPTS, backoff_s=DEFAULT_BACKOFF_S):
        self.url = url
        self.api_key = api_key
        self.model = model
        self.timeout_s = float(timeout_s)
        self.attempts = int(attempts)
        self.backoff_s = float(backoff_s)
        self.limiter = RateLimiter(rpm)

    @classmethod
    def from_settings(cls, **kwargs):
        """
        Raises:
            ImproperlyConfigured: si falta LTDA_LLM_URL
        """
        if not settings.LTDA_LLM_URL:
            raise ImproperlyConfigured("Falta la variable de entorno LTDA_LLM_URL")
        return cls(url=settings.LTDA_LLM_URL, api_key=settings.LTDA_LLM_KEY,
                   model=settings.LTDA_LLM_MODEL, **kwargs)

    def judge(self, query, metadata=None):
        return self.judge_many([(query, metadata)])[0]

    def judge_many(self, items):
        return asyncio.run(self._judge_many([query for query, _ in items]))

    async def _judge_many(self, queries):
        headers = {'Content-Type': 'application/json'}
        if self.api_key:
            headers['Authorization'] = f'Bearer {self.api_key}'
        timeout = aiohttp.ClientTimeout(total=self.timeout_s)
        async with aiohttp.ClientSession(headers=headers, timeout=timeout) as session:
            return await asyncio.gather(*[self._judge(session, query) for query in queries])

    @staticmethod
    def _parse(query, text):
        if query.protocol in SCORED_PROTOCOLS:
            lower, upper = query.score_range
            return parse_scored_verdict(text, lower, upper)
        return parse_explained_verdict(text)

    async def _judge(self, session, query):
        images = [encode_png_b64(image) for image in query.images]
        text = await self._ask(session, query.prompt_text, images)
        try:
            return self._parse(query, text)
        except VerdictParseError as exc:
            logger.warning(
                "Respuesta fuera de formato del candidato %d, se repite la consulta: %s",
                query.candidate_index, exc.reason,
                extra={'protocol': query.protocol.value, 'candidate': query.candidate_index},
            )

        text = await self._ask(session, f'{query.prompt_text}\n{STRICT_FORMAT_SUFFIX}', images)
        try:
            return self._parse(query, text)
        except VerdictParseError as exc:
            logger.warning(
                "Candidato %d rechazado: respuesta ilegible", query.candidate_index,
                extra={'protocol': query.protocol.value, 'candidate': query.candidate_index},
            )
            return Verdict(accepted=False, explanation=exc.reason, raw=text, evaluated=False)

    async def _ask(self, session, prompt, images):
        payload = {
            'model': self.model,
            'temperature': 0,
            'messages': [{'role': 'user', 'text': prompt, 'images': images}],
        }

        last_error = None
        for attempt in range(1, self.attempts + 1):
            await asyncio.to_thread(self.limiter.acquire)
            try:
                body = await self._post_json(session, payload)
            except asyncio.TimeoutError as exc:
                last_error = JudgeError(f"Tiempo agotado tras {self.timeout_s} s")
                last_error.__cause__ = exc
            except (aiohttp.ClientError, _RetryableError) as exc:
                last_error = JudgeError(f"Servicio LLM no disponible: {exc}")
                last_error.__cause__ = exc
            else:
                text = body.get('text') if isinstance(body, dict) else None
                if not isinstance(text, str):
                    raise JudgeError("La respuesta del LLM no trae el campo 'text'")
                return text

            if attempt < self.attempts:
                delay = self.backoff_s * 2 ** (attempt - 1)
                logger.warning(
                    "Reintento %d/%d del juez en %.1f s: %s", attempt, self.attempts, delay, last_error,
                    extra={'backend': self.name, 'attempt': attempt},
                )
                await asyncio.sleep(delay)

        raise last_error

    async def _post_json(self, session, payload):
        async with session.post(self.url, json=payload) as response:
            if response.status >= 500:
                raise _RetryableError(f"HTTP {response.status}")
            if response.status != 200:
                text = await response.text()
                raise JudgeError(f"LLM API error ({response.status}): {text}")
            try:
                return await response.json()
            except (aiohttp.ContentTypeError, ValueError) as exc:
                raise JudgeError("La respuesta no es JSON") from exc
