class BackendError(RuntimeError):
    """Error base de los backends de inpainting."""


class BackendUnavailableError(BackendError):
    """El servicio no respondió tras agotar los reintentos."""


class BackendTimeoutError(BackendError):
    """La solicitud superó el tiempo máximo en todos los intentos."""


class BackendProtocolError(BackendError):
    """Respuesta con cantidad o tamaño de candidatos incorrectos, o cuerpo inválido."""


class InvalidRequestError(BackendError, ValueError):
    """InpaintRequest que no cumple sus invariantes."""


class PromptGrammarError(BackendError, ValueError):
    """Prompt que el backend sintético no reconoce."""


class GuidanceShapeError(ValueError):
    """Las estimaciones condicional e incondicional tienen formas distintas."""
