class LlmFilterError(ValueError):
    """Error base del filtrado con jueces LLM."""


class VerdictParseError(LlmFilterError):
    """
    Respuesta del juez que no cumple la gramática del protocolo.

    Guarda el texto crudo y el motivo por separado.
    """

    def __init__(self, raw, reason):
        self.raw = raw
        self.reason = reason
        preview = raw if len(raw) <= 80 else raw[:77] + '...'
        super().__init__(f"{reason}: {preview!r}")


class ExemplarMissingError(LlmFilterError):
    """Faltan los paneles de ejemplo del juez geométrico."""


class JudgeError(RuntimeError):
    """El juez no pudo emitir un veredicto (metadatos ausentes o servicio caído)."""
