class EvaluationError(ValueError):
    """Error base del evaluador (archivos faltantes o mal formados)."""


class DetectionParseError(EvaluationError):
    """Línea de detección sin el campo 16 (confianza) o con un valor inválido."""
