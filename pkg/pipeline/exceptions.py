class PipelineError(RuntimeError):
    """Error base de la orquestación del aumento."""


class PlanningError(PipelineError):
    """No se pudo planear la inserción (todas las cajas muestreadas salen de la imagen o se solapan)."""


class StageError(PipelineError):
    """Falló la etapa de eliminación o de inserción (backend o juez)."""


class ConfigError(ValueError):
    """Configuración de corrida ilegible o incompatible con una corrida previa."""
