class GeometryError(ValueError):
    """Error base de geometría (cajas, proyección, recortes)."""


class ProjectionError(GeometryError):
    """Algún punto está sobre o detrás del plano de la cámara."""


class EmptyRegionError(GeometryError):
    """Caja degenerada o intersección vacía."""


class SizeMismatchError(GeometryError):
    """Los tamaños de imagen, parche o máscara no coinciden."""
