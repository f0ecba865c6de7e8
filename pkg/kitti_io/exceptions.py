class KittiError(ValueError):
    """Error base de lectura/escritura de archivos KITTI."""


class LabelParseError(KittiError):
    """
    Línea de etiqueta mal formada.

    Guarda el número de línea (1-based) cuando el error viene de un archivo.
    """

    def __init__(self, message, line_no=None, path=None):
        self.reason = message
        self.line_no = line_no
        self.path = path
        if line_no is not None:
            message = f"{path or '<labels>'}:{line_no}: {message}"
        super().__init__(message)


class LabelValidationError(KittiError):
    """La etiqueta viola los invariantes de ObjectLabel."""


class CalibrationError(KittiError):
    """Archivo de calibración sin P2 o con P2 incompleto."""


class DatasetError(KittiError):
    """Directorio de dataset vacío o incompleto."""
