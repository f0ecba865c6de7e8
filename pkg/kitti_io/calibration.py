"""
Calibración de cámara KITTI (solo se usa la matriz de proyección P2).
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import CalibrationError


@dataclass(frozen=True, eq=False)
class CameraCalibration:
    """
    Matriz 3×4 que proyecta puntos del marco de cámara a píxeles.

    pixels = P2 · [x y z 1]ᵀ seguido de la división por la tercera coordenada.
    """

    p2: np.ndarray

    def __post_init__(self):
        p2 = np.asarray(self.p2, dtype=float).reshape(3, 4)
        if p2[2, 2] == 0:
            raise CalibrationError("P2[2][2] no puede ser 0 (fila de perspectiva inválida)")
        object.__setattr__(self, 'p2', p2)

    @classmethod
    def from_values(cls, values):
        values = list(values)
        if len(values) != 12:
            raise CalibrationError(f"P2 necesita 12 números, se recibieron {len(values)}")
        return cls(p2=np.array(values, dtype=float).reshape(3, 4))

    @property
    def focal(self):
        return float(self.p2[0, 0])

    @property
    def principal_point(self):
        return float(self.p2[0, 2]), float(self.p2[1, 2])

    def to_line(self):
        return 'P2: ' + ' '.join(f'{v:.12e}' for v in self.p2.ravel())


def parse_calib(path):
    """
    Lee la línea ``P2:`` de un archivo calib/<id>.txt.

    Raises:
        CalibrationError: si falta P2, tiene una cantidad distinta de 12
            números o algún valor no es numérico
    """
    for line in Path(path).read_text().splitlines():
        if not line.startswith('P2:'):
            continue
        raw = line[len('P2:'):].split()
        try:
            values = [float(v) for v in raw]
        except ValueError as exc:
            raise CalibrationError(f"{path}: P2 contiene valores no numéricos") from exc
        return CameraCalibration.from_values(values)

    raise CalibrationError(f"{path}: no se encontró la línea P2")
