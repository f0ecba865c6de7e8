"""
Configuración de una corrida de aumento.

Precedencia (de menor a mayor): valores por defecto < entorno (settings) <
archivo JSON < opciones de línea de comandos.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from llm_filter.types import Protocol

from .exceptions import ConfigError
from .selection import SelectionCriteria
from .serializers import (
    DEFAULT_INSERTION_K, DEFAULT_INSERTION_M, DEFAULT_REMOVAL_K, DEFAULT_REMOVAL_M,
    RunConfigSerializer,
)
from .stages import GenerationOptions


@dataclass(frozen=True)
class StageConfig:
    m: int
    k: int = 1


@dataclass(frozen=True)
class RunConfig:
    dataset_dir: str
    output_dir: str
    run_name: str = 'ltda'
    split: str | None = None
    seed: int = 0
    classes: tuple = ('Car', 'Pedestrian', 'Cyclist')
    class_mix: dict = field(default_factory=lambda: {'Cyclist': 612.0, 'Pedestrian': 147.0})
    targets: dict = field(default_factory=dict)
    criteria: SelectionCriteria = field(default_factory=SelectionCriteria)
    crop_scale: float = 1.5
    feather_px: int = 3
    removal: StageConfig = StageConfig(m=DEFAULT_REMOVAL_M, k=DEFAULT_REMOVAL_K)
    insertion: StageConfig = StageConfig(m=DEFAULT_INSERTION_M, k=DEFAULT_INSERTION_K)
    steps: int = 30
    guidance_scale: float = 8.0
    negative_prompt: str = ''
    filters: dict = field(default_factory=lambda: {protocol.value: True for protocol in Protocol})
    score_floor: int = 7
    iou_threshold: float = 0.7
    viewpoint_tolerance: int = 0
    plan_retries: int = 5
    overlap_iou_max: float = 0.05
    inpaint_backend: str = 'synthetic'
    judge_backend: str = 'mock'
    jitter_px: int = 2
    noise_std: float = 0.0
    max_in_flight: int = 4
    max_candidates_per_request: int | None = None
    llm_rpm: int = 60
    copy_originals: bool = True
    stats_cache: str | None = None
    exemplar_dir: str = ''
    workers: int = 1
    max_skip_fraction: float = 1.0

    @classmethod
    def from_validated(cls, data):
        data = dict(data)
        head_class = data['head_class']
        data['criteria'] = SelectionCriteria(head_class=head_class, **data.get('criteria', {}))
        del data['head_class']
        data['classes'] = tuple(data['classes'])
        data['removal'] = StageConfig(**data.get('removal', {'m': DEFAULT_REMOVAL_M, 'k': DEFAULT_REMOVAL_K}))
        data['insertion'] = StageConfig(**data.get('insertion', {'m': DEFAULT_INSERTION_M, 'k': DEFAULT_INSERTION_K}))
        filters = {protocol.value: True for protocol in Protocol}
        filters.update(data.get('filters', {}))
        data['filters'] = filters
        return cls(**data)

    @property
    def head_class(self):
        return self.criteria.head_class

    @property
    def tail_classes(self):
        return list(self.class_mix)

    @property
    def variants(self):
        """Variantes por escena; con k = 1 en ambas etapas es una sola."""
        return max(self.removal.k, self.insertion.k)

    def generation_options(self):
        return GenerationOptions(
            steps=self.steps,
            guidance_scale=self.guidance_scale,
            negative_prompt=self.negative_prompt,
            feather_px=self.feather_px,
            score_floor=self.score_floor,
            disabled=frozenset(Protocol(name) for name, enabled in self.filters.items() if not enabled),
        )

    def as_json(self):
        """Diccionario serializable a JSON (se guarda en el manifiesto)."""
        data = asdict(self)
        data['classes'] = list(self.classes)
        return data


def load_run_config(path=None, overrides=None):
    """
    Lee, mezcla y valida la configuración.

    Args:
        path: archivo JSON (opcional)
        overrides (dict): opciones de línea de comandos; los None se ignoran

    Raises:
        ConfigError: si el archivo no existe o no es JSON
        rest_framework.exceptions.ValidationError: si algún valor es inválido
    """
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"No existe el archivo de configuración {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"El archivo de configuración {path} no es JSON válido: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"El archivo de configuración {path} debe contener un objeto JSON")

    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    serializer = RunConfigSerializer(data=data)
    serializer.is_valid(raise_exception=True)
    return RunConfig.from_validated(serializer.validated_data)
