"""
Comando base de la línea de comandos.

Agrega las opciones compartidas (--seed, --log, --log-level), configura el
logging y traduce los errores del dominio a CommandError (código de salida
distinto de 0).
"""

import json
import logging.config

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from config.logging import build_logging
from dim_sampler.exceptions import DimStatsError
from evaluation.exceptions import EvaluationError
from gen_backend.exceptions import BackendError
from geom3d.exceptions import GeometryError
from kitti_io.exceptions import KittiError
from llm_filter.exceptions import JudgeError, LlmFilterError
from pipeline.exceptions import ConfigError, PipelineError

DOMAIN_ERRORS = (
    KittiError, GeometryError, DimStatsError, BackendError, LlmFilterError, JudgeError,
    PipelineError, ConfigError, EvaluationError, ImproperlyConfigured,
)


def format_validation_error(exc):
    """Aplana el detalle de un ValidationError de DRF en ``campo.subcampo: mensaje``."""

    def walk(detail, path):
        if isinstance(detail, dict):
            for key, value in detail.items():
                yield from walk(value, path if key == 'non_field_errors' else path + [str(key)])
        elif isinstance(detail, list):
            for value in detail:
                yield from walk(value, path)
        else:
            yield f"{'.'.join(path)}: {detail}" if path else str(detail)

    return '; '.join(walk(exc.detail, []))


class LtdaCommand(BaseCommand):
    """
    Las subclases implementan ``add_command_arguments`` y ``run``.
    """

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=None, help="Semilla (por defecto 0)")
        parser.add_argument('--log', choices=['human', 'json'], default=settings.LOG_FORMAT,
                            help="Formato de log")
        parser.add_argument('--log-level', default=settings.LOG_LEVEL, help="Nivel de log")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        logging.config.dictConfig(build_logging(options['log'], options['log_level']))
        try:
            return self.run(**options)
        except ValidationError as exc:
            raise CommandError(f"Configuración inválida: {format_validation_error(exc)}") from exc
        except DOMAIN_ERRORS as exc:
            raise CommandError(str(exc)) from exc

    def run(self, **options):
        raise NotImplementedError

    def seed(self, options):
        return options['seed'] if options['seed'] is not None else 0

    def write_json(self, data):
        self.stdout.write(json.dumps(data, indent=2, ensure_ascii=False))
