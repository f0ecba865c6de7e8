"""
Configuración de logging compartida por settings y por los comandos.

Dos formatos: ``human`` (por defecto) y ``json`` (una línea JSON por evento,
con los campos pasados en ``extra=``).
"""

import json
import logging
from datetime import datetime, timezone


# Atributos estándar de LogRecord que no se copian como campos extra
_RESERVED = set(vars(logging.LogRecord('', 0, '', 0, '', (), None))) | {'message', 'asctime'}

LOCAL_LOGGERS = [
    'kitti_io',
    'geom3d',
    'dim_sampler',
    'gen_backend',
    'llm_filter',
    'pipeline',
    'evaluation',
    'cli',
]


class JsonLinesFormatter(logging.Formatter):
    """
    Formatea cada registro como un objeto JSON en una sola línea.

    Los campos ``extra`` (scene_id, stage, protocol, ...) se copian al objeto.
    """

    def format(self, record):
        payload = {
            'ts': datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
        }
        for key, value in vars(record).items():
            if key not in _RESERVED and not key.startswith('_'):
                payload[key] = value
        if record.exc_info:
            payload['exc'] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str, ensure_ascii=False)


def build_logging(fmt='human', level='INFO'):
    """
    Construye el diccionario para ``logging.config.dictConfig``.

    Args:
        fmt (str): 'human' o 'json'
        level (str): nivel para los loggers del proyecto

    Returns:
        dict: configuración de logging
    """
    if fmt not in ('human', 'json'):
        raise ValueError(f"Formato de log desconocido: {fmt}")

    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'human': {
                'format': '%(asctime)s %(levelname)-7s %(name)s: %(message)s',
            },
            'json': {
                '()': 'config.logging.JsonLinesFormatter',
            },
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler',
                'formatter': fmt,
            },
        },
        'loggers': {
            name: {'handlers': ['console'], 'level': level.upper(), 'propagate': False}
            for name in LOCAL_LOGGERS
        },
    }
