"""
Django settings for the LTDA augmentation project.

El proyecto no sirve HTTP: Django aporta la configuración, el ORM para el
manifiesto de ejecuciones, el motor de plantillas para los prompts y los
comandos de gestión (``python manage.py <comando>``).

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.0/ref/settings/
"""

import os
from pathlib import Path
from decouple import config

from .logging import build_logging


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# La clave solo se usa internamente por Django; no hay sesiones ni firmas públicas
SECRET_KEY = config('SECRET_KEY', default='ltda-desk-only-secret-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='').split(',')


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',

    # Third party apps
    'rest_framework',

    # Local apps
    'kitti_io',
    'geom3d',
    'dim_sampler',
    'gen_backend',
    'llm_filter',
    'pipeline',
    'evaluation',
    'cli',
]

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,  # llm_filter/templates/llm_filter/*.txt
        'OPTIONS': {
            'context_processors': [],
        },
    },
]


# Database
# SQLite por defecto para corridas de escritorio; PostgreSQL con DB_ENGINE=postgresql

DB_ENGINE = config('DB_ENGINE', default='sqlite3')

if DB_ENGINE == 'postgresql':
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.postgresql',
            'NAME': config('DB_NAME'),
            'USER': config('DB_USER'),
            'PASSWORD': config('DB_PASSWORD'),
            'HOST': config('DB_HOST'),
            'PORT': config('DB_PORT'),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': config('DB_NAME', default=str(BASE_DIR / 'ltda.sqlite3')),
        }
    }


# Internationalization

LANGUAGE_CODE = 'es-co'

TIME_ZONE = 'America/Bogota'

USE_I18N = True

USE_TZ = True


# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# REST Framework: solo se usan los serializers para validar configuraciones
# y emitir JSON, no hay vistas
REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
    'COERCE_DECIMAL_TO_STRING': False,
}


# Logging
LOG_LEVEL = config('LOG_LEVEL', default='INFO')
LOG_FORMAT = config('LOG_FORMAT', default='human')

LOGGING = build_logging(LOG_FORMAT, LOG_LEVEL)


# Backends remotos (las credenciales solo se exigen si la configuración los usa)
LTDA_INPAINT_URL = config('LTDA_INPAINT_URL', default='')
LTDA_INPAINT_KEY = config('LTDA_INPAINT_KEY', default='')
LTDA_LLM_URL = config('LTDA_LLM_URL', default='')
LTDA_LLM_KEY = config('LTDA_LLM_KEY', default='')
LTDA_LLM_MODEL = config('LTDA_LLM_MODEL', default='gpt-4.1')

# Paneles de ejemplo para el juez geométrico (few-shot)
LTDA_EXEMPLAR_DIR = config('LTDA_EXEMPLAR_DIR', default=str(BASE_DIR / 'assets' / 'exemplars'))

# Paralelismo por escena (por defecto, núcleos disponibles)
LTDA_WORKERS = config('LTDA_WORKERS', default=os.cpu_count() or 1, cast=int)
