from django.apps import AppConfig


class GenBackendConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'gen_backend'
