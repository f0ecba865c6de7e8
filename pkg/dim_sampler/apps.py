from django.apps import AppConfig


class DimSamplerConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'dim_sampler'
