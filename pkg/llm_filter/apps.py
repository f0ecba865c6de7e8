from django.apps import AppConfig


class LlmFilterConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'llm_filter'
