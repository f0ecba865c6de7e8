from django.apps import AppConfig


class Geom3dConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'geom3d'
