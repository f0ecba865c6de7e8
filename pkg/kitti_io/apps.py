from django.apps import AppConfig


class KittiIoConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'kitti_io'
