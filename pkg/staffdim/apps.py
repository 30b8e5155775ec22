from django.apps import AppConfig


class StaffdimConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'staffdim'
    verbose_name = 'Staff dimensioning'
