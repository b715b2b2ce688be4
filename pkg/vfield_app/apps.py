from django.apps import AppConfig


class VfieldAppConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "vfield_app"
    verbose_name = "Vector field periodgons"
