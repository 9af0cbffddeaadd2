from django.apps import AppConfig


class NormalformsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'rigidgerms_project.normalforms'
    verbose_name = 'Rigid germ normal forms'
