from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class NumericsConfig(AppConfig):

    name = "numerics"

    verbose_name = _("Grushin numerics")
