from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class SymbolicConfig(AppConfig):

    name = "symbolic"

    verbose_name = _("Symbolic vector fields")
