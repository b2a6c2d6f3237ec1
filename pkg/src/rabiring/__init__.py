"""Three-cavity Rabi ring under an artificial gauge field."""

__version__ = "0.1.0"

from .params import FrequencyRatio, ModelParams, bare_coupling, flux  # noqa: F401
