"""Semiclassical simulator of a vapor-coupled microresonator optical switch.

Submodules: ``atom`` (four-level master equation), ``vapor`` (Doppler-averaged
absorption), ``cavity`` (add-drop coupled-mode theory and the intensity fixed
point), ``transistor`` (switching scenarios and metrics), ``config``/``cli``
(run configuration and the command-line front end).
"""

__version__ = "0.1.0"

from . import atom, cavity, config, linedata, transistor, validate, vapor  # noqa: E402,F401
from .errors import EitSwitchError  # noqa: F401
