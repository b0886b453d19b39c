"""Optical line constants loaded from a data file.

No spectroscopic constant is hard-coded in logic; everything comes from a
structured text file (INI dialect) with one section per driven transition
holding wavelength_m, gamma_rad_per_s, dipole_Cm and mass_kg. The packaged
default describes the Rb-87 D lines; see the header of
``data/rb87_lines.dat`` for the reference and the channel-rate conventions.
"""

import configparser
import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from types import MappingProxyType

from scipy.constants import c, epsilon_0, hbar

from .errors import ConfigError, InvalidParameterError

TRANSITION_KEYS = ("probe1", "eit", "probe2")
_FIELD_KEYS = {"wavelength_m", "gamma_rad_per_s", "dipole_Cm", "mass_kg"}


def radiative_dipole(wavelength_m: float, gamma_rad_per_s: float) -> float:
    """Dipole moment whose spontaneous decay rate equals the channel rate.

    d^2 = 3 pi eps0 hbar c^3 gamma / omega^3
    """
    if wavelength_m <= 0 or gamma_rad_per_s < 0:
        raise InvalidParameterError(
            "radiative_dipole needs a positive wavelength and gamma >= 0"
        )
    omega = 2.0 * math.pi * c / wavelength_m
    return math.sqrt(3.0 * math.pi * epsilon_0 * hbar * c**3 * gamma_rad_per_s / omega**3)


@dataclass(frozen=True)
class OpticalTransition:
    """One driven channel: vacuum wavelength, decay rate, dipole moment."""

    name: str
    wavelength_m: float
    gamma_rad_per_s: float
    dipole_Cm: float

    def __post_init__(self):
        for field in ("wavelength_m", "gamma_rad_per_s", "dipole_Cm"):
            value = getattr(self, field)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidParameterError(
                    f"transition {self.name!r}: {field} must be positive and finite"
                )

    @property
    def angular_frequency(self) -> float:
        return 2.0 * math.pi * c / self.wavelength_m

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength_m


@dataclass(frozen=True)
class LineData:
    """Atomic mass plus the three driven transitions, keyed by channel."""

    mass_kg: float
    transitions: MappingProxyType

    def __post_init__(self):
        if not (math.isfinite(self.mass_kg) and self.mass_kg > 0):
            raise InvalidParameterError("mass_kg must be positive and finite")
        missing = [k for k in TRANSITION_KEYS if k not in self.transitions]
        if missing:
            raise InvalidParameterError(f"line data missing transitions: {missing}")

    def transition(self, key: str) -> OpticalTransition:
        try:
            return self.transitions[key]
        except KeyError:
            raise InvalidParameterError(
                f"unknown transition {key!r}; expected one of {TRANSITION_KEYS}"
            ) from None


def default_line_data_path():
    return resources.files("eitswitch").joinpath("data/rb87_lines.dat")


def line_data_sha256(path=None) -> str:
    """Checksum of the raw line-data file, recorded in run manifests."""
    source = default_line_data_path() if path is None else path
    with open(source, "rb") as handle:
        return hashlib.sha256(handle.read()).hexdigest()


def load_line_data(path=None) -> LineData:
    source = default_line_data_path() if path is None else path
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    # keys like dipole_Cm are case-sensitive
    parser.optionxform = str
    with open(source, "r", encoding="utf-8") as handle:
        parser.read_file(handle)

    transitions = {}
    masses = []
    for section in parser.sections():
        if section not in TRANSITION_KEYS:
            raise ConfigError(f"unknown transition section [{section}] in {source}")
        keys = set(parser[section].keys())
        if keys != _FIELD_KEYS:
            raise ConfigError(
                f"section [{section}] must define exactly {sorted(_FIELD_KEYS)}, "
                f"got {sorted(keys)}"
            )
        try:
            values = {key: float(parser[section][key]) for key in _FIELD_KEYS}
        except ValueError as exc:
            raise ConfigError(f"non-numeric value in section [{section}]: {exc}") from exc
        masses.append(values["mass_kg"])
        transitions[section] = OpticalTransition(
            name=section,
            wavelength_m=values["wavelength_m"],
            gamma_rad_per_s=values["gamma_rad_per_s"],
            dipole_Cm=values["dipole_Cm"],
        )
    if len(transitions) != len(TRANSITION_KEYS):
        raise ConfigError(
            f"line data must define sections {TRANSITION_KEYS}, "
            f"found {sorted(transitions)}"
        )
    if max(masses) - min(masses) > 1e-12 * max(masses):
        raise ConfigError("mass_kg differs between sections; one atom expected")
    return LineData(mass_kg=masses[0], transitions=MappingProxyType(transitions))
