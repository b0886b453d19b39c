"""Add-drop resonator coupled-mode model.

Through/drop transmissions, stored energy, the absorption-induced external
loss rate, and the damped fixed point coupling the intracavity intensities
to the atomic response. All kappas are energy decay rates in rad/s; the
loaded resonance FWHM is kappa_0 + kappa_e + kappa_1 + kappa_2. The stored
energy expression is pinned to the transmissions by exact power
conservation, p_in (1 - T) = U (kappa_0 + kappa_e) + D p_in, asserted in
the tests.
"""

import math
import warnings
from dataclasses import dataclass

from scipy.constants import c, h

from .errors import (
    FixedPointDivergedError,
    InvalidParameterError,
    ModelViolationError,
)

Q_INTERPRETATIONS = ("intrinsic", "loaded")


@dataclass(frozen=True)
class CavityParams:
    """Resonator geometry and coupling budget."""

    lambda_cavity: float        # m
    q_intrinsic: float          # dimensionless
    overcoupling: float         # kappa_1/kappa_0 = kappa_2/kappa_0
    mode_area: float            # m^2
    round_trip_length: float    # m
    group_index: float          # dimensionless
    evanescent_fraction: float  # eta, in (0, 1]

    def __post_init__(self):
        for field in (
            "lambda_cavity", "q_intrinsic", "overcoupling",
            "mode_area", "round_trip_length", "group_index", "evanescent_fraction",
        ):
            value = getattr(self, field)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"CavityParams.{field} must be positive and finite")
        if self.evanescent_fraction > 1.0:
            raise InvalidParameterError("evanescent_fraction must not exceed 1")
        if self.overcoupling < 1.0:
            warnings.warn(
                "overcoupling below 1: the bus waveguides are undercoupled",
                UserWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class KappaSet:
    """Energy decay rates and the field detuning from cavity resonance."""

    kappa_0: float
    kappa_e: float
    kappa_1: float
    kappa_2: float
    delta: float = 0.0

    def __post_init__(self):
        for field in ("kappa_0", "kappa_e", "kappa_1", "kappa_2"):
            value = getattr(self, field)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise InvalidParameterError(f"KappaSet.{field} must be finite and >= 0")
        if not (isinstance(self.delta, (int, float)) and math.isfinite(self.delta)):
            raise InvalidParameterError("KappaSet.delta must be finite")

    @property
    def kappa_sigma(self) -> float:
        return self.kappa_0 + self.kappa_e + self.kappa_1 + self.kappa_2


@dataclass(frozen=True)
class IntracavityState:
    """Converged intracavity intensities and the matching loss rates."""

    intensity_1: float   # W/m^2
    intensity_2: float   # W/m^2
    kappa_e_1: float     # rad/s
    kappa_e_2: float     # rad/s
    iterations: int
    converged: bool


def kappa_intrinsic(cavity: CavityParams) -> float:
    """kappa_0 = omega_c / Q."""
    return 2.0 * math.pi * c / cavity.lambda_cavity / cavity.q_intrinsic


def base_kappas(cavity: CavityParams, wavelength: float = None, q_interpretation: str = "intrinsic"):
    """Bare (no-atom) decay triple (kappa_0, kappa_1, kappa_2) at a wavelength.

    "intrinsic": kappa_0 = omega/Q and the bus rates are overcoupling-fold
    larger. "loaded": omega/Q is the *total* bare linewidth, split in the
    same 1 : f : f proportion, so the bare resonance FWHM equals omega/Q.
    """
    if q_interpretation not in Q_INTERPRETATIONS:
        raise InvalidParameterError(
            f"q_interpretation must be one of {Q_INTERPRETATIONS}, got {q_interpretation!r}"
        )
    lam = cavity.lambda_cavity if wavelength is None else wavelength
    if not (math.isfinite(lam) and lam > 0):
        raise InvalidParameterError("wavelength must be positive and finite")
    kappa_total = 2.0 * math.pi * c / lam / cavity.q_intrinsic
    f = cavity.overcoupling
    if q_interpretation == "intrinsic":
        kappa_0 = kappa_total
    else:
        kappa_0 = kappa_total / (1.0 + 2.0 * f)
    return kappa_0, f * kappa_0, f * kappa_0


def _denominator(k: KappaSet) -> float:
    value = 4.0 * k.delta**2 + k.kappa_sigma**2
    if value == 0.0:
        raise InvalidParameterError(
            "all decay rates and the detuning are zero; transmission undefined"
        )
    return value


def through_transmission(k: KappaSet) -> float:
    """T = [4 delta^2 + (k0 + ke - k1 + k2)^2] / [4 delta^2 + kappa_sigma^2]."""
    numerator = 4.0 * k.delta**2 + (k.kappa_0 + k.kappa_e - k.kappa_1 + k.kappa_2) ** 2
    return numerator / _denominator(k)


def drop_transmission(k: KappaSet) -> float:
    """D = 4 k1 k2 / [4 delta^2 + kappa_sigma^2]."""
    return 4.0 * k.kappa_1 * k.kappa_2 / _denominator(k)


def stored_energy(p_in: float, k: KappaSet) -> float:
    """U = k1 p_in / [delta^2 + (kappa_sigma / 2)^2]."""
    if not (math.isfinite(p_in) and p_in >= 0):
        raise InvalidParameterError("p_in must be finite and >= 0")
    _denominator(k)
    return k.kappa_1 * p_in / (k.delta**2 + (0.5 * k.kappa_sigma) ** 2)


def circulating_intensity(u: float, cavity: CavityParams) -> float:
    """I = U c / (n_g L A): stored energy to circulating intensity."""
    if not (math.isfinite(u) and u >= 0):
        raise InvalidParameterError("stored energy must be finite and >= 0")
    return u * c / (cavity.group_index * cavity.round_trip_length * cavity.mode_area)


def photon_number(u: float, wavelength: float) -> float:
    """n = U lambda / (h c)."""
    if not (math.isfinite(u) and u >= 0):
        raise InvalidParameterError("stored energy must be finite and >= 0")
    if not (math.isfinite(wavelength) and wavelength > 0):
        raise InvalidParameterError("wavelength must be positive and finite")
    return u * wavelength / (h * c)


def kappa_external(alpha: float, cavity: CavityParams) -> float:
    """kappa_e = eta c alpha / n_g: traveling-wave absorption as a decay rate."""
    if not math.isfinite(alpha):
        raise InvalidParameterError("alpha must be finite")
    if alpha < 0.0:
        raise ModelViolationError(
            "negative average absorption (gain) is outside this model"
        )
    return cavity.evanescent_fraction * c * alpha / cavity.group_index


def switching_time(k: KappaSet) -> float:
    """Loaded energy decay time tau = 1 / kappa_sigma."""
    if k.kappa_sigma <= 0.0:
        raise InvalidParameterError("switching time undefined for kappa_sigma = 0")
    return 1.0 / k.kappa_sigma


def _relative_change(new, old) -> float:
    worst = 0.0
    for n, o in zip(new, old):
        scale = max(abs(n), abs(o))
        if scale > 0.0:
            worst = max(worst, abs(n - o) / scale)
    return worst


def self_consistent_intensities(
    alphas_of,
    p_in,
    kappas,
    deltas,
    cavity: CavityParams,
    x0=(0.0, 0.0),
    beta: float = 0.5,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> IntracavityState:
    """Damped Picard fixed point of the intensity -> absorption -> buildup map.

    ``alphas_of(i1, i2)`` returns the averaged absorption coefficients seen
    by the two cavity fields at the given circulating intensities;
    ``kappas`` holds the bare (kappa_0, kappa_1, kappa_2) triple per field
    and ``deltas`` each field's cavity detuning. Iterates
    x <- (1 - beta) x + beta m(x); when two successive map outputs agree to
    tolerance the next iterate jumps straight to the map output, so a
    locally constant map settles in three evaluations. Converged when the
    undamped update |m(x) - x| is within tolerance for both intensities.
    """
    if not (0.0 < beta <= 1.0):
        raise InvalidParameterError("damping beta must be in (0, 1]")
    if tol <= 0.0 or max_iter < 1:
        raise InvalidParameterError("tol must be positive and max_iter >= 1")
    p1, p2 = p_in
    if p1 < 0 or p2 < 0:
        raise InvalidParameterError("input powers must be >= 0")
    (k0_1, k1_1, k2_1), (k0_2, k1_2, k2_2) = kappas
    delta_1, delta_2 = deltas

    def picard_map(x):
        a1, a2 = alphas_of(x[0], x[1])
        ke1 = kappa_external(a1, cavity)
        ke2 = kappa_external(a2, cavity)
        u1 = stored_energy(p1, KappaSet(k0_1, ke1, k1_1, k2_1, delta_1))
        u2 = stored_energy(p2, KappaSet(k0_2, ke2, k1_2, k2_2, delta_2))
        new = (
            circulating_intensity(u1, cavity),
            circulating_intensity(u2, cavity),
        )
        return new, ke1, ke2

    x = (float(x0[0]), float(x0[1]))
    previous_m = None
    previous_x = x
    for iteration in range(1, max_iter + 1):
        m, ke1, ke2 = picard_map(x)
        if _relative_change(m, x) <= tol:
            return IntracavityState(
                intensity_1=m[0], intensity_2=m[1],
                kappa_e_1=ke1, kappa_e_2=ke2,
                iterations=iteration, converged=True,
            )
        previous_x = x
        if previous_m is not None and _relative_change(m, previous_m) <= tol:
            x = m  # map output stationary: jump instead of creeping
        else:
            x = (
                (1.0 - beta) * x[0] + beta * m[0],
                (1.0 - beta) * x[1] + beta * m[1],
            )
        previous_m = m
    raise FixedPointDivergedError(
        f"intensity fixed point not converged after {max_iter} iterations",
        last_iterates=(previous_x, x),
    )
