"""Warm-vapor optical response.

Converts beam intensities to Rabi frequencies, extracts absorption
coefficients from steady-state coherences, and averages them over the
thermal velocity distribution and the transverse mode profile.

Doppler treatment: for a velocity class v every detuning is shifted by its
field's wavenumber, delta -> delta - k*v, with all beams co-propagating.
The two signal fields use k = 2pi/lambda_1 and 2pi/lambda_2; the EIT beam
drives the other ground state on the same line as field 1, so it shifts
with k = 2pi/lambda_1 and the two-photon detuning of the transparency
window stays velocity-free. Dropping that shift instead would smear the
window over the full Doppler width and no transparency would survive the
average.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c, epsilon_0, hbar, k as k_B

from . import atom
from .atom import DriveSet, LevelScheme
from .errors import InvalidParameterError

PROBE_TRANSITIONS = ("probe1", "probe2")

DEFAULT_QUADRATURE_NODES = 32
UNIFORM_SPAN_WIDTHS = 6.0


def rabi_from_intensity(intensity: float, dipole: float) -> float:
    """Running-wave conversion: Omega = (2 d / hbar) sqrt(2 I / (c eps0))."""
    if not (math.isfinite(intensity) and intensity >= 0):
        raise InvalidParameterError("intensity must be finite and >= 0")
    if not (math.isfinite(dipole) and dipole > 0):
        raise InvalidParameterError("dipole must be positive and finite")
    return (2.0 * dipole / hbar) * math.sqrt(2.0 * intensity / (c * epsilon_0))


def intensity_from_rabi(rabi: float, dipole: float) -> float:
    """Inverse of :func:`rabi_from_intensity`."""
    if not (math.isfinite(rabi) and rabi >= 0):
        raise InvalidParameterError("rabi must be finite and >= 0")
    if not (math.isfinite(dipole) and dipole > 0):
        raise InvalidParameterError("dipole must be positive and finite")
    amplitude = rabi * hbar / (2.0 * dipole)
    return 0.5 * c * epsilon_0 * amplitude**2


def thermal_velocity(temperature: float, mass: float) -> float:
    """1/e half-width u = sqrt(2 kB T / m) of the 1-D velocity distribution."""
    if not (math.isfinite(temperature) and temperature > 0):
        raise InvalidParameterError("temperature must be positive and finite")
    if not (math.isfinite(mass) and mass > 0):
        raise InvalidParameterError("mass must be positive and finite")
    return math.sqrt(2.0 * k_B * temperature / mass)


@dataclass(frozen=True)
class VaporParams:
    """Vapor density and the optical constants of the three channels."""

    density_N: float        # atoms per m^3
    temperature: float      # K
    atomic_mass: float      # kg
    lambda_1: float         # m, signal on the lower-ground transition
    lambda_2: float         # m, signal on the upper-ground transition
    dipole_1: float         # C m
    dipole_2: float         # C m
    dipole_c: float         # C m

    def __post_init__(self):
        for field in (
            "temperature", "atomic_mass",
            "lambda_1", "lambda_2", "dipole_1", "dipole_2", "dipole_c",
        ):
            value = getattr(self, field)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"VaporParams.{field} must be positive and finite")
        # density zero is allowed: the vacuum limit is a useful diagnostic
        if not (
            isinstance(self.density_N, (int, float))
            and math.isfinite(self.density_N)
            and self.density_N >= 0
        ):
            raise InvalidParameterError("VaporParams.density_N must be finite and >= 0")
        if self.lambda_1 <= self.lambda_2:
            raise InvalidParameterError(
                "lambda_1 must exceed lambda_2 (red signal drives the lower ground state)"
            )

    @classmethod
    def from_line_data(cls, line_data, density_N: float, temperature: float) -> "VaporParams":
        return cls(
            density_N=density_N,
            temperature=temperature,
            atomic_mass=line_data.mass_kg,
            lambda_1=line_data.transition("probe1").wavelength_m,
            lambda_2=line_data.transition("probe2").wavelength_m,
            dipole_1=line_data.transition("probe1").dipole_Cm,
            dipole_2=line_data.transition("probe2").dipole_Cm,
            dipole_c=line_data.transition("eit").dipole_Cm,
        )

    def thermal_width(self) -> float:
        return thermal_velocity(self.temperature, self.atomic_mass)


@dataclass(frozen=True)
class ModeProfile:
    """Transverse intensity samples: (relative_intensity, weight) pairs.

    Weights sum to one and the weighted mean relative intensity is one, so
    a profile rescales the local intensity without changing the total power.
    """

    samples: tuple

    def __post_init__(self):
        if len(self.samples) == 0:
            raise InvalidParameterError("mode profile needs at least one sample")
        scales = np.array([s[0] for s in self.samples], dtype=float)
        weights = np.array([s[1] for s in self.samples], dtype=float)
        if np.any(~np.isfinite(scales)) or np.any(scales < 0):
            raise InvalidParameterError("relative intensities must be finite and >= 0")
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidParameterError("profile weights must be finite and >= 0")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidParameterError("profile weights must sum to 1 within 1e-12")
        if abs(float(weights @ scales) - 1.0) > 1e-9:
            raise InvalidParameterError("weighted mean relative intensity must be 1")

    @classmethod
    def uniform(cls) -> "ModeProfile":
        return cls(samples=((1.0, 1.0),))

    @classmethod
    def from_file(cls, path) -> "ModeProfile":
        """Two-column text (relative_intensity, weight); normalizes both."""
        data = np.loadtxt(path, dtype=float)
        data = np.atleast_2d(data)
        if data.shape[1] != 2:
            raise InvalidParameterError(
                f"mode profile file {path} must have two columns, got {data.shape[1]}"
            )
        scales, weights = data[:, 0].copy(), data[:, 1].copy()
        total = weights.sum()
        if total <= 0:
            raise InvalidParameterError("profile weights must have a positive sum")
        weights /= total
        mean = float(weights @ scales)
        if mean <= 0:
            raise InvalidParameterError("profile must carry nonzero intensity")
        scales /= mean
        return cls(samples=tuple(zip(scales.tolist(), weights.tolist())))


@dataclass(frozen=True)
class DopplerQuadrature:
    """Velocity nodes and normalized Maxwell-Boltzmann weights."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise InvalidParameterError("nodes and weights must be matching 1-D arrays")
        if abs(weights.sum() - 1.0) > 1e-10:
            raise InvalidParameterError("quadrature weights must sum to 1 within 1e-10")
        if np.max(np.abs(nodes + nodes[::-1])) > 1e-9 * (1.0 + np.max(np.abs(nodes))):
            raise InvalidParameterError("velocity nodes must be symmetric about 0")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)


def doppler_quadrature(vapor: VaporParams, n_nodes: int = DEFAULT_QUADRATURE_NODES) -> DopplerQuadrature:
    """Gauss-Hermite rule mapped to velocity, v = u x, weights sum to 1."""
    if n_nodes < 2:
        raise InvalidParameterError("n_nodes must be at least 2")
    x, w = np.polynomial.hermite.hermgauss(int(n_nodes))
    u = vapor.thermal_width()
    return DopplerQuadrature(nodes=u * x, weights=w / math.sqrt(math.pi))


def uniform_doppler_quadrature(
    vapor: VaporParams,
    n_nodes: int = 2001,
    span_widths: float = UNIFORM_SPAN_WIDTHS,
) -> DopplerQuadrature:
    """Trapezoid rule on [-span u, +span u] with Gaussian weights.

    Resolves velocity structure on the homogeneous scale gamma/k, which the
    Gauss-Hermite rule cannot once the natural width is far below the
    Doppler width; used for the real-line device scenarios.
    """
    if n_nodes < 2:
        raise InvalidParameterError("n_nodes must be at least 2")
    if not (math.isfinite(span_widths) and span_widths > 0):
        raise InvalidParameterError("span_widths must be positive and finite")
    u = vapor.thermal_width()
    v = np.linspace(-span_widths * u, span_widths * u, int(n_nodes))
    w = np.exp(-((v / u) ** 2))
    w[0] *= 0.5
    w[-1] *= 0.5
    w /= w.sum()
    return DopplerQuadrature(nodes=v, weights=w)


def _transition_index(vapor: VaporParams, transition: str):
    """(excited, ground) level pair, Rabi attribute, dipole and frequency."""
    if transition == "probe1":
        return (1, 0), "omega_1", vapor.dipole_1, 2.0 * math.pi * c / vapor.lambda_1
    if transition == "probe2":
        return (3, 2), "omega_2", vapor.dipole_2, 2.0 * math.pi * c / vapor.lambda_2
    raise InvalidParameterError(
        f"transition must be one of {PROBE_TRANSITIONS}, got {transition!r}"
    )


def _alpha_prefactor(vapor: VaporParams, transition: str) -> float:
    _, _, dipole, omega = _transition_index(vapor, transition)
    return 2.0 * omega * vapor.density_N * dipole**2 / (epsilon_0 * hbar * c)


def absorption_coefficient(
    drives: DriveSet,
    scheme: LevelScheme,
    vapor: VaporParams,
    transition: str,
) -> float:
    """Absorption coefficient alpha [1/m] of one probe at zero velocity.

    alpha = (2 omega N d^2 / (eps0 hbar c)) * Im(rho_eg) / Omega, positive
    for a resonantly driven absorbing medium.
    """
    (e, g), rabi_attr, _, _ = _transition_index(vapor, transition)
    rabi = getattr(drives, rabi_attr)
    if rabi <= 0.0:
        raise InvalidParameterError(
            f"{transition} Rabi frequency must be positive to normalize alpha"
        )
    rho = atom.driven_steady_state(drives, scheme)
    return _alpha_prefactor(vapor, transition) * float(rho[e, g].imag) / rabi


def doppler_average_alphas(
    drives: DriveSet,
    scheme: LevelScheme,
    vapor: VaporParams,
    quad: DopplerQuadrature,
    transitions,
) -> tuple:
    """Velocity averages for several probes sharing one batched solve.

    The generator is linear in the velocity shift, so the whole node set is
    assembled as L0 + v M and solved in one batched call, restricted to the
    level block the drives reach.  All requested coefficients come from the
    same steady states, which matters inside fixed-point loops where both
    probes are present at once.
    """
    if len(transitions) == 0:
        raise InvalidParameterError("at least one transition must be requested")
    rabis = []
    for transition in transitions:
        (e, g), rabi_attr, _, _ = _transition_index(vapor, transition)
        rabi = getattr(drives, rabi_attr)
        if rabi <= 0.0:
            raise InvalidParameterError(
                f"{transition} Rabi frequency must be positive to normalize alpha"
            )
        rabis.append(((e, g), rabi))
    k1 = 2.0 * math.pi / vapor.lambda_1
    k2 = 2.0 * math.pi / vapor.lambda_2

    active = atom.active_levels(drives, scheme)
    n_active = len(active)
    liou_0 = atom.build_liouvillian(drives, scheme)
    shifted = drives.shifted(d1=-k1, d2=-k2, dc=-k1)  # v = 1 m/s
    shift_gen = atom.build_liouvillian(shifted, scheme) - liou_0
    if n_active < atom.N_LEVELS:
        idx = atom._block_indices(active)
        liou_0 = liou_0[np.ix_(idx, idx)]
        shift_gen = shift_gen[np.ix_(idx, idx)]
    batch = liou_0[None, :, :] + quad.nodes[:, None, None] * shift_gen[None, :, :]
    rhos = atom.steady_state_batch(batch, n_levels=n_active)

    position = {level: i for i, level in enumerate(active)}
    results = []
    for transition, ((e, g), rabi) in zip(transitions, rabis):
        if n_active < atom.N_LEVELS:
            coherence = rhos[:, position[e], position[g]]
        else:
            coherence = rhos[:, e, g]
        alphas = _alpha_prefactor(vapor, transition) * coherence.imag / rabi
        results.append(float(np.dot(quad.weights, alphas)))
    return tuple(results)


def doppler_average_alpha(
    drives: DriveSet,
    scheme: LevelScheme,
    vapor: VaporParams,
    quad: DopplerQuadrature,
    transition: str,
) -> float:
    """Velocity average of the absorption coefficient of one probe."""
    return doppler_average_alphas(drives, scheme, vapor, quad, (transition,))[0]


def profile_average(alpha_of_intensity, profile: ModeProfile, peak_intensities) -> float:
    """Average an alpha evaluator over the transverse profile.

    ``alpha_of_intensity(i1, i2)`` is called with both probe intensities
    scaled by each sample's relative intensity and combined with the sample
    weights.
    """
    i1, i2 = peak_intensities
    if not (math.isfinite(i1) and i1 >= 0 and math.isfinite(i2) and i2 >= 0):
        raise InvalidParameterError("peak intensities must be finite and >= 0")
    total = 0.0
    for scale, weight in profile.samples:
        total += weight * float(alpha_of_intensity(scale * i1, scale * i2))
    return total
