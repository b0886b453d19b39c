"""Switching scenarios: staged fixed points, detuning sweeps, contrast metrics.

The two cavity fields are named by their transitions: field 1 probes the
lower-ground D1 line, field 2 the upper-ground D2 line. Either one can act
as the control; the other is the switched signal whose through/drop spectra
and contrast figures this module reports. The control beam is assumed to
enter first and settle before the signal is applied, so every operating
point is computed as a staged fixed point: control + EIT beam alone, then
both beams from that state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from . import atom, cavity, vapor
from .atom import DriveSet, LevelScheme
from .cavity import CavityParams, IntracavityState, KappaSet
from .errors import EitSwitchError, InvalidParameterError, SweepError
from .vapor import DopplerQuadrature, ModeProfile, VaporParams

__all__ = [
    "CONTROL_FIELDS",
    "FIELD_TRANSITIONS",
    "ScenarioConfig",
    "ScenarioResult",
    "SpectrumPoint",
    "Spectrum",
    "SweepGrid",
    "SwitchMetrics",
    "TransistorModel",
    "switch_metrics",
]

CONTROL_FIELDS = ("field1_795", "field2_780")

# cavity-field name -> probed transition key in the vapor module
FIELD_TRANSITIONS = {"field1_795": "probe1", "field2_780": "probe2"}

# negative averaged absorption beyond this fraction of the weak resonant
# two-level value is treated as a real model violation, below it as roundoff
NEGATIVE_ALPHA_TOL = 1e-9

_UNSET = object()


@dataclass(frozen=True)
class SweepGrid:
    """Uniform signal-detuning grid in rad/s."""

    delta_min: float
    delta_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.delta_min) and math.isfinite(self.delta_max)):
            raise InvalidParameterError("sweep bounds must be finite")
        if not self.delta_min < self.delta_max:
            raise InvalidParameterError("sweep requires delta_min < delta_max")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise InvalidParameterError("sweep needs at least 2 points")

    def values(self) -> np.ndarray:
        grid = np.linspace(self.delta_min, self.delta_max, int(self.n_points))
        if self.delta_min <= 0.0 <= self.delta_max:
            # pin the point nearest resonance so metrics can key on delta == 0
            grid[np.argmin(np.abs(grid))] = 0.0
        return grid


@dataclass(frozen=True)
class ScenarioConfig:
    """One switching scenario: who controls, beam powers, sweep window."""

    control_field: str
    p_control: float       # W
    p_signal: float        # W
    p_eit: float           # W
    power_ratio: float     # P1/P2, diagnostic
    sweep: SweepGrid
    control_on: bool = True

    def __post_init__(self):
        if self.control_field not in CONTROL_FIELDS:
            raise InvalidParameterError(
                f"control_field must be one of {CONTROL_FIELDS}, got {self.control_field!r}"
            )
        for field in ("p_control", "p_signal", "p_eit"):
            value = getattr(self, field)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise InvalidParameterError(f"ScenarioConfig.{field} must be finite and >= 0")
        if not (math.isfinite(self.power_ratio) and self.power_ratio > 0):
            raise InvalidParameterError("power_ratio must be positive and finite")
        if not isinstance(self.sweep, SweepGrid):
            raise InvalidParameterError("sweep must be a SweepGrid")
        if self.p_control > 0 and self.p_signal > 0:
            if self.control_field == "field1_795":
                expected = self.p_control / self.p_signal
            else:
                expected = self.p_signal / self.p_control
            if abs(self.power_ratio / expected - 1.0) > 1e-9:
                raise InvalidParameterError(
                    f"power_ratio {self.power_ratio!r} inconsistent with the beam "
                    f"powers (P1/P2 = {expected!r})"
                )

    @property
    def signal_field(self) -> str:
        return CONTROL_FIELDS[1] if self.control_field == CONTROL_FIELDS[0] else CONTROL_FIELDS[0]


class SpectrumPoint(NamedTuple):
    delta: float           # rad/s, signal detuning from cavity resonance
    T: float               # through-port power transmission
    D: float               # drop-port power transmission
    kappa_e: float         # rad/s, atom-induced loss seen by the signal
    alpha_bar: float       # 1/m, averaged absorption behind kappa_e
    fp_iterations: int


@dataclass(frozen=True)
class Spectrum:
    """Signal-port response over a detuning grid."""

    points: tuple

    def __post_init__(self):
        if len(self.points) == 0:
            raise InvalidParameterError("a spectrum needs at least one point")
        previous = None
        for point in self.points:
            if not (-1e-12 <= point.T and -1e-12 <= point.D):
                raise InvalidParameterError("transmissions must be non-negative")
            if point.T + point.D > 1.0 + 1e-9:
                raise InvalidParameterError("T + D exceeds unity")
            if previous is not None and not point.delta > previous:
                raise InvalidParameterError("deltas must be strictly increasing")
            previous = point.delta

    def deltas(self) -> np.ndarray:
        return np.array([point.delta for point in self.points])

    def at_zero(self) -> SpectrumPoint:
        for point in self.points:
            if point.delta == 0.0:
                return point
        raise InvalidParameterError("spectrum grid does not contain delta = 0")


@dataclass(frozen=True)
class SwitchMetrics:
    """Contrast and insertion loss of the switched signal at one detuning."""

    drop_contrast_db: float
    through_contrast_db: float
    drop_loss_db: float
    through_loss_db: float
    evaluated_at: float
    contrast_unbounded: bool = False


@dataclass(frozen=True)
class ScenarioResult:
    """One metrics-table row with its diagnostics and source spectra."""

    label: str
    control_field: str
    power_ratio: float
    metrics: SwitchMetrics
    tau_s: float             # signal-energy decay time in the OFF state
    photons: float           # mean intracavity photon number, OFF state
    intensity_W_m2: float    # circulating signal intensity, OFF state
    iterations_on: int
    iterations_off: int
    spectrum_on: Spectrum
    spectrum_off: Spectrum


def _contrast_db(numerator: float, denominator: float) -> float:
    if numerator == 0.0 or denominator == 0.0:
        return math.inf
    return abs(10.0 * math.log10(numerator / denominator))


def _loss_db(transmission: float) -> float:
    if transmission == 0.0:
        return math.inf
    return max(-10.0 * math.log10(transmission), 0.0)


def switch_metrics(spec_on: Spectrum, spec_off: Spectrum) -> SwitchMetrics:
    """Contrast/loss figures from matched control-on and control-off sweeps.

    ON routes the signal to the through port, OFF to the drop port, so the
    two contrasts compare opposite states of the same port. Vanishing
    transmission in either ratio is reported as +inf dB and flagged.
    """
    if not np.array_equal(spec_on.deltas(), spec_off.deltas()):
        raise InvalidParameterError("on/off spectra must share the same detuning grid")
    on0 = spec_on.at_zero()
    off0 = spec_off.at_zero()
    through_contrast = _contrast_db(on0.T, off0.T)
    drop_contrast = _contrast_db(off0.D, on0.D)
    return SwitchMetrics(
        drop_contrast_db=drop_contrast,
        through_contrast_db=through_contrast,
        drop_loss_db=_loss_db(off0.D),
        through_loss_db=_loss_db(on0.T),
        evaluated_at=0.0,
        contrast_unbounded=not (
            math.isfinite(through_contrast) and math.isfinite(drop_contrast)
        ),
    )


class TransistorModel:
    """Full stack: vapor response -> cavity loading -> port spectra.

    Holds everything scenario-independent (atom, vapor, resonator, Doppler
    quadrature, transverse profile, solver knobs). Scenario specifics live
    in :class:`ScenarioConfig`.
    """

    def __init__(
        self,
        scheme: LevelScheme,
        vapor_params: VaporParams,
        cavity_params: CavityParams,
        quadrature: Optional[DopplerQuadrature] = None,
        profile: Optional[ModeProfile] = None,
        *,
        q_interpretation: str = "loaded",
        delta_c: float = 0.0,
        beta: float = 0.5,
        fp_tol: float = 1e-6,
        fp_max_iter: int = 200,
        rabi_floor_frac: float = 1e-3,
        eit_beam_diameter: float = 1e-4,
    ):
        self.scheme = scheme
        self.vapor = vapor_params
        self.cavity = cavity_params
        self.quadrature = (
            vapor.uniform_doppler_quadrature(vapor_params) if quadrature is None else quadrature
        )
        self.profile = ModeProfile.uniform() if profile is None else profile
        self.q_interpretation = q_interpretation
        if not math.isfinite(delta_c):
            raise InvalidParameterError("delta_c must be finite")
        self.delta_c = float(delta_c)
        self.beta = beta
        self.fp_tol = fp_tol
        self.fp_max_iter = int(fp_max_iter)
        if not (math.isfinite(rabi_floor_frac) and rabi_floor_frac >= 0):
            raise InvalidParameterError("rabi_floor_frac must be finite and >= 0")
        if not (math.isfinite(eit_beam_diameter) and eit_beam_diameter > 0):
            raise InvalidParameterError("eit_beam_diameter must be positive")
        self.eit_beam_diameter = float(eit_beam_diameter)

        # per-field bare decay triples at each field's own wavelength
        self._triples = {
            1: cavity.base_kappas(cavity_params, vapor_params.lambda_1, q_interpretation),
            2: cavity.base_kappas(cavity_params, vapor_params.lambda_2, q_interpretation),
        }
        # weak-probe floor keeps alpha = Im(rho)/Omega well conditioned while
        # staying far below saturation of either line
        self._floors = {
            1: rabi_floor_frac * (scheme.gamma_21 + scheme.gamma_23),
            2: rabi_floor_frac * scheme.gamma_43,
        }
        self._dipoles = {1: vapor_params.dipole_1, 2: vapor_params.dipole_2}
        self._wavelengths = {1: vapor_params.lambda_1, 2: vapor_params.lambda_2}
        # weak resonant two-level absorption per probe, the scale against
        # which roundoff-negative averages are judged
        self._alpha_scales = {
            1: vapor._alpha_prefactor(vapor_params, "probe1")
            / (scheme.gamma_21 + scheme.gamma_23),
            2: vapor._alpha_prefactor(vapor_params, "probe2") / max(scheme.gamma_43, 1.0),
        }

    # ---------------------------------------------------------------- roles

    @staticmethod
    def _field_index(name: str) -> int:
        return 1 if name == "field1_795" else 2

    def _roles(self, config: ScenarioConfig):
        control = self._field_index(config.control_field)
        signal = 2 if control == 1 else 1
        return signal, control

    def omega_eit(self, p_eit: float) -> float:
        """EIT-beam Rabi frequency from its power over the beam cross-section."""
        area = math.pi * (0.5 * self.eit_beam_diameter) ** 2
        return vapor.rabi_from_intensity(p_eit / area, self.vapor.dipole_c)

    def bare_kappa_sigma(self, field: int) -> float:
        k0, k1, k2 = self._triples[field]
        return k0 + k1 + k2

    def default_sweep(self, control_field: str, span_kappas: float = 5.0, n_points: int = 201) -> SweepGrid:
        signal = 2 if self._field_index(control_field) == 1 else 1
        width = span_kappas * self.bare_kappa_sigma(signal)
        return SweepGrid(-width, width, n_points)

    def metrics_grid(self, control_field: str) -> SweepGrid:
        """Three-point grid (-kappa_sigma, 0, +kappa_sigma) for table rows."""
        signal = 2 if self._field_index(control_field) == 1 else 1
        width = self.bare_kappa_sigma(signal)
        return SweepGrid(-width, width, 3)

    # ------------------------------------------------------------ atom side

    def _clamped_alpha(self, value: float, field: int) -> float:
        if value < 0.0 and -value <= NEGATIVE_ALPHA_TOL * self._alpha_scales[field]:
            return 0.0
        return value

    def _alphas_factory(self, config: ScenarioConfig, delta: float, modes):
        """Averaged-absorption evaluator for the intensity fixed point.

        ``modes`` assigns each cavity field one of three roles. "drive":
        the circulating intensity feeds back into the atomic response.
        "probe": the field is held at the weak-probe floor, i.e. linear
        response; the switched signal runs in this mode because its port
        spectra are transfer functions, defined for a weak input. "off":
        strictly zero Rabi frequency and zero coefficient.
        """
        signal, _ = self._roles(config)
        omega_c = self.omega_eit(config.p_eit)
        delta_1 = delta if signal == 1 else 0.0
        delta_2 = delta if signal == 2 else 0.0
        needed = tuple(
            key
            for field, key in ((1, "probe1"), (2, "probe2"))
            if modes[field - 1] != "off"
        )

        def alphas_of(i1: float, i2: float):
            totals = [0.0, 0.0]
            if not needed:
                return 0.0, 0.0
            for scale, weight in self.profile.samples:
                rabis = []
                for field, intensity in ((1, i1), (2, i2)):
                    mode = modes[field - 1]
                    if mode == "drive":
                        converted = vapor.rabi_from_intensity(
                            scale * max(intensity, 0.0), self._dipoles[field]
                        )
                        rabis.append(max(converted, self._floors[field]))
                    elif mode == "probe":
                        rabis.append(self._floors[field])
                    else:
                        rabis.append(0.0)
                drives = DriveSet(
                    omega_1=rabis[0],
                    omega_2=rabis[1],
                    omega_c=omega_c,
                    delta_1=delta_1,
                    delta_2=delta_2,
                    delta_c=self.delta_c,
                )
                values = vapor.doppler_average_alphas(
                    drives, self.scheme, self.vapor, self.quadrature, needed
                )
                for key, value in zip(needed, values):
                    index = 0 if key == "probe1" else 1
                    totals[index] += weight * value
            return (
                self._clamped_alpha(totals[0], 1),
                self._clamped_alpha(totals[1], 2),
            )

        return alphas_of

    # -------------------------------------------------------- staged solves

    def control_stage(self, config: ScenarioConfig) -> Optional[IntracavityState]:
        """Let the control + EIT beams settle with the signal absent.

        Detuning independent (the control sits on its own cavity resonance),
        so sweeps compute this once and reuse it. Returns ``None`` when the
        scenario has no active control beam.
        """
        if not (config.control_on and config.p_control > 0):
            return None
        signal, control = self._roles(config)
        modes = ["off", "off"]
        modes[control - 1] = "drive"
        powers = [0.0, 0.0]
        powers[control - 1] = config.p_control
        alphas_of = self._alphas_factory(config, 0.0, tuple(modes))
        return cavity.self_consistent_intensities(
            alphas_of,
            tuple(powers),
            (self._triples[1], self._triples[2]),
            (0.0, 0.0),
            self.cavity,
            beta=self.beta,
            tol=self.fp_tol,
            max_iter=self.fp_max_iter,
        )

    def simulate_point(self, config: ScenarioConfig, delta: float, _stage1=_UNSET) -> SpectrumPoint:
        """Port response of the signal at one detuning from cavity resonance."""
        if not (isinstance(delta, (int, float)) and math.isfinite(delta)):
            raise InvalidParameterError("delta must be finite")
        delta = float(delta)
        try:
            stage1 = self.control_stage(config) if _stage1 is _UNSET else _stage1
            state = self._signal_stage(config, delta, stage1)
        except EitSwitchError as exc:
            note = f"at signal detuning {delta:.9g} rad/s"
            exc.args = ((f"{exc.args[0]} ({note})",) + exc.args[1:]) if exc.args else (note,)
            raise
        signal, _ = self._roles(config)
        kappa_e = getattr(state, f"kappa_e_{signal}")
        k0, k1, k2 = self._triples[signal]
        kset = KappaSet(k0, kappa_e, k1, k2, delta)
        alpha_bar = kappa_e * self.cavity.group_index / (
            self.cavity.evanescent_fraction * cavity.c
        )
        return SpectrumPoint(
            delta=delta,
            T=cavity.through_transmission(kset),
            D=cavity.drop_transmission(kset),
            kappa_e=kappa_e,
            alpha_bar=alpha_bar,
            fp_iterations=state.iterations,
        )

    def _signal_stage(self, config, delta, stage1):
        signal, control = self._roles(config)
        control_active = config.control_on and config.p_control > 0
        modes = ["off", "off"]
        modes[signal - 1] = "probe"
        if control_active:
            modes[control - 1] = "drive"
        powers = [0.0, 0.0]
        powers[signal - 1] = config.p_signal
        if control_active:
            powers[control - 1] = config.p_control
        deltas = [0.0, 0.0]
        deltas[signal - 1] = delta
        x0 = (0.0, 0.0) if stage1 is None else (stage1.intensity_1, stage1.intensity_2)
        alphas_of = self._alphas_factory(config, delta, tuple(modes))
        return cavity.self_consistent_intensities(
            alphas_of,
            tuple(powers),
            (self._triples[1], self._triples[2]),
            tuple(deltas),
            self.cavity,
            x0=x0,
            beta=self.beta,
            tol=self.fp_tol,
            max_iter=self.fp_max_iter,
        )

    # -------------------------------------------------------------- sweeps

    def sweep_spectrum(self, config: ScenarioConfig, executor=None) -> Spectrum:
        """Simulate the whole detuning grid; points run independently.

        The control stage is shared across points. With an executor the
        points are dispatched concurrently but collected in grid order, so
        the result does not depend on the degree of parallelism.
        """
        grid = config.sweep.values()
        stage1 = self.control_stage(config)
        points = []
        if executor is None:
            results = (self.simulate_point(config, d, _stage1=stage1) for d in grid)
        else:
            results = executor.map(
                lambda d: self.simulate_point(config, d, _stage1=stage1), grid
            )
        iterator = iter(results)
        for delta in grid:
            try:
                points.append(next(iterator))
            except EitSwitchError as exc:
                partial = Spectrum(tuple(points)) if points else None
                raise SweepError(
                    f"sweep aborted: {exc}", delta=float(delta), partial=partial
                ) from exc
        return Spectrum(tuple(points))

    # ------------------------------------------------------------ scenarios

    def scenario_rows(self, base: ScenarioConfig):
        """The four standard table rows derived from a base scenario.

        ``base.p_signal`` is the strong-beam power; weak-control rows drive
        the control at a tenth of it. Row order is fixed.
        """
        p0 = base.p_signal
        weak = 0.1 * p0
        rows = (
            ("795-control-equal", "field1_795", p0, 1.0),
            ("795-control-weak", "field1_795", weak, 0.1),
            ("780-control-equal", "field2_780", p0, 1.0),
            ("780-control-weak", "field2_780", weak, 10.0),
        )
        configs = []
        for label, control_field, p_control, ratio in rows:
            configs.append(
                (
                    label,
                    ScenarioConfig(
                        control_field=control_field,
                        p_control=p_control,
                        p_signal=p0,
                        p_eit=base.p_eit,
                        power_ratio=ratio,
                        sweep=base.sweep,
                        control_on=True,
                    ),
                )
            )
        return tuple(configs)

    def run_scenario(self, label: str, config: ScenarioConfig, executor=None) -> ScenarioResult:
        """Metrics row for one scenario: on/off sweeps on the 3-point grid."""
        signal, _ = self._roles(config)
        grid = self.metrics_grid(config.control_field)
        config_on = replace(config, sweep=grid, control_on=True)
        config_off = replace(config_on, control_on=False)
        spec_on = self.sweep_spectrum(config_on, executor=executor)
        spec_off = self.sweep_spectrum(config_off, executor=executor)
        metrics = switch_metrics(spec_on, spec_off)

        off0 = spec_off.at_zero()
        k0, k1, k2 = self._triples[signal]
        kset_off = KappaSet(k0, off0.kappa_e, k1, k2, 0.0)
        stored = cavity.stored_energy(config.p_signal, kset_off)
        return ScenarioResult(
            label=label,
            control_field=config.control_field,
            power_ratio=config.power_ratio,
            metrics=metrics,
            tau_s=cavity.switching_time(kset_off),
            photons=cavity.photon_number(stored, self._wavelengths[signal]),
            intensity_W_m2=cavity.circulating_intensity(stored, self.cavity),
            iterations_on=max(p.fp_iterations for p in spec_on.points),
            iterations_off=max(p.fp_iterations for p in spec_off.points),
            spectrum_on=spec_on,
            spectrum_off=spec_off,
        )

    def run_scenarios(self, base: ScenarioConfig, executor=None):
        """All four standard rows, in order, with diagnostics."""
        rows = self.scenario_rows(base)
        if executor is None:
            return tuple(self.run_scenario(label, cfg) for label, cfg in rows)
        futures = [
            executor.submit(self.run_scenario, label, cfg) for label, cfg in rows
        ]
        return tuple(future.result() for future in futures)
