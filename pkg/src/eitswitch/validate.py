"""Self-contained analytic invariant checks behind ``eitswitch validate``.

Each check compares a solver output against a closed-form result and
reports the residual next to its threshold, so a silent regression in the
relaxation table, the coupled-mode algebra or the velocity quadrature
shows up as a named failure rather than a drifting scenario table.

``run_checks`` accepts an injected coherence-rate table so the test suite
can verify the canary property: corrupting the excited-state coherence
rate must trip the EIT-window check while leaving the two-photon zero
(which no dephasing rate can shift) untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import atom, cavity, linedata, vapor
from .atom import DriveSet, LevelScheme
from .cavity import KappaSet


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    threshold: float
    detail: str


def _result(name, residual, threshold, detail) -> CheckResult:
    return CheckResult(
        name=name,
        passed=bool(residual <= threshold),
        residual=float(residual),
        threshold=float(threshold),
        detail=detail,
    )


def _lambda_scheme(line):
    gamma_2 = (
        line.transition("probe1").gamma_rad_per_s
        + line.transition("eit").gamma_rad_per_s
    )
    return gamma_2, LevelScheme(
        gamma_21=line.transition("probe1").gamma_rad_per_s,
        gamma_23=line.transition("eit").gamma_rad_per_s,
        gamma_43=line.transition("probe2").gamma_rad_per_s,
        gamma_gg=0.0,
    )


def _steady_with_rates(drives, scheme, coherence_rates):
    liou = atom.hamiltonian_superoperator(atom.build_hamiltonian(drives))
    liou = liou + atom.relaxation_superoperator(scheme, coherence_rates=coherence_rates)
    return atom.steady_state(liou)


def check_eit_two_photon_zero(coherence_rates=None) -> CheckResult:
    """At equal one- and two-photon detunings the probe coherence vanishes.

    The dark state is exact for any excited-state dephasing, so this check
    must keep passing even with a corrupted gamma_12.
    """
    line = linedata.load_line_data()
    gamma_2, scheme = _lambda_scheme(line)
    gamma_4 = scheme.gamma_43
    drives = DriveSet(
        omega_1=1e-4 * gamma_2,
        omega_2=1e-6 * gamma_4,   # keeps |4> connected; far too weak to matter
        omega_c=2.0 * gamma_2,
        delta_1=0.7 * gamma_2,
        delta_2=0.0,
        delta_c=0.7 * gamma_2,
    )
    rho = _steady_with_rates(drives, scheme, coherence_rates)
    residual = abs(float(rho[1, 0].imag))
    return _result(
        "eit_two_photon_zero",
        residual,
        1e-10,
        "Im(probe coherence) at two-photon resonance, no ground dephasing",
    )


def check_eit_window_halfwidth(coherence_rates=None) -> CheckResult:
    """Absorption recovers to half its bare peak at the analytic detuning.

    For a resonant coupling beam and no ground dephasing the half-recovery
    point sits at [-gamma_12 + sqrt(gamma_12^2 + Omega_c^2)] / 2, where
    gamma_12 is the probe coherence decay rate. Any error in the rate table
    entry shifts the ratio away from one half.
    """
    line = linedata.load_line_data()
    gamma_2, scheme = _lambda_scheme(line)
    gamma_12 = 0.5 * gamma_2
    omega_c = 3.0 * gamma_2
    delta_star = 0.5 * (-gamma_12 + math.sqrt(gamma_12**2 + omega_c**2))
    omega_1 = 1e-4 * gamma_2
    drives = DriveSet(
        omega_1=omega_1,
        omega_2=1e-6 * scheme.gamma_43,
        omega_c=omega_c,
        delta_1=delta_star,
        delta_2=0.0,
        delta_c=0.0,
    )
    rho = _steady_with_rates(drives, scheme, coherence_rates)
    # bare two-level peak in the weak-probe limit: Im(rho_eg) = Omega/(2 gamma_12)
    ratio = float(rho[1, 0].imag) * 2.0 * gamma_12 / omega_1
    return _result(
        "eit_window_halfwidth",
        abs(ratio - 0.5),
        1e-6,
        "absorption at the analytic half-recovery detuning over the bare peak",
    )


def check_two_level_cross_section() -> CheckResult:
    """Resonant weak-probe absorption equals N * 3 lambda^2 / (2 pi)."""
    line = linedata.load_line_data()
    lam = line.transition("probe1").wavelength_m
    gamma_total = (
        line.transition("probe1").gamma_rad_per_s
        + line.transition("eit").gamma_rad_per_s
    )
    scheme = LevelScheme(
        gamma_21=gamma_total,
        gamma_23=0.0,
        gamma_43=line.transition("probe2").gamma_rad_per_s,
        gamma_gg=0.0,
    )
    density = 1e16
    params = vapor.VaporParams(
        density_N=density,
        temperature=300.0,
        atomic_mass=line.mass_kg,
        lambda_1=lam,
        lambda_2=line.transition("probe2").wavelength_m,
        dipole_1=linedata.radiative_dipole(lam, gamma_total),
        dipole_2=line.transition("probe2").dipole_Cm,
        dipole_c=line.transition("eit").dipole_Cm,
    )
    drives = DriveSet(omega_1=1e-4 * gamma_total, omega_2=0.0, omega_c=0.0)
    alpha = vapor.absorption_coefficient(drives, scheme, params, "probe1")
    target = density * 3.0 * lam**2 / (2.0 * math.pi)
    return _result(
        "two_level_cross_section",
        abs(alpha / target - 1.0),
        1e-6,
        "alpha over N * 3 lambda^2 / (2 pi), radiative dipole, weak probe",
    )


def check_cavity_anchor_through() -> CheckResult:
    k = KappaSet(kappa_0=1.0, kappa_e=0.0, kappa_1=30.0, kappa_2=30.0, delta=0.0)
    residual = abs(cavity.through_transmission(k) - 1.0 / 3721.0)
    return _result(
        "cavity_anchor_through",
        residual,
        1e-12,
        "T at (delta=0, kappa_0=1, kappa_e=0, kappa_1=kappa_2=30) vs 1/3721",
    )


def check_cavity_anchor_drop() -> CheckResult:
    k = KappaSet(kappa_0=1.0, kappa_e=0.0, kappa_1=30.0, kappa_2=30.0, delta=0.0)
    residual = abs(cavity.drop_transmission(k) - 3600.0 / 3721.0)
    return _result(
        "cavity_anchor_drop",
        residual,
        1e-12,
        "D at the same anchor point vs 3600/3721",
    )


def check_lossless_unitarity(n_samples: int = 200) -> CheckResult:
    rng = np.random.default_rng(20260814)
    worst = 0.0
    for _ in range(n_samples):
        k = KappaSet(
            kappa_0=0.0,
            kappa_e=0.0,
            kappa_1=float(rng.uniform(0.1, 10.0)),
            kappa_2=float(rng.uniform(0.1, 10.0)),
            delta=float(rng.uniform(-20.0, 20.0)),
        )
        worst = max(
            worst,
            abs(cavity.through_transmission(k) + cavity.drop_transmission(k) - 1.0),
        )
    return _result(
        "lossless_unitarity",
        worst,
        1e-12,
        f"max |T + D - 1| over {n_samples} lossless resonators",
    )


def check_power_conservation(n_samples: int = 200) -> CheckResult:
    rng = np.random.default_rng(8261)
    worst = 0.0
    for _ in range(n_samples):
        k = KappaSet(
            kappa_0=float(rng.uniform(0.0, 5.0)),
            kappa_e=float(rng.uniform(0.0, 5.0)),
            kappa_1=float(rng.uniform(0.1, 10.0)),
            kappa_2=float(rng.uniform(0.1, 10.0)),
            delta=float(rng.uniform(-20.0, 20.0)),
        )
        p_in = float(rng.uniform(0.1, 10.0))
        absorbed = (k.kappa_0 + k.kappa_e) * cavity.stored_energy(p_in, k) / p_in
        total = (
            cavity.through_transmission(k) + cavity.drop_transmission(k) + absorbed
        )
        worst = max(worst, abs(total - 1.0))
    return _result(
        "power_conservation",
        worst,
        1e-12,
        f"max |T + D + absorbed - 1| over {n_samples} lossy resonators",
    )


def check_oracle_equivalence() -> CheckResult:
    """Steady-state solver against long-time RK4 integration."""
    cases = (
        (LevelScheme(1.0, 0.6, 1.4, 0.02), DriveSet(0.9, 1.3, 1.1, 0.4, -0.7, 0.2)),
        (LevelScheme(0.8, 1.1, 0.9, 0.0), DriveSet(1.5, 0.7, 1.8, -1.0, 0.5, -0.3)),
        (LevelScheme(1.2, 0.9, 2.0, 0.05), DriveSet(0.6, 1.1, 0.8, 0.0, 0.0, 0.0)),
    )
    worst = 0.0
    for scheme, drives in cases:
        steady = atom.driven_steady_state(drives, scheme)
        liou = atom.build_liouvillian(drives, scheme)
        dt = 0.08 / float(np.max(np.abs(liou)))
        gamma_12 = 0.5 * (scheme.gamma_21 + scheme.gamma_23)
        rho0 = np.eye(atom.N_LEVELS, dtype=complex) / atom.N_LEVELS
        evolved = atom.evolve(drives, scheme, rho0, 100.0 / gamma_12, dt)
        worst = max(worst, float(np.max(np.abs(steady - evolved))))
    return _result(
        "oracle_equivalence",
        worst,
        1e-8,
        "max |steady_state - evolve(100 / gamma_12)| over 3 drive sets",
    )


def check_quadrature_moments() -> CheckResult:
    line = linedata.load_line_data()
    params = vapor.VaporParams.from_line_data(line, density_N=1e18, temperature=300.0)
    u = params.thermal_width()
    worst = 0.0
    for quad in (
        vapor.doppler_quadrature(params, n_nodes=32),
        vapor.uniform_doppler_quadrature(params, n_nodes=2001),
    ):
        worst = max(worst, abs(float(np.sum(quad.weights)) - 1.0))
        second = float(np.dot(quad.weights, quad.nodes**2))
        worst = max(worst, abs(second / (0.5 * u * u) - 1.0))
    return _result(
        "quadrature_moments",
        worst,
        1e-9,
        "normalization and second velocity moment of both quadrature rules",
    )


def check_gauss_hermite_vs_dense_oracle() -> CheckResult:
    """GH-32 against a 4001-node trapezoid on a Doppler-dominated line.

    Uses a synthetic radiative rate comparable to the Doppler width so the
    velocity response is smooth on the Gauss-Hermite node spacing.
    """
    line = linedata.load_line_data()
    params = vapor.VaporParams.from_line_data(line, density_N=1e16, temperature=300.0)
    k1 = 2.0 * math.pi / params.lambda_1
    # cycling two-level line: decay may not leak into an undriven dark level
    gamma_2 = 3.0 * k1 * params.thermal_width()
    scheme = LevelScheme(gamma_21=gamma_2, gamma_23=0.0, gamma_43=0.0, gamma_gg=0.0)
    drives = DriveSet(omega_1=1e-4 * gamma_2, omega_2=0.0, omega_c=0.0)
    gh = vapor.doppler_average_alpha(
        drives, scheme, params, vapor.doppler_quadrature(params, n_nodes=32), "probe1"
    )
    dense = vapor.doppler_average_alpha(
        drives,
        scheme,
        params,
        vapor.uniform_doppler_quadrature(params, n_nodes=4001),
        "probe1",
    )
    return _result(
        "gauss_hermite_vs_dense_oracle",
        abs(gh / dense - 1.0),
        1e-6,
        "GH-32 vs 4001-node trapezoid Voigt average at 300 K",
    )


def run_checks(coherence_rates=None) -> list:
    """Run every check; the optional rate table reaches the two EIT checks."""
    return [
        check_eit_two_photon_zero(coherence_rates),
        check_eit_window_halfwidth(coherence_rates),
        check_two_level_cross_section(),
        check_cavity_anchor_through(),
        check_cavity_anchor_drop(),
        check_lossless_unitarity(),
        check_power_conservation(),
        check_oracle_equivalence(),
        check_quadrature_moments(),
        check_gauss_hermite_vs_dense_oracle(),
    ]


def format_report(results) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{status}  {r.name:<32} residual {r.residual:10.3e}  "
            f"threshold {r.threshold:8.1e}  {r.detail}"
        )
    failed = [r.name for r in results if not r.passed]
    if failed:
        lines.append(f"{len(failed)} of {len(results)} checks failed: {', '.join(failed)}")
    else:
        lines.append(f"all {len(results)} checks passed")
    return "\n".join(lines) + "\n"
