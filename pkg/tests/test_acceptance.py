"""End-to-end acceptance suite.

One test per criterion, in execution order; each prints a single
CRITERION line with the measured numbers next to its threshold. The
criterion-2 invariant audit runs last so it covers every steady-state
solve the other criteria triggered, including the full calibrated
scenario runs and the CLI determinism runs.
"""

import json
import math
import time

import numpy as np
import pytest

from eitswitch import atom, cavity, cli, config, linedata, vapor
from eitswitch.atom import DriveSet, LevelScheme
from eitswitch.cavity import KappaSet

from helpers import random_gapped_sets


@pytest.fixture(scope="module", autouse=True)
def solve_audit():
    """Record density-matrix residuals of every solve in this module."""
    records = []
    orig_batch = atom.steady_state_batch
    orig_driven = atom.driven_steady_state
    orig_steady = atom.steady_state

    def note(rhos):
        rhos = np.asarray(rhos)
        stack = rhos[None, ...] if rhos.ndim == 2 else rhos
        herm = float(np.max(np.abs(stack - np.conj(np.swapaxes(stack, -1, -2)))))
        trace = float(np.max(np.abs(np.einsum("...ii", stack) - 1.0)))
        sym = 0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2)))
        eig_min = float(np.min(np.linalg.eigvalsh(sym)))
        records.append((herm, trace, eig_min))

    def wrap_batch(liouvillians, n_levels=atom.N_LEVELS):
        rhos = orig_batch(liouvillians, n_levels=n_levels)
        note(rhos)
        return rhos

    def wrap_driven(drives, scheme):
        rho = orig_driven(drives, scheme)
        note(rho)
        return rho

    def wrap_steady(liouvillian):
        rho = orig_steady(liouvillian)
        note(rho)
        return rho

    atom.steady_state_batch = wrap_batch
    atom.driven_steady_state = wrap_driven
    atom.steady_state = wrap_steady
    try:
        yield records
    finally:
        atom.steady_state_batch = orig_batch
        atom.driven_steady_state = orig_driven
        atom.steady_state = orig_steady


@pytest.fixture(scope="module")
def calibrated_run():
    """The packaged operating point: four scenario rows plus wall time."""
    cfg = config.parse_config(cli.default_config_path())
    model = cfg.build_model()
    start = time.perf_counter()
    rows = model.run_scenarios(cfg.base_scenario(model))
    wall = time.perf_counter() - start
    return rows, wall


def test_criterion_1_steady_state_matches_time_evolution():
    start = time.perf_counter()
    worst = 0.0
    for drives, scheme in random_gapped_sets(20, seed=11):
        liou = atom.build_liouvillian(drives, scheme)
        steady = atom.steady_state(liou)
        dt = 0.08 / float(np.max(np.abs(liou)))
        rho0 = np.eye(4, dtype=complex) / 4.0
        evolved = atom.evolve(drives, scheme, rho0, 100.0 / scheme.gamma_21, dt)
        worst = max(worst, float(np.max(np.abs(steady - evolved))))
    wall = time.perf_counter() - start
    ok = worst <= 1e-8 and wall < 10.0
    print(
        f"CRITERION 1 {'PASS' if ok else 'FAIL'}: solver vs RK4 oracle on 20 "
        f"random sets, max |diff| {worst:.3e} <= 1e-8, wall {wall:.2f} s < 10 s"
    )
    assert worst <= 1e-8
    assert wall < 10.0


def test_criterion_3_eit_zero_and_two_level_cross_section():
    line = linedata.load_line_data()
    gamma_2 = (
        line.transition("probe1").gamma_rad_per_s
        + line.transition("eit").gamma_rad_per_s
    )
    scheme = LevelScheme(
        gamma_21=line.transition("probe1").gamma_rad_per_s,
        gamma_23=line.transition("eit").gamma_rad_per_s,
        gamma_43=line.transition("probe2").gamma_rad_per_s,
        gamma_gg=0.0,
    )
    worst_zero = 0.0
    for detuning in (0.0, 0.7 * gamma_2):
        drives = DriveSet(
            omega_1=1e-4 * gamma_2,
            omega_2=0.0,
            omega_c=2.0 * gamma_2,
            delta_1=detuning,
            delta_c=detuning,
        )
        rho = atom.driven_steady_state(drives, scheme)
        worst_zero = max(worst_zero, abs(float(rho[1, 0].imag)))

    lam = line.transition("probe1").wavelength_m
    cycling = LevelScheme(
        gamma_21=gamma_2,
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
        dipole_1=linedata.radiative_dipole(lam, gamma_2),
        dipole_2=line.transition("probe2").dipole_Cm,
        dipole_c=line.transition("eit").dipole_Cm,
    )
    alpha = vapor.absorption_coefficient(
        DriveSet(omega_1=1e-4 * gamma_2, omega_2=0.0, omega_c=0.0),
        cycling,
        params,
        "probe1",
    )
    ratio = alpha / (density * 3.0 * lam**2 / (2.0 * math.pi))
    ok = worst_zero <= 1e-10 and 1.0 - 1e-6 <= ratio <= 1.0 + 1e-6
    print(
        f"CRITERION 3 {'PASS' if ok else 'FAIL'}: EIT zero |Im rho_21| "
        f"{worst_zero:.3e} <= 1e-10; cross-section ratio {ratio:.9f} in 1 +/- 1e-6"
    )
    assert worst_zero <= 1e-10
    assert 1.0 - 1e-6 <= ratio <= 1.0 + 1e-6


def test_criterion_4_transmission_identities():
    anchor = KappaSet(kappa_0=1.0, kappa_e=0.0, kappa_1=30.0, kappa_2=30.0, delta=0.0)
    anchor_t = abs(cavity.through_transmission(anchor) - 1.0 / 3721.0)
    anchor_d = abs(cavity.drop_transmission(anchor) - 3600.0 / 3721.0)

    rng = np.random.default_rng(4)
    worst_sum = 0.0
    worst_power = 0.0
    for _ in range(1000):
        lossless = KappaSet(
            kappa_0=0.0,
            kappa_e=0.0,
            kappa_1=float(rng.uniform(0.05, 20.0)),
            kappa_2=float(rng.uniform(0.05, 20.0)),
            delta=float(rng.uniform(-50.0, 50.0)),
        )
        worst_sum = max(
            worst_sum,
            abs(
                cavity.through_transmission(lossless)
                + cavity.drop_transmission(lossless)
                - 1.0
            ),
        )
        lossy = KappaSet(
            kappa_0=float(rng.uniform(0.0, 5.0)),
            kappa_e=float(rng.uniform(0.0, 5.0)),
            kappa_1=float(rng.uniform(0.05, 20.0)),
            kappa_2=float(rng.uniform(0.05, 20.0)),
            delta=float(rng.uniform(-50.0, 50.0)),
        )
        p_in = float(rng.uniform(0.1, 10.0))
        absorbed = (
            (lossy.kappa_0 + lossy.kappa_e) * cavity.stored_energy(p_in, lossy) / p_in
        )
        worst_power = max(
            worst_power,
            abs(
                cavity.through_transmission(lossy)
                + cavity.drop_transmission(lossy)
                + absorbed
                - 1.0
            ),
        )
    ok = max(anchor_t, anchor_d, worst_sum, worst_power) <= 1e-12
    print(
        f"CRITERION 4 {'PASS' if ok else 'FAIL'}: anchors {anchor_t:.1e}/"
        f"{anchor_d:.1e}, lossless |T+D-1| {worst_sum:.1e}, power balance "
        f"{worst_power:.1e}, all <= 1e-12"
    )
    assert anchor_t <= 1e-12 and anchor_d <= 1e-12
    assert worst_sum <= 1e-12
    assert worst_power <= 1e-12


def test_criterion_5_doppler_quadrature_vs_dense_oracle():
    start = time.perf_counter()
    line = linedata.load_line_data()
    params = vapor.VaporParams.from_line_data(line, density_N=1e16, temperature=300.0)
    k1 = 2.0 * math.pi / params.lambda_1
    gamma_2 = 3.0 * k1 * params.thermal_width()
    scheme = LevelScheme(gamma_21=gamma_2, gamma_23=0.0, gamma_43=0.0, gamma_gg=0.0)
    drives = DriveSet(omega_1=1e-4 * gamma_2, omega_2=0.0, omega_c=0.0)
    gh = vapor.doppler_average_alpha(
        drives, scheme, params, vapor.doppler_quadrature(params, 32), "probe1"
    )
    dense = vapor.doppler_average_alpha(
        drives, scheme, params, vapor.uniform_doppler_quadrature(params, 4001), "probe1"
    )
    wall = time.perf_counter() - start
    rel = abs(gh / dense - 1.0)
    ok = rel <= 1e-6 and wall < 5.0
    print(
        f"CRITERION 5 {'PASS' if ok else 'FAIL'}: GH-32 vs 4001-node trapezoid "
        f"relative diff {rel:.3e} <= 1e-6, wall {wall:.2f} s < 5 s"
    )
    assert rel <= 1e-6
    assert wall < 5.0


def test_criterion_6_calibrated_switching_tables(calibrated_run):
    rows, wall = calibrated_run
    equal_795 = rows[0]
    m = equal_795.metrics
    table_window = (
        abs(m.drop_contrast_db - 39.0) <= 5.0
        and abs(m.through_contrast_db - 31.0) <= 5.0
        and abs(m.drop_loss_db - 0.4) <= 0.3
        and abs(m.through_loss_db - 0.1) <= 0.3
    )
    headline = all(
        r.metrics.drop_contrast_db > 25.0
        and r.metrics.through_contrast_db > 25.0
        and r.metrics.drop_loss_db < 0.5
        and r.metrics.through_loss_db < 0.5
        for r in rows
    )
    ok = table_window and headline and wall < 120.0
    print(
        f"CRITERION 6 {'PASS' if ok else 'FAIL'}: equal-power 795 row "
        f"{m.drop_contrast_db:.2f}/{m.through_contrast_db:.2f} dB contrast "
        f"(39/31 +/- 5), {m.drop_loss_db:.3f}/{m.through_loss_db:.3f} dB loss "
        f"(0.4/0.1 +/- 0.3); all rows >25 dB/<0.5 dB: {headline}; "
        f"wall {wall:.1f} s < 120 s"
    )
    assert table_window
    assert headline
    assert wall < 120.0


def test_criterion_7_weak_control_retains_contrast(calibrated_run):
    rows, _ = calibrated_run
    equal = {r.label.rsplit("-", 1)[0]: r for r in rows if r.label.endswith("equal")}
    weak = {r.label.rsplit("-", 1)[0]: r for r in rows if r.label.endswith("weak")}
    ok = True
    summary = []
    for key in ("795-control", "780-control"):
        we, eq = weak[key].metrics, equal[key].metrics
        retains = we.drop_contrast_db > 25.0 and we.through_contrast_db > 25.0
        degrade = max(
            eq.drop_contrast_db - we.drop_contrast_db,
            eq.through_contrast_db - we.through_contrast_db,
        )
        ok = ok and retains and degrade <= 8.0
        summary.append(
            f"{key} weak {we.drop_contrast_db:.2f}/{we.through_contrast_db:.2f} dB"
            f" (degrades {degrade:.2f} dB)"
        )
    print(
        f"CRITERION 7 {'PASS' if ok else 'FAIL'}: weak-control rows keep "
        f">25 dB within 8 dB of equal power: {'; '.join(summary)}"
    )
    assert ok


def test_criterion_8_order_of_magnitude_diagnostics(calibrated_run, tmp_path):
    rows, _ = calibrated_run
    intensities = [r.intensity_W_m2 / 1e4 for r in rows]   # W/cm^2
    photons = [r.photons for r in rows]
    taus = [r.tau_s for r in rows]
    windows = (
        all(4.0 / 5.0 <= i <= 4.0 * 5.0 for i in intensities)
        and all(0.01 / 5.0 <= n <= 0.01 * 5.0 for n in photons)
        and all(30e-12 <= t <= 1e-9 for t in taus)
    )
    out = tmp_path / "run"
    code = cli.main(["metrics", "builtin", "--output-dir", str(out)])
    manifest = json.loads((out / "run_manifest.json").read_text())
    recorded = manifest.get("q_interpretation")
    ok = windows and code == 0 and recorded == "loaded"
    print(
        f"CRITERION 8 {'PASS' if ok else 'FAIL'}: intensity "
        f"{min(intensities):.2f}-{max(intensities):.2f} W/cm^2 (x5 of 4), "
        f"photons {min(photons):.4f}-{max(photons):.4f} (x5 of 0.01), "
        f"tau {min(taus) * 1e12:.0f}-{max(taus) * 1e12:.0f} ps in [30 ps, 1 ns], "
        f"manifest q_interpretation {recorded!r}"
    )
    assert windows
    assert code == 0
    assert recorded == "loaded"


def test_criterion_9_metrics_output_is_thread_invariant(tmp_path, capsys):
    outputs = {}
    manifests = {}
    for threads in (1, 4):
        out = tmp_path / f"t{threads}"
        code = cli.main(
            ["metrics", "builtin", "--output-dir", str(out), "--threads", str(threads)]
        )
        assert code == 0
        outputs[threads] = {
            name: (out / name).read_bytes()
            for name in ("metrics.csv", "metrics.txt", "metrics.png")
        }
        manifest = json.loads((out / "run_manifest.json").read_text())
        for key in cli.VOLATILE_MANIFEST_KEYS:
            manifest.pop(key)
        # the output directory is the only intentionally differing input
        manifest["config"]["output"]["directory"] = "X"
        manifests[threads] = manifest
    capsys.readouterr()
    identical = outputs[1] == outputs[4] and manifests[1] == manifests[4]
    print(
        f"CRITERION 9 {'PASS' if identical else 'FAIL'}: metrics.csv/.txt/.png "
        f"byte-identical and manifests equal (volatile keys aside) for "
        f"--threads 1 vs 4"
    )
    assert outputs[1] == outputs[4]
    assert manifests[1] == manifests[4]


def test_criterion_2_density_matrix_invariants_every_solve(solve_audit):
    herm = max(r[0] for r in solve_audit)
    trace = max(r[1] for r in solve_audit)
    eig_min = min(r[2] for r in solve_audit)
    ok = herm <= 1e-12 and trace <= 1e-12 and eig_min >= -1e-10
    print(
        f"CRITERION 2 {'PASS' if ok else 'FAIL'}: over {len(solve_audit)} "
        f"solve batches in this run: hermiticity {herm:.2e} <= 1e-12, trace "
        f"{trace:.2e} <= 1e-12, min eigenvalue {eig_min:.2e} >= -1e-10"
    )
    assert len(solve_audit) > 100
    assert herm <= 1e-12
    assert trace <= 1e-12
    assert eig_min >= -1e-10
