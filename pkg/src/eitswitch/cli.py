"""Command-line front end: ``spectrum``, ``metrics`` and ``validate``.

Every data-producing run writes a ``run_manifest.json`` next to its output
files: the fully resolved configuration, the line-data checksum, per-scenario
iteration statistics, the chosen quality-factor interpretation and a checksum
block over the data files. ``--seed-manifest`` rebuilds the configuration
from such a manifest to reproduce the run. Exit codes: 0 success, 1
simulation error (partial outputs are kept and the error is recorded in the
manifest), 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from importlib import resources

from . import __version__
from . import config as config_mod
from . import report, validate
from .errors import ConfigError, EitSwitchError, SweepError

MANIFEST_NAME = "run_manifest.json"
# recorded for the run log but excluded when comparing manifests for
# byte-determinism across thread counts
VOLATILE_MANIFEST_KEYS = ("created_utc", "wall_clock_s", "threads")


def default_config_path():
    """The packaged calibrated operating point."""
    return resources.files("eitswitch").joinpath("data/rb87_transistor.cfg")


def _load_config(args) -> config_mod.SimulationConfig:
    if args.seed_manifest and args.config:
        raise ConfigError("give a config file or --seed-manifest, not both")
    if args.seed_manifest:
        try:
            with open(args.seed_manifest, "r", encoding="utf-8") as handle:
                manifest = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read manifest: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.seed_manifest}: not valid JSON: {exc}") from exc
        if "config" not in manifest:
            raise ConfigError(f"{args.seed_manifest}: manifest has no config block")
        cfg = config_mod.from_resolved(manifest["config"], label=str(args.seed_manifest))
    elif args.config:
        path = default_config_path() if args.config == "builtin" else args.config
        cfg = config_mod.parse_config(path)
    else:
        raise ConfigError("a config file (or --seed-manifest) is required")
    if args.quadrature_nodes is not None:
        cfg.override_quadrature_nodes(args.quadrature_nodes)
    if args.output_dir is not None:
        cfg.override_output_dir(args.output_dir)
    return cfg


def _metrics_payload(result) -> dict:
    m = result.metrics
    return {
        "label": result.label,
        "control_field": result.control_field,
        "power_ratio": result.power_ratio,
        "drop_contrast_db": m.drop_contrast_db,
        "through_contrast_db": m.through_contrast_db,
        "drop_loss_db": m.drop_loss_db,
        "through_loss_db": m.through_loss_db,
        "contrast_unbounded": m.contrast_unbounded,
        "tau_s": result.tau_s,
        "photons": result.photons,
        "intensity_W_m2": result.intensity_W_m2,
        "iterations_on": result.iterations_on,
        "iterations_off": result.iterations_off,
    }


def _error_payload(exc, scenario=None, state=None) -> dict:
    payload = {"message": str(exc), "type": type(exc).__name__}
    if scenario is not None:
        payload["scenario"] = scenario
    if state is not None:
        payload["state"] = state
    if isinstance(exc, SweepError) and exc.delta is not None:
        payload["delta_rad_s"] = exc.delta
    return payload


class _Run:
    """Shared manifest bookkeeping for the data-producing commands."""

    def __init__(self, cfg, command, threads):
        self.cfg = cfg
        self.out_dir = cfg.output_dir
        self.started = time.perf_counter()
        self.manifest = {
            "tool": "eitswitch",
            "version": __version__,
            "command": command,
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "threads": threads,
            "line_data_sha256": cfg.line_data_sha256,
            "q_interpretation": cfg.q_interpretation,
            "config": cfg.resolved,
            "scenarios": [],
            "outputs": {},
            "error": None,
        }
        os.makedirs(self.out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def checksum(self, name):
        self.manifest["outputs"][name] = report.sha256_file(self.path(name))

    def finish(self) -> int:
        self.manifest["wall_clock_s"] = time.perf_counter() - self.started
        with open(self.path(MANIFEST_NAME), "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        if self.manifest["error"] is not None:
            print(f"error: {self.manifest['error']['message']}", file=sys.stderr)
            return 1
        return 0


def cmd_metrics(cfg, threads: int = 1) -> int:
    """Four-row switching table with diagnostics, CSV + text + figure."""
    run = _Run(cfg, "metrics", threads)
    model = cfg.build_model()
    rows = model.scenario_rows(cfg.base_scenario(model))
    results = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for label, row_cfg in rows:
            try:
                result = model.run_scenario(label, row_cfg, executor=pool)
            except EitSwitchError as exc:
                run.manifest["error"] = _error_payload(exc, scenario=label)
                break
            results.append(result)
            run.manifest["scenarios"].append(_metrics_payload(result))
    finally:
        if pool is not None:
            pool.shutdown()
    if results:
        report.write_metrics_csv(run.path("metrics.csv"), results)
        run.checksum("metrics.csv")
        report.write_metrics_text(run.path("metrics.txt"), results)
        run.checksum("metrics.txt")
        if cfg.figures:
            report.render_metrics_figure(
                run.path("metrics.png"), results, dpi=cfg.figure_dpi
            )
            run.checksum("metrics.png")
        print(report.metrics_text_table(results), end="")
    return run.finish()


def cmd_spectrum(cfg, threads: int = 1) -> int:
    """Full detuning sweeps, control on and off, one CSV pair per scenario."""
    run = _Run(cfg, "spectrum", threads)
    model = cfg.build_model()
    rows = model.scenario_rows(cfg.base_scenario(model))
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for label, row_cfg in rows:
            entry = {"label": label, "files": []}
            failed = False
            for state in ("on", "off"):
                state_cfg = replace(row_cfg, control_on=(state == "on"))
                try:
                    spectrum = model.sweep_spectrum(state_cfg, executor=pool)
                except SweepError as exc:
                    run.manifest["error"] = _error_payload(exc, scenario=label, state=state)
                    if exc.partial is not None:
                        name = f"spectrum_{label}_{state}_partial.csv"
                        report.write_spectrum_csv(run.path(name), exc.partial)
                        run.checksum(name)
                        entry["files"].append(name)
                    failed = True
                    break
                except EitSwitchError as exc:
                    run.manifest["error"] = _error_payload(exc, scenario=label, state=state)
                    failed = True
                    break
                name = f"spectrum_{label}_{state}.csv"
                report.write_spectrum_csv(run.path(name), spectrum)
                run.checksum(name)
                entry["files"].append(name)
                entry[f"iterations_{state}"] = max(
                    p.fp_iterations for p in spectrum.points
                )
                entry[f"points_{state}"] = len(spectrum.points)
                entry[f"spectrum_{state}"] = spectrum
            run.manifest["scenarios"].append(entry)
            if failed:
                break
            if cfg.figures:
                name = f"spectrum_{label}.png"
                report.render_spectrum_figure(
                    run.path(name),
                    label,
                    entry.pop("spectrum_on"),
                    entry.pop("spectrum_off"),
                    dpi=cfg.figure_dpi,
                )
                run.checksum(name)
                entry["files"].append(name)
    finally:
        if pool is not None:
            pool.shutdown()
    for entry in run.manifest["scenarios"]:
        entry.pop("spectrum_on", None)
        entry.pop("spectrum_off", None)
    return run.finish()


def cmd_validate() -> int:
    results = validate.run_checks()
    print(validate.format_report(results), end="")
    return 0 if all(r.passed for r in results) else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eitswitch",
        description="Microresonator vapor-switching simulator",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("spectrum", "sweep the signal detuning and write per-scenario spectra"),
        ("metrics", "compute the four-row switching metrics table"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument(
            "config",
            nargs="?",
            default=None,
            help="config file path, or 'builtin' for the packaged operating point",
        )
        cmd.add_argument("--output-dir", default=None, help="directory for output files")
        cmd.add_argument(
            "--threads",
            type=int,
            default=1,
            help="worker threads for sweep points (output bytes are unaffected)",
        )
        cmd.add_argument(
            "--quadrature-nodes",
            type=int,
            default=None,
            help="override the velocity-quadrature node count",
        )
        cmd.add_argument(
            "--seed-manifest",
            default=None,
            help="rebuild the configuration from a prior run's manifest",
        )
    sub.add_parser("validate", help="run the analytic invariant checks")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate()
        cfg = _load_config(args)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.command == "metrics":
            return cmd_metrics(cfg, threads=args.threads)
        return cmd_spectrum(cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EitSwitchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
