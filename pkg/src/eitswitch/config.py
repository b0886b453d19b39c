"""Run configuration: a sectioned key-value file with explicit unit suffixes.

Every key name carries its unit (``p_signal_W``, ``delta_c_rad_s``); unknown
keys are hard errors with file and line context, so a typo or a wrong-unit
variant cannot silently fall back to a default. The [atom], [vapor], [cavity]
and [fields] sections describe physics and default to the calibrated
operating point documented in the packaged ``data/rb87_transistor.cfg``;
[sweep], [solver] and [output] hold numerics and plumbing.

``parse_config`` reads a file; ``from_resolved`` rebuilds the identical
configuration from the resolved-key block a run manifest stores, which is
how ``--seed-manifest`` reproduces a prior run.
"""

from __future__ import annotations

import configparser
import difflib
import math
import os
from dataclasses import dataclass, field

from . import cavity as cavity_mod
from . import linedata, transistor, vapor
from .atom import LevelScheme
from .cavity import CavityParams
from .errors import ConfigError, EitSwitchError
from .transistor import CONTROL_FIELDS, ScenarioConfig, SweepGrid, TransistorModel
from .vapor import ModeProfile, VaporParams

_REQUIRED = object()   # no default; key must be present
_OPTIONAL = object()   # no default; key may be absent

# section -> key -> default string (or marker). Order is the resolved order.
_SCHEMA = {
    "atom": {
        "line_data_file": "builtin",
        "gamma_21_rad_s": _OPTIONAL,
        "gamma_23_rad_s": _OPTIONAL,
        "gamma_43_rad_s": _OPTIONAL,
        "gamma_gg_rad_s": "6283.1853071795865",
    },
    "vapor": {
        "density_N_per_m3": "1e18",
        "temperature_K": "300",
        "mode_profile_file": _OPTIONAL,
    },
    "cavity": {
        "quality_factor": _OPTIONAL,      # defaults to 1e6 when kappa_0 absent
        "kappa_0_rad_s": _OPTIONAL,       # direct intrinsic rate, excludes Q
        "q_interpretation": "loaded",
        "overcoupling": "30",
        "mode_area_m2": "2.5e-13",
        "round_trip_length_m": "9.4247779607693797e-05",
        "group_index": "2",
        "evanescent_fraction": "0.2",
    },
    "fields": {
        "control_field": "field1_795",
        "p_control_W": "1e-11",
        "p_signal_W": "1e-11",
        "p_eit_W": "1e-5",
        "control_on": "true",
        "delta_c_rad_s": "0",
        "eit_beam_diameter_m": "1e-4",
    },
    "sweep": {
        "span_kappas": "5",
        "n_points": "201",
        "delta_min_rad_s": _OPTIONAL,     # both bounds or neither
        "delta_max_rad_s": _OPTIONAL,
    },
    "solver": {
        "quadrature_kind": "uniform",
        "quadrature_nodes": "auto",       # uniform: 2001, gauss_hermite: 32
        "quadrature_span_widths": "6",
        "beta": "0.5",
        "fp_tol": "1e-6",
        "fp_max_iter": "200",
        "rabi_floor_frac": "1e-3",
    },
    "output": {
        "directory": ".",
        "figures": "true",
        "figure_dpi": "150",
    },
}

_DEFAULT_QUALITY_FACTOR = "1e6"
_AUTO_NODES = {"uniform": 2001, "gauss_hermite": 32}
_TRUE_WORDS = {"true", "yes", "on", "1"}
_FALSE_WORDS = {"false", "no", "off", "0"}


def _line_of(lines, section, key=None):
    """1-based line of a section header or of a key inside that section."""
    current = None
    for number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if text.startswith("[") and text.endswith("]"):
            if current == section and key is not None:
                break
            current = text[1:-1].strip()
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section and not text.startswith(("#", ";")):
            name = text.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return number
    return None


def _context(label, lines, section, key=None):
    line = _line_of(lines, section, key) if lines else None
    where = f"{label}:{line}" if line else label
    target = f"[{section}] {key}" if key else f"[{section}]"
    return f"{where}: {target}"


def _parse_float(value, ctx):
    try:
        result = float(value)
    except ValueError:
        raise ConfigError(f"{ctx}: expected a number, got {value!r}") from None
    if not math.isfinite(result):
        raise ConfigError(f"{ctx}: value must be finite, got {value!r}")
    return result


def _parse_int(value, ctx):
    number = _parse_float(value, ctx)
    if number != int(number):
        raise ConfigError(f"{ctx}: expected an integer, got {value!r}")
    return int(number)


def _parse_bool(value, ctx):
    word = value.strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise ConfigError(f"{ctx}: expected true/false, got {value!r}")


def _parse_choice(value, choices, ctx):
    if value not in choices:
        raise ConfigError(f"{ctx}: must be one of {choices}, got {value!r}")
    return value


@dataclass
class SimulationConfig:
    """Fully resolved, validated run description.

    ``resolved`` holds every effective key as the canonical string written
    to the run manifest; rebuilding from it reproduces this object exactly.
    """

    line_data: linedata.LineData
    line_data_sha256: str
    scheme: LevelScheme
    vapor: VaporParams
    profile: ModeProfile
    cavity: CavityParams
    q_interpretation: str
    control_field: str
    p_control: float
    p_signal: float
    p_eit: float
    control_on: bool
    delta_c: float
    eit_beam_diameter: float
    sweep_bounds: tuple | None
    span_kappas: float
    n_points: int
    quadrature_kind: str
    quadrature_nodes: int
    quadrature_span_widths: float
    beta: float
    fp_tol: float
    fp_max_iter: int
    rabi_floor_frac: float
    output_dir: str
    figures: bool
    figure_dpi: int
    resolved: dict = field(repr=False)

    # ------------------------------------------------------------- builders

    def build_quadrature(self) -> vapor.DopplerQuadrature:
        if self.quadrature_kind == "gauss_hermite":
            return vapor.doppler_quadrature(self.vapor, n_nodes=self.quadrature_nodes)
        return vapor.uniform_doppler_quadrature(
            self.vapor,
            n_nodes=self.quadrature_nodes,
            span_widths=self.quadrature_span_widths,
        )

    def build_model(self) -> TransistorModel:
        return TransistorModel(
            self.scheme,
            self.vapor,
            self.cavity,
            self.build_quadrature(),
            self.profile,
            q_interpretation=self.q_interpretation,
            delta_c=self.delta_c,
            beta=self.beta,
            fp_tol=self.fp_tol,
            fp_max_iter=self.fp_max_iter,
            rabi_floor_frac=self.rabi_floor_frac,
            eit_beam_diameter=self.eit_beam_diameter,
        )

    def base_scenario(self, model: TransistorModel) -> ScenarioConfig:
        if self.sweep_bounds is not None:
            sweep = SweepGrid(self.sweep_bounds[0], self.sweep_bounds[1], self.n_points)
        else:
            sweep = model.default_sweep(
                self.control_field, span_kappas=self.span_kappas, n_points=self.n_points
            )
        if self.p_control > 0 and self.p_signal > 0:
            if self.control_field == "field1_795":
                ratio = self.p_control / self.p_signal
            else:
                ratio = self.p_signal / self.p_control
        else:
            ratio = 1.0
        return ScenarioConfig(
            control_field=self.control_field,
            p_control=self.p_control,
            p_signal=self.p_signal,
            p_eit=self.p_eit,
            power_ratio=ratio,
            sweep=sweep,
            control_on=self.control_on,
        )

    # ------------------------------------------------------------ overrides

    def override_quadrature_nodes(self, n_nodes: int) -> None:
        if n_nodes < 2:
            raise ConfigError("--quadrature-nodes must be at least 2")
        self.quadrature_nodes = int(n_nodes)
        self.resolved["solver"]["quadrature_nodes"] = str(int(n_nodes))

    def override_output_dir(self, directory: str) -> None:
        self.output_dir = str(directory)
        self.resolved["output"]["directory"] = str(directory)


def _check_known(parser, label, lines):
    for section in parser.sections():
        if section not in _SCHEMA:
            hint = difflib.get_close_matches(section, _SCHEMA, n=1)
            extra = f"; did you mean [{hint[0]}]?" if hint else ""
            raise ConfigError(f"{_context(label, lines, section)}: unknown section{extra}")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                hint = difflib.get_close_matches(key, _SCHEMA[section], n=1)
                extra = f"; did you mean {hint[0]!r}?" if hint else ""
                raise ConfigError(
                    f"{_context(label, lines, section, key)}: unknown key{extra}"
                )


def _resolve_strings(parser, label, lines):
    """Merge user keys over defaults into the canonical string block."""
    resolved = {}
    for section, keys in _SCHEMA.items():
        block = {}
        for key, default in keys.items():
            if parser.has_option(section, key):
                block[key] = parser.get(section, key).strip()
            elif default is _OPTIONAL or default is _REQUIRED:
                continue
            else:
                block[key] = default
        resolved[section] = block

    cav = resolved["cavity"]
    if "quality_factor" in cav and "kappa_0_rad_s" in cav:
        raise ConfigError(
            f"{_context(label, lines, 'cavity', 'kappa_0_rad_s')}: give either "
            "quality_factor or kappa_0_rad_s, not both"
        )
    if "quality_factor" not in cav and "kappa_0_rad_s" not in cav:
        cav["quality_factor"] = _DEFAULT_QUALITY_FACTOR

    sweep = resolved["sweep"]
    if ("delta_min_rad_s" in sweep) != ("delta_max_rad_s" in sweep):
        raise ConfigError(
            f"{_context(label, lines, 'sweep')}: delta_min_rad_s and "
            "delta_max_rad_s must be given together"
        )
    return resolved


def _build(resolved, label, lines, base_dir):
    def ctx(section, key):
        return _context(label, lines, section, key)

    def fget(section, key):
        return _parse_float(resolved[section][key], ctx(section, key))

    # ---- atom: line data plus optional channel-rate overrides
    atom_block = resolved["atom"]
    source = atom_block["line_data_file"]
    if source == "builtin":
        path = None
    else:
        path = source if os.path.isabs(source) else os.path.join(base_dir, source)
        path = os.path.abspath(path)
        atom_block["line_data_file"] = path
    try:
        line_data = linedata.load_line_data(path)
        sha = linedata.line_data_sha256(path)
    except OSError as exc:
        raise ConfigError(f"{ctx('atom', 'line_data_file')}: cannot read: {exc}") from exc

    gammas = {
        "gamma_21": line_data.transition("probe1").gamma_rad_per_s,
        "gamma_23": line_data.transition("eit").gamma_rad_per_s,
        "gamma_43": line_data.transition("probe2").gamma_rad_per_s,
    }
    for name in ("gamma_21", "gamma_23", "gamma_43"):
        key = f"{name}_rad_s"
        if key in atom_block:
            gammas[name] = fget("atom", key)

    try:
        scheme = LevelScheme(gamma_gg=fget("atom", "gamma_gg_rad_s"), **gammas)

        # ---- vapor
        vapor_params = VaporParams.from_line_data(
            line_data,
            density_N=fget("vapor", "density_N_per_m3"),
            temperature=fget("vapor", "temperature_K"),
        )
        if "mode_profile_file" in resolved["vapor"]:
            profile_source = resolved["vapor"]["mode_profile_file"]
            if not os.path.isabs(profile_source):
                profile_source = os.path.join(base_dir, profile_source)
            profile_source = os.path.abspath(profile_source)
            resolved["vapor"]["mode_profile_file"] = profile_source
            profile = ModeProfile.from_file(profile_source)
        else:
            profile = ModeProfile.uniform()

        # ---- cavity; a direct kappa_0 is intrinsic by definition
        cav = resolved["cavity"]
        interpretation = _parse_choice(
            cav["q_interpretation"],
            cavity_mod.Q_INTERPRETATIONS,
            ctx("cavity", "q_interpretation"),
        )
        reference_lambda = line_data.transition("probe2").wavelength_m
        if "kappa_0_rad_s" in cav:
            kappa_0 = fget("cavity", "kappa_0_rad_s")
            if kappa_0 <= 0:
                raise ConfigError(f"{ctx('cavity', 'kappa_0_rad_s')}: must be positive")
            quality = 2.0 * math.pi * cavity_mod.c / reference_lambda / kappa_0
            interpretation = "intrinsic"
        else:
            quality = fget("cavity", "quality_factor")
        cavity_params = CavityParams(
            lambda_cavity=reference_lambda,
            q_intrinsic=quality,
            overcoupling=fget("cavity", "overcoupling"),
            mode_area=fget("cavity", "mode_area_m2"),
            round_trip_length=fget("cavity", "round_trip_length_m"),
            group_index=fget("cavity", "group_index"),
            evanescent_fraction=fget("cavity", "evanescent_fraction"),
        )

        # ---- fields
        fields_block = resolved["fields"]
        control_field = _parse_choice(
            fields_block["control_field"], CONTROL_FIELDS, ctx("fields", "control_field")
        )
        powers = {}
        for key in ("p_control_W", "p_signal_W", "p_eit_W"):
            value = fget("fields", key)
            if value < 0:
                raise ConfigError(f"{ctx('fields', key)}: power must be >= 0")
            powers[key] = value

        # ---- sweep
        sweep = resolved["sweep"]
        n_points = _parse_int(sweep["n_points"], ctx("sweep", "n_points"))
        if n_points < 2:
            raise ConfigError(f"{ctx('sweep', 'n_points')}: need at least 2 points")
        if "delta_min_rad_s" in sweep:
            bounds = (fget("sweep", "delta_min_rad_s"), fget("sweep", "delta_max_rad_s"))
            if not bounds[0] < bounds[1]:
                raise ConfigError(
                    f"{ctx('sweep', 'delta_min_rad_s')}: lower bound must be "
                    "below delta_max_rad_s"
                )
        else:
            bounds = None
        span_kappas = fget("sweep", "span_kappas")
        if span_kappas <= 0:
            raise ConfigError(f"{ctx('sweep', 'span_kappas')}: must be positive")

        # ---- solver
        solver = resolved["solver"]
        kind = _parse_choice(
            solver["quadrature_kind"],
            tuple(_AUTO_NODES),
            ctx("solver", "quadrature_kind"),
        )
        nodes_value = solver["quadrature_nodes"]
        if nodes_value == "auto":
            nodes = _AUTO_NODES[kind]
        else:
            nodes = _parse_int(nodes_value, ctx("solver", "quadrature_nodes"))
            if nodes < 2:
                raise ConfigError(f"{ctx('solver', 'quadrature_nodes')}: need >= 2 nodes")
        fp_max_iter = _parse_int(solver["fp_max_iter"], ctx("solver", "fp_max_iter"))

        # ---- output
        out = resolved["output"]
        config = SimulationConfig(
            line_data=line_data,
            line_data_sha256=sha,
            scheme=scheme,
            vapor=vapor_params,
            profile=profile,
            cavity=cavity_params,
            q_interpretation=interpretation,
            control_field=control_field,
            p_control=powers["p_control_W"],
            p_signal=powers["p_signal_W"],
            p_eit=powers["p_eit_W"],
            control_on=_parse_bool(fields_block["control_on"], ctx("fields", "control_on")),
            delta_c=fget("fields", "delta_c_rad_s"),
            eit_beam_diameter=fget("fields", "eit_beam_diameter_m"),
            sweep_bounds=bounds,
            span_kappas=span_kappas,
            n_points=n_points,
            quadrature_kind=kind,
            quadrature_nodes=nodes,
            quadrature_span_widths=fget("solver", "quadrature_span_widths"),
            beta=fget("solver", "beta"),
            fp_tol=fget("solver", "fp_tol"),
            fp_max_iter=fp_max_iter,
            rabi_floor_frac=fget("solver", "rabi_floor_frac"),
            output_dir=out["directory"],
            figures=_parse_bool(out["figures"], ctx("output", "figures")),
            figure_dpi=_parse_int(out["figure_dpi"], ctx("output", "figure_dpi")),
            resolved=resolved,
        )
    except ConfigError:
        raise
    except EitSwitchError as exc:
        # invariant violations from the embedded types, with file context
        raise ConfigError(f"{label}: {exc}") from exc

    # fail now, not mid-run, if the solver knobs are outside their domains
    try:
        config.build_quadrature()
        if not (0.0 < config.beta <= 1.0):
            raise ConfigError(f"{label}: [solver] beta must be in (0, 1]")
        if config.fp_tol <= 0:
            raise ConfigError(f"{label}: [solver] fp_tol must be positive")
        if config.fp_max_iter < 1:
            raise ConfigError(f"{label}: [solver] fp_max_iter must be >= 1")
        if config.rabi_floor_frac < 0:
            raise ConfigError(f"{label}: [solver] rabi_floor_frac must be >= 0")
        if config.eit_beam_diameter <= 0:
            raise ConfigError(f"{label}: [fields] eit_beam_diameter_m must be positive")
    except ConfigError:
        raise
    except EitSwitchError as exc:
        raise ConfigError(f"{label}: {exc}") from exc
    return config


def _make_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str  # unit suffixes are case sensitive
    return parser


def parse_config(path) -> SimulationConfig:
    """Read, validate and resolve a config file."""
    label = str(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"{label}: cannot read config file: {exc}") from exc
    parser = _make_parser()
    try:
        parser.read_string(text, source=label)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    lines = text.splitlines()
    _check_known(parser, label, lines)
    resolved = _resolve_strings(parser, label, lines)
    return _build(resolved, label, lines, os.path.dirname(os.path.abspath(label)))


def from_resolved(resolved: dict, label: str = "<manifest>") -> SimulationConfig:
    """Rebuild a configuration from a manifest's resolved-key block."""
    parser = _make_parser()
    try:
        for section, block in resolved.items():
            parser.add_section(section)
            for key, value in block.items():
                parser.set(section, key, str(value))
    except (TypeError, AttributeError, configparser.Error) as exc:
        raise ConfigError(f"{label}: malformed resolved-config block: {exc}") from exc
    _check_known(parser, label, None)
    rebuilt = _resolve_strings(parser, label, None)
    return _build(rebuilt, label, None, os.getcwd())
