"""Output rendering: fixed-format CSV, a readable metrics table, figures.

Numeric CSV cells use 17 significant digits so identical runs produce
byte-identical files on one platform; the text table is for humans and
rounds. Figures are rendered with the Agg backend and carry fixed PNG
metadata so reruns are byte-stable too.
"""

from __future__ import annotations

import hashlib
import math

SPECTRUM_HEADER = "delta_rad_s,T,D,kappa_e_rad_s,alpha_bar_per_m,fp_iterations"
METRICS_COLUMNS = (
    "scenario",
    "drop_contrast_db",
    "through_contrast_db",
    "drop_loss_db",
    "through_loss_db",
    "tau_s",
    "photons",
)
PNG_METADATA = {"Software": "eitswitch"}


def fmt17(value: float) -> str:
    return format(float(value), ".17g")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_spectrum_csv(path, spectrum) -> None:
    rows = [SPECTRUM_HEADER]
    for p in spectrum.points:
        rows.append(
            ",".join(
                (
                    fmt17(p.delta),
                    fmt17(p.T),
                    fmt17(p.D),
                    fmt17(p.kappa_e),
                    fmt17(p.alpha_bar),
                    str(int(p.fp_iterations)),
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(rows) + "\n")


def write_metrics_csv(path, results) -> None:
    rows = [",".join(METRICS_COLUMNS)]
    for r in results:
        m = r.metrics
        rows.append(
            ",".join(
                (
                    r.label,
                    fmt17(m.drop_contrast_db),
                    fmt17(m.through_contrast_db),
                    fmt17(m.drop_loss_db),
                    fmt17(m.through_loss_db),
                    fmt17(r.tau_s),
                    fmt17(r.photons),
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(rows) + "\n")


def metrics_text_table(results) -> str:
    """Fixed-width summary of the four scenario rows plus diagnostics."""
    header = (
        f"{'scenario':<20}{'drop':>10}{'through':>10}{'drop':>10}{'through':>10}"
        f"{'switch':>10}{'photons':>10}{'intensity':>12}"
    )
    units = (
        f"{'':<20}{'contrast':>10}{'contrast':>10}{'loss':>10}{'loss':>10}"
        f"{'time':>10}{'':>10}{'':>12}"
    )
    scale = (
        f"{'':<20}{'(dB)':>10}{'(dB)':>10}{'(dB)':>10}{'(dB)':>10}"
        f"{'(ps)':>10}{'':>10}{'(W/cm^2)':>12}"
    )
    lines = [header, units, scale, "-" * len(header)]
    for r in results:
        m = r.metrics
        note = " *" if m.contrast_unbounded else ""
        lines.append(
            f"{r.label:<20}"
            f"{m.drop_contrast_db:>10.2f}"
            f"{m.through_contrast_db:>10.2f}"
            f"{m.drop_loss_db:>10.3f}"
            f"{m.through_loss_db:>10.3f}"
            f"{r.tau_s * 1e12:>10.1f}"
            f"{r.photons:>10.4f}"
            f"{r.intensity_W_m2 / 1e4:>12.3f}"
            f"{note}"
        )
    if any(r.metrics.contrast_unbounded for r in results):
        lines.append("* a port transmission was exactly zero; contrast unbounded")
    return "\n".join(lines) + "\n"


def write_metrics_text(path, results) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(metrics_text_table(results))


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def render_spectrum_figure(path, label, spec_on, spec_off, dpi=150) -> None:
    """Through/drop transmissions against detuning for one scenario."""
    plt = _pyplot()
    fig, (ax_t, ax_d) = plt.subplots(1, 2, figsize=(9.0, 3.6), sharex=True)
    for spec, name, style in ((spec_on, "control on", "-"), (spec_off, "control off", "--")):
        if spec is None:
            continue
        ghz = [p.delta / (2.0 * math.pi * 1e9) for p in spec.points]
        ax_t.plot(ghz, [p.T for p in spec.points], style, label=name)
        ax_d.plot(ghz, [p.D for p in spec.points], style, label=name)
    ax_t.set_ylabel("through-port transmission")
    ax_d.set_ylabel("drop-port transmission")
    for ax in (ax_t, ax_d):
        ax.set_xlabel("signal detuning (GHz)")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="best", fontsize="small")
    fig.suptitle(label)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi, format="png", metadata=dict(PNG_METADATA))
    plt.close(fig)


def render_metrics_figure(path, results, dpi=150) -> None:
    """Bar chart of the contrast and loss columns for the scenario rows."""
    plt = _pyplot()
    fig, (ax_c, ax_l) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    labels = [r.label for r in results]
    x = range(len(results))
    width = 0.38

    def bars(ax, left, right, left_name, right_name):
        ax.bar([i - width / 2 for i in x], left, width, label=left_name)
        ax.bar([i + width / 2 for i in x], right, width, label=right_name)
        ax.set_xticks(list(x))
        ax.set_xticklabels(labels, rotation=20, ha="right", fontsize="small")
        ax.legend(fontsize="small")

    finite = lambda v: v if math.isfinite(v) else 0.0
    bars(
        ax_c,
        [finite(r.metrics.drop_contrast_db) for r in results],
        [finite(r.metrics.through_contrast_db) for r in results],
        "drop contrast",
        "through contrast",
    )
    ax_c.set_ylabel("contrast (dB)")
    bars(
        ax_l,
        [finite(r.metrics.drop_loss_db) for r in results],
        [finite(r.metrics.through_loss_db) for r in results],
        "drop loss",
        "through loss",
    )
    ax_l.set_ylabel("insertion loss (dB)")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi, format="png", metadata=dict(PNG_METADATA))
    plt.close(fig)
