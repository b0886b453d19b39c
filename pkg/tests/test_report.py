"""Delimited output, text table and figure rendering."""

import hashlib
import math
from types import SimpleNamespace

import pytest

from eitswitch import report
from eitswitch.transistor import Spectrum, SpectrumPoint, SwitchMetrics

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def small_spectrum(scale=1.0):
    return Spectrum(
        points=(
            SpectrumPoint(-1.0, 0.25 * scale, 0.5, 100.0, 42.0, 3),
            SpectrumPoint(0.0, 0.0625 * scale, 0.875, 250.0, 84.5, 7),
            SpectrumPoint(1.0, 0.25 * scale, 0.5, 100.0, 42.0, 3),
        )
    )


def fake_row(label="795-control-equal", unbounded=False):
    metrics = SwitchMetrics(
        drop_contrast_db=35.25,
        through_contrast_db=31.5,
        drop_loss_db=0.125,
        through_loss_db=0.0625,
        evaluated_at=0.0,
        contrast_unbounded=unbounded,
    )
    return SimpleNamespace(
        label=label,
        metrics=metrics,
        tau_s=4e-10,
        photons=0.03125,
        intensity_W_m2=5.25e4,
    )


@pytest.mark.parametrize(
    "value",
    [0.0, 1.0, -1.0, math.pi, 0.1, 1e-300, 6.35e3, -2.999999999999999e8],
)
def test_fmt17_round_trips_exactly(value):
    assert float(report.fmt17(value)) == value


def test_spectrum_csv_golden(tmp_path):
    path = tmp_path / "spectrum.csv"
    report.write_spectrum_csv(path, small_spectrum())
    expected = (
        "delta_rad_s,T,D,kappa_e_rad_s,alpha_bar_per_m,fp_iterations\n"
        "-1,0.25,0.5,100,42,3\n"
        "0,0.0625,0.875,250,84.5,7\n"
        "1,0.25,0.5,100,42,3\n"
    )
    assert path.read_text(encoding="utf-8") == expected


def test_metrics_csv_header_and_rows(tmp_path):
    path = tmp_path / "metrics.csv"
    report.write_metrics_csv(path, [fake_row(), fake_row(label="780-control-weak")])
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(report.METRICS_COLUMNS)
    assert len(lines) == 3
    assert lines[1] == "795-control-equal,35.25,31.5,0.125,0.0625,4.0000000000000001e-10,0.03125"
    assert lines[2].startswith("780-control-weak,")


def test_metrics_text_table_layout():
    table = report.metrics_text_table([fake_row()])
    lines = table.splitlines()
    assert lines[0].startswith("scenario")
    assert "(dB)" in lines[2] and "(W/cm^2)" in lines[2]
    row = lines[4]
    assert row.startswith("795-control-equal")
    assert "35.25" in row and "31.50" in row
    assert "0.125" in row and "0.062" in row
    assert "400.0" in row          # tau rendered in ps
    assert "0.0312" in row
    assert "5.250" in row          # intensity in W/cm^2
    assert "*" not in table


def test_metrics_text_table_flags_unbounded_contrast():
    table = report.metrics_text_table([fake_row(unbounded=True)])
    assert "*" in table
    assert "contrast unbounded" in table.splitlines()[-1]


def test_sha256_file_matches_hashlib(tmp_path):
    path = tmp_path / "blob.bin"
    payload = b"\x00\x01abc" * 40000   # spans multiple read chunks
    path.write_bytes(payload)
    assert report.sha256_file(path) == hashlib.sha256(payload).hexdigest()


def test_spectrum_figure_is_png_and_rerender_stable(tmp_path):
    on = small_spectrum()
    off = small_spectrum(scale=0.5)
    first = tmp_path / "a.png"
    second = tmp_path / "b.png"
    report.render_spectrum_figure(first, "795-control-equal", on, off)
    report.render_spectrum_figure(second, "795-control-equal", on, off)
    blob = first.read_bytes()
    assert blob[:8] == PNG_SIGNATURE
    assert blob == second.read_bytes()


def test_metrics_figure_is_png_and_rerender_stable(tmp_path):
    rows = [fake_row(), fake_row(label="780-control-equal")]
    first = tmp_path / "a.png"
    second = tmp_path / "b.png"
    report.render_metrics_figure(first, rows)
    report.render_metrics_figure(second, rows)
    blob = first.read_bytes()
    assert blob[:8] == PNG_SIGNATURE
    assert blob == second.read_bytes()
