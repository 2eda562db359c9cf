import pathlib
import subprocess
import sys

GOLDEN = pathlib.Path(__file__).parent / "golden"


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "hyperns_plots.cli", *args],
                          capture_output=True, text=True)


def test_convergence_figure_end_to_end(tmp_path):
    out = tmp_path / "conv.png"
    proc = run_cli("--kind", "convergence",
                   "--in", str(GOLDEN / "sweep.csv"),
                   "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    assert "slope_state" in proc.stdout
    assert "slope_flux" in proc.stdout
    assert str(out) in proc.stdout


def test_svg_output_and_title(tmp_path):
    out = tmp_path / "e.svg"
    proc = run_cli("--kind", "entropy",
                   "--in", str(GOLDEN / "diagnostics_wave.csv"),
                   "--out", str(out), "--title", "wave run")
    assert proc.returncode == 0, proc.stderr
    assert "wave run" in out.read_text()


def test_schema_mismatch_names_columns(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,mass\n0,1\n1,1\n")
    proc = run_cli("--kind", "entropy", "--in", str(bad),
                   "--out", str(tmp_path / "x.svg"))
    assert proc.returncode == 1
    assert "eta1_total" in proc.stderr
    assert "production_cum" in proc.stderr


def test_unknown_kind_rejected(tmp_path):
    proc = run_cli("--kind", "pie", "--in", str(GOLDEN / "sweep.csv"),
                   "--out", str(tmp_path / "x.svg"))
    assert proc.returncode == 2
    assert "pie" in proc.stderr


def test_missing_file_reported(tmp_path):
    proc = run_cli("--kind", "entropy", "--in", str(tmp_path / "gone.csv"),
                   "--out", str(tmp_path / "x.svg"))
    assert proc.returncode == 1
    assert "gone.csv" in proc.stderr
