"""Image container formats and the command-line interface."""
import numpy as np
import pytest

from ringbf.errors import FormatError, RangeError
from ringbf.filter import Image
from ringbf.io_cli import cli_dispatch, read_image, write_image


def _img(rows):
    return Image.from_values(np.array(rows, dtype=np.int16))


# --- raw format -------------------------------------------------------------


def test_raw_roundtrip_and_exact_bytes(tmp_path):
    img = _img([[-100, 0], [300, 1000]])
    path = tmp_path / "img.raw"
    write_image(path, img)
    assert path.read_bytes() == bytes(
        [0x9C, 0xFF, 0x00, 0x00, 0x2C, 0x01, 0xE8, 0x03]
    )
    assert (tmp_path / "img.meta").read_text() == "width=2\nheight=2\n"
    back = read_image(path)
    assert np.array_equal(back.values(), img.values())


def test_raw_missing_sidecar_names_it(tmp_path):
    path = tmp_path / "img.raw"
    path.write_bytes(b"\x00\x00")
    with pytest.raises(FormatError, match="img.meta"):
        read_image(path)


def test_raw_meta_errors(tmp_path):
    path = tmp_path / "img.raw"
    meta = tmp_path / "img.meta"
    path.write_bytes(b"\x00" * 8)
    for text in (
        "width=2\n",  # height missing
        "width=2\nheight=2\nwidth=2\n",  # duplicate
        "width=0\nheight=4\n",  # non-positive
        "width=2 height=2\n",  # malformed line
        "width=two\nheight=2\n",  # non-integer
    ):
        meta.write_text(text)
        with pytest.raises(FormatError):
            read_image(path)
    meta.write_text("# comment line\nwidth=2\nheight=2\n")
    assert read_image(path).width == 2


def test_raw_data_size_mismatch(tmp_path):
    path = tmp_path / "img.raw"
    (tmp_path / "img.meta").write_text("width=3\nheight=2\n")
    path.write_bytes(b"\x00" * 8)  # needs 12
    with pytest.raises(FormatError):
        read_image(path)


# --- 16-bit PGM -------------------------------------------------------------


def test_pgm_roundtrip_and_layout(tmp_path):
    img = _img([[0, 1], [32767, 513]])
    path = tmp_path / "img.pgm"
    write_image(path, img)
    data = path.read_bytes()
    assert data.startswith(b"P5\n2 2\n65535\n")
    body = data[len(b"P5\n2 2\n65535\n"):]
    assert body == b"\x00\x00\x00\x01\x7f\xff\x02\x01"  # big-endian samples
    assert np.array_equal(read_image(path).values(), img.values())


def test_pgm_negative_values_are_rejected_on_write(tmp_path):
    with pytest.raises(RangeError, match="raw"):
        write_image(tmp_path / "img.pgm", _img([[-1]]))


def test_pgm_header_comments(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P5 # magic\n# a comment line\n2 1 # size\n65535\n\x00\x05\x00\x07")
    assert read_image(path).values().tolist() == [[5, 7]]


def test_pgm_errors(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P6\n2 2\n65535\n" + b"\x00" * 8)
    with pytest.raises(FormatError):
        read_image(path)
    path.write_bytes(b"P5\n2 2\n255\n" + b"\x00" * 8)
    with pytest.raises(FormatError, match="offset"):
        read_image(path)
    path.write_bytes(b"P5\n2 2\n65535\n" + b"\x00" * 7)  # truncated body
    with pytest.raises(FormatError):
        read_image(path)
    path.write_bytes(b"P5\n2 2\n65535\n" + b"\x00" * 10)  # trailing junk
    with pytest.raises(FormatError):
        read_image(path)


def test_pgm_sample_above_int16_range_reports_offset(tmp_path):
    path = tmp_path / "img.pgm"
    header = b"P5\n2 1\n65535\n"
    path.write_bytes(header + b"\x00\x01\x80\x00")  # second sample = 32768
    with pytest.raises(FormatError, match=f"offset {len(header) + 2}"):
        read_image(path)


def test_unsupported_extension(tmp_path):
    with pytest.raises(ValueError):
        write_image(tmp_path / "img.png", _img([[1]]))
    (tmp_path / "img.txt").write_text("x")
    with pytest.raises(ValueError):
        read_image(tmp_path / "img.txt")


# --- command-line interface -------------------------------------------------


def test_cli_help_exits_zero(capsys):
    assert cli_dispatch(["--help"]) == 0
    assert "filter" in capsys.readouterr().out


def test_cli_filter_constant_image_is_fixed_point(tmp_path):
    inp, out = tmp_path / "a.raw", tmp_path / "b.raw"
    write_image(inp, _img([[100] * 8] * 8))
    rc = cli_dispatch(
        ["filter", "--in", str(inp), "--out", str(out), "--v", "frac",
         "--t", "0.02", "--n", "3"]
    )
    assert rc == 0
    assert np.array_equal(read_image(out).values(), read_image(inp).values())


def test_cli_filter_accepts_negative_gate_and_pgm_output(tmp_path):
    inp, out = tmp_path / "a.raw", tmp_path / "b.pgm"
    write_image(inp, _img([[50, 60], [70, 80]]))
    rc = cli_dispatch(
        ["filter", "--in", str(inp), "--out", str(out), "--v", "frac",
         "--t", "0.02", "--n", "1", "--gate", "-100:300", "--iterate", "2"]
    )
    assert rc == 0
    assert read_image(out).values().shape == (2, 2)


def test_cli_filter_runs_are_reproducible(tmp_path):
    inp = tmp_path / "in.raw"
    rc = cli_dispatch(
        ["phantom", "--densities", "0,120", "--sigma", "25", "--size", "24x16",
         "--seed", "5", "--out", str(inp)]
    )
    assert rc == 0
    img = read_image(inp)
    assert (img.height, img.width) == (16, 24)
    outs = []
    for name in ("o1.raw", "o2.raw"):
        out = tmp_path / name
        assert cli_dispatch(
            ["filter", "--in", str(inp), "--out", str(out), "--v", "exp",
             "--t", "0.05", "--n", "2", "--w", "gauss:2.0", "--border", "skip"]
        ) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_cli_curve_writes_deterministic_csv(tmp_path):
    csvs = []
    for name in ("c1.csv", "c2.csv"):
        out = tmp_path / name
        rc = cli_dispatch(
            ["curve", "--v", "frac", "--n", "3", "--dist", "normal",
             "--t-grid", "0.5:1.5:0.5", "--trials", "2000", "--out", str(out)]
        )
        assert rc == 0
        csvs.append(out.read_text())
    assert csvs[0] == csvs[1]
    lines = csvs[0].splitlines()
    assert lines[0] == "t,k_hat,std_err,trials"
    assert len(lines) == 4
    assert all(line.endswith(",2000") for line in lines[1:])
    ks = [float(line.split(",")[1]) for line in lines[1:]]
    assert all(0.0 < k < 1.0 for k in ks)


def test_cli_threshold_solves_near_reference(capsys):
    rc = cli_dispatch(
        ["threshold", "--v", "frac", "--n", "3", "--dist", "normal",
         "--trials", "20000", "--bracket", "1.2:1.6", "--tol", "2e-3"]
    )
    assert rc == 0
    t0 = float(capsys.readouterr().out.strip())
    assert 1.2 < t0 < 1.6
    assert t0 == pytest.approx(1.40, rel=0.10)


def test_cli_plan_prints_settings(capsys):
    rc = cli_dispatch(["plan", "--dose-fraction", "1.0"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out == (
        f"x=1\nsigma=63.83\nt0=1.4\nt={1.4 / 63.83:.9g}\n"
    )


def test_cli_plan_reads_model_file(tmp_path, capsys):
    model = tmp_path / "model.txt"
    model.write_text("0.0 0.0 50.0 0.0 2.0\n")  # constant sigma = 50
    rc = cli_dispatch(
        ["plan", "--dose-fraction", "2.0", "--model", str(model), "--t0", "1.0"]
    )
    assert rc == 0
    assert "sigma=50\n" in capsys.readouterr().out


def test_cli_plan_apply_filters_image(tmp_path, capsys):
    inp, out = tmp_path / "in.raw", tmp_path / "out.raw"
    assert cli_dispatch(
        ["phantom", "--densities", "100", "--sigma", "30", "--size", "32x32",
         "--seed", "2", "--out", str(inp)]
    ) == 0
    rc = cli_dispatch(
        ["plan", "--dose-fraction", "0.5", "--apply", "--in", str(inp),
         "--out", str(out)]
    )
    assert rc == 0
    capsys.readouterr()
    before = read_image(inp).values()[4:-4, 4:-4].astype(np.float64)
    after = read_image(out).values()[4:-4, 4:-4].astype(np.float64)
    assert after.std() < before.std()


def test_cli_calibrate_end_to_end(tmp_path):
    low, high = tmp_path / "low.raw", tmp_path / "high.raw"
    assert cli_dispatch(
        ["phantom", "--densities", "80,160", "--sigma", "40", "--size", "32x32",
         "--seed", "3", "--out", str(low)]
    ) == 0
    assert cli_dispatch(
        ["phantom", "--densities", "80,160", "--sigma", "15", "--size", "32x32",
         "--seed", "4", "--out", str(high)]
    ) == 0
    report = tmp_path / "report.txt"
    rc = cli_dispatch(
        ["calibrate", "--high", str(high), "--low", str(low), "--degree", "2",
         "--out", str(report)]
    )
    assert rc == 0
    text = report.read_text()
    assert text.startswith("t,ratio\n")
    assert "degree,c0,c1,c2,r_squared" in text
    assert "term,coefficient,std_error,t_stat,p_value" in text


def test_cli_usage_errors_exit_one(tmp_path, capsys):
    inp = tmp_path / "in.raw"
    write_image(inp, _img([[1]]))
    assert cli_dispatch(["filter", "--in", str(inp), "--out", "o.raw",
                         "--v", "nope", "--t", "1", "--n", "3"]) == 1
    assert cli_dispatch(["nonsense"]) == 1
    assert cli_dispatch([]) == 1
    assert cli_dispatch(["filter", "--in", str(inp), "--out", str(inp),
                         "--v", "frac", "--t", "1", "--n", "3",
                         "--gate", "abc"]) == 1
    assert cli_dispatch(["plan", "--dose-fraction", "1.0", "--apply"]) == 1
    assert cli_dispatch(["plan", "--dose-fraction", "1.0",
                         "--in", "x.raw"]) == 1
    capsys.readouterr()


def test_cli_bad_file_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n2 2\n255\n" + b"\x00" * 8)
    rc = cli_dispatch(["filter", "--in", str(bad), "--out", str(tmp_path / "o.raw"),
                       "--v", "frac", "--t", "1", "--n", "3"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_cli_numerical_failure_exits_three(capsys):
    rc = cli_dispatch(
        ["threshold", "--v", "frac", "--n", "3", "--dist", "normal",
         "--trials", "2000", "--bracket", "5:10"]
    )
    assert rc == 3
    assert "error:" in capsys.readouterr().err


def test_cli_missing_input_file_exits_one(tmp_path, capsys):
    rc = cli_dispatch(["filter", "--in", str(tmp_path / "absent.raw"),
                       "--out", str(tmp_path / "o.raw"),
                       "--v", "frac", "--t", "1", "--n", "3"])
    assert rc == 1
    capsys.readouterr()
