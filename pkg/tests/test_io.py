import wave

import numpy as np
import pytest

from tfextend.io import (
    read_pgm,
    read_signal,
    read_tfr_csv,
    tfr_image,
    write_mc_report_csv,
    write_signal_csv,
    write_signal_wav,
    write_tfr_csv,
    write_tfr_pgm,
)
from tfextend.signals import Signal
from tfextend.tfr import TfrMatrix, WindowSpec, stft
from tfextend.verify import McConfig, mc_moments, two_tone_spec


def grid(values, fs=8.0, hop=2):
    values = np.asarray(values)
    F, T = values.shape
    n_fft = 2 * (F - 1)
    return TfrMatrix(values, np.arange(F) * fs / n_fft, np.arange(T) * hop, hop, fs)


def test_read_csv_minimal(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("# fs=100\n1.0\n2.0")
    x = read_signal(p)
    np.testing.assert_array_equal(x.samples, [1.0, 2.0])
    assert x.fs == 100.0


def test_read_csv_example(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("# recorded signal\n# fs=250\n1.5\n\n-2\n3e-1\n")
    x = read_signal(p)
    assert x.fs == 250.0
    np.testing.assert_array_equal(x.samples, [1.5, -2.0, 0.3])
    assert read_signal(p, fs_override=10).fs == 10.0


def test_read_csv_errors(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("# fs=10\n")
    with pytest.raises(ValueError, match="no samples"):
        read_signal(empty)
    nofs = tmp_path / "n.csv"
    nofs.write_text("1\n2\n")
    with pytest.raises(ValueError, match="fs"):
        read_signal(nofs)
    assert read_signal(nofs, 3.0).fs == 3.0
    bad = tmp_path / "b.csv"
    bad.write_text("# fs=1\n1\nabc\n")
    with pytest.raises(ValueError, match=":3:"):
        read_signal(bad)
    with pytest.raises(OSError):
        read_signal(tmp_path / "missing.csv")


def test_signal_csv_round_trip_is_exact(tmp_path):
    x = Signal(np.random.default_rng(0).standard_normal(50) * 1e3, 123.456)
    write_signal_csv(x, tmp_path / "r.csv")
    y = read_signal(tmp_path / "r.csv")
    np.testing.assert_array_equal(x.samples, y.samples)
    assert y.fs == x.fs


def test_wav_round_trip(tmp_path):
    x = Signal(np.random.default_rng(1).uniform(-0.99, 0.99, 400), 8000.0)
    write_signal_wav(x, tmp_path / "a.wav")
    y = read_signal(tmp_path / "a.wav")
    assert y.fs == 8000.0
    assert np.max(np.abs(x.samples - y.samples)) <= 2.0**-15


def test_wav_must_be_mono_16_bit(tmp_path):
    p = tmp_path / "st.wav"
    with wave.open(str(p), "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(2)
        w.setframerate(100)
        w.writeframes(np.zeros(8, "<i2").tobytes())
    with pytest.raises(ValueError, match="mono"):
        read_signal(p)
    q = tmp_path / "b8.wav"
    with wave.open(str(q), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(1)
        w.setframerate(100)
        w.writeframes(bytes(8))
    with pytest.raises(ValueError, match="16-bit"):
        read_signal(q)
    junk = tmp_path / "junk.wav"
    junk.write_bytes(b"not a wav file")
    with pytest.raises(ValueError):
        read_signal(junk)


def test_tfr_csv_layout(tmp_path):
    T = grid([[1.0, -2.0], [3j, 0.5]], fs=4.0, hop=2)
    write_tfr_csv(T, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert len(lines) == 3
    assert lines[0] == "freq\\time,0,0.5"
    assert lines[1] == "0,1,2"
    assert lines[2] == "2,3,0.5"


def test_tfr_csv_read_back(tmp_path):
    x = Signal(np.random.default_rng(2).standard_normal(300), 1000.0)
    T = stft(x, WindowSpec.gaussian(20), 64, 5)
    write_tfr_csv(T, tmp_path / "s.csv")
    f, t, mag = read_tfr_csv(tmp_path / "s.csv")
    np.testing.assert_allclose(f, T.freqs, rtol=1e-8)
    np.testing.assert_allclose(t, T.times / T.fs, rtol=1e-8)
    np.testing.assert_allclose(mag, np.abs(T.values), rtol=1e-8, atol=1e-300)
    write_tfr_csv(T, tmp_path / "s2.csv")
    assert (tmp_path / "s.csv").read_bytes() == (tmp_path / "s2.csv").read_bytes()
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(ValueError):
        read_tfr_csv(tmp_path / "empty.csv")


def test_tfr_csv_rejects_nonfinite(tmp_path):
    with pytest.raises(ValueError):
        write_tfr_csv(grid([[np.nan, 1.0], [1.0, 1.0]]), tmp_path / "x.csv")


def test_image_scaling():
    assert np.all(tfr_image(grid(np.zeros((3, 4)))) == 0)
    assert np.all(tfr_image(grid(np.full((3, 4), 7.0))) == 65535)
    # -40 dB sits half-way to the -80 dB floor; row order is flipped
    img = tfr_image(grid([[1.0, 1e-2], [1e-6, 0.0]]))
    np.testing.assert_array_equal(img, [[0, 0], [65535, 32768]])
    with pytest.raises(ValueError):
        tfr_image(grid(np.ones((2, 2))), log_floor_db=0.0)


def test_pgm_round_trip(tmp_path):
    T = grid(np.random.default_rng(3).random((5, 7)))
    write_tfr_pgm(T, tmp_path / "i.pgm")
    data = (tmp_path / "i.pgm").read_bytes()
    assert data.startswith(b"P5\n7 5\n65535\n")
    assert len(data) == len(b"P5\n7 5\n65535\n") + 2 * 35
    np.testing.assert_array_equal(read_pgm(tmp_path / "i.pgm"), tfr_image(T))
    (tmp_path / "bad.pgm").write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError):
        read_pgm(tmp_path / "bad.pgm")


def test_mc_report_csv(tmp_path):
    cfg = McConfig(two_tone_spec(M=30, p1=2, p2=7), 30, 60, 200, "sigma", (1e-2,),
                   horizons=(1, 3), realizations=4)
    rep = mc_moments(cfg)
    write_mc_report_csv(rep, tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "sigma,ell,bias,variance,mse,count,failures"
    assert len(lines) == 3
    assert lines[1].split(",")[1] == "1" and float(lines[1].split(",")[3]) == rep.points[0].variance
