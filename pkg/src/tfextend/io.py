"""Reading signals and writing signals, representations and reports.

Signal CSV: one sample per line, ``#`` lines are comments, and a comment
of the form ``# fs=<Hz>`` sets the sampling rate. WAV: 16-bit PCM mono.
"""
from __future__ import annotations

import csv
import re
import wave
from pathlib import Path

import numpy as np

from .signals import Signal
from .tfr import TfrMatrix

_FS_RE = re.compile(r"^#\s*fs\s*=\s*([^\s]+)\s*$")
LOG_FLOOR_DB = -80.0


def read_signal(path, fs_override=None) -> Signal:
    """Load a CSV or WAV signal; the format follows the file suffix."""
    path = Path(path)
    if path.suffix.lower() == ".wav":
        samples, fs = _read_wav(path)
    else:
        samples, fs = _read_csv_signal(path)
    if fs_override is not None:
        fs = float(fs_override)
    if fs is None:
        raise ValueError(f"{path}: no '# fs=<Hz>' header and no sampling rate given")
    if samples.size == 0:
        raise ValueError(f"{path}: no samples")
    return Signal(samples, fs)


def _read_csv_signal(path):
    fs = None
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _FS_RE.match(line)
                if m:
                    fs = float(m.group(1))
                continue
            try:
                values.append(float(line.split(",")[0]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    return np.array(values, dtype=float), fs


def _read_wav(path):
    try:
        with wave.open(str(path), "rb") as w:
            if w.getnchannels() != 1:
                raise ValueError(f"{path}: expected mono audio, got {w.getnchannels()} channels")
            if w.getsampwidth() != 2:
                raise ValueError(f"{path}: expected 16-bit PCM")
            fs = float(w.getframerate())
            raw = w.readframes(w.getnframes())
    except wave.Error as exc:
        raise ValueError(f"{path}: {exc}") from None
    return np.frombuffer(raw, dtype="<i2").astype(float) / 32768.0, fs


def write_signal_csv(x: Signal, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# fs={x.fs:.17g}\n")
        for v in x.samples:
            fh.write(f"{v:.17g}\n")


def write_signal_wav(x: Signal, path):
    """16-bit PCM mono; samples are clipped to [-1, 1)."""
    q = np.clip(np.rint(x.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(round(x.fs)))
        w.writeframes(q.tobytes())


def write_tfr_csv(tfr: TfrMatrix, path):
    """Magnitudes on a grid: first row the times (s), first column the
    frequencies (Hz), 9 significant digits."""
    mag = np.abs(tfr.values)
    if not np.all(np.isfinite(mag)):
        raise ValueError("representation has non-finite entries")
    times = tfr.times / tfr.fs
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["freq\\time"] + [f"{t:.9g}" for t in times]) + "\n")
        for f, row in zip(tfr.freqs, mag):
            fh.write(",".join([f"{f:.9g}"] + [f"{v:.9g}" for v in row]) + "\n")


def read_tfr_csv(path):
    """``(freqs, times, magnitudes)`` from a file written by :func:`write_tfr_csv`."""
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    times = np.array(rows[0][1:], dtype=float)
    body = np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(times) + 1)
    return body[:, 0], times, body[:, 1:]


def tfr_image(tfr: TfrMatrix, log_floor_db=LOG_FLOOR_DB):
    """16-bit grey levels: dB relative to the maximum, clipped at the floor.

    Row 0 is the highest frequency, so frequency increases upward.
    """
    if not log_floor_db < 0:
        raise ValueError("log_floor_db must be negative")
    mag = np.abs(tfr.values)
    if not np.all(np.isfinite(mag)):
        raise ValueError("representation has non-finite entries")
    peak = mag.max(initial=0.0)
    if peak == 0:
        return np.zeros(mag.shape, dtype=np.uint16)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    level = (np.maximum(db, log_floor_db) - log_floor_db) / -log_floor_db
    return np.rint(level * 65535).astype(np.uint16)[::-1]


def write_tfr_pgm(tfr: TfrMatrix, path, log_floor_db=LOG_FLOOR_DB):
    """Binary 16-bit PGM (P5, big-endian) of :func:`tfr_image`."""
    img = tfr_image(tfr, log_floor_db)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(img.astype(">u2").tobytes())


def read_pgm(path):
    """Inverse of :func:`write_tfr_pgm` (for tests and inspection)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2").reshape(h, w).astype(np.uint16)


def write_rows_csv(path, header, rows):
    """Plain CSV table; floats use 17 significant digits."""
    def fmt(v):
        return f"{v:.17g}" if isinstance(v, float) else str(v)

    with open(path, "w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(v) for v in row])


def write_mc_report_csv(report, path):
    """One row per sweep point and horizon."""
    sweep = report.config.sweep
    write_rows_csv(
        path,
        [sweep, "ell", "bias", "variance", "mse", "count", "failures"],
        [(p.value, p.ell, p.bias, p.variance, p.mse, p.count, p.failures)
         for p in report.points],
    )
