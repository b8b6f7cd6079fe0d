"""Forecast error and optimal-transport comparison of TF representations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_finite
from .tfr import TfrMatrix


@dataclass(frozen=True, eq=False)
class SpectralPdf:
    probs: np.ndarray
    bin_width: float
    degenerate: bool = False


def mse_xp(forecast, truth):
    """Mean squared difference over the forecast horizon."""
    f = as_finite(forecast, "forecast")
    t = as_finite(truth, "truth")
    if f.shape != t.shape or f.size == 0:
        raise ValueError("forecast and truth must be non-empty and equally long")
    return float(np.mean((f - t) ** 2))


def _bin_width(tfr):
    return float(tfr.freqs[1] - tfr.freqs[0]) if tfr.freqs.size > 1 else 1.0


def column_pdf(tfr: TfrMatrix, t: int) -> SpectralPdf:
    """``|Q(., t)|^2`` normalised to unit sum; all-zero columns are degenerate."""
    p = np.abs(tfr.values[:, t]) ** 2
    total = math.fsum(p)
    if total == 0:
        return SpectralPdf(p, _bin_width(tfr), True)
    return SpectralPdf(p / total, _bin_width(tfr))


def _column_pdfs(tfr):
    p = np.abs(tfr.values) ** 2
    total = p.sum(axis=0)
    degenerate = total == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(degenerate, 0.0, p / np.where(degenerate, 1.0, total))
    return p, degenerate


def ot_distance(p: SpectralPdf, q: SpectralPdf) -> float:
    """1-D Wasserstein-1 distance: ``dxi * sum_k |P(k) - Q(k)|`` over CDFs."""
    if p.probs.shape != q.probs.shape or not math.isclose(p.bin_width, q.bin_width):
        raise ValueError("pdfs live on different frequency grids")
    return p.bin_width * math.fsum(np.abs(np.cumsum(p.probs) - np.cumsum(q.probs)))


def ot_columns(Q: TfrMatrix, R: TfrMatrix):
    """Per-column OT distances between two same-grid representations.

    Returns ``(d, valid)``; columns degenerate in either input are invalid.
    """
    if Q.values.shape != R.values.shape:
        raise ValueError("representations must share their grid")
    pq, dq = _column_pdfs(Q)
    pr, dr = _column_pdfs(R)
    d = _bin_width(Q) * np.abs(np.cumsum(pq, axis=0) - np.cumsum(pr, axis=0)).sum(axis=0)
    return d, ~(dq | dr)


def perf_index_D(Q: TfrMatrix, F: TfrMatrix, F_opt: TfrMatrix) -> float:
    """Boundary-effect index ``sum_t d_t(Q, F_opt) / sum_t d_t(F, F_opt)``.

    Values below one mean `Q` is closer to the oracle than the untreated
    `F`. Columns degenerate in any of the three inputs are left out of
    both sums.
    """
    dq, vq = ot_columns(Q, F_opt)
    df, vf = ot_columns(F, F_opt)
    valid = vq & vf
    den = math.fsum(df[valid])
    if den == 0:
        raise ValueError("no boundary effect to reduce: F equals F_opt on every column")
    return math.fsum(dq[valid]) / den
