"""Windowed time-frequency transforms: STFT, SST, reassignment, ConceFT.

Column ``n`` of every transform is centred on sample ``n * hop``; the
signal is taken as zero outside its support. Only nonnegative
frequencies are kept, so a transform has ``n_fft // 2 + 1`` rows.

The discrete STFT is

    V[nu, n] = sum_{m=-h}^{h} x[n*hop + m] g[m] exp(-2i pi nu m / n_fft)

With this phase convention a tone at ``f0`` gives
``Im(V_dg / V_g) = 2 pi (nu / n_fft - f0 / fs)``, so the
instantaneous-frequency estimate in bins is
``nu - n_fft / (2 pi) * Im(V_dg / V_g)``. The reassigned time of an
impulse is ``t + Re(V_tg / V_g)`` samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .signals import Signal

CHUNK = 128
DEFAULT_GAMMA = 1e-4


@dataclass(frozen=True, eq=False)
class WindowSpec:
    """Sampled analysis window on ``m = -half..half``.

    ``g``, its analytic derivative ``dg`` (per sample) and ``tg = m * g``.
    """

    half: int
    g: np.ndarray
    dg: np.ndarray
    tg: np.ndarray
    kind: str
    shape: float

    @property
    def length(self):
        return 2 * self.half + 1

    @classmethod
    def gaussian(cls, half, shape=None):
        """Unit-energy Gaussian ``exp(-m^2 / (2 shape^2))``.

        `shape` defaults to ``half / 4`` so the truncation sits at four
        standard deviations.
        """
        half = int(half)
        if half < 1:
            raise ValueError("window half-length must be >= 1")
        shape = half / 4 if shape is None else float(shape)
        m = np.arange(-half, half + 1, dtype=float)
        g = np.exp(-0.5 * (m / shape) ** 2)
        g /= np.linalg.norm(g)
        return cls(half, g, -m / shape**2 * g, m * g, "gaussian", shape)

    @classmethod
    def hermite(cls, half, order, shape=None):
        """Order-`order` member of :func:`hermite_family`."""
        return hermite_family(half, order + 1, shape)[order]

    def combine(self, others, coefs):
        """Linear combination ``sum_j coefs[j] * window_j`` (complex ok)."""
        ws = [self, *others]
        g = sum(c * w.g for c, w in zip(coefs, ws))
        dg = sum(c * w.dg for c, w in zip(coefs, ws))
        tg = sum(c * w.tg for c, w in zip(coefs, ws))
        return WindowSpec(self.half, g, dg, tg, "combined", self.shape)


def hermite_family(half, J, shape=None):
    """First `J` Hermite windows, orthonormal on the sample grid.

    The Hermite functions come from the three-term recurrence
    ``h_{k+1}(u) = sqrt(2/(k+1)) u h_k(u) - sqrt(k/(k+1)) h_{k-1}(u)``
    with ``u = m / shape``, so ``h_0`` is the Gaussian window. Derivatives
    follow ``h_k' = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}``. The set is
    then re-orthonormalised on the grid (QR), applying the same transform
    to the derivatives.
    """
    if J < 1:
        raise ValueError("need at least one Hermite window")
    half = int(half)
    shape = half / 4 if shape is None else float(shape)
    m = np.arange(-half, half + 1, dtype=float)
    u = m / shape
    h = np.zeros((J + 1, m.size))
    h[0] = np.pi**-0.25 * np.exp(-0.5 * u**2)
    if J > 0:
        h[1] = np.sqrt(2.0) * u * h[0]
    for k in range(1, J):
        h[k + 1] = np.sqrt(2.0 / (k + 1)) * u * h[k] - np.sqrt(k / (k + 1)) * h[k - 1]
    dh = np.empty((J, m.size))
    for k in range(J):
        prev = h[k - 1] if k > 0 else 0.0
        dh[k] = (np.sqrt(k / 2) * prev - np.sqrt((k + 1) / 2) * h[k + 1]) / shape
    Q, R = np.linalg.qr(h[:J].T)
    sign = np.sign(np.diag(R))
    T = np.linalg.inv(R) * sign  # columns scaled so each window keeps its sign
    g = (h[:J].T @ T).T
    dg = (dh.T @ T).T
    return [
        WindowSpec(half, g[k], dg[k], m * g[k], "hermite" if k else "gaussian", shape)
        for k in range(J)
    ]


@dataclass(frozen=True, eq=False)
class TfrMatrix:
    values: np.ndarray
    freqs: np.ndarray
    times: np.ndarray
    hop: int
    fs: float
    info: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.values.shape


# Transform kinds -------------------------------------------------------------


@dataclass(frozen=True)
class Stft:
    def columns(self, s, origin, n_total, cols, window, n_fft, hop):
        specs = _spectra(s, origin, n_total, cols, hop, [window.g], n_fft)
        return specs[0].T, 0

    def compute(self, x, window, n_fft, hop):
        return stft(x, window, n_fft, hop)


@dataclass(frozen=True)
class Sst:
    gamma_rel: float = DEFAULT_GAMMA

    def __post_init__(self):
        _check_gamma(self.gamma_rel)

    def columns(self, s, origin, n_total, cols, window, n_fft, hop):
        _require_gaussian(window)
        V, Vd = _spectra(s, origin, n_total, cols, hop, [window.g, window.dg], n_fft)
        return _squeeze(V, Vd, n_fft, self.gamma_rel)

    def compute(self, x, window, n_fft, hop):
        return sst(x, window, n_fft, hop, self.gamma_rel)


@dataclass(frozen=True)
class Rs:
    gamma_rel: float = DEFAULT_GAMMA
    causal: bool = False

    def __post_init__(self):
        _check_gamma(self.gamma_rel)

    def compute(self, x, window, n_fft, hop):
        return reassignment(x, window, n_fft, hop, self.gamma_rel, self.causal)


@dataclass(frozen=True)
class Conceft:
    n_tapers: int = 2
    n_projections: int = 30
    gamma_rel: float = DEFAULT_GAMMA
    seed: int = 0

    def __post_init__(self):
        if self.n_tapers < 1 or self.n_projections < 1:
            raise ValueError("ConceFT needs J >= 1 tapers and R >= 1 projections")
        _check_gamma(self.gamma_rel)

    def projections(self):
        """`R` unit vectors drawn uniformly from the complex J-sphere."""
        rng = np.random.default_rng(self.seed)
        z = rng.standard_normal((self.n_projections, self.n_tapers, 2)) @ np.array([1.0, 1j])
        return z / np.linalg.norm(z, axis=1, keepdims=True)

    def windows(self, window):
        base = hermite_family(window.half, self.n_tapers, window.shape)
        return [base[0].combine(base[1:], u) for u in self.projections()]

    def columns(self, s, origin, n_total, cols, window, n_fft, hop, _wins=None):
        wins = self.windows(window) if _wins is None else _wins
        acc = np.zeros((n_fft // 2 + 1, len(cols)))
        dropped = 0
        for w in wins:
            V, Vd = _spectra(s, origin, n_total, cols, hop, [w.g, w.dg], n_fft)
            vals, d = _squeeze(V, Vd, n_fft, self.gamma_rel)
            acc += np.abs(vals)
            dropped += d
        return acc / len(wins), dropped

    def compute(self, x, window, n_fft, hop):
        return conceft(x, window, self.n_tapers, self.n_projections, n_fft, hop,
                       self.gamma_rel, self.seed)


TfrKind = Stft | Sst | Rs | Conceft


def _check_gamma(gamma_rel):
    if not 0 < gamma_rel < 1:
        raise ValueError("gamma_rel must lie in (0, 1)")


def _require_gaussian(window):
    if window.kind != "gaussian":
        raise ValueError("reassignment-based transforms need a Gaussian window")


def _check_args(window, n_fft, hop):
    if n_fft < window.length:
        raise ValueError(f"window of length {window.length} does not fit n_fft={n_fft}")
    if hop < 1:
        raise ValueError("hop must be >= 1")


def n_columns(n, hop):
    return -(-n // hop)


def _axes(n, n_fft, hop, fs):
    return np.arange(n_fft // 2 + 1) * fs / n_fft, np.arange(n_columns(n, hop)) * hop


# Core kernels -------------------------------------------------------------------


def _frames(s, origin, n_total, centers, half):
    """Rows ``x[c-half : c+half+1]``; zero outside ``[0, n_total)``.

    `s` holds samples ``origin .. origin + len(s) - 1`` of the signal.
    """
    idx = centers[:, None] + np.arange(-half, half + 1)[None, :]
    valid = (idx >= 0) & (idx < n_total)
    if np.any(valid & (idx < origin)):
        raise ValueError("requested samples precede the retained history")
    rel = np.clip(idx - origin, 0, max(s.size - 1, 0))
    return np.where(valid, s[rel] if s.size else 0.0, 0.0)


def _spectra(s, origin, n_total, cols, hop, windows, n_fft):
    """Windowed spectra, one ``(len(cols), n_fft//2+1)`` array per window."""
    cols = np.asarray(cols, dtype=np.int64)
    half = (windows[0].size - 1) // 2
    F = n_fft // 2 + 1
    out = [np.empty((cols.size, F), dtype=complex) for _ in windows]
    for a in range(0, cols.size, CHUNK):
        c = cols[a:a + CHUNK]
        fr = _frames(s, origin, n_total, c * hop, half)
        for w, o in zip(windows, out):
            buf = np.zeros((c.size, n_fft), dtype=np.result_type(fr, w))
            prod = fr * w
            buf[:, :half + 1] = prod[:, half:]
            if half:
                buf[:, n_fft - half:] = prod[:, :half]
            o[a:a + c.size] = (np.fft.rfft(buf, axis=1) if np.isrealobj(buf)
                               else np.fft.fft(buf, axis=1)[:, :F])
    return out


def _threshold_mask(V, gamma_rel):
    mag = np.abs(V)
    gam = gamma_rel * mag.max(axis=1, keepdims=True)
    return (mag > gam) & (mag > 0)


def _inst_freq_bins(V, Vd, n_fft, mask):
    nu = np.arange(V.shape[1], dtype=float)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask, Vd / np.where(mask, V, 1.0), 0.0)
    return nu - n_fft / (2 * np.pi) * ratio.imag


def _squeeze(V, Vd, n_fft, gamma_rel):
    """Move each over-threshold STFT coefficient to its estimated frequency.

    Returns ``(F, ncols)`` complex values and the dropped count.
    """
    ncols, F = V.shape
    mask = _threshold_mask(V, gamma_rel)
    k = np.rint(_inst_freq_bins(V, Vd, n_fft, mask))
    keep = mask & (k >= 0) & (k < F)
    col = np.broadcast_to(np.arange(ncols)[:, None], V.shape)
    flat = (col[keep] * F + k[keep].astype(np.int64))
    w = V[keep]
    re = np.bincount(flat, weights=w.real, minlength=ncols * F)
    im = np.bincount(flat, weights=w.imag, minlength=ncols * F)
    out = (re + 1j * im).reshape(ncols, F).T
    return out, int(mask.sum() - keep.sum())


def _reassign_sources(s, origin, n_total, cols, window, n_fft, hop, gamma_rel, causal):
    """Energy and target (frequency bin, column) of every source coefficient.

    Arrays are ordered by source column, then frequency bin. ``ok`` marks
    in-range targets; out-of-range mass is reported via ``mask & ~ok``.
    """
    cols = np.asarray(cols, dtype=np.int64)
    V, Vd, Vt = _spectra(s, origin, n_total, cols, hop, [window.g, window.dg, window.tg], n_fft)
    mask = _threshold_mask(V, gamma_rel)
    k = np.rint(_inst_freq_bins(V, Vd, n_fft, mask))
    with np.errstate(divide="ignore", invalid="ignore"):
        dt = np.where(mask, (Vt / np.where(mask, V, 1.0)).real, 0.0)
    if causal:
        dt = np.minimum(dt, 0.0)
    t_hat = (cols * hop)[:, None] + dt
    j = np.rint(t_hat / hop)
    F = V.shape[1]
    ok = mask & (k >= 0) & (k < F) & (np.abs(dt) <= window.half)
    return np.abs(V) ** 2, mask, ok, k, j


def _rs_accumulate(out, col0, src, n_cols_total, s, origin, n_total, window, n_fft, hop,
                   gamma_rel, causal):
    """Add reassigned energy from source columns `src` into ``out``.

    ``out`` holds target columns ``col0 .. col0 + out.shape[1] - 1``.
    Additions run in source-column order, then bin order, so any caller
    covering the same sources reproduces the same floating-point sums.
    Returns ``(accumulated, dropped)`` energy totals.
    """
    F, width = out.shape
    acc = dropped = 0.0
    src = np.asarray(src, dtype=np.int64)
    for a in range(0, src.size, CHUNK):
        E, mask, ok, k, j = _reassign_sources(s, origin, n_total, src[a:a + CHUNK], window,
                                              n_fft, hop, gamma_rel, causal)
        ok &= (j >= 0) & (j < n_cols_total)
        dropped += float(E[mask & ~ok].sum())
        sel = ok & (j >= col0) & (j < col0 + width)
        acc += float(E[sel].sum())
        np.add.at(out, (k[sel].astype(np.int64), j[sel].astype(np.int64) - col0), E[sel])
    return acc, dropped


def reach(window, hop):
    """Largest column displacement reassignment can produce."""
    return math.ceil(window.half / hop) + 1


# Public transforms -----------------------------------------------------------------


def _local_transform(kind, x, window, n_fft, hop):
    _check_args(window, n_fft, hop)
    s = x.samples
    freqs, times = _axes(s.size, n_fft, hop, x.fs)
    vals, dropped = kind.columns(s, 0, s.size, np.arange(times.size), window, n_fft, hop)
    return TfrMatrix(vals, freqs, times, hop, x.fs, {"dropped": dropped})


def stft(x: Signal, window: WindowSpec, n_fft: int, hop: int) -> TfrMatrix:
    """Complex STFT, ``n_fft//2 + 1`` rows by ``ceil(N / hop)`` columns."""
    return _local_transform(Stft(), x, window, n_fft, hop)


def sst(x: Signal, window: WindowSpec, n_fft: int, hop: int,
        gamma_rel: float = DEFAULT_GAMMA) -> TfrMatrix:
    """Synchrosqueezed STFT (complex).

    Per column, coefficients with ``|V| > gamma_rel * max|V|`` are moved
    to the bin nearest their instantaneous frequency; estimates outside
    ``[0, fs/2]`` are dropped and counted in ``info["dropped"]``.
    """
    _require_gaussian(window)
    return _local_transform(Sst(gamma_rel), x, window, n_fft, hop)


def reassignment(x: Signal, window: WindowSpec, n_fft: int, hop: int,
                 gamma_rel: float = DEFAULT_GAMMA, causal: bool = False) -> TfrMatrix:
    """Reassigned spectrogram (real energy).

    Each over-threshold ``|V|^2`` is moved in frequency as for the SST and
    in time to ``t + Re(V_tg / V_g)``. With `causal`, the time estimate is
    clamped to the source column so no energy moves into the future.
    Targets off the grid, or displaced further than the window half-length,
    are dropped; ``info`` records accumulated and dropped energy.
    """
    _require_gaussian(window)
    _check_args(window, n_fft, hop)
    s = x.samples
    freqs, times = _axes(s.size, n_fft, hop, x.fs)
    out = np.zeros((freqs.size, times.size))
    acc, dropped = _rs_accumulate(out, 0, np.arange(times.size), times.size, s, 0, s.size,
                                  window, n_fft, hop, gamma_rel, causal)
    return TfrMatrix(out, freqs, times, hop, x.fs,
                     {"accumulated": acc, "dropped_energy": dropped})


def conceft(x: Signal, window: WindowSpec, J: int = 2, R: int = 30, n_fft: int = 1024,
            hop: int = 1, gamma_rel: float = DEFAULT_GAMMA, seed: int = 0) -> TfrMatrix:
    """Average SST magnitude over `R` random complex mixtures of `J` Hermite windows.

    `window` supplies the half-length and shape of the Hermite family.
    """
    return _local_transform(Conceft(J, R, gamma_rel, seed), x, window, n_fft, hop)


def transform(kind: TfrKind, x: Signal, window: WindowSpec, n_fft: int, hop: int) -> TfrMatrix:
    return kind.compute(x, window, n_fft, hop)
