"""Extend, transform, restrict: boundary-free TF representations.

:func:`bound_eff_red` is the batch form. :class:`StreamState` keeps the
same representation up to date as samples arrive, recomputing only the
columns whose analysis windows reach past the previous end of the record.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .extend import ExtenderKind
from .signals import Signal
from .tfr import (
    Conceft,
    Rs,
    TfrKind,
    TfrMatrix,
    WindowSpec,
    _rs_accumulate,
    n_columns,
    reach,
    transform,
)


@dataclass(frozen=True)
class PipelineConfig:
    extender: ExtenderKind | None
    tfr: TfrKind
    window: WindowSpec
    n_fft: int
    hop: int
    L: int

    def __post_init__(self):
        if self.hop < 1:
            raise ValueError("hop must be >= 1")
        if self.n_fft < self.window.length:
            raise ValueError("window does not fit n_fft")
        if self.extender is None:
            if self.L != 0:
                raise ValueError("L must be 0 without an extender")
        elif self.L < self.window.half:
            raise ValueError(
                f"extension L={self.L} shorter than the window half-length {self.window.half}"
            )


def restrict(tfr_ext: TfrMatrix, N: int) -> TfrMatrix:
    """Keep exactly the columns centred before sample `N`."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    T = n_columns(N, tfr_ext.hop)
    if T > tfr_ext.values.shape[1]:
        raise ValueError(f"N={N} exceeds the span of the transform")
    return replace(tfr_ext, values=tfr_ext.values[:, :T], times=tfr_ext.times[:T])


def extend_signal(x: Signal, cfg: PipelineConfig) -> Signal:
    if cfg.extender is None or cfg.L == 0:
        return x
    return cfg.extender.extend(x, cfg.L)


def bound_eff_red(x: Signal, cfg: PipelineConfig) -> TfrMatrix:
    """Transform of the forward-extended signal, restricted to the record."""
    ext = extend_signal(x, cfg)
    return restrict(transform(cfg.tfr, ext, cfg.window, cfg.n_fft, cfg.hop), len(x))


class StreamState:
    """Incrementally maintained boundary-free representation.

    Holds a bounded tail of the input and the representation so far.
    Single owner: one producer calls :meth:`push` at a time.
    """

    def __init__(self, cfg: PipelineConfig, fs: float):
        self.cfg = cfg
        self.fs = float(fs)
        self.n = 0
        self.origin = 0
        self.buffer = np.zeros(0)
        F = cfg.n_fft // 2 + 1
        dtype = float if isinstance(cfg.tfr, (Rs, Conceft)) else complex
        self._values = np.zeros((F, 16), dtype=dtype)
        self._conceft_windows = (cfg.tfr.windows(cfg.window)
                                 if isinstance(cfg.tfr, Conceft) else None)
        self.last_timing = {}

    # --- sizes -------------------------------------------------------------------

    @property
    def n_cols(self):
        return n_columns(self.n, self.cfg.hop)

    def _extra_cols(self):
        return 2 * reach(self.cfg.window, self.cfg.hop) if isinstance(self.cfg.tfr, Rs) else 0

    def _first_dirty(self, n_prev):
        """First column whose window reaches sample `n_prev` or later."""
        return max(0, -(-(n_prev - self.cfg.window.half) // self.cfg.hop))

    def _keep_from(self, n):
        cfg = self.cfg
        ext_hist = cfg.extender.history(cfg.L) if cfg.extender is not None else 0
        cols_from = (self._first_dirty(n) - self._extra_cols()) * cfg.hop - cfg.window.half
        return max(0, min(n - ext_hist, cols_from))

    def required_history(self):
        """Number of trailing samples the state must retain."""
        return self.n - self._keep_from(self.n)

    @property
    def matrix(self) -> TfrMatrix:
        cfg = self.cfg
        T = self.n_cols
        return TfrMatrix(
            self._values[:, :T].copy(),
            np.arange(cfg.n_fft // 2 + 1) * self.fs / cfg.n_fft,
            np.arange(T) * cfg.hop,
            cfg.hop,
            self.fs,
        )

    def _reserve(self, T):
        if T > self._values.shape[1]:
            cap = max(T, 2 * self._values.shape[1])
            grown = np.zeros((self._values.shape[0], cap), dtype=self._values.dtype)
            grown[:, :self._values.shape[1]] = self._values
            self._values = grown

    # --- update ---------------------------------------------------------------------

    def push(self, new_samples):
        """Append samples; return ``[(column index, column values), ...]``
        for every column that was (re)computed."""
        new = np.asarray(new_samples, dtype=float).ravel()
        if new.size == 0:
            return []
        if not np.all(np.isfinite(new)):
            raise ValueError("new samples must be finite")
        cfg = self.cfg
        n_prev = self.n
        self.buffer = np.concatenate([self.buffer, new])
        self.n += new.size
        T = self.n_cols

        t0 = time.perf_counter()
        ext = extend_signal(Signal(self.buffer, self.fs), cfg).samples
        t1 = time.perf_counter()
        n_total = self.n + (ext.size - self.buffer.size)

        self._reserve(T)
        s0 = self._first_dirty(n_prev)
        if isinstance(cfg.tfr, Rs):
            r = reach(cfg.window, cfg.hop)
            c0 = max(0, s0 - r)
            src = np.arange(max(0, c0 - r), min(n_columns(n_total, cfg.hop), T + r))
            block = np.zeros((self._values.shape[0], T - c0))
            _rs_accumulate(block, c0, src, n_columns(n_total, cfg.hop), ext, self.origin,
                           n_total, cfg.window, cfg.n_fft, cfg.hop, cfg.tfr.gamma_rel,
                           cfg.tfr.causal)
        else:
            c0 = s0
            cols = np.arange(c0, T)
            if self._conceft_windows is not None:
                block, _ = cfg.tfr.columns(ext, self.origin, n_total, cols, cfg.window,
                                           cfg.n_fft, cfg.hop, _wins=self._conceft_windows)
            else:
                block, _ = cfg.tfr.columns(ext, self.origin, n_total, cols, cfg.window,
                                           cfg.n_fft, cfg.hop)
        self._values[:, c0:T] = block
        t2 = time.perf_counter()
        self.last_timing = {
            "forecast": t1 - t0,
            "columns": T - c0,
            "per_column": (t2 - t1) / max(T - c0, 1),
        }

        keep = self._keep_from(self.n)
        if keep > self.origin:
            self.buffer = self.buffer[keep - self.origin:].copy()
            self.origin = keep
        return [(c, self._values[:, c].copy()) for c in range(c0, T)]


def stream_init(x0: Signal, cfg: PipelineConfig) -> StreamState:
    """New stream state primed with `x0`; its matrix equals the batch result."""
    if cfg.extender is not None and len(x0) < cfg.extender.history(cfg.L):
        raise ValueError(
            f"need at least {cfg.extender.history(cfg.L)} samples to start the stream"
        )
    state = StreamState(cfg, x0.fs)
    state.push(x0.samples)
    return state


def stream_push(state: StreamState, new_samples):
    """Functional-style wrapper: ``(state, deltas)``."""
    deltas = state.push(new_samples)
    return state, deltas


@dataclass(frozen=True)
class TimingReport:
    feasible: bool
    min_H: int | None


def timing_budget(t_forecast, t_col, L, H, fs, h_max=4096) -> TimingReport:
    """Real-time check ``t_forecast + ceil(L/H) * t_col < H / fs``.

    ``feasible`` refers to the given `H`; ``min_H`` is the smallest hop in
    ``1..h_max`` that satisfies the inequality, or None.
    """
    def ok(h):
        return t_forecast + math.ceil(L / h) * t_col < h / fs

    min_H = next((h for h in range(1, h_max + 1) if ok(h)), None)
    return TimingReport(ok(H), min_H)
