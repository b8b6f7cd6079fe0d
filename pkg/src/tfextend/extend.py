"""Forward signal extension.

Three extenders share one interface, ``kind.extend(x, L) -> Signal``:

- :class:`SigExt`: least-squares fit of a linear one-step map between
  overlapping lag vectors. Only the last row ``alpha`` of the fitted map
  is needed; the other rows are a unit shift, so forecasting is an
  order-M autoregressive recursion.
- :class:`Symmetric`: mirror the record about its last sample.
- :class:`Dmd`: rank-truncated dynamic mode decomposition on the same lag
  matrices (linear observables only).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .numerics import NumericalError, as_finite, pinv_apply, solve_spd
from .signals import Signal

Solver = Literal["normal", "svd"]

DIVERGENCE_FACTOR = 1e3
DMD_RANK_RTOL = 1e-12


class ForecastDivergenceWarning(RuntimeWarning):
    """The forecast left the plausible range and was held constant."""


@dataclass(frozen=True, eq=False)
class LagMatrices:
    X: np.ndarray
    Y: np.ndarray

    @property
    def M(self):
        return self.X.shape[0]

    @property
    def K(self):
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class ForecastModel:
    alpha: np.ndarray
    M: int
    K: int
    solver: str
    cond: float
    jitter: float = 0.0

    def companion(self):
        """Full ``M x M`` companion matrix (for inspection and tests)."""
        A = np.eye(self.M, k=1)
        A[-1] = self.alpha
        return A


def _check_sizes(N, M, K):
    if M < 1 or K < 1:
        raise ValueError("M and K must be positive")
    if M > K:
        raise ValueError(f"need M <= K, got M={M}, K={K}")
    if K + M > N:
        raise ValueError(f"need K + M <= N, got K + M = {K + M} > N = {N}")


def _samples(x):
    return x.samples if isinstance(x, Signal) else as_finite(x, "x")


def build_lag_matrices(x, M, K) -> LagMatrices:
    """Lag matrices from the trailing ``K + M`` samples of `x`.

    Column ``k`` of ``X`` is ``x[N-K-M+k : N-K+k]``; ``Y`` is ``X``
    advanced by one sample, so its last column is the final M samples.
    """
    s = _samples(x)
    N = s.size
    _check_sizes(N, M, K)
    win = np.lib.stride_tricks.sliding_window_view(s[N - K - M:], M)
    return LagMatrices(np.ascontiguousarray(win[:K].T), np.ascontiguousarray(win[1:].T))


def fit_sigext(lm: LagMatrices, solver: Solver = "normal") -> ForecastModel:
    """Last row of ``Y X^T (X X^T)^{-1}``.

    ``solver="normal"`` solves the M x M normal equations by Cholesky with
    a jitter fallback; ``solver="svd"`` uses the truncated pseudo-inverse,
    which stays well defined on noiseless, rank-deficient data.
    """
    X, y = lm.X, lm.Y[-1]
    if solver == "normal":
        alpha, info = solve_spd(X @ X.T, X @ y)
        jitter = info["jitter"]
    elif solver == "svd":
        alpha, info = pinv_apply(X.T, y)
        jitter = 0.0
    else:
        raise ValueError(f"unknown solver {solver!r}")
    if not np.all(np.isfinite(alpha)):
        raise NumericalError("non-finite forecast coefficients")
    return ForecastModel(alpha, lm.M, lm.K, solver, info["cond"], jitter)


def _recurse(alpha, tail, L, limit):
    M = alpha.size
    buf = np.empty(M + L)
    buf[:M] = tail
    for t in range(L):
        v = alpha @ buf[t:t + M]
        if limit is not None and not abs(v) <= limit:
            buf[M + t:] = buf[M + t - 1]
            return buf[M:], t
        buf[M + t] = v
    return buf[M:], L


def forecast(model: ForecastModel, tail, L, limit=None):
    """Run the fitted recursion `L` steps past `tail` (the last M samples).

    If `limit` is given and a forecast value exceeds it in magnitude, the
    remaining output holds the last accepted value and a
    :class:`ForecastDivergenceWarning` is issued.
    """
    tail = as_finite(tail, "tail")
    if tail.shape != (model.M,):
        raise ValueError(f"tail must have length M={model.M}")
    if not np.all(np.isfinite(model.alpha)):
        raise NumericalError("model coefficients are not finite")
    if L < 0:
        raise ValueError("L must be nonnegative")
    out, n_ok = _recurse(model.alpha, tail, int(L), limit)
    if n_ok < L:
        warnings.warn(
            f"forecast diverged after {n_ok} of {L} samples; holding last value",
            ForecastDivergenceWarning,
            stacklevel=2,
        )
    return out


def _divergence_limit(train):
    # Scaled by the training segment only, so the guard sees exactly the
    # samples the fit saw.
    return DIVERGENCE_FACTOR * float(np.max(np.abs(train), initial=0.0))


def sig_ext(x: Signal, M, K, L, solver: Solver = "normal") -> Signal:
    """Append an L-sample forward forecast to `x`."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    s = x.samples
    _check_sizes(s.size, M, K)
    if L == 0:
        return x
    model = fit_sigext(build_lag_matrices(s, M, K), solver)
    fc = forecast(model, s[-M:], L, limit=_divergence_limit(s[-(K + M):]))
    return x.with_samples(np.concatenate([s, fc]))


def symmetric_ext(x: Signal, L) -> Signal:
    """Mirror about the last sample: ``x~[N-1+l] = x[N-1-l]``."""
    s = x.samples
    if L < 0:
        raise ValueError("L must be nonnegative")
    if L >= s.size:
        raise ValueError(f"symmetric extension needs L < N, got L={L}, N={s.size}")
    return x.with_samples(np.concatenate([s, s[s.size - 2::-1][:L]]))


def dmd_ext(x: Signal, M, K, L, rank) -> Signal:
    """Extension by rank-truncated DMD on the lag matrices.

    With ``X ~ U S V^T`` truncated to `rank`, the reduced operator is
    ``U^T Y V S^-1``; the last lag vector is propagated in reduced
    coordinates and lifted back by ``U``.
    """
    s = x.samples
    _check_sizes(s.size, M, K)
    if not 1 <= rank <= M:
        raise ValueError(f"rank must lie in [1, M={M}]")
    if L < 0:
        raise ValueError("L must be nonnegative")
    if L == 0:
        return x
    lm = build_lag_matrices(s, M, K)
    U, sv, Vt = np.linalg.svd(lm.X, full_matrices=False)
    usable = int(np.sum(sv >= DMD_RANK_RTOL * sv[0])) if sv[0] > 0 else 0
    if rank > usable:
        raise NumericalError(f"rank {rank} exceeds numerical rank of X; usable rank is {usable}")
    U, sv, Vt = U[:, :rank], sv[:rank], Vt[:rank]
    A_red = (U.T @ lm.Y @ Vt.T) / sv
    u_last = U[-1]
    b = U.T @ s[-M:]
    limit = _divergence_limit(s[-(K + M):])
    out = np.empty(L)
    for t in range(L):
        b = A_red @ b
        v = u_last @ b
        if not abs(v) <= limit:
            out[t:] = out[t - 1] if t else s[-1]
            warnings.warn(
                f"DMD forecast diverged after {t} of {L} samples; holding last value",
                ForecastDivergenceWarning,
                stacklevel=2,
            )
            break
        out[t] = v
    return x.with_samples(np.concatenate([s, out]))


def default_M(L):
    """Training-window length ``floor(1.5 L)``."""
    return int(np.floor(1.5 * L))


def default_K(M):
    """Number of lag vectors ``floor(2.5 M)``."""
    return int(np.floor(2.5 * M))


@dataclass(frozen=True)
class SigExt:
    M: int
    K: int
    solver: Solver = "normal"

    def extend(self, x: Signal, L) -> Signal:
        return sig_ext(x, self.M, self.K, L, self.solver)

    def history(self, L):
        return self.K + self.M


@dataclass(frozen=True)
class Symmetric:
    def extend(self, x: Signal, L) -> Signal:
        return symmetric_ext(x, L)

    def history(self, L):
        return L + 1


@dataclass(frozen=True)
class Dmd:
    M: int
    K: int
    rank: int

    def extend(self, x: Signal, L) -> Signal:
        return dmd_ext(x, self.M, self.K, L, self.rank)

    def history(self, L):
        return self.K + self.M


ExtenderKind = SigExt | Symmetric | Dmd


def make_extender(method, L, M=None, K=None, solver="normal", rank=None):
    """Build an extender with the default size policy for missing M, K."""
    if method == "symmetric":
        return Symmetric()
    M = default_M(L) if M is None else M
    K = default_K(M) if K is None else K
    if method == "sigext":
        return SigExt(M, K, solver)
    if method == "dmd":
        return Dmd(M, K, min(M, 20) if rank is None else rank)
    raise ValueError(f"unknown extension method {method!r}")
