"""Shared numerical kernels.

DFT, SPD solves with a diagonal-jitter fallback, truncated-SVD
pseudo-inverse application, seeded Gaussian sampling and log-log fits.
Everything here is a pure function of its arguments.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

# Diagonal loading ladder, as multiples of trace(A)/dim.
JITTER_START = 1e-10
JITTER_MAX = 1e-4
JITTER_FACTOR = 10.0

PINV_RTOL = 1e-10


class NumericalError(RuntimeError):
    """A numerical routine could not produce a trustworthy result."""


def as_finite(x, name="x", dtype=float):
    """Return `x` as a contiguous array, rejecting NaN and Inf."""
    arr = np.ascontiguousarray(x, dtype=dtype)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def dft(x, inverse=False):
    """Discrete Fourier transform of arbitrary length.

    Forward: ``X[k] = sum_n x[n] exp(-2i pi n k / N)``; the inverse
    divides by N. Backed by numpy's pocketfft, which handles any length
    (prime lengths go through Bluestein).
    """
    arr = as_finite(x, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("dft needs a non-empty 1-D input")
    return np.fft.ifft(arr) if inverse else np.fft.fft(arr)


def solve_spd(A, b, jitter_start=JITTER_START, jitter_max=JITTER_MAX):
    """Solve ``A a = b`` for symmetric positive (semi-)definite `A`.

    A Cholesky factorisation is tried first. If it fails, or the pivots
    show `A` is singular to working precision, the system is retried with
    ``A + lam * I`` where ``lam = jitter * trace(A) / dim`` and `jitter`
    climbs from `jitter_start` by factors of ten up to `jitter_max`.

    Returns
    -------
    a : ndarray
        Solution vector.
    info : dict
        ``jitter`` (the relative loading used, 0.0 if none) and ``cond``
        (ratio of the extreme squared Cholesky pivots, a cheap condition
        estimate).
    """
    A = as_finite(A, "A")
    b = as_finite(b, "b")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if b.shape != (A.shape[0],):
        raise ValueError("b length must match A")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10 * max(scale, np.finfo(float).tiny):
        raise ValueError("A is not symmetric")

    dim = A.shape[0]
    load = np.trace(A) / dim
    jitter = 0.0
    while True:
        Aj = A if jitter == 0.0 else A + (jitter * load) * np.eye(dim)
        try:
            c, lower = scipy.linalg.cho_factor(Aj, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            c = None
        if c is not None:
            piv = np.diag(c) ** 2
            cond = piv.max() / piv.min() if piv.min() > 0 else np.inf
            if cond * np.finfo(float).eps * dim < 1.0:
                a = scipy.linalg.cho_solve((c, lower), b, check_finite=False)
                if np.all(np.isfinite(a)):
                    return a, {"jitter": jitter, "cond": float(cond)}
        jitter = jitter_start if jitter == 0.0 else jitter * JITTER_FACTOR
        if jitter > jitter_max * (1 + 1e-9) or load <= 0:
            raise NumericalError(
                f"SPD solve failed even with diagonal loading {jitter_max:g}*trace/dim"
            )


def pinv_apply(X, v, rtol=PINV_RTOL):
    """Minimum-norm least-squares solution ``X^+ v`` via a thin SVD.

    Singular values below ``rtol * s_max`` are treated as zero.

    Returns
    -------
    a : ndarray, length ``X.shape[1]``
    info : dict
        ``rank`` and ``cond`` (``s_max / s_min`` over kept values).
    """
    X = as_finite(X, "X")
    v = as_finite(v, "v")
    if X.ndim != 2 or v.shape != (X.shape[0],):
        raise ValueError(f"v length {v.shape} does not match X rows {X.shape[0]}")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(X.shape[1]), {"rank": 0, "cond": np.inf}
    keep = s >= rtol * s[0]
    coef = (U[:, keep].T @ v) / s[keep]
    return Vt[keep].T @ coef, {"rank": int(keep.sum()), "cond": float(s[0] / s[keep][-1])}


def gaussian_noise(n, sigma, seed):
    """i.i.d. N(0, sigma^2) samples, bit-reproducible per seed.

    Uniforms come from numpy's PCG64 bit generator seeded with the 64-bit
    `seed`; pairs are mapped to normals with the Box-Muller transform
    ``r = sqrt(-2 ln(1 - u1))``, ``(r cos 2 pi u2, r sin 2 pi u2)``,
    interleaved.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0 or sigma == 0:
        return np.zeros(n)
    rng = np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    m = (n + 1) // 2
    u = rng.random((m, 2))
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    z = np.empty((m, 2))
    z[:, 0] = r * np.cos(theta)
    z[:, 1] = r * np.sin(theta)
    return sigma * z.reshape(-1)[:n]


def derive_seed(base, *indices):
    """Derive an independent 64-bit seed from a base seed and indices.

    Order-free: the seed of realization ``(i, j)`` never depends on how
    many draws happened before it.
    """
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFFFFFFFFFF, *map(int, indices)])
    return int(ss.generate_state(1, np.uint64)[0])


def loglog_slope(xs, ys):
    """Least-squares line through ``(log10 xs, log10 ys)``.

    Returns ``(slope, intercept, r2)``.
    """
    xs = as_finite(xs, "xs")
    ys = as_finite(ys, "ys")
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
        raise ValueError("need two equal-length vectors with at least 2 points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs strictly positive data")
    lx, ly = np.log10(xs), np.log10(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)
