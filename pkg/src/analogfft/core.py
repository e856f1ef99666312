"""Exact complex arithmetic: DFT matrices, reference transforms and the
Cooley-Tukey / vector-radix index algebra.

Everything here is double precision and free of hardware effects; the analog
paths in :mod:`analogfft.engine` are checked against these functions.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidSizeError

# Row block for the chunked direct sum; bounds memory at ~BLOCK*N complex.
_DIRECT_BLOCK = 512


def as_signal(x, ndim: int | None = None) -> np.ndarray:
    """Validate and convert to a complex128 array.

    Plays the role of the ComplexTensor type: shape is the array shape, the
    data must be non-empty and finite.
    """
    arr = np.asarray(x, dtype=np.complex128)
    if ndim is not None and arr.ndim != ndim:
        raise InvalidSizeError(f"expected a {ndim}-D signal, got shape {arr.shape}")
    if arr.ndim == 0 or arr.size == 0:
        raise InvalidSizeError(f"signal must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("signal contains NaN or Inf")
    return arr


def _check_size(*sizes: int) -> None:
    for n in sizes:
        if int(n) != n or n < 1:
            raise InvalidSizeError(f"size must be a positive integer, got {n!r}")


def unit_roots(exponents, n: int) -> np.ndarray:
    """exp(-2j*pi*e/n) with the exponent reduced mod n and the fraction reduced.

    Reducing the fraction means equal rationals give bit-identical floats,
    e.g. omega_16^1 and omega_256^16.
    """
    e = np.mod(np.asarray(exponents, dtype=np.int64), n)
    g = np.gcd(e, n)
    num, den = e // g, n // g
    out = np.exp(-2j * np.pi * (num / den))
    # quarter turns exactly, so +-1 and +-i carry no rounding residue
    quarter = (4 * num) % den == 0
    if np.any(quarter):
        out = np.where(quarter, np.array([1, -1j, -1, 1j])[(4 * num // den) % 4], out)
    return out


def dft_matrix(n: int) -> np.ndarray:
    _check_size(n)
    idx = np.arange(n, dtype=np.int64)
    return unit_roots(np.outer(idx, idx), n)


def twiddle_matrix(n1: int, n2: int) -> np.ndarray:
    """T[m, q] = omega_{n1*n2}^(m*q), shape (n1, n2)."""
    _check_size(n1, n2)
    return unit_roots(np.outer(np.arange(n1), np.arange(n2)), n1 * n2)


def reference_dft(x) -> np.ndarray:
    """O(N^2) direct sum along the last axis.

    Slow on purpose: this is the independent oracle, so it shares no code
    with any factorised path.
    """
    x = as_signal(x)
    n = x.shape[-1]
    k = np.arange(n, dtype=np.int64)
    out = np.empty_like(x)
    for start in range(0, n, _DIRECT_BLOCK):
        rows = k[start:start + _DIRECT_BLOCK]
        w = unit_roots(np.outer(rows, k), n)
        out[..., start:start + len(rows)] = x @ w.T
    return out


def reference_dft_2d(x) -> np.ndarray:
    """X = [W_N (W_M x)^T]^T for an M x N input."""
    x = as_signal(x, ndim=2)
    m, n = x.shape
    return dft_matrix(m) @ x @ dft_matrix(n)


def inverse_dft(X) -> np.ndarray:
    """Digital inverse of a 1-D or 2-D spectrum (normalised by the size)."""
    X = as_signal(X)
    if X.ndim == 1:
        return np.conj(reference_dft(np.conj(X))) / X.shape[0]
    if X.ndim == 2:
        return np.conj(reference_dft_2d(np.conj(X))) / X.size
    raise InvalidSizeError(f"inverse_dft supports 1-D or 2-D input, got {X.ndim}-D")


# -- Cooley-Tukey index algebra ------------------------------------------------


def ct_reshape_input(x, n1: int, n2: int) -> np.ndarray:
    """x~[a, b] = x[a + n1*b]; leading batch axes are preserved."""
    _check_size(n1, n2)
    x = np.asarray(x)
    if x.shape[-1] != n1 * n2:
        raise InvalidSizeError(f"length {x.shape[-1]} != {n1}*{n2}")
    return np.swapaxes(x.reshape(*x.shape[:-1], n2, n1), -1, -2)


def ct_reshape_output(Xt) -> np.ndarray:
    """X[n2*k1 + k2] = X~[k1, k2]."""
    Xt = np.asarray(Xt)
    if Xt.ndim < 2:
        raise InvalidSizeError("expected at least a 2-D array")
    return Xt.reshape(*Xt.shape[:-2], Xt.shape[-2] * Xt.shape[-1])


def ct_fft_exact(x, n1: int, n2: int) -> np.ndarray:
    """One Cooley-Tukey decomposition in exact arithmetic.

    Stage one runs n2-point DFTs on the rows of x~, the twiddles are applied,
    then stage two runs n1-point DFTs down the columns.
    """
    xt = ct_reshape_input(as_signal(x), n1, n2)
    y = (xt @ dft_matrix(n2)) * twiddle_matrix(n1, n2)
    return ct_reshape_output(dft_matrix(n1) @ y)


# -- vector-radix index algebra ------------------------------------------------


def _check_vr(shape, p, q, r, s):
    _check_size(p, q, r, s)
    if len(shape) != 2 or shape != (p * r, q * s):
        raise InvalidSizeError(f"image shape {tuple(shape)} != ({p}*{r}, {q}*{s})")


def vr_reshape(x, p: int, q: int, r: int, s: int) -> np.ndarray:
    """4-D view x~[r_, s_, p_, q_] = x[r_ + r*p_, s_ + s*q_].

    Sub-matrix (r_, s_) is the p x q decimated grid starting at (r_, s_).
    """
    x = np.asarray(x)
    _check_vr(x.shape, p, q, r, s)
    return x.reshape(p, r, q, s).transpose(1, 3, 0, 2)


def vr_twiddle(p: int, q: int, r: int, s: int) -> np.ndarray:
    """T[r_, s_, kp, kq] = omega_M^(r_*kp) * omega_N^(s_*kq), M = p*r, N = q*s."""
    _check_size(p, q, r, s)
    tm = unit_roots(np.outer(np.arange(r), np.arange(p)), p * r)
    tn = unit_roots(np.outer(np.arange(s), np.arange(q)), q * s)
    return tm[:, None, :, None] * tn[None, :, None, :]


def vr_axis_swap(y) -> np.ndarray:
    """(r, s, p, q) -> (p, q, r, s)."""
    return np.asarray(y).transpose(2, 3, 0, 1)


def vr_reshape_output(Xt) -> np.ndarray:
    """X[p*kr + kp, q*ks + kq] = X~[kp, kq, kr, ks]."""
    Xt = np.asarray(Xt)
    p, q, r, s = Xt.shape
    return Xt.transpose(2, 0, 3, 1).reshape(r * p, s * q)


def vr_fft_exact(x, p: int, q: int, r: int, s: int) -> np.ndarray:
    xt = vr_reshape(as_signal(x, ndim=2), p, q, r, s)
    wp, wq, wr, ws = (dft_matrix(n) for n in (p, q, r, s))
    y = np.einsum("ap,rspq,bq->rsab", wp, xt, wq) * vr_twiddle(p, q, r, s)
    yt = vr_axis_swap(y)
    Xt = np.einsum("cr,pqrs,ds->pqcd", wr, yt, ws)
    return vr_reshape_output(Xt)
