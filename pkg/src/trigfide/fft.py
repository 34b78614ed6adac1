"""Iterative radix-2 FFT backing the discrete sine transforms.

The transform is implemented in-repo (Cooley-Tukey with an explicit
bit-reversal pass) rather than delegated to ``numpy.fft`` so the hot path
stays self-contained and can be pinned against a direct DFT summation.
Two renditions of the same butterfly scheme exist:

* a scalar kernel compiled with numba, used by default;
* a vectorized pure-numpy version, selected when numba is unavailable or
  when ``TRIGFIDE_NO_NUMBA=1`` is set in the environment.

Both operate on batches: the transform runs along the last axis of a 2-D
array, one row per independent signal.
"""

import os
from functools import lru_cache

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def _env_flag_disables_numba():
    return os.environ.get("TRIGFIDE_NO_NUMBA", "0") not in ("", "0")


USE_NUMBA = HAVE_NUMBA and not _env_flag_disables_numba()


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=32)
def bit_reversal_permutation(n):
    """Permutation placing index i at its bit-reversed position, length n."""
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    rev.setflags(write=False)
    return rev


@njit(cache=True)
def _fft_batch_numba(data):
    # data: (batch, n) complex128, transformed in place along axis 1.
    batch, n = data.shape
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            for r in range(batch):
                tmp = data[r, i]
                data[r, i] = data[r, j]
                data[r, j] = tmp
    length = 2
    while length <= n:
        half = length // 2
        ang = -np.pi / half
        tw = np.empty(half, np.complex128)
        for k in range(half):
            tw[k] = complex(np.cos(ang * k), np.sin(ang * k))
        for start in range(0, n, length):
            for k in range(half):
                w = tw[k]
                i1 = start + k
                i2 = i1 + half
                for r in range(batch):
                    u = data[r, i1]
                    v = data[r, i2] * w
                    data[r, i1] = u + v
                    data[r, i2] = u - v
        length *= 2


def _fft_batch_numpy(data):
    # Same butterfly scheme with the inner loops replaced by array slices.
    batch, n = data.shape
    out = data[:, bit_reversal_permutation(n)]
    length = 2
    while length <= n:
        half = length // 2
        tw = np.exp(-1j * np.pi * np.arange(half) / half)
        blocks = out.reshape(batch, n // length, length)
        even = blocks[:, :, :half].copy()
        odd = blocks[:, :, half:] * tw
        blocks[:, :, :half] = even + odd
        blocks[:, :, half:] = even - odd
        length *= 2
    return out


def fft(samples, use_numba=None):
    """Discrete Fourier transform along the last axis.

    ``X_j = sum_k x_k exp(-2*pi*i*j*k/n)``, with ``n`` a power of two.
    ``use_numba`` overrides the module default (numba kernel when available,
    numpy fallback under ``TRIGFIDE_NO_NUMBA=1``).
    """
    arr = np.asarray(samples, dtype=np.complex128)
    n = arr.shape[-1]
    if n < 2 or not is_power_of_two(n):
        raise ValueError(f"transform length {n} is not a power of two >= 2")
    flat = arr.reshape(-1, n).copy()
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        if not HAVE_NUMBA:
            raise RuntimeError("numba path requested but numba is not installed")
        _fft_batch_numba(flat)
        out = flat
    else:
        out = _fft_batch_numpy(flat)
    return out.reshape(arr.shape)


def dft_direct(samples):
    """O(n^2) reference DFT used to pin the fast path in tests."""
    arr = np.asarray(samples, dtype=np.complex128)
    n = arr.shape[-1]
    k = np.arange(n)
    kernel = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return arr @ kernel
