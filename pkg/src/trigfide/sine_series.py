"""Discrete sine analysis and synthesis for odd periodic functions.

A function that is odd and ``2b``-periodic in ``x - offset`` is determined
on a uniform ``N = 2M`` point grid by its values at the ``M - 1`` interior
nodes of the half period.  The analysis step recovers the coefficients of

    f(x) = sum_{0 < j < M} a_j sin(j*pi*(x - offset)/b)

from grid samples through the radix-2 FFT in ``O(N log N)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .fft import fft, is_power_of_two


@dataclass(frozen=True)
class UniformGrid1D:
    """Uniform grid ``x_j = -b + j*lambda`` over one period, frame-local."""

    n: int
    b: float
    offset: float = 0.0

    def __post_init__(self):
        if self.n < 4 or not is_power_of_two(self.n):
            raise ValueError(f"node count {self.n} is not a power of two >= 4")
        if self.b <= 0:
            raise ValueError(f"half-period must be positive, got {self.b}")

    @property
    def spacing(self):
        return 2.0 * self.b / self.n

    @property
    def nodes(self):
        return -self.b + self.spacing * np.arange(self.n)


@dataclass(frozen=True)
class SineSeries:
    """Coefficients of an odd ``2b``-periodic interpolant in frame (offset, b)."""

    b: float
    offset: float
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    @property
    def mode_count(self):
        return self.coeffs.size + 1


def forward_sine_coeffs(samples, grid):
    """Analyze one period of samples into a :class:`SineSeries`.

    ``samples[j]`` must hold the value at ``grid.nodes[j]``; the function is
    assumed odd, so ``samples[0]`` (the node at ``-b``) is zero.  Uses the
    identity ``a_j = -(2/N) * (-1)^j * Im(FFT(samples))_j``.
    """
    y = np.asarray(samples, dtype=float)
    if y.ndim != 1 or y.shape[0] != grid.n:
        raise ValueError(f"expected {grid.n} samples, got shape {y.shape}")
    m = grid.n // 2
    spectrum = fft(y)
    j = np.arange(1, m)
    signs = np.where(j % 2 == 0, 1.0, -1.0)
    coeffs = -(2.0 / grid.n) * signs * spectrum.imag[1:m]
    return SineSeries(b=grid.b, offset=grid.offset, coeffs=coeffs)


def coeffs_from_half_samples(values):
    """Sine coefficients from samples on the half period ``[0, b]``.

    ``values`` has shape ``(..., M+1)`` with entry ``k`` sampled at
    ``offset + k*b/M``; the odd extension to the full grid is built
    internally, one transform per leading row.  Values at ``k = 0`` and
    ``k = M`` do not influence the result (the sine basis vanishes there).
    Returns an array of shape ``(..., M-1)``.
    """
    vals = np.asarray(values, dtype=float)
    m = vals.shape[-1] - 1
    if m < 2 or not is_power_of_two(m):
        raise ValueError(f"half-grid length {m + 1} must be a power of two + 1")
    flat = vals.reshape(-1, m + 1)
    y = np.empty((flat.shape[0], 2 * m))
    y[:, 0] = 0.0
    y[:, 1:m] = -flat[:, m - 1:0:-1]
    y[:, m:] = flat[:, :m]
    spectrum = fft(y)
    j = np.arange(1, m)
    signs = np.where(j % 2 == 0, 1.0, -1.0)
    coeffs = -(1.0 / m) * signs * spectrum.imag[:, 1:m]
    return coeffs.reshape(vals.shape[:-1] + (m - 1,))


def eval_sine_series(series, x):
    """Evaluate the series at scalar or array ``x`` (frame coordinates of x)."""
    xs = np.asarray(x, dtype=float)
    j = np.arange(1, series.mode_count)
    phase = np.multiply.outer(xs - series.offset, j * np.pi / series.b)
    values = np.sin(phase) @ series.coeffs
    if np.isscalar(x) or xs.ndim == 0:
        return float(values)
    return values


def sine_matrix(m):
    """Symmetric matrix ``S[j, k] = sin(pi*j*k/M)``, ``1 <= j, k < M``.

    Satisfies ``S @ S = (M/2) * I``, so ``(2/M) S`` is its own inverse.
    """
    if m < 2:
        raise ValueError(f"matrix size parameter must be >= 2, got {m}")
    jk = np.arange(1, m)
    return np.sin(np.pi * np.outer(jk, jk) / m)
