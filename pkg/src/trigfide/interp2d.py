"""Tensor-product sine interpolation of two-variable functions.

The 1-D windowed construction is applied along each axis in turn: one
transform per grid column in ``x``, then one per coefficient row in ``y``
(cost ``N1*N2*log2(N1*N2)``).  The result is a coefficient matrix ``C`` with

    fhat(x, y) = sum_{j,k} C[j-1, k-1] sin(j*pi*(x-o1)/b1) sin(k*pi*(y-o2)/b2)

matching the windowed product at every tensor grid node.
"""

from dataclasses import dataclass, field

import numpy as np

from .cutoff import CutoffSpec, cutoff_eval
from .exceptions import EvaluationError, UndefinedMetricError
from .sine_series import coeffs_from_half_samples

DEFAULT_PROBE_EXPONENT = 10


@dataclass(frozen=True)
class SineSeries2D:
    """Coefficients of a function odd and periodic in each frame coordinate."""

    coeffs: np.ndarray = field(repr=False)
    b1: float
    offset1: float
    b2: float
    offset2: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))


def sine_coeffs_2d(values, sweep="xy"):
    """Raw tensor transform of half-period samples.

    ``values[j, k]`` holds the sample at ``(j*b1/M1, k*b2/M2)``; the output
    has shape ``(M1-1, M2-1)``.  ``sweep`` picks which axis is transformed
    first; the result is the same either way (the transforms commute), which
    the test-suite checks.
    """
    vals = np.asarray(values, dtype=float)
    if sweep == "xy":
        c1 = coeffs_from_half_samples(vals.T).T    # x direction, per y column
        return coeffs_from_half_samples(c1)        # y direction, per row
    if sweep == "yx":
        c1 = coeffs_from_half_samples(vals)
        return coeffs_from_half_samples(c1.T).T
    raise ValueError(f"sweep must be 'xy' or 'yx', got {sweep!r}")


def interpolate_2d(f, spec_x, spec_y, q1, q2, sweep="xy"):
    """Windowed sine interpolant of ``f(x, y)`` on the padded rectangle.

    ``f`` must broadcast over numpy arrays.  Axis ``i`` uses ``2^(qi+1)``
    grid points on its frame.
    """
    if q1 < 1 or q2 < 1:
        raise ValueError(f"resolution exponents must be >= 1, got {q1}, {q2}")
    m1, m2 = 2 ** q1, 2 ** q2
    o1, b1 = spec_x.offset, spec_x.half_period
    o2, b2 = spec_y.offset, spec_y.half_period
    x = o1 + (b1 / m1) * np.arange(m1 + 1)
    y = o2 + (b2 / m2) * np.arange(m2 + 1)
    window = np.outer(cutoff_eval(spec_x, x), cutoff_eval(spec_y, y))
    vals = window * np.asarray(f(x[:, None], y[None, :]), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        j, k = np.argwhere(bad)[0]
        raise EvaluationError(
            f"function returned a non-finite value at grid index ({j}, {k}), "
            f"(x, y) = ({x[j]!r}, {y[k]!r})",
            location=(x[j], y[k]),
        )
    coeffs = sine_coeffs_2d(vals, sweep=sweep)
    return SineSeries2D(coeffs=coeffs, b1=b1, offset1=o1, b2=b2, offset2=o2)


def eval_2d(series, x, y):
    """Evaluate at scalar ``(x, y)`` or on the tensor mesh of two 1-D arrays.

    Array inputs exploit the separable structure: one sine matrix per axis
    and two matrix products, instead of a double sum per point.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    m1, m2 = series.coeffs.shape
    jx = np.arange(1, m1 + 1) * np.pi / series.b1
    ky = np.arange(1, m2 + 1) * np.pi / series.b2
    sx = np.sin(np.outer(xs - series.offset1, jx))
    sy = np.sin(np.outer(ys - series.offset2, ky))
    grid = sx @ series.coeffs @ sy.T
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        return float(grid[0, 0])
    return grid


def error_metrics(series, f, spec_x, spec_y, q_probe=DEFAULT_PROBE_EXPONENT):
    """Normalized max errors over grid nodes and over a dense probe mesh.

    ``err_g`` uses the interpolation nodes that fall in the plateau
    rectangle, ``err_e`` a uniform mesh with ``2^q_probe + 1`` points per
    frame; both are normalized by ``max|f|`` over their point set.
    """
    m1, m2 = series.coeffs.shape[0] + 1, series.coeffs.shape[1] + 1
    if 2 ** q_probe < max(m1, m2):
        raise ValueError(
            f"probe resolution 2^{q_probe} is below the interpolation "
            f"resolution {max(m1, m2)}"
        )

    def one_metric(x, y):
        x = x[(x >= spec_x.start) & (x <= spec_x.end)]
        y = y[(y >= spec_y.start) & (y <= spec_y.end)]
        exact = np.asarray(f(x[:, None], y[None, :]), dtype=float)
        scale = np.max(np.abs(exact))
        if scale == 0.0:
            raise UndefinedMetricError("max|f| vanishes on the probe set")
        return np.max(np.abs(exact - eval_2d(series, x, y))) / scale

    xg = series.offset1 + (series.b1 / m1) * np.arange(m1 + 1)
    yg = series.offset2 + (series.b2 / m2) * np.arange(m2 + 1)
    err_g = one_metric(xg, yg)
    p = 2 ** q_probe
    xp = series.offset1 + (series.b1 / p) * np.arange(p + 1)
    yp = series.offset2 + (series.b2 / p) * np.arange(p + 1)
    err_e = one_metric(xp, yp)
    return err_g, err_e
